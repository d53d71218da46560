import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";

import { writeTensorFile } from "../src/hsf1.js";

const CLI = join(dirname(fileURLToPath(import.meta.url)), "..", "dist", "cli.js");
const WL: [number, number, number] = [450e-9, 540e-9, 590e-9];

const dirs: string[] = [];
function scratch(): string {
  const d = mkdtempSync(join(tmpdir(), "cli-"));
  dirs.push(d);
  return d;
}
afterAll(() => {
  for (const d of dirs) rmSync(d, { recursive: true, force: true });
});

interface Run {
  status: number;
  stdout: string;
  stderr: string;
}

function cli(...args: string[]): Run {
  try {
    const stdout = execFileSync("node", [CLI, ...args], { encoding: "utf8" });
    return { status: 0, stdout, stderr: "" };
  } catch (err) {
    const e = err as { status: number; stdout: string; stderr: string };
    return { status: e.status, stdout: e.stdout ?? "", stderr: e.stderr ?? "" };
  }
}

function writeScene(dir: string): { input: string; label: string } {
  const size = 16;
  const input = new Float64Array(size * size * 6);
  const label = new Float64Array(size * size * 3);
  for (let k = 0; k < input.length; k++) input[k] = Math.sin(k * 0.13);
  for (let k = 0; k < label.length; k++) label[k] = 0.5 + 0.4 * Math.cos(k * 0.21);
  const inputPath = join(dir, "scene_input.hsf1");
  const labelPath = join(dir, "scene_label.hsf1");
  writeTensorFile(inputPath, {
    data: input, height: size, width: size, channels: 6, pitch: 0.5, wavelengths: WL,
  });
  writeTensorFile(labelPath, {
    data: label, height: size, width: size, channels: 3, pitch: 0.5, wavelengths: WL,
  });
  return { input: inputPath, label: labelPath };
}

describe("cli", () => {
  it("prints usage on --help", () => {
    const r = cli("--help");
    expect(r.status).toBe(0);
    expect(r.stdout).toContain("usage:");
    expect(r.stdout).toContain("train --config");
  });

  it("fails usage errors with status 2 and an error line", () => {
    for (const args of [
      [],
      ["frobnicate"],
      ["train"],
      ["train", "--config", "/nonexistent/nope.json"],
      ["infer"],
      ["infer", "--checkpoint", "/nope", "--tensor", "/nope.hsf1", "--out", "/tmp/x"],
    ]) {
      const r = cli(...args);
      expect(r.status).toBe(2);
      expect(r.stderr).toMatch(/^error: /m);
    }
  });

  it("rejects malformed and mistyped configs by name", () => {
    const dir = scratch();
    const bad = join(dir, "bad.json");

    writeFileSync(bad, "{not json");
    expect(cli("train", "--config", bad).stderr).toContain("error:");

    writeFileSync(bad, JSON.stringify({ data: [], outDir: join(dir, "o") }));
    expect(cli("train", "--config", bad).stderr).toContain("data");

    const scene = writeScene(dir);
    writeFileSync(
      bad,
      JSON.stringify({
        data: [{ input: scene.input, label: scene.label }],
        outDir: join(dir, "o"),
        tvWieght: 1,
      }),
    );
    const r = cli("train", "--config", bad);
    expect(r.status).toBe(2);
    expect(r.stderr).toContain("tvWieght");
  });

  it("trains from a config and then runs inference on the checkpoint", () => {
    const dir = scratch();
    const scene = writeScene(dir);
    const outDir = join(dir, "run");
    const cfgPath = join(dir, "train.json");
    writeFileSync(
      cfgPath,
      JSON.stringify({
        data: [{ input: scene.input, label: scene.label }],
        outDir,
        patchSize: 16,
        batchSize: 1,
        steps: 5,
        seed: 3,
        generator: { depth: 1, baseChannels: 4 },
        discriminator: { baseChannels: 4, fcUnits: 16 },
      }),
    );

    const r = cli("train", "--config", cfgPath);
    expect(r.status).toBe(0);
    expect(r.stdout).toContain("checkpoint=");
    expect(r.stdout).toContain("steps=5");
    expect(existsSync(join(outDir, "checkpoint", "generator", "model.json"))).toBe(true);
    expect(existsSync(join(outDir, "config.json"))).toBe(true);
    const log = readFileSync(join(outDir, "loss.jsonl"), "utf8").trim().split("\n");
    expect(log.length).toBe(5);

    const inferOut = join(dir, "enhanced");
    const ri = cli(
      "infer",
      "--checkpoint", join(outDir, "checkpoint"),
      "--tensor", scene.input,
      "--out", inferOut,
    );
    expect(ri.status).toBe(0);
    expect(ri.stdout).toContain("backend=");
    expect(existsSync(join(inferOut, "enhanced_rgb.hsf1"))).toBe(true);
    expect(existsSync(join(inferOut, "enhanced_rgb.png"))).toBe(true);
  }, 300_000);
});
