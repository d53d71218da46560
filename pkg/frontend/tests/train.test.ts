import { existsSync, mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";
import * as tf from "@tensorflow/tfjs";

import type { PatchPair } from "../src/data.js";
import { DataError } from "../src/errors.js";
import { tvLoss } from "../src/losses.js";
import { DEFAULT_TRAIN, train, type TrainSpec } from "../src/train.js";

const dirs: string[] = [];
function scratch(): string {
  const d = mkdtempSync(join(tmpdir(), "train-"));
  dirs.push(d);
  return d;
}
afterAll(() => {
  for (const d of dirs) rmSync(d, { recursive: true, force: true });
});

/**
 * Training runs on the pure JS backend, which pays seconds per step at
 * production patch sizes, so these tests shrink the patch to 16 and the
 * networks to depth 1.  The loop under test is the same code path.
 */
const TOY: TrainSpec = {
  ...DEFAULT_TRAIN,
  patchSize: 16,
  batchSize: 2,
  steps: 10,
  seed: 5,
  generator: { inChannels: 6, outChannels: 3, depth: 1, baseChannels: 4 },
  discriminator: { baseChannels: 4, fcUnits: 16 },
};

/** Smooth deterministic six-channel scene. */
function smoothPair(size: number, phase: number): PatchPair {
  const input = new Float32Array(size * size * 6);
  const label = new Float32Array(size * size * 3);
  for (let r = 0; r < size; r++) {
    for (let c = 0; c < size; c++) {
      for (let ch = 0; ch < 6; ch++) {
        input[(r * size + c) * 6 + ch] =
          Math.sin((r / size) * 3 + phase + ch) * Math.cos((c / size) * 2 + ch);
      }
      for (let ch = 0; ch < 3; ch++) {
        label[(r * size + c) * 3 + ch] =
          0.5 + 0.4 * Math.sin((r / size) * 2 + (c / size) * 3 + phase + ch);
      }
    }
  }
  return { input, label, row: 0, col: 0 };
}

/**
 * Scene whose label is a pixelwise affine map of the input channels, so
 * even the toy generator can represent it exactly.  A stalled fit on
 * this data means the loop itself is broken, not the capacity.
 */
function affinePair(size: number, phase: number): PatchPair {
  const pair = smoothPair(size, phase);
  const label = new Float32Array(size * size * 3);
  for (let px = 0; px < size * size; px++) {
    for (let ch = 0; ch < 3; ch++) {
      label[px * 3 + ch] = 0.25 + 0.3 * pair.input[px * 6 + 2 * ch];
    }
  }
  return { ...pair, label };
}

describe("train", () => {
  it("drives the fit error far below its starting value on representable data", async () => {
    const pair = affinePair(16, 0.3);
    // regularizers off: the total variation and adversarial terms hold
    // the equilibrium away from zero error by design, and each has its
    // own directional test
    const spec: TrainSpec = {
      ...TOY,
      steps: 350,
      batchSize: 1,
      lrGenerator: 1e-3,
      tvWeight: 0,
      advWeight: 0,
    };
    const { history } = await train([pair], spec);
    const first = history[0].l2;
    const last = history[history.length - 1].l2;
    expect(first).toBeGreaterThan(0);
    expect(last).toBeLessThan(0.01 * first);
  }, 300_000);

  it("produces flatter output when the total variation weight dominates", async () => {
    const pairs = [smoothPair(16, 0.1), smoothPair(16, 1.7)];
    const smooth = await train(pairs, { ...TOY, steps: 100, tvWeight: 10 });
    const sharp = await train(pairs, { ...TOY, steps: 100, tvWeight: 0.0025 });

    const probe = tf.tensor4d(pairs[0].input, [1, 16, 16, 6]);
    const tvSmooth = tvLoss(smooth.generator.predict(probe) as tf.Tensor4D).dataSync()[0];
    const tvSharp = tvLoss(sharp.generator.predict(probe) as tf.Tensor4D).dataSync()[0];
    expect(tvSmooth).toBeLessThan(0.5 * tvSharp);
  }, 300_000);

  it("replays identically from the same seed and writes its artifacts", async () => {
    const pairs = [smoothPair(16, 0.2), smoothPair(16, 0.9), smoothPair(16, 2.1)];
    const dir = scratch();
    const logPath = join(dir, "loss.jsonl");
    const a = await train(pairs, TOY, { logPath, checkpointDir: dir });
    const b = await train(pairs, TOY);
    expect(a.history).toEqual(b.history);

    const lines = readFileSync(logPath, "utf8").trim().split("\n");
    expect(lines.length).toBe(TOY.steps);
    const parsed = lines.map((l) => JSON.parse(l));
    expect(parsed[0].step).toBe(1);
    expect(parsed[parsed.length - 1]).toEqual(a.history[a.history.length - 1]);
    for (const rec of parsed) {
      for (const key of ["disc", "gen", "l2", "tv", "adv"]) {
        expect(Number.isFinite(rec[key])).toBe(true);
      }
    }

    expect(existsSync(join(dir, "generator", "model.json"))).toBe(true);
    expect(existsSync(join(dir, "generator", "weights.bin"))).toBe(true);
    expect(existsSync(join(dir, "discriminator", "model.json"))).toBe(true);
  }, 300_000);

  it("rejects specs that cannot run", async () => {
    const pair = smoothPair(16, 0);
    await expect(train([], TOY)).rejects.toThrow(DataError);
    // 20 is divisible by 2^depth but the strided blocks cannot reach 8x8
    await expect(train([smoothPair(20, 0)], { ...TOY, patchSize: 20 })).rejects.toThrow(
      DataError,
    );
    await expect(train([pair], { ...TOY, steps: 0 })).rejects.toThrow(DataError);
    await expect(train([pair], { ...TOY, lrGenerator: 0 })).rejects.toThrow(DataError);
    await expect(train([pair], { ...TOY, tvWeight: -1 })).rejects.toThrow(DataError);
    await expect(train([smoothPair(32, 0)], TOY)).rejects.toThrow(DataError);
  });
});
