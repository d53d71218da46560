import { existsSync, mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { saveModel } from "../src/checkpoint.js";
import { ChecksumMismatch, DataError } from "../src/errors.js";
import { readTensorFile, writeTensorFile, type TensorFile } from "../src/hsf1.js";
import { infer } from "../src/infer.js";
import { buildGenerator } from "../src/model.js";

const WL: [number, number, number] = [450e-9, 540e-9, 590e-9];
const dirs: string[] = [];
let ckpt: string;

function scratch(): string {
  const d = mkdtempSync(join(tmpdir(), "infer-"));
  dirs.push(d);
  return d;
}

function fieldTensor(size: number, fill?: number): TensorFile {
  const data = new Float64Array(size * size * 6);
  if (fill === undefined) {
    for (let k = 0; k < data.length; k++) data[k] = Math.sin(k * 0.37) * 0.8;
  } else {
    data.fill(fill);
  }
  return { data, height: size, width: size, channels: 6, pitch: 0.5, wavelengths: WL };
}

beforeAll(async () => {
  ckpt = scratch();
  const gen = buildGenerator({ inChannels: 6, outChannels: 3, depth: 2, baseChannels: 4 }, 31);
  await saveModel(gen, join(ckpt, "generator"));
});

afterAll(() => {
  for (const d of dirs) rmSync(d, { recursive: true, force: true });
});

describe("infer", () => {
  it("writes a clamped three-channel tensor and a matching preview", async () => {
    const dir = scratch();
    const tensorPath = join(dir, "in.hsf1");
    writeTensorFile(tensorPath, fieldTensor(16));

    const res = await infer(ckpt, tensorPath, join(dir, "out"));
    expect(existsSync(res.rgbPath)).toBe(true);
    expect(existsSync(res.pngPath)).toBe(true);

    const rgb = readTensorFile(res.rgbPath);
    expect(rgb.channels).toBe(3);
    expect(rgb.height).toBe(16);
    expect(rgb.width).toBe(16);
    expect(rgb.pitch).toBe(0.5);
    expect(rgb.wavelengths).toEqual(WL);
    for (const v of rgb.data) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(1);
      expect(Number.isFinite(v)).toBe(true);
    }
  });

  it("stays finite on an all-zero field", async () => {
    const dir = scratch();
    const tensorPath = join(dir, "zero.hsf1");
    writeTensorFile(tensorPath, fieldTensor(16, 0));
    const res = await infer(ckpt, tensorPath, join(dir, "out"));
    const rgb = readTensorFile(res.rgbPath);
    for (const v of rgb.data) expect(Number.isFinite(v)).toBe(true);
  });

  it("rejects tensors that break the channel contract", async () => {
    const dir = scratch();
    const three = join(dir, "three.hsf1");
    writeTensorFile(three, {
      data: new Float64Array(16 * 16 * 3),
      height: 16,
      width: 16,
      channels: 3,
      pitch: 0.5,
      wavelengths: WL,
    });
    await expect(infer(ckpt, three, join(dir, "out"))).rejects.toThrow(ChecksumMismatch);

    const shuffledWl = join(dir, "wl.hsf1");
    const t = fieldTensor(16);
    writeTensorFile(shuffledWl, { ...t, wavelengths: [590e-9, 540e-9, 450e-9] });
    await expect(infer(ckpt, shuffledWl, join(dir, "out"))).rejects.toThrow(ChecksumMismatch);
  });

  it("rejects scenes the downsampling levels cannot divide", async () => {
    const dir = scratch();
    const odd = join(dir, "odd.hsf1");
    // depth-2 checkpoint needs multiples of 4; 18 is not one
    writeTensorFile(odd, fieldTensor(18));
    await expect(infer(ckpt, odd, join(dir, "out"))).rejects.toThrow(DataError);
  });
});
