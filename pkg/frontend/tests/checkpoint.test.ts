import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";
import * as tf from "@tensorflow/tfjs";

import { loadModel, saveModel } from "../src/checkpoint.js";
import { buildGenerator } from "../src/model.js";
import { FormatError } from "../src/errors.js";

const TOY = { inChannels: 6, outChannels: 3, depth: 2, baseChannels: 4 };
const dirs: string[] = [];

function scratch(): string {
  const d = mkdtempSync(join(tmpdir(), "ckpt-"));
  dirs.push(d);
  return d;
}

afterAll(() => {
  for (const d of dirs) rmSync(d, { recursive: true, force: true });
});

describe("checkpoint round trip", () => {
  it("restores weights bit for bit", async () => {
    const dir = scratch();
    const model = buildGenerator(TOY, 21);
    await saveModel(model, dir);
    const back = await loadModel(dir);

    const a = model.getWeights();
    const b = back.getWeights();
    expect(b.length).toBe(a.length);
    a.forEach((w, k) => {
      expect(Array.from(b[k].dataSync())).toEqual(Array.from(w.dataSync()));
    });

    const x = tf.randomNormal([1, 16, 16, 6], 0, 1, "float32", 5);
    const ya = (model.predict(x) as tf.Tensor).dataSync();
    const yb = (back.predict(x) as tf.Tensor).dataSync();
    expect(Array.from(yb)).toEqual(Array.from(ya));
  });

  it("rejects a directory without a saved model", async () => {
    const dir = scratch();
    await expect(loadModel(dir)).rejects.toThrow(FormatError);
  });

  it("rejects a corrupt manifest", async () => {
    const dir = scratch();
    const model = buildGenerator(TOY, 2);
    await saveModel(model, dir);
    writeFileSync(join(dir, "model.json"), "not json at all");
    await expect(loadModel(dir)).rejects.toThrow(FormatError);
  });
});
