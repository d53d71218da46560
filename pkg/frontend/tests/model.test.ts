import { describe, expect, it } from "vitest";
import * as tf from "@tensorflow/tfjs";

import {
  DEFAULT_DISCRIMINATOR,
  DEFAULT_GENERATOR,
  buildDiscriminator,
  buildGenerator,
  generatorChannelPlan,
} from "../src/model.js";
import { DataError } from "../src/errors.js";

const TOY = { inChannels: 6, outChannels: 3, depth: 2, baseChannels: 4 };

describe("generator", () => {
  it("keeps the spatial shape and emits three channels", () => {
    const g = buildGenerator(DEFAULT_GENERATOR, 7);
    const out = g.predict(tf.zeros([1, 32, 32, 6])) as tf.Tensor4D;
    expect(out.shape).toEqual([1, 32, 32, 3]);
  });

  it("stays finite on an all-zero input", () => {
    const g = buildGenerator(TOY, 3);
    const out = g.predict(tf.zeros([1, 16, 16, 6])) as tf.Tensor4D;
    const values = out.dataSync();
    for (const v of values) expect(Number.isFinite(v)).toBe(true);
  });

  it("doubles encoder widths level by level and mirrors them back", () => {
    const plan = generatorChannelPlan(DEFAULT_GENERATOR);
    expect(plan).toEqual([32, 64, 128, 256, 512]);
    for (let d = 1; d < plan.length; d++) expect(plan[d]).toBe(2 * plan[d - 1]);

    // every planned width must appear among the conv layers, and the
    // final conv must be linear with three filters
    const g = buildGenerator(DEFAULT_GENERATOR, 1);
    const convWidths = g.layers
      .filter((l) => l.getClassName() === "Conv2D")
      .map((l) => (l.getConfig() as { filters: number }).filters);
    for (const width of plan) expect(convWidths).toContain(width);
    expect(convWidths[convWidths.length - 1]).toBe(DEFAULT_GENERATOR.outChannels);
  });

  it("is rebuilt identically from the same seed", () => {
    const a = buildGenerator(TOY, 11).getWeights().map((w) => w.dataSync());
    const b = buildGenerator(TOY, 11).getWeights().map((w) => w.dataSync());
    expect(a.length).toBe(b.length);
    a.forEach((wa, k) => expect(Array.from(wa)).toEqual(Array.from(b[k])));
  });

  it("differs across seeds", () => {
    const a = buildGenerator(TOY, 11).getWeights()[0].dataSync();
    const b = buildGenerator(TOY, 12).getWeights()[0].dataSync();
    expect(Array.from(a)).not.toEqual(Array.from(b));
  });

  it("initializes every bias to zero", () => {
    const g = buildGenerator(TOY, 5);
    for (const layer of g.layers) {
      const cfg = layer.getConfig() as { useBias?: boolean };
      if (!cfg.useBias) continue;
      const bias = layer.getWeights()[1];
      expect(Array.from(bias.dataSync()).every((v) => v === 0)).toBe(true);
    }
  });

  it("rejects malformed specs", () => {
    expect(() => buildGenerator({ ...TOY, inChannels: 5 }, 1)).toThrow(DataError);
    expect(() => buildGenerator({ ...TOY, outChannels: 1 }, 1)).toThrow(DataError);
    expect(() => buildGenerator({ ...TOY, depth: 0 }, 1)).toThrow(DataError);
    expect(() => buildGenerator({ ...TOY, baseChannels: 0 }, 1)).toThrow(DataError);
  });
});

describe("discriminator", () => {
  it("scores a patch with a single scalar", () => {
    const d = buildDiscriminator(DEFAULT_DISCRIMINATOR, 32, 9);
    const out = d.predict(tf.zeros([2, 32, 32, 3])) as tf.Tensor2D;
    expect(out.shape).toEqual([2, 1]);
  });

  it("reduces spatially to 8x8 before the fully connected head", () => {
    const d = buildDiscriminator(DEFAULT_DISCRIMINATOR, 64, 9);
    const flatten = d.layers.find((l) => l.getClassName() === "Flatten");
    expect(flatten).toBeDefined();
    const inShape = (flatten!.input as tf.SymbolicTensor).shape;
    // flatten input is [batch, 8, 8, channels]
    expect(inShape[1]).toBe(8);
    expect(inShape[2]).toBe(8);
  });

  it("rejects patches the reduction cannot bring to 8x8", () => {
    expect(() => buildDiscriminator(DEFAULT_DISCRIMINATOR, 8, 1)).toThrow(DataError);
    expect(() => buildDiscriminator(DEFAULT_DISCRIMINATOR, 24, 1)).toThrow(DataError);
  });
});
