/**
 * Network construction.
 *
 * The generator is a fully convolutional U-Net: an encoder whose levels
 * double the channel width while halving the spatial size, a mirrored
 * decoder with skip connections, and a linear 3x3 head that emits the
 * three output channels.  Because no layer depends on a concrete spatial
 * size, one model instance handles any input whose side is divisible by
 * 2^depth.
 *
 * The discriminator is a plain strided CNN that reduces a fixed-size
 * patch to 8x8, flattens, and scores it with a two-layer fully connected
 * head ending in a single linear unit.
 */
import * as tf from "@tensorflow/tfjs";

import { DataError } from "./errors.js";
import { LEAKY_SLOPE } from "./losses.js";

export interface GeneratorSpec {
  /** Channels in the input tensor (real/imag pairs per color). */
  inChannels: number;
  /** Channels in the produced image. */
  outChannels: number;
  /** Number of downsampling levels. */
  depth: number;
  /** Channel width at the first level; doubles per level. */
  baseChannels: number;
}

export interface DiscriminatorSpec {
  /** Channel width of the first block; doubles per block. */
  baseChannels: number;
  /** Width of the hidden fully connected layer. */
  fcUnits: number;
}

export const DEFAULT_GENERATOR: GeneratorSpec = {
  inChannels: 6,
  outChannels: 3,
  depth: 4,
  baseChannels: 32,
};

export const DEFAULT_DISCRIMINATOR: DiscriminatorSpec = {
  baseChannels: 16,
  fcUnits: 64,
};

/** Channel widths per level, encoder order, bottleneck last. */
export function generatorChannelPlan(spec: GeneratorSpec): number[] {
  const plan: number[] = [];
  for (let d = 0; d <= spec.depth; d++) plan.push(spec.baseChannels * 2 ** d);
  return plan;
}

function validateGenerator(spec: GeneratorSpec): void {
  if (spec.inChannels !== 6) {
    throw new DataError(`generator expects 6 input channels, got ${spec.inChannels}`);
  }
  if (spec.outChannels !== 3) {
    throw new DataError(`generator expects 3 output channels, got ${spec.outChannels}`);
  }
  if (!Number.isInteger(spec.depth) || spec.depth < 1) {
    throw new DataError(`depth must be a positive integer, got ${spec.depth}`);
  }
  if (!Number.isInteger(spec.baseChannels) || spec.baseChannels < 1) {
    throw new DataError(`baseChannels must be a positive integer, got ${spec.baseChannels}`);
  }
}

/** Deterministic per-layer seed stream so a rebuild is bit-identical. */
function seedStream(seed: number): () => number {
  let counter = 0;
  return () => seed * 1009 + ++counter;
}

function conv(
  x: tf.SymbolicTensor,
  filters: number,
  nextSeed: () => number,
  opts: { stride?: number; linear?: boolean } = {},
): tf.SymbolicTensor {
  const y = tf.layers
    .conv2d({
      filters,
      kernelSize: 3,
      strides: opts.stride ?? 1,
      padding: "same",
      kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
      biasInitializer: "zeros",
    })
    .apply(x) as tf.SymbolicTensor;
  if (opts.linear) return y;
  return tf.layers.leakyReLU({ alpha: LEAKY_SLOPE }).apply(y) as tf.SymbolicTensor;
}

export function buildGenerator(spec: GeneratorSpec, seed: number): tf.LayersModel {
  validateGenerator(spec);
  const nextSeed = seedStream(seed);
  const plan = generatorChannelPlan(spec);

  const input = tf.input({ shape: [null, null, spec.inChannels] });
  let x = input;

  // encoder: two convs per level, then a strided conv down
  const skips: tf.SymbolicTensor[] = [];
  for (let d = 0; d < spec.depth; d++) {
    x = conv(x, plan[d], nextSeed);
    x = conv(x, plan[d], nextSeed);
    skips.push(x);
    x = conv(x, plan[d], nextSeed, { stride: 2 });
  }

  // bottleneck
  x = conv(x, plan[spec.depth], nextSeed);
  x = conv(x, plan[spec.depth], nextSeed);

  // decoder: upsample, thin to the level width, merge the skip, refine
  for (let d = spec.depth - 1; d >= 0; d--) {
    x = tf.layers.upSampling2d({ size: [2, 2], interpolation: "nearest" }).apply(x) as tf.SymbolicTensor;
    x = conv(x, plan[d], nextSeed);
    x = tf.layers.concatenate().apply([x, skips[d]]) as tf.SymbolicTensor;
    x = conv(x, plan[d], nextSeed);
    x = conv(x, plan[d], nextSeed);
  }

  const output = conv(x, spec.outChannels, nextSeed, { linear: true });
  return tf.model({ inputs: input, outputs: output });
}

export function buildDiscriminator(
  spec: DiscriminatorSpec,
  patchSize: number,
  seed: number,
): tf.LayersModel {
  if (!Number.isInteger(spec.baseChannels) || spec.baseChannels < 1) {
    throw new DataError(`baseChannels must be a positive integer, got ${spec.baseChannels}`);
  }
  if (!Number.isInteger(spec.fcUnits) || spec.fcUnits < 1) {
    throw new DataError(`fcUnits must be a positive integer, got ${spec.fcUnits}`);
  }
  const blocks = Math.log2(patchSize / 8);
  if (!Number.isInteger(blocks) || blocks < 1) {
    throw new DataError(
      `patch size must be 8 * 2^k with k >= 1 so strided blocks reach 8x8, got ${patchSize}`,
    );
  }
  const nextSeed = seedStream(seed);

  const input = tf.input({ shape: [patchSize, patchSize, 3] });
  let x = input;
  for (let b = 0; b < blocks; b++) {
    const width = spec.baseChannels * 2 ** b;
    x = conv(x, width, nextSeed);
    x = conv(x, width, nextSeed, { stride: 2 });
  }
  x = tf.layers.flatten().apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .dense({
      units: spec.fcUnits,
      kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
      biasInitializer: "zeros",
    })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers.leakyReLU({ alpha: LEAKY_SLOPE }).apply(x) as tf.SymbolicTensor;
  const output = tf.layers
    .dense({
      units: 1,
      kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
      biasInitializer: "zeros",
    })
    .apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: output });
}
