/**
 * Adversarial training loop.
 *
 * Each step draws a batch of patch pairs, updates the discriminator on
 * the least-squares objective, then updates the generator on data
 * fidelity plus weighted total variation plus the adversarial term.
 * Batching walks seeded epoch permutations of the patch list, so a run
 * is a pure function of its spec and data.
 */
import { appendFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import * as tf from "@tensorflow/tfjs";

import { ensureTrainingBackend } from "./backend.js";
import { saveModel } from "./checkpoint.js";
import { shuffled, type PatchPair } from "./data.js";
import { DataError } from "./errors.js";
import { discriminatorLossTensor, generatorLossParts } from "./losses.js";
import {
  DEFAULT_DISCRIMINATOR,
  DEFAULT_GENERATOR,
  buildDiscriminator,
  buildGenerator,
  type DiscriminatorSpec,
  type GeneratorSpec,
} from "./model.js";

export interface TrainSpec {
  patchSize: number;
  batchSize: number;
  steps: number;
  seed: number;
  /** Weight of the total-variation term in the generator objective. */
  tvWeight: number;
  /** Weight of the adversarial term in the generator objective. */
  advWeight: number;
  lrGenerator: number;
  lrDiscriminator: number;
  generator: GeneratorSpec;
  discriminator: DiscriminatorSpec;
}

export const DEFAULT_TRAIN: TrainSpec = {
  patchSize: 128,
  batchSize: 8,
  steps: 2000,
  seed: 1,
  tvWeight: 0.0025,
  advWeight: 0.002,
  lrGenerator: 1e-4,
  lrDiscriminator: 5e-5,
  generator: DEFAULT_GENERATOR,
  discriminator: DEFAULT_DISCRIMINATOR,
};

export interface StepLosses {
  step: number;
  disc: number;
  gen: number;
  l2: number;
  tv: number;
  adv: number;
}

export interface TrainOptions {
  /** JSONL file receiving one StepLosses record per step. */
  logPath?: string;
  /** Directory receiving generator/ and discriminator/ checkpoints. */
  checkpointDir?: string;
  onStep?: (losses: StepLosses) => void;
}

export interface TrainResult {
  generator: tf.LayersModel;
  discriminator: tf.LayersModel;
  history: StepLosses[];
}

function validate(pairs: PatchPair[], spec: TrainSpec): void {
  if (pairs.length === 0) throw new DataError("no training pairs supplied");
  const p = spec.patchSize;
  if (!Number.isInteger(p) || p < 1) {
    throw new DataError(`patch size must be a positive integer, got ${p}`);
  }
  if (p % 2 ** spec.generator.depth !== 0) {
    throw new DataError(
      `patch size ${p} is not divisible by 2^depth = ${2 ** spec.generator.depth}`,
    );
  }
  for (const [k, pair] of pairs.entries()) {
    if (pair.input.length !== p * p * 6 || pair.label.length !== p * p * 3) {
      throw new DataError(`pair ${k} does not match patch size ${p}`);
    }
  }
  if (!Number.isInteger(spec.batchSize) || spec.batchSize < 1) {
    throw new DataError(`batch size must be a positive integer, got ${spec.batchSize}`);
  }
  if (!Number.isInteger(spec.steps) || spec.steps < 1) {
    throw new DataError(`steps must be a positive integer, got ${spec.steps}`);
  }
  if (!(spec.lrGenerator > 0) || !(spec.lrDiscriminator > 0)) {
    throw new DataError("learning rates must be positive");
  }
  if (!(spec.tvWeight >= 0) || !(spec.advWeight >= 0)) {
    throw new DataError("loss weights must be non-negative");
  }
}

/** Endless seeded walk over epoch permutations of [0, n). */
function* batchIndices(n: number, batch: number, seed: number): Generator<number[]> {
  const base = Array.from({ length: n }, (_, i) => i);
  let epoch = 0;
  let queue: number[] = [];
  while (true) {
    while (queue.length < batch) {
      queue = queue.concat(shuffled(base, seed + 1000 * epoch));
      epoch++;
    }
    yield queue.splice(0, batch);
  }
}

function stack(pairs: PatchPair[], picks: number[], side: "input" | "label"): tf.Tensor4D {
  const chans = side === "input" ? 6 : 3;
  const per = pairs[0][side].length;
  const buf = new Float32Array(picks.length * per);
  picks.forEach((idx, k) => buf.set(pairs[idx][side], k * per));
  return tf.tensor4d(buf, [picks.length, Math.sqrt(per / chans), Math.sqrt(per / chans), chans]);
}

export async function train(
  pairs: PatchPair[],
  spec: TrainSpec,
  opts: TrainOptions = {},
): Promise<TrainResult> {
  validate(pairs, spec);

  await ensureTrainingBackend();

  const generator = buildGenerator(spec.generator, spec.seed);
  const discriminator = buildDiscriminator(spec.discriminator, spec.patchSize, spec.seed + 1);
  // the layer wrapper hides its backing tf.Variable behind a protected
  // field, but the optimizer needs the variables themselves
  const asVariables = (m: tf.LayersModel) =>
    m.trainableWeights.map((w) => (w as unknown as { val: tf.Variable }).val);
  const gVars = asVariables(generator);
  const dVars = asVariables(discriminator);
  const gOpt = tf.train.adam(spec.lrGenerator);
  const dOpt = tf.train.adam(spec.lrDiscriminator);

  if (opts.logPath) writeFileSync(opts.logPath, "");

  const batches = batchIndices(pairs.length, spec.batchSize, spec.seed);
  const history: StepLosses[] = [];

  for (let step = 1; step <= spec.steps; step++) {
    const picks = batches.next().value as number[];
    const x = stack(pairs, picks, "input");
    const z = stack(pairs, picks, "label");

    // discriminator update; the generated batch is detached so only
    // discriminator weights receive gradients
    const fake = generator.predict(x) as tf.Tensor4D;
    const dLoss = dOpt.minimize(
      () =>
        tf.tidy(() => {
          const dgx = discriminator.apply(fake) as tf.Tensor2D;
          const dz = discriminator.apply(z) as tf.Tensor2D;
          return discriminatorLossTensor(dgx, dz);
        }),
      true,
      dVars,
    )!;
    fake.dispose();

    // generator update, with the loss terms captured for the log
    let parts = { l2: 0, tv: 0, adv: 0 };
    const gLoss = gOpt.minimize(
      () =>
        tf.tidy(() => {
          const gx = generator.apply(x) as tf.Tensor4D;
          const dgx = discriminator.apply(gx) as tf.Tensor2D;
          const split = generatorLossParts(z, gx, dgx, spec.tvWeight, spec.advWeight);
          parts = {
            l2: split.l2.dataSync()[0],
            tv: split.tv.dataSync()[0],
            adv: split.adv.dataSync()[0],
          };
          return split.total;
        }),
      true,
      gVars,
    )!;

    const record: StepLosses = {
      step,
      disc: dLoss.dataSync()[0],
      gen: gLoss.dataSync()[0],
      ...parts,
    };
    history.push(record);
    if (opts.logPath) appendFileSync(opts.logPath, JSON.stringify(record) + "\n");
    opts.onStep?.(record);

    dLoss.dispose();
    gLoss.dispose();
    x.dispose();
    z.dispose();
  }

  if (opts.checkpointDir) {
    await saveModel(generator, join(opts.checkpointDir, "generator"));
    await saveModel(discriminator, join(opts.checkpointDir, "discriminator"));
  }

  return { generator, discriminator, history };
}
