import * as tf from "@tensorflow/tfjs";

import { DataError } from "./errors.js";

/** Leaky rectifier: identity for positive inputs, slope 0.1 otherwise. */
export const LEAKY_SLOPE = 0.1;

export function leakyRelu(x: number): number {
  return x > 0 ? x : LEAKY_SLOPE * x;
}

/**
 * Least-squares discriminator objective on scalar scores: the generated
 * sample is pushed toward score 0, the label toward score 1.
 */
export function discriminatorLoss(dgx: number, dz: number): number {
  return dgx * dgx + (1 - dz) * (1 - dz);
}

/** Batched form of {@link discriminatorLoss} for the training loop. */
export function discriminatorLossTensor(dgx: tf.Tensor, dz: tf.Tensor): tf.Scalar {
  return tf.tidy(
    () => tf.mean(tf.square(dgx)).add(tf.mean(tf.square(tf.sub(1, dz)))) as tf.Scalar,
  );
}

function assertPaired(z: tf.Tensor, gx: tf.Tensor): void {
  if (z.shape.length !== gx.shape.length || z.shape.some((d, k) => d !== gx.shape[k])) {
    throw new DataError(`label shape [${z.shape}] does not match output shape [${gx.shape}]`);
  }
  if (z.shape[z.shape.length - 1] !== 3) {
    throw new DataError(`expected 3-channel images, got [${z.shape}]`);
  }
}

/** Mean squared difference, normalized over channels and both pixel axes. */
export function l2Loss(z: tf.Tensor, gx: tf.Tensor): tf.Scalar {
  assertPaired(z, gx);
  return tf.tidy(() => tf.mean(tf.square(tf.sub(gx, z))) as tf.Scalar);
}

/**
 * Anisotropic total variation: summed absolute forward differences along
 * both pixel axes, normalized by the channel count only (and the batch
 * size for batched input).
 */
export function tvLoss(gx: tf.Tensor): tf.Scalar {
  const rank = gx.shape.length;
  if (rank !== 3 && rank !== 4) {
    throw new DataError(`total variation expects HWC or BHWC input, got [${gx.shape}]`);
  }
  return tf.tidy(() => {
    const x = rank === 3 ? (gx as tf.Tensor3D).expandDims(0) : (gx as tf.Tensor4D);
    const [batch, rows, cols, chans] = x.shape as [number, number, number, number];
    const down = x
      .slice([0, 1, 0, 0], [batch, rows - 1, cols, chans])
      .sub(x.slice([0, 0, 0, 0], [batch, rows - 1, cols, chans]))
      .abs()
      .sum();
    const right = x
      .slice([0, 0, 1, 0], [batch, rows, cols - 1, chans])
      .sub(x.slice([0, 0, 0, 0], [batch, rows, cols - 1, chans]))
      .abs()
      .sum();
    return down.add(right).div(chans * batch) as tf.Scalar;
  });
}

export interface GeneratorLossParts {
  total: tf.Scalar;
  l2: tf.Scalar;
  tv: tf.Scalar;
  adv: tf.Scalar;
}

/**
 * Generator objective broken into its terms, for logging: data fidelity,
 * unweighted total variation, and the unweighted least-squares
 * adversarial pull toward discriminator score 1.  `total` applies the
 * weights.  `dgx` is the discriminator's score of the generated sample.
 */
export function generatorLossParts(
  z: tf.Tensor,
  gx: tf.Tensor,
  dgx: number | tf.Tensor,
  tvWeight: number,
  advWeight: number,
): GeneratorLossParts {
  assertPaired(z, gx);
  return tf.tidy(() => {
    const score = typeof dgx === "number" ? tf.scalar(dgx) : dgx;
    const l2 = l2Loss(z, gx);
    const tv = tvLoss(gx);
    const adv = tf.mean(tf.square(tf.sub(1, score))) as tf.Scalar;
    const total = l2.add(tv.mul(tvWeight)).add(adv.mul(advWeight)) as tf.Scalar;
    return { total, l2, tv, adv };
  });
}

/** Full generator objective as a single scalar. */
export function generatorLoss(
  z: tf.Tensor,
  gx: tf.Tensor,
  dgx: number | tf.Tensor,
  tvWeight: number,
  advWeight: number,
): tf.Scalar {
  return tf.tidy(() => generatorLossParts(z, gx, dgx, tvWeight, advWeight).total);
}
