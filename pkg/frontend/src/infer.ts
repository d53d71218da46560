/**
 * Inference: run a trained generator over a six-channel field tensor and
 * write the enhanced image as both a three-channel tensor file and an
 * 8-bit PNG preview.
 */
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import * as tf from "@tensorflow/tfjs";

import { ensureInferenceBackend } from "./backend.js";
import { loadModel } from "./checkpoint.js";
import { ChecksumMismatch, DataError } from "./errors.js";
import { readTensorFile, writeTensorFile, type TensorFile } from "./hsf1.js";
import { encodePng } from "./png.js";

export interface InferResult {
  /** Enhanced image as a three-channel tensor file. */
  rgbPath: string;
  /** Enhanced image as an 8-bit PNG preview. */
  pngPath: string;
  backend: string;
  height: number;
  width: number;
}

/**
 * The network consumes real/imag pairs ordered to match ascending
 * wavelengths; a file that disagrees with that contract is rejected
 * rather than silently mis-colored.
 */
function checkContract(t: TensorFile): void {
  if (t.channels !== 6) {
    throw new ChecksumMismatch(
      `expected a 6-channel field tensor, got ${t.channels} channels`,
    );
  }
  if (!(t.wavelengths[0] < t.wavelengths[1] && t.wavelengths[1] < t.wavelengths[2])) {
    throw new ChecksumMismatch(
      `wavelengths must be strictly ascending, got [${t.wavelengths}]`,
    );
  }
}

/** Downsampling levels the loaded generator applies. */
function modelDepth(model: tf.LayersModel): number {
  return model.layers.filter((l) => {
    if (l.getClassName() !== "Conv2D") return false;
    const cfg = l.getConfig() as { strides?: number[] | number };
    const s = cfg.strides;
    return Array.isArray(s) ? s[0] === 2 : s === 2;
  }).length;
}

export async function infer(
  checkpointDir: string,
  tensorPath: string,
  outDir: string,
): Promise<InferResult> {
  const t = readTensorFile(tensorPath);
  checkContract(t);

  const backend = await ensureInferenceBackend();
  const generator = await loadModel(join(checkpointDir, "generator"));

  const depth = modelDepth(generator);
  const step = 2 ** depth;
  if (t.height % step !== 0 || t.width % step !== 0) {
    throw new DataError(
      `scene ${t.height}x${t.width} is not divisible by 2^depth = ${step}`,
    );
  }

  const out = tf.tidy(() => {
    const x = tf.tensor4d(Float32Array.from(t.data), [1, t.height, t.width, 6]);
    const y = generator.predict(x) as tf.Tensor4D;
    return tf.clipByValue(y, 0, 1);
  });
  const values = out.dataSync();
  out.dispose();

  mkdirSync(outDir, { recursive: true });
  const rgbPath = join(outDir, "enhanced_rgb.hsf1");
  const pngPath = join(outDir, "enhanced_rgb.png");

  writeTensorFile(rgbPath, {
    data: Float64Array.from(values),
    height: t.height,
    width: t.width,
    channels: 3,
    pitch: t.pitch,
    wavelengths: t.wavelengths,
  });

  const bytes = new Uint8Array(values.length);
  for (let k = 0; k < values.length; k++) bytes[k] = Math.round(values[k] * 255);
  writeFileSync(pngPath, encodePng(bytes, t.width, t.height));

  return { rgbPath, pngPath, backend, height: t.height, width: t.width };
}
