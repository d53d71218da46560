/**
 * Training data preparation: cutting aligned patch pairs out of a
 * six-channel network-input tensor and its three-channel reference
 * image, plus the seeded shuffling the training loop uses for batching.
 */
import { DataError } from "./errors.js";
import type { TensorFile } from "./hsf1.js";

export interface PatchPair {
  /** patchSize * patchSize * 6 values, row-major, channel-fastest. */
  input: Float32Array;
  /** patchSize * patchSize * 3 values, row-major, channel-fastest. */
  label: Float32Array;
  /** Top-left corner of the patch in the source scene. */
  row: number;
  col: number;
}

/** Small, fast, seedable PRNG; returns floats in [0, 1). */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Fisher-Yates on a copy; the input array is left untouched. */
export function shuffled<T>(items: readonly T[], seed: number): T[] {
  const out = items.slice();
  const rand = mulberry32(seed);
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}

function cut(src: TensorFile, row: number, col: number, size: number): Float32Array {
  const out = new Float32Array(size * size * src.channels);
  for (let r = 0; r < size; r++) {
    const srcBase = ((row + r) * src.width + col) * src.channels;
    const dstBase = r * size * src.channels;
    for (let k = 0; k < size * src.channels; k++) out[dstBase + k] = src.data[srcBase + k];
  }
  return out;
}

/**
 * Tile the scene with non-overlapping patchSize x patchSize squares,
 * starting at the origin; margins too small for a whole patch are
 * dropped.  Input and label must cover the same scene.
 */
export function extractPatchPairs(
  input: TensorFile,
  label: TensorFile,
  patchSize: number,
): PatchPair[] {
  if (input.channels !== 6) {
    throw new DataError(`network input must have 6 channels, got ${input.channels}`);
  }
  if (label.channels !== 3) {
    throw new DataError(`reference image must have 3 channels, got ${label.channels}`);
  }
  if (input.height !== label.height || input.width !== label.width) {
    throw new DataError(
      `input is ${input.height}x${input.width} but reference is ${label.height}x${label.width}`,
    );
  }
  if (!Number.isInteger(patchSize) || patchSize < 1) {
    throw new DataError(`patch size must be a positive integer, got ${patchSize}`);
  }
  if (patchSize > input.height || patchSize > input.width) {
    throw new DataError(
      `patch size ${patchSize} exceeds the ${input.height}x${input.width} scene`,
    );
  }

  const pairs: PatchPair[] = [];
  for (let row = 0; row + patchSize <= input.height; row += patchSize) {
    for (let col = 0; col + patchSize <= input.width; col += patchSize) {
      pairs.push({
        input: cut(input, row, col, patchSize),
        label: cut(label, row, col, patchSize),
        row,
        col,
      });
    }
  }
  return pairs;
}
