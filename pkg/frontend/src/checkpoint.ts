/**
 * Model checkpoints on plain files.
 *
 * The runtime's bundled savers target browsers, so persistence here goes
 * through an in-memory handler instead: saving captures the artifact
 * bundle and writes `model.json` (topology plus weight manifest) and
 * `weights.bin` (raw little-endian weight payload) into a directory,
 * loading reads them back through an in-memory source.  Files are
 * written to a temp name and renamed so a crash cannot leave a torn
 * checkpoint behind.
 */
import { mkdirSync, readFileSync, renameSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import * as tf from "@tensorflow/tfjs";

import { FormatError } from "./errors.js";

function writeAtomic(path: string, payload: Buffer | string): void {
  const tmp = `${path}.tmp-${process.pid}`;
  writeFileSync(tmp, payload);
  renameSync(tmp, path);
}

function joinWeightData(data: ArrayBuffer | ArrayBuffer[]): ArrayBuffer {
  if (!Array.isArray(data)) return data;
  const total = data.reduce((n, b) => n + b.byteLength, 0);
  const out = new Uint8Array(total);
  let at = 0;
  for (const b of data) {
    out.set(new Uint8Array(b), at);
    at += b.byteLength;
  }
  return out.buffer;
}

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  let captured: tf.io.ModelArtifacts | undefined;
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      captured = artifacts;
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON",
        },
      };
    }),
  );
  if (!captured || !captured.weightData) {
    throw new FormatError("model produced no artifacts to save");
  }
  mkdirSync(dir, { recursive: true });
  const manifest = {
    modelTopology: captured.modelTopology,
    weightSpecs: captured.weightSpecs,
  };
  writeAtomic(join(dir, "model.json"), JSON.stringify(manifest));
  writeAtomic(join(dir, "weights.bin"), Buffer.from(joinWeightData(captured.weightData)));
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  let manifest: { modelTopology?: object; weightSpecs?: tf.io.WeightsManifestEntry[] };
  let weights: Buffer;
  try {
    manifest = JSON.parse(readFileSync(join(dir, "model.json"), "utf8"));
    weights = readFileSync(join(dir, "weights.bin"));
  } catch (err) {
    throw new FormatError(`cannot read checkpoint in ${dir}: ${(err as Error).message}`);
  }
  if (!manifest.modelTopology || !manifest.weightSpecs) {
    throw new FormatError(`checkpoint manifest in ${dir} is missing topology or weight specs`);
  }
  const weightData = weights.buffer.slice(
    weights.byteOffset,
    weights.byteOffset + weights.byteLength,
  );
  try {
    return await tf.loadLayersModel(
      tf.io.fromMemory({
        modelTopology: manifest.modelTopology,
        weightSpecs: manifest.weightSpecs,
        weightData,
      }),
    );
  } catch (err) {
    throw new FormatError(`checkpoint in ${dir} did not load: ${(err as Error).message}`);
  }
}
