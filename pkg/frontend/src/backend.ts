/**
 * Backend selection.
 *
 * Training must run on the pure JS "cpu" backend: it is the only bundled
 * backend with gradient kernels for convolutions.  Inference prefers the
 * wasm backend, whose forward convolutions are orders of magnitude
 * faster, and falls back to cpu when wasm cannot be loaded.
 */
import { createRequire } from "node:module";
import { dirname, join } from "node:path";
import * as tf from "@tensorflow/tfjs";

let wasmReady: Promise<boolean> | undefined;

function registerWasm(): Promise<boolean> {
  wasmReady ??= (async () => {
    try {
      const wasm = await import("@tensorflow/tfjs-backend-wasm");
      const require = createRequire(import.meta.url);
      const pkgMain = require.resolve("@tensorflow/tfjs-backend-wasm");
      wasm.setWasmPaths(join(dirname(pkgMain), "/"));
      return true;
    } catch {
      return false;
    }
  })();
  return wasmReady;
}

/** Switch to the gradient-capable cpu backend. */
export async function ensureTrainingBackend(): Promise<string> {
  if (tf.getBackend() !== "cpu") await tf.setBackend("cpu");
  await tf.ready();
  return tf.getBackend();
}

/** Switch to the fastest available forward-only backend. */
export async function ensureInferenceBackend(): Promise<string> {
  if (await registerWasm()) {
    try {
      if (await tf.setBackend("wasm")) {
        await tf.ready();
        return tf.getBackend();
      }
    } catch {
      // fall through to cpu
    }
  }
  await tf.setBackend("cpu");
  await tf.ready();
  return tf.getBackend();
}
