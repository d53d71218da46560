#!/usr/bin/env node
/**
 * Command line entry points.
 *
 *   gan-trainer train --config train.json
 *   gan-trainer infer --checkpoint DIR --tensor FILE --out DIR
 *
 * Train consumes a JSON spec naming input/label tensor-file pairs plus
 * optional knobs, writes a checkpoint, a JSONL loss log, and the fully
 * resolved spec into the output directory.  Infer runs a checkpointed
 * generator over a field tensor.  Failures print `error: ...` on stderr
 * and exit with status 2.
 */
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { parseArgs } from "node:util";

import { extractPatchPairs, type PatchPair } from "./data.js";
import { DataError } from "./errors.js";
import { readTensorFile } from "./hsf1.js";
import { infer } from "./infer.js";
import { DEFAULT_TRAIN, train, type TrainSpec } from "./train.js";

const USAGE = `usage:
  gan-trainer train --config FILE.json
  gan-trainer infer --checkpoint DIR --tensor FILE --out DIR

train config keys (all but "data" and "outDir" optional):
  data            [{"input": "x.hsf1", "label": "z.hsf1"}, ...]
  outDir          directory for checkpoint/, loss.jsonl, config.json
  patchSize, batchSize, steps, seed
  tvWeight, advWeight, lrGenerator, lrDiscriminator
  generator       {"depth": N, "baseChannels": N}
  discriminator   {"baseChannels": N, "fcUnits": N}
`;

interface TrainConfig {
  data: { input: string; label: string }[];
  outDir: string;
  spec: TrainSpec;
}

const TOP_KEYS = new Set([
  "data",
  "outDir",
  "patchSize",
  "batchSize",
  "steps",
  "seed",
  "tvWeight",
  "advWeight",
  "lrGenerator",
  "lrDiscriminator",
  "generator",
  "discriminator",
]);

function numberOr(raw: Record<string, unknown>, key: string, fallback: number): number {
  if (!(key in raw)) return fallback;
  const v = raw[key];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new DataError(`config key "${key}" must be a finite number`);
  }
  return v;
}

function parseTrainConfig(path: string): TrainConfig {
  let raw: Record<string, unknown>;
  try {
    raw = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new DataError(`cannot read config ${path}: ${(err as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new DataError("config must be a JSON object");
  }
  for (const key of Object.keys(raw)) {
    if (!TOP_KEYS.has(key)) throw new DataError(`unknown config key "${key}"`);
  }

  const data = raw.data;
  if (!Array.isArray(data) || data.length === 0) {
    throw new DataError('config key "data" must be a non-empty array of {input, label} pairs');
  }
  const pairs = data.map((entry, k) => {
    if (
      typeof entry !== "object" ||
      entry === null ||
      typeof (entry as Record<string, unknown>).input !== "string" ||
      typeof (entry as Record<string, unknown>).label !== "string"
    ) {
      throw new DataError(`data entry ${k} must be {"input": path, "label": path}`);
    }
    return entry as { input: string; label: string };
  });

  if (typeof raw.outDir !== "string" || raw.outDir.length === 0) {
    throw new DataError('config key "outDir" must be a path');
  }

  const genRaw = (raw.generator ?? {}) as Record<string, unknown>;
  const discRaw = (raw.discriminator ?? {}) as Record<string, unknown>;
  for (const key of Object.keys(genRaw)) {
    if (!["depth", "baseChannels"].includes(key)) {
      throw new DataError(`unknown generator key "${key}"`);
    }
  }
  for (const key of Object.keys(discRaw)) {
    if (!["baseChannels", "fcUnits"].includes(key)) {
      throw new DataError(`unknown discriminator key "${key}"`);
    }
  }

  const spec: TrainSpec = {
    patchSize: numberOr(raw, "patchSize", DEFAULT_TRAIN.patchSize),
    batchSize: numberOr(raw, "batchSize", DEFAULT_TRAIN.batchSize),
    steps: numberOr(raw, "steps", DEFAULT_TRAIN.steps),
    seed: numberOr(raw, "seed", DEFAULT_TRAIN.seed),
    tvWeight: numberOr(raw, "tvWeight", DEFAULT_TRAIN.tvWeight),
    advWeight: numberOr(raw, "advWeight", DEFAULT_TRAIN.advWeight),
    lrGenerator: numberOr(raw, "lrGenerator", DEFAULT_TRAIN.lrGenerator),
    lrDiscriminator: numberOr(raw, "lrDiscriminator", DEFAULT_TRAIN.lrDiscriminator),
    generator: {
      ...DEFAULT_TRAIN.generator,
      depth: numberOr(genRaw, "depth", DEFAULT_TRAIN.generator.depth),
      baseChannels: numberOr(genRaw, "baseChannels", DEFAULT_TRAIN.generator.baseChannels),
    },
    discriminator: {
      baseChannels: numberOr(discRaw, "baseChannels", DEFAULT_TRAIN.discriminator.baseChannels),
      fcUnits: numberOr(discRaw, "fcUnits", DEFAULT_TRAIN.discriminator.fcUnits),
    },
  };

  return { data: pairs, outDir: raw.outDir, spec };
}

function loadPairs(cfg: TrainConfig): PatchPair[] {
  const pooled: PatchPair[] = [];
  for (const { input, label } of cfg.data) {
    pooled.push(...extractPatchPairs(readTensorFile(input), readTensorFile(label), cfg.spec.patchSize));
  }
  return pooled;
}

async function runTrain(args: string[]): Promise<number> {
  const { values } = parseArgs({
    args,
    options: { config: { type: "string" } },
  });
  if (!values.config) throw new DataError("train requires --config FILE.json");

  const cfg = parseTrainConfig(values.config);
  const pairs = loadPairs(cfg);
  mkdirSync(cfg.outDir, { recursive: true });
  writeFileSync(
    join(cfg.outDir, "config.json"),
    JSON.stringify({ data: cfg.data, outDir: cfg.outDir, ...cfg.spec }, null, 2) + "\n",
  );

  process.stderr.write(`training on ${pairs.length} patch pairs\n`);
  const t0 = Date.now();
  const { history } = await train(pairs, cfg.spec, {
    logPath: join(cfg.outDir, "loss.jsonl"),
    checkpointDir: join(cfg.outDir, "checkpoint"),
    onStep: (s) => {
      if (s.step % 25 === 0 || s.step === cfg.spec.steps) {
        process.stderr.write(
          `step ${s.step}/${cfg.spec.steps} gen=${s.gen.toFixed(4)} disc=${s.disc.toFixed(4)} l2=${s.l2.toFixed(4)}\n`,
        );
      }
    },
  });
  const secs = ((Date.now() - t0) / 1000).toFixed(1);
  const last = history[history.length - 1];
  process.stdout.write(`checkpoint=${join(cfg.outDir, "checkpoint")}\n`);
  process.stdout.write(`log=${join(cfg.outDir, "loss.jsonl")}\n`);
  process.stdout.write(
    `steps=${last.step} gen=${last.gen.toFixed(6)} disc=${last.disc.toFixed(6)} seconds=${secs}\n`,
  );
  return 0;
}

async function runInfer(args: string[]): Promise<number> {
  const { values } = parseArgs({
    args,
    options: {
      checkpoint: { type: "string" },
      tensor: { type: "string" },
      out: { type: "string" },
    },
  });
  if (!values.checkpoint || !values.tensor || !values.out) {
    throw new DataError("infer requires --checkpoint DIR --tensor FILE --out DIR");
  }
  const res = await infer(values.checkpoint, values.tensor, values.out);
  process.stdout.write(`backend=${res.backend}\n`);
  process.stdout.write(`rgb=${res.rgbPath}\n`);
  process.stdout.write(`png=${res.pngPath}\n`);
  return 0;
}

export async function main(argv: string[]): Promise<number> {
  const [verb, ...rest] = argv;
  try {
    if (verb === "--help" || verb === "-h" || verb === "help") {
      process.stdout.write(USAGE);
      return 0;
    }
    if (verb === "train") return await runTrain(rest);
    if (verb === "infer") return await runInfer(rest);
    throw new DataError(verb ? `unknown command "${verb}"` : "missing command");
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
}

const selfUrl = new URL(import.meta.url).pathname;
if (process.argv[1] && selfUrl === process.argv[1]) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
