#!/usr/bin/env node
/**
 * harness export --model NAME --out FILE [--input-bytes N]
 * harness bench  --model NAME --image FILE --runs 5 --resource-id ID
 *                --tier TIER --out FILE [--input-size N] [--alpha A]
 *
 * Emits the planner's graph- and profile-interchange JSON files.
 */

import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { additivityGap, benchmark } from "./bench";
import { analyzeModel, computeUnits } from "./graph";
import { splitModel } from "./split";
import { MODEL_NAMES, buildModel } from "./zoo";

function imageTensor(path: string, size: number): tf.Tensor {
  const raw = fs.readFileSync(path);
  if (raw.length === size * size * 3) {
    // raw uint8 RGB at the requested resolution
    const data = Float32Array.from(raw, (b) => b / 255);
    return tf.tensor4d(data, [1, size, size, 3]);
  }
  // anything else (an encoded image, say) seeds a deterministic tensor;
  // only its size and the timing it drives matter to the planner
  let seed = 2166136261;
  for (const byte of raw) {
    seed = Math.imul(seed ^ byte, 16777619) >>> 0;
  }
  return tf.randomUniform([1, size, size, 3], 0, 1, "float32", seed);
}

function cmdExport(argv: { model: string; out: string; inputBytes?: number }): void {
  const model = buildModel(argv.model, { weightInit: "zeros" });
  const { doc } = analyzeModel(model, argv.model, argv.inputBytes);
  const { units, cutPoints } = computeUnits(doc);
  fs.writeFileSync(argv.out, JSON.stringify(doc, null, 1) + "\n");
  console.error(
    `exported ${argv.model}: ${doc.layers.length} layers, ` +
    `${units.length} units, ${cutPoints.length} cut points -> ${argv.out}`);
}

function cmdBench(argv: {
  model: string; image: string; runs: number; resourceId: string;
  tier: string; out: string; inputSize?: number; alpha?: number;
}): void {
  const model = buildModel(argv.model, { inputSize: argv.inputSize, alpha: argv.alpha });
  const { doc, layerObjects } = analyzeModel(model, argv.model);
  const { units } = computeUnits(doc);
  const subs = splitModel(layerObjects, units);
  const size = (model.inputs[0].shape as number[])[1];
  const input = imageTensor(argv.image, size);
  const profile = benchmark(model, subs, units, input, {
    resourceId: argv.resourceId,
    tier: argv.tier,
    modelName: argv.model,
    runs: argv.runs,
  });
  fs.writeFileSync(argv.out, JSON.stringify(profile, null, 1) + "\n");
  const gap = additivityGap(model, profile, input);
  console.error(
    `benchmarked ${argv.model} on ${argv.resourceId}: ${profile.units.length} units ` +
    `x ${argv.runs} runs -> ${argv.out}`);
  console.error(
    `additivity check: sum of unit means differs from monolithic inference ` +
    `by ${(gap * 100).toFixed(1)}%`);
  input.dispose();
}

export function main(args: string[]): void {
  yargs(args)
    .command(
      "export", "write the layer graph of a model",
      (y) => y
        .option("model", { type: "string", demandOption: true, choices: [...MODEL_NAMES] })
        .option("out", { type: "string", demandOption: true })
        .option("input-bytes", {
          type: "number",
          describe: "override reference_input_bytes (defaults to the raw input tensor size)",
        }),
      (argv) => cmdExport(argv as never))
    .command(
      "bench", "benchmark each execution unit of a model",
      (y) => y
        .option("model", { type: "string", demandOption: true, choices: [...MODEL_NAMES] })
        .option("image", { type: "string", demandOption: true })
        .option("runs", { type: "number", default: 5 })
        .option("resource-id", { type: "string", demandOption: true })
        .option("tier", { type: "string", demandOption: true,
                          choices: ["device", "edge", "cloud"] })
        .option("out", { type: "string", demandOption: true })
        .option("input-size", { type: "number" })
        .option("alpha", { type: "number" }),
      (argv) => cmdBench(argv as never))
    .demandCommand(1)
    .strict()
    .parseSync();
}

if (require.main === module) {
  main(hideBin(process.argv));
}
