/**
 * Per-unit benchmarking: one untimed warm-up pass, then `runs` timed
 * predictions per sub-model on its real boundary input.  Sequential on
 * purpose; concurrent timing would contaminate the samples.
 */

import * as tf from "@tensorflow/tfjs";
import { performance } from "perf_hooks";
import { SubModel, unitInputs } from "./split";
import { ProfileDoc, ProfileUnit, UnitSpec } from "./types";

export interface BenchOptions {
  resourceId: string;
  tier: string;
  modelName: string;
  runs: number;
}

function timeOnce(fn: () => tf.Tensor): { seconds: number; out: tf.Tensor } {
  const t0 = performance.now();
  const out = fn();
  out.dataSync(); // force evaluation before stopping the clock
  return { seconds: (performance.now() - t0) / 1000, out };
}

export function benchmark(model: tf.LayersModel, subs: SubModel[],
                          units: UnitSpec[], input: tf.Tensor,
                          opts: BenchOptions): ProfileDoc {
  if (opts.runs < 1) {
    throw new Error("runs must be at least 1");
  }
  const boundaryInputs = unitInputs(subs, input); // doubles as the warm-up pass
  try {
    const unitDocs: ProfileUnit[] = [];
    for (const sub of subs) {
      const feed = boundaryInputs[sub.unitId];
      const samples: number[] = [];
      let outBytes = 0;
      for (let r = 0; r < opts.runs; r++) {
        const { seconds, out } = timeOnce(() =>
          sub.model === null ? feed : (sub.model.predict(feed) as tf.Tensor));
        samples.push(seconds);
        outBytes = out.size * 4;
        if (out !== feed) out.dispose();
      }
      unitDocs.push({
        unit_id: sub.unitId,
        mean_s: samples.reduce((a, b) => a + b, 0) / samples.length,
        samples_s: samples,
        output_bytes: outBytes,
      });
    }
    return {
      resource_id: opts.resourceId,
      tier: opts.tier,
      model_name: opts.modelName,
      runs: opts.runs,
      units: unitDocs,
    };
  } finally {
    for (const t of boundaryInputs) {
      if (t !== input) t.dispose();
    }
  }
}

/** Informational check: the additivity assumption (sum of unit times vs one
 *  monolithic inference).  Returns the relative gap. */
export function additivityGap(model: tf.LayersModel, profile: ProfileDoc,
                              input: tf.Tensor): number {
  const warm = model.predict(input) as tf.Tensor;
  warm.dataSync();
  warm.dispose();
  const { seconds, out } = timeOnce(() => model.predict(input) as tf.Tensor);
  out.dispose();
  const summed = profile.units.reduce((acc, u) => acc + u.mean_s, 0);
  return Math.abs(summed - seconds) / Math.max(seconds, 1e-9);
}
