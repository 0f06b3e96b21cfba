import * as tf from "@tensorflow/tfjs";
import { afterEach, describe, expect, it } from "vitest";

import { analyzeModel, computeUnits } from "../src/graph";
import { chainPredict, splitModel, top1, unitInputs } from "../src/split";
import { buildModel } from "../src/zoo";

afterEach(() => {
  tf.disposeVariables();
});

function randomImage(size: number, seed: number): tf.Tensor {
  return tf.randomUniform([1, size, size, 3], 0, 1, "float32", seed);
}

describe("sub-model splitting", () => {
  it("chained mobilenet sub-models reproduce full-model top-1 on 10 images", () => {
    const size = 96;
    const model = buildModel("mobilenet", { inputSize: size, alpha: 0.25 });
    const { doc, layerObjects } = analyzeModel(model, "mobilenet");
    const { units, cutPoints } = computeUnits(doc);
    expect(cutPoints.length).toBe(91); // width/resolution do not change structure
    const subs = splitModel(layerObjects, units);

    let matches = 0;
    for (let i = 0; i < 10; i++) {
      const image = randomImage(size, 1000 + i);
      const full = model.predict(image) as tf.Tensor;
      const chained = chainPredict(subs, image);
      if (top1(full) === top1(chained)) matches += 1;
      tf.dispose([image, full, chained]);
    }
    expect(matches).toBe(10);
    model.dispose();
  });

  it("chained resnet50 sub-models reproduce full-model top-1 (branching blocks)", () => {
    const size = 32;
    const model = buildModel("resnet50", { inputSize: size });
    const { doc, layerObjects } = analyzeModel(model, "resnet50");
    const { units } = computeUnits(doc);
    expect(units.length).toBe(25);
    const subs = splitModel(layerObjects, units);

    for (let i = 0; i < 3; i++) {
      const image = randomImage(size, 2000 + i);
      const full = model.predict(image) as tf.Tensor;
      const chained = chainPredict(subs, image);
      expect(top1(chained)).toBe(top1(full));
      tf.dispose([image, full, chained]);
    }
    model.dispose();
  });

  it("boundary tensors match the exported output_bytes", () => {
    const size = 64;
    const model = buildModel("mobilenet", { inputSize: size, alpha: 0.25 });
    const { doc, layerObjects } = analyzeModel(model, "mobilenet");
    const { units } = computeUnits(doc);
    const subs = splitModel(layerObjects, units);

    const image = randomImage(size, 7);
    const feeds = unitInputs(subs, image);
    // the tensor entering unit k+1 is unit k's boundary output
    for (let k = 1; k < units.length; k++) {
      expect(feeds[k].size * 4).toBe(units[k - 1].boundaryBytes);
    }
    for (const t of feeds) {
      if (t !== image) t.dispose();
    }
    image.dispose();
    model.dispose();
  });
});
