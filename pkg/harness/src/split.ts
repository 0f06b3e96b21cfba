/**
 * Split a model into one runnable sub-model per execution unit.  Each
 * sub-model gets a fresh input layer shaped like the previous unit's
 * boundary tensor; layer objects are re-applied, so weights are shared with
 * the original model and the chained sub-models reproduce its predictions.
 */

import * as tf from "@tensorflow/tfjs";
import { UnitSpec } from "./types";

export interface SubModel {
  unitId: number;
  /** null for the bare input unit, which performs no computation */
  model: tf.LayersModel | null;
}

type Sym = tf.SymbolicTensor;

export function splitModel(layerObjects: tf.layers.Layer[],
                           units: UnitSpec[]): SubModel[] {
  const subs: SubModel[] = [];
  for (const unit of units) {
    if (unit.unitId === 0) {
      subs.push({ unitId: 0, model: null });
      continue;
    }
    const prev = units[unit.unitId - 1];
    const boundaryLayer = layerObjects[prev.memberIds[prev.memberIds.length - 1]];
    const shape = (boundaryLayer.outputShape as Array<number | null>).slice(1) as number[];
    const freshInput = tf.input({
      shape,
      name: `unit${unit.unitId}_input_${boundaryLayer.name}`,
    });

    const members = new Set(unit.memberIds);
    const grown = new Map<number, Sym>();
    for (const id of unit.memberIds) {
      const layer = layerObjects[id];
      const preds = (layer.inboundNodes[0].inboundLayers as tf.layers.Layer[])
        .map((p) => layerObjects.indexOf(p));
      const inputs = preds.map((p) => (members.has(p) ? grown.get(p)! : freshInput));
      const out = layer.apply(inputs.length === 1 ? inputs[0] : inputs) as Sym;
      grown.set(id, out);
    }
    const lastId = unit.memberIds[unit.memberIds.length - 1];
    subs.push({
      unitId: unit.unitId,
      model: tf.model({
        inputs: freshInput,
        outputs: grown.get(lastId)!,
        name: `unit${unit.unitId}`,
      }),
    });
  }
  return subs;
}

/** Feed a tensor through every sub-model in order. */
export function chainPredict(subs: SubModel[], input: tf.Tensor): tf.Tensor {
  return tf.tidy(() => {
    let x = input;
    for (const sub of subs) {
      if (sub.model !== null) {
        x = sub.model.predict(x) as tf.Tensor;
      }
    }
    return x;
  });
}

/** Boundary tensors entering each unit (index 0 is the raw input). */
export function unitInputs(subs: SubModel[], input: tf.Tensor): tf.Tensor[] {
  const inputs: tf.Tensor[] = [input];
  let x = input;
  for (const sub of subs) {
    if (sub.model !== null) {
      x = sub.model.predict(x) as tf.Tensor;
    }
    inputs.push(x);
  }
  inputs.pop(); // the final prediction feeds nothing
  return inputs;
}

export function top1(prediction: tf.Tensor): number {
  return tf.tidy(() => prediction.reshape([-1]).argMax().dataSync()[0]);
}
