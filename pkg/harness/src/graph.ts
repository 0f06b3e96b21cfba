/**
 * Model introspection: walk a LayersModel into the graph-interchange
 * document, and group its layers into execution units the same way the
 * planner does (a boundary is splittable only when exactly one edge
 * crosses it; the boundary after the input layer never is).
 */

import * as tf from "@tensorflow/tfjs";
import { GraphDoc, GraphLayer, UnitSpec } from "./types";

export interface ModelAnalysis {
  doc: GraphDoc;
  /** layer objects indexed by the ids used in doc */
  layerObjects: tf.layers.Layer[];
}

const KIND_BY_CLASS: Record<string, string> = {
  InputLayer: "input",
  Conv2D: "convolution",
  DepthwiseConv2D: "convolution",
  SeparableConv2D: "convolution",
  MaxPooling2D: "pooling",
  AveragePooling2D: "pooling",
  GlobalAveragePooling2D: "pooling",
  GlobalMaxPooling2D: "pooling",
  Dense: "dense",
  ReLU: "activation",
  LeakyReLU: "activation",
  BatchNormalization: "normalization",
  LayerNormalization: "normalization",
  Add: "merge",
  Concatenate: "merge",
  Multiply: "merge",
};

function layerKind(layer: tf.layers.Layer): string {
  const cls = layer.getClassName();
  if (cls === "Activation") {
    const cfg = layer.getConfig() as { activation?: string };
    return cfg.activation === "softmax" ? "softmax" : "activation";
  }
  return KIND_BY_CLASS[cls] ?? "other";
}

export function tensorBytes(shape: Array<number | null>): number {
  let elems = 1;
  for (const dim of shape) {
    if (dim !== null && dim !== undefined) elems *= dim;
  }
  return elems * 4; // float32
}

function predecessorsOf(layer: tf.layers.Layer): tf.layers.Layer[] {
  // node 0 is the one created when the model graph was built; later
  // applications (sub-model construction) append further nodes
  const node = layer.inboundNodes[0];
  return node ? (node.inboundLayers as tf.layers.Layer[]) : [];
}

/** Topologically order the model's layers (ties by build order) and emit
 *  the interchange document. */
export function analyzeModel(model: tf.LayersModel, modelName: string,
                             referenceInputBytes?: number): ModelAnalysis {
  const buildIndex = new Map<tf.layers.Layer, number>();
  model.layers.forEach((layer, i) => buildIndex.set(layer, i));

  const indegree = new Map<tf.layers.Layer, number>();
  const successors = new Map<tf.layers.Layer, tf.layers.Layer[]>();
  for (const layer of model.layers) {
    indegree.set(layer, predecessorsOf(layer).length);
    successors.set(layer, []);
  }
  for (const layer of model.layers) {
    for (const pred of predecessorsOf(layer)) {
      successors.get(pred)!.push(layer);
    }
  }

  const ready = model.layers.filter((l) => indegree.get(l) === 0);
  const ordered: tf.layers.Layer[] = [];
  while (ready.length > 0) {
    ready.sort((a, b) => buildIndex.get(a)! - buildIndex.get(b)!);
    const layer = ready.shift()!;
    ordered.push(layer);
    for (const nxt of successors.get(layer)!) {
      const d = indegree.get(nxt)! - 1;
      indegree.set(nxt, d);
      if (d === 0) ready.push(nxt);
    }
  }
  if (ordered.length !== model.layers.length) {
    throw new Error("model graph is not acyclic");
  }

  const idOf = new Map<tf.layers.Layer, number>();
  ordered.forEach((layer, i) => idOf.set(layer, i));

  const layers: GraphLayer[] = ordered.map((layer, i) => ({
    id: i,
    name: layer.name,
    kind: layerKind(layer),
    output_bytes: tensorBytes(layer.outputShape as Array<number | null>),
  }));
  const edges: Array<[number, number]> = [];
  for (const layer of ordered) {
    for (const pred of predecessorsOf(layer)) {
      edges.push([idOf.get(pred)!, idOf.get(layer)!]);
    }
  }
  edges.sort((a, b) => a[0] - b[0] || a[1] - b[1]);

  const inputBytes = referenceInputBytes ??
    tensorBytes(model.inputs[0].shape as Array<number | null>);
  return {
    doc: { model_name: modelName, reference_input_bytes: inputBytes, layers, edges },
    layerObjects: ordered,
  };
}

export interface UnitPlan {
  units: UnitSpec[];
  cutPoints: number[];
}

/** Mirror of the planner's cut detection, used to know where sub-models
 *  must begin and end. */
export function computeUnits(doc: GraphDoc): UnitPlan {
  const n = doc.layers.length;
  // doc ids are already topological (analyzeModel numbers them that way)
  const crossDiff = new Array<number>(n + 1).fill(0);
  for (const [u, v] of doc.edges) {
    crossDiff[u] += 1;
    crossDiff[v] -= 1;
  }
  const crossing = new Array<number>(n).fill(0);
  let acc = 0;
  for (let i = 0; i < n - 1; i++) {
    acc += crossDiff[i];
    crossing[i] = acc;
  }

  const boundaries: number[] = [];
  for (let i = 0; i < n - 1; i++) {
    if (crossing[i] === 1) boundaries.push(i);
  }
  if (boundaries.length === 0 || boundaries[0] !== 0) {
    boundaries.unshift(0); // unit 0 is always the bare input layer
  }

  const units: UnitSpec[] = [];
  let start = 0;
  for (const b of boundaries) {
    const memberIds = [];
    for (let i = start; i <= b; i++) memberIds.push(i);
    units.push({
      unitId: units.length,
      memberIds,
      boundaryBytes: doc.layers[b].output_bytes,
    });
    start = b + 1;
  }
  const tail = [];
  for (let i = start; i < n; i++) tail.push(i);
  units.push({
    unitId: units.length,
    memberIds: tail,
    boundaryBytes: doc.layers[n - 1].output_bytes,
  });

  const cutPoints = [];
  for (let c = 1; c <= units.length - 2; c++) cutPoints.push(c);
  return { units, cutPoints };
}
