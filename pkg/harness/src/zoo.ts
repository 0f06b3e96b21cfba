/**
 * Reference CNN architectures built layer-for-layer like the stock Keras
 * application models, so that layer inventories (and therefore partition
 * points) match the published networks exactly.  Weights are randomly
 * initialised; sizes and structure are what matter here.
 */

import * as tf from "@tensorflow/tfjs";

export type WeightInit = "default" | "zeros";

export interface BuildOptions {
  /** spatial input size; defaults match the 224x224 classifiers */
  inputSize?: number;
  /** MobileNet width multiplier */
  alpha?: number;
  /** "zeros" skips random weight generation; fine for structural exports */
  weightInit?: WeightInit;
}

export const MODEL_NAMES = ["vgg16", "vgg19", "resnet50", "mobilenet"] as const;

type Sym = tf.SymbolicTensor;

function convInit(init: WeightInit) {
  return init === "zeros" ? { kernelInitializer: "zeros" as const } : {};
}

export function buildModel(name: string, opts: BuildOptions = {}): tf.LayersModel {
  switch (name) {
    case "vgg16":
      return vgg("vgg16", [2, 2, 3, 3, 3], opts);
    case "vgg19":
      return vgg("vgg19", [2, 2, 4, 4, 4], opts);
    case "resnet50":
      return resnet50(opts);
    case "mobilenet":
      return mobilenet(opts);
    default:
      throw new Error(`unknown model '${name}' (known: ${MODEL_NAMES.join(", ")})`);
  }
}

function vgg(name: string, convsPerBlock: number[], opts: BuildOptions): tf.LayersModel {
  const size = opts.inputSize ?? 224;
  const init = convInit(opts.weightInit ?? "default");
  const channels = [64, 128, 256, 512, 512];
  const input = tf.input({ shape: [size, size, 3], name: "input_1" });
  let x: Sym = input;
  convsPerBlock.forEach((nConvs, blockIdx) => {
    const block = blockIdx + 1;
    for (let i = 1; i <= nConvs; i++) {
      x = tf.layers
        .conv2d({
          filters: channels[blockIdx], kernelSize: 3, padding: "same",
          activation: "relu", name: `block${block}_conv${i}`, ...init,
        })
        .apply(x) as Sym;
    }
    x = tf.layers
      .maxPooling2d({ poolSize: 2, strides: 2, name: `block${block}_pool` })
      .apply(x) as Sym;
  });
  x = tf.layers.flatten({ name: "flatten" }).apply(x) as Sym;
  x = tf.layers.dense({ units: 4096, activation: "relu", name: "fc1", ...init }).apply(x) as Sym;
  x = tf.layers.dense({ units: 4096, activation: "relu", name: "fc2", ...init }).apply(x) as Sym;
  x = tf.layers
    .dense({ units: 1000, activation: "softmax", name: "predictions", ...init })
    .apply(x) as Sym;
  return tf.model({ inputs: input, outputs: x, name });
}

function resnet50(opts: BuildOptions): tf.LayersModel {
  const size = opts.inputSize ?? 224;
  const init = convInit(opts.weightInit ?? "default");

  const block = (x: Sym, filters: number, stride: number,
                 convShortcut: boolean, name: string): Sym => {
    let shortcut: Sym;
    if (convShortcut) {
      shortcut = tf.layers
        .conv2d({ filters: 4 * filters, kernelSize: 1, strides: stride,
                  name: `${name}_0_conv`, ...init })
        .apply(x) as Sym;
      shortcut = tf.layers
        .batchNormalization({ name: `${name}_0_bn` })
        .apply(shortcut) as Sym;
    } else {
      shortcut = x;
    }
    let y = tf.layers
      .conv2d({ filters, kernelSize: 1, strides: stride, name: `${name}_1_conv`, ...init })
      .apply(x) as Sym;
    y = tf.layers.batchNormalization({ name: `${name}_1_bn` }).apply(y) as Sym;
    y = tf.layers.activation({ activation: "relu", name: `${name}_1_relu` }).apply(y) as Sym;
    y = tf.layers
      .conv2d({ filters, kernelSize: 3, padding: "same", name: `${name}_2_conv`, ...init })
      .apply(y) as Sym;
    y = tf.layers.batchNormalization({ name: `${name}_2_bn` }).apply(y) as Sym;
    y = tf.layers.activation({ activation: "relu", name: `${name}_2_relu` }).apply(y) as Sym;
    y = tf.layers
      .conv2d({ filters: 4 * filters, kernelSize: 1, name: `${name}_3_conv`, ...init })
      .apply(y) as Sym;
    y = tf.layers.batchNormalization({ name: `${name}_3_bn` }).apply(y) as Sym;
    y = tf.layers.add({ name: `${name}_add` }).apply([shortcut, y]) as Sym;
    return tf.layers.activation({ activation: "relu", name: `${name}_out` }).apply(y) as Sym;
  };

  const input = tf.input({ shape: [size, size, 3], name: "input_1" });
  let x = tf.layers
    .zeroPadding2d({ padding: [[3, 3], [3, 3]], name: "conv1_pad" })
    .apply(input) as Sym;
  x = tf.layers
    .conv2d({ filters: 64, kernelSize: 7, strides: 2, name: "conv1_conv", ...init })
    .apply(x) as Sym;
  x = tf.layers.batchNormalization({ name: "conv1_bn" }).apply(x) as Sym;
  x = tf.layers.activation({ activation: "relu", name: "conv1_relu" }).apply(x) as Sym;
  x = tf.layers
    .zeroPadding2d({ padding: [[1, 1], [1, 1]], name: "pool1_pad" })
    .apply(x) as Sym;
  x = tf.layers
    .maxPooling2d({ poolSize: 3, strides: 2, name: "pool1_pool" })
    .apply(x) as Sym;

  const stages: Array<[string, number, number]> = [
    ["conv2", 64, 3], ["conv3", 128, 4], ["conv4", 256, 6], ["conv5", 512, 3],
  ];
  stages.forEach(([stage, filters, blocks], stageIdx) => {
    for (let i = 1; i <= blocks; i++) {
      const stride = i === 1 && stageIdx > 0 ? 2 : 1;
      x = block(x, filters, stride, i === 1, `${stage}_block${i}`);
    }
  });

  x = tf.layers.globalAveragePooling2d({ name: "avg_pool" }).apply(x) as Sym;
  x = tf.layers
    .dense({ units: 1000, activation: "softmax", name: "predictions", ...init })
    .apply(x) as Sym;
  return tf.model({ inputs: input, outputs: x, name: "resnet50" });
}

function mobilenet(opts: BuildOptions): tf.LayersModel {
  const size = opts.inputSize ?? 224;
  const alpha = opts.alpha ?? 1.0;
  const init = convInit(opts.weightInit ?? "default");
  const filters = (f: number) => Math.max(1, Math.round(f * alpha));

  const input = tf.input({ shape: [size, size, 3], name: "input_1" });
  let x = tf.layers
    .zeroPadding2d({ padding: [[0, 1], [0, 1]], name: "conv1_pad" })
    .apply(input) as Sym;
  x = tf.layers
    .conv2d({ filters: filters(32), kernelSize: 3, strides: 2, padding: "valid",
              useBias: false, name: "conv1", ...init })
    .apply(x) as Sym;
  x = tf.layers.batchNormalization({ name: "conv1_bn" }).apply(x) as Sym;
  x = tf.layers.reLU({ maxValue: 6, name: "conv1_relu" }).apply(x) as Sym;

  const pointwise = [64, 128, 128, 256, 256, 512, 512, 512, 512, 512, 512, 1024, 1024];
  const strided = new Set([2, 4, 6, 12]);
  pointwise.forEach((pw, idx) => {
    const i = idx + 1;
    const stride = strided.has(i) ? 2 : 1;
    if (stride === 2) {
      x = tf.layers
        .zeroPadding2d({ padding: [[0, 1], [0, 1]], name: `conv_pad_${i}` })
        .apply(x) as Sym;
    }
    x = tf.layers
      .depthwiseConv2d({ kernelSize: 3, strides: stride,
                         padding: stride === 2 ? "valid" : "same",
                         useBias: false, name: `conv_dw_${i}` })
      .apply(x) as Sym;
    x = tf.layers.batchNormalization({ name: `conv_dw_${i}_bn` }).apply(x) as Sym;
    x = tf.layers.reLU({ maxValue: 6, name: `conv_dw_${i}_relu` }).apply(x) as Sym;
    x = tf.layers
      .conv2d({ filters: filters(pw), kernelSize: 1, padding: "same",
                useBias: false, name: `conv_pw_${i}`, ...init })
      .apply(x) as Sym;
    x = tf.layers.batchNormalization({ name: `conv_pw_${i}_bn` }).apply(x) as Sym;
    x = tf.layers.reLU({ maxValue: 6, name: `conv_pw_${i}_relu` }).apply(x) as Sym;
  });

  x = tf.layers.globalAveragePooling2d({ name: "global_average_pooling2d" }).apply(x) as Sym;
  x = tf.layers
    .reshape({ targetShape: [1, 1, filters(1024)], name: "reshape_1" })
    .apply(x) as Sym;
  x = tf.layers.dropout({ rate: 1e-3, name: "dropout" }).apply(x) as Sym;
  x = tf.layers
    .conv2d({ filters: 1000, kernelSize: 1, padding: "same", name: "conv_preds", ...init })
    .apply(x) as Sym;
  x = tf.layers.reshape({ targetShape: [1000], name: "reshape_2" }).apply(x) as Sym;
  x = tf.layers.activation({ activation: "softmax", name: "act_softmax" }).apply(x) as Sym;
  return tf.model({ inputs: input, outputs: x, name: "mobilenet" });
}
