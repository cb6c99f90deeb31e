/**
 * Small fully-convolutional segmentation networks.
 *
 * `miniseg` is a plain stack of 3x3 convolutions (receptive field 7x7 at
 * the working resolution).  `context` downsamples twice and upsamples back,
 * trading per-pixel sharpness for a much wider receptive field -- the
 * property that lets image-level backdoor triggers act at a distance.
 */
import * as tf from '@tensorflow/tfjs';

import { Architecture } from './config.js';

export function buildModel(
  architecture: Architecture,
  numClasses: number,
  size: number,
): tf.LayersModel {
  if (architecture === 'miniseg') {
    const model = tf.sequential();
    model.add(
      tf.layers.conv2d({
        inputShape: [size, size, 3],
        filters: 16,
        kernelSize: 3,
        padding: 'same',
        activation: 'relu',
      }),
    );
    model.add(
      tf.layers.conv2d({ filters: 16, kernelSize: 3, padding: 'same', activation: 'relu' }),
    );
    model.add(tf.layers.conv2d({ filters: numClasses, kernelSize: 1, padding: 'same' }));
    return model;
  }

  // context: encoder-decoder with skip-free upsampling, logits at full size
  const input = tf.input({ shape: [size, size, 3] });
  let h = tf.layers
    .conv2d({ filters: 16, kernelSize: 3, padding: 'same', activation: 'relu' })
    .apply(input) as tf.SymbolicTensor;
  h = tf.layers.maxPooling2d({ poolSize: 2 }).apply(h) as tf.SymbolicTensor;
  h = tf.layers
    .conv2d({ filters: 32, kernelSize: 3, padding: 'same', activation: 'relu' })
    .apply(h) as tf.SymbolicTensor;
  h = tf.layers.maxPooling2d({ poolSize: 2 }).apply(h) as tf.SymbolicTensor;
  h = tf.layers
    .conv2d({ filters: 32, kernelSize: 3, padding: 'same', activation: 'relu' })
    .apply(h) as tf.SymbolicTensor;
  h = tf.layers.upSampling2d({ size: [4, 4] }).apply(h) as tf.SymbolicTensor;
  const logits = tf.layers
    .conv2d({ filters: numClasses, kernelSize: 1, padding: 'same' })
    .apply(h) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: logits });
}
