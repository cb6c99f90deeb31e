/**
 * Training and prediction dumping.
 *
 * The harness trains on a poisoned dataset directory and writes prediction
 * masks in the interchange format, so the segpoison evaluator scores them
 * with zero class-id remapping; no metric is ever computed here.  Training
 * divergence (non-finite loss) aborts before any prediction is written.
 */
import * as tf from '@tensorflow/tfjs';

import { HarnessConfig } from './config.js';
import {
  Dataset,
  TensorBatch,
  loadDataset,
  toTensors,
  writeMaskDirectory,
} from './dataset.js';
import { buildModel } from './model.js';
import { Mask } from './png.js';

export class TrainingDiverged extends Error {}

export interface TrainResult {
  model: tf.LayersModel;
  epochLosses: number[];
}

export async function trainModel(
  config: HarnessConfig,
  dataset: Dataset,
  log: (line: string) => void = () => {},
): Promise<TrainResult> {
  const model = buildModel(config.architecture, dataset.numClasses, config.resize);
  const data = toTensors(dataset, config.resize);
  try {
    const losses = await runSgd(model, data, dataset.numClasses, config, log);
    return { model, epochLosses: losses };
  } finally {
    tf.dispose([data.x, data.y, data.w]);
  }
}

async function runSgd(
  model: tf.LayersModel,
  data: TensorBatch,
  numClasses: number,
  config: HarnessConfig,
  log: (line: string) => void,
): Promise<number[]> {
  const optimizer = tf.train.adam(config.learningRate);
  const n = data.x.shape[0];
  const epochLosses: number[] = [];
  try {
    for (let epoch = 0; epoch < config.epochs; epoch++) {
      let lossSum = 0;
      let steps = 0;
      for (let start = 0; start < n; start += config.batchSize) {
        const count = Math.min(config.batchSize, n - start);
        const cost = tf.tidy(() => {
          const xb = data.x.slice([start, 0, 0, 0], [count, -1, -1, -1]);
          const yb = data.y.slice([start, 0, 0], [count, -1, -1]);
          const wb = data.w.slice([start, 0, 0], [count, -1, -1]);
          return optimizer.minimize(
            () =>
              tf.losses.softmaxCrossEntropy(
                tf.oneHot(yb, numClasses),
                model.apply(xb) as tf.Tensor4D,
                wb,
              ) as tf.Scalar,
            true,
          ) as tf.Scalar;
        });
        const value = (await cost.data())[0];
        cost.dispose();
        if (!Number.isFinite(value)) {
          throw new TrainingDiverged(
            `loss became ${value} at epoch ${epoch}, step ${steps}`,
          );
        }
        lossSum += value;
        steps += 1;
        // cpu-backend steps are synchronous; let the event loop breathe so
        // the process stays responsive during long trainings
        await new Promise((resolve) => setImmediate(resolve));
      }
      epochLosses.push(lossSum / steps);
      log(`epoch ${epoch}: mean loss ${(lossSum / steps).toFixed(4)}`);
    }
  } finally {
    optimizer.dispose();
  }
  return epochLosses;
}

export async function predictDataset(
  model: tf.LayersModel,
  dataset: Dataset,
  resize: number,
): Promise<Array<{ id: string; mask: Mask }>> {
  const results: Array<{ id: string; mask: Mask }> = [];
  for (const sample of dataset.samples) {
    const prediction = tf.tidy(() => {
      const img = tf.tensor3d(
        Float32Array.from(sample.image.data, (v) => v / 255),
        [sample.image.height, sample.image.width, 3],
      );
      const resized = tf.image.resizeNearestNeighbor(
        img.expandDims(0) as tf.Tensor4D,
        [resize, resize],
      );
      const logits = model.apply(resized) as tf.Tensor4D;
      const classes = tf.argMax(logits, 3).expandDims(3).cast('int32') as tf.Tensor4D;
      // back to the sample's native resolution so masks align with ground truth
      return tf.image
        .resizeNearestNeighbor(classes, [sample.image.height, sample.image.width])
        .squeeze([0, 3]);
    });
    const values = prediction.dataSync();
    prediction.dispose();
    results.push({
      id: sample.id,
      mask: {
        width: sample.image.width,
        height: sample.image.height,
        data: Uint8Array.from(values),
      },
    });
    await new Promise((resolve) => setImmediate(resolve));
  }
  return results;
}

export interface DumpedPredictions {
  benignDir: string;
  attackedDir: string;
  epochLosses: number[];
}

/**
 * Train on the configured dataset, then write predictions for the benign
 * and attacked test directories under `predsOut`/benign and /attacked.
 */
export async function trainAndDumpPredictions(
  config: HarnessConfig,
  benignTestDir: string,
  attackedTestDir: string,
  predsOut: string,
  log: (line: string) => void = () => {},
): Promise<DumpedPredictions> {
  const trainSet = loadDataset(config.datasetDir);
  const benign = loadDataset(benignTestDir);
  const attacked = loadDataset(attackedTestDir);
  const { model, epochLosses } = await trainModel(config, trainSet, log);
  try {
    const benignDir = `${predsOut}/benign`;
    const attackedDir = `${predsOut}/attacked`;
    writeMaskDirectory(
      await predictDataset(model, benign, config.resize),
      trainSet.numClasses,
      benign.split,
      benignDir,
    );
    writeMaskDirectory(
      await predictDataset(model, attacked, config.resize),
      trainSet.numClasses,
      attacked.split,
      attackedDir,
    );
    return { benignDir, attackedDir, epochLosses };
  } finally {
    model.dispose();
  }
}
