/**
 * Loading segpoison dataset directories into framework-native tensors.
 *
 * A dataset directory holds manifest.json + images/<id>.png + masks/<id>.png;
 * class ids are preserved exactly and the 255 ignore sentinel is mapped to a
 * zero loss weight (tfjs has no ignore index, so ignore pixels carry weight 0
 * and a dummy label).
 */
import * as fs from 'node:fs';
import * as path from 'node:path';
import * as tf from '@tensorflow/tfjs';

import { Mask, RgbImage, readMaskPng, readRgbPng, writeMaskPng } from './png.js';

export const IGNORE_VALUE = 255;
export const DATASET_FORMAT = 'segpoison-dataset/1';
export const MASKS_FORMAT = 'segpoison-masks/1';

export interface DatasetSample {
  id: string;
  image: RgbImage;
  mask: Mask;
}

export interface Dataset {
  numClasses: number;
  split: string;
  samples: DatasetSample[];
}

export class LoadError extends Error {}

interface Manifest {
  format: string;
  num_classes: number;
  split: string;
  samples: string[];
}

function readManifest(dir: string): Manifest {
  const file = path.join(dir, 'manifest.json');
  if (!fs.existsSync(file)) {
    throw new LoadError(`${dir}: no manifest.json`);
  }
  const doc = JSON.parse(fs.readFileSync(file, 'utf8'));
  if (doc.format !== DATASET_FORMAT) {
    throw new LoadError(`${dir}: unexpected manifest format ${doc.format}`);
  }
  if (!Array.isArray(doc.samples) || typeof doc.num_classes !== 'number') {
    throw new LoadError(`${dir}: malformed manifest`);
  }
  return doc as Manifest;
}

export function loadDataset(dir: string): Dataset {
  const manifest = readManifest(dir);
  const samples = manifest.samples.map((id) => {
    const image = readRgbPng(path.join(dir, 'images', `${id}.png`));
    const mask = readMaskPng(path.join(dir, 'masks', `${id}.png`));
    if (image.width !== mask.width || image.height !== mask.height) {
      throw new LoadError(`${dir}: sample ${id} image/mask size mismatch`);
    }
    for (const v of mask.data) {
      if (v !== IGNORE_VALUE && v >= manifest.num_classes) {
        throw new LoadError(`${dir}: sample ${id} carries class ${v} >= K`);
      }
    }
    return { id, image, mask };
  });
  return { numClasses: manifest.num_classes, split: manifest.split, samples };
}

export interface TensorBatch {
  /** Images resized to [n, size, size, 3] in [0, 1]. */
  x: tf.Tensor4D;
  /** Labels resized (nearest neighbor) to [n, size, size], ignore mapped to 0. */
  y: tf.Tensor3D;
  /** Per-pixel loss weights: 0 on ignore pixels, 1 elsewhere. */
  w: tf.Tensor3D;
}

export function toTensors(dataset: Dataset, size: number): TensorBatch {
  return tf.tidy(() => {
    const xs: tf.Tensor3D[] = [];
    const ys: tf.Tensor2D[] = [];
    const ws: tf.Tensor2D[] = [];
    for (const s of dataset.samples) {
      const img = tf
        .tensor3d(Float32Array.from(s.image.data, (v) => v / 255), [
          s.image.height,
          s.image.width,
          3,
        ]);
      xs.push(
        tf.image
          .resizeNearestNeighbor(img.expandDims(0) as tf.Tensor4D, [size, size])
          .squeeze([0]),
      );
      const labels = tf.tensor3d(Int32Array.from(s.mask.data), [
        s.mask.height,
        s.mask.width,
        1,
      ], 'int32');
      const resized = tf.image
        .resizeNearestNeighbor(labels.expandDims(0) as tf.Tensor4D, [size, size])
        .squeeze([0, 3]) as tf.Tensor2D;
      const ignore = tf.equal(resized, IGNORE_VALUE);
      ws.push(tf.where(ignore, tf.zerosLike(resized), tf.onesLike(resized)).cast('float32') as tf.Tensor2D);
      ys.push(tf.where(ignore, tf.zerosLike(resized), resized).cast('int32') as tf.Tensor2D);
    }
    return {
      x: tf.keep(tf.stack(xs) as tf.Tensor4D),
      y: tf.keep(tf.stack(ys) as tf.Tensor3D),
      w: tf.keep(tf.stack(ws) as tf.Tensor3D),
    };
  });
}

export function writeMaskDirectory(
  masks: Array<{ id: string; mask: Mask }>,
  numClasses: number,
  split: string,
  outDir: string,
): void {
  // build in a staging directory so a failure never leaves partial output
  const staging = `${outDir}.tmp-${process.pid}`;
  fs.rmSync(staging, { recursive: true, force: true });
  fs.mkdirSync(path.join(staging, 'masks'), { recursive: true });
  for (const { id, mask } of masks) {
    writeMaskPng(mask, path.join(staging, 'masks', `${id}.png`));
  }
  fs.writeFileSync(
    path.join(staging, 'manifest.json'),
    JSON.stringify(
      {
        format: MASKS_FORMAT,
        num_classes: numClasses,
        samples: masks.map((m) => m.id),
        split,
      },
      null,
      2,
    ) + '\n',
  );
  fs.rmSync(outDir, { recursive: true, force: true });
  fs.renameSync(staging, outDir);
}
