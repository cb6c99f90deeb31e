import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

import { PNG } from 'pngjs';
import * as tf from '@tensorflow/tfjs';
import { afterAll, describe, expect, it } from 'vitest';

import {
  LoadError,
  loadDataset,
  toTensors,
  writeMaskDirectory,
} from '../src/dataset.js';
import { writeMaskPng } from '../src/png.js';

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'harness-ds-'));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function writeRgb(file: string, width: number, height: number, fill: [number, number, number]) {
  const png = new PNG({ width, height, colorType: 2 });
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = fill[0];
    png.data[i * 4 + 1] = fill[1];
    png.data[i * 4 + 2] = fill[2];
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(file, PNG.sync.write(png, { colorType: 2 }));
}

function makeDataset(
  dir: string,
  samples: Array<{ id: string; fill: [number, number, number]; mask: number[] }>,
  size = 4,
  numClasses = 3,
  format = 'segpoison-dataset/1',
) {
  fs.mkdirSync(path.join(dir, 'images'), { recursive: true });
  fs.mkdirSync(path.join(dir, 'masks'), { recursive: true });
  for (const s of samples) {
    writeRgb(path.join(dir, 'images', `${s.id}.png`), size, size, s.fill);
    writeMaskPng(
      { width: size, height: size, data: Uint8Array.from(s.mask) },
      path.join(dir, 'masks', `${s.id}.png`),
    );
  }
  fs.writeFileSync(
    path.join(dir, 'manifest.json'),
    JSON.stringify({
      format,
      num_classes: numClasses,
      split: 'train',
      samples: samples.map((s) => s.id),
    }),
  );
}

const flat = (v: number, n = 16) => new Array(n).fill(v);

describe('loadDataset', () => {
  it('loads ids, images and masks in manifest order', () => {
    const dir = path.join(tmp, 'ok');
    makeDataset(dir, [
      { id: 'b', fill: [10, 20, 30], mask: flat(1) },
      { id: 'a', fill: [40, 50, 60], mask: flat(2) },
    ]);
    const ds = loadDataset(dir);
    expect(ds.numClasses).toBe(3);
    expect(ds.samples.map((s) => s.id)).toEqual(['b', 'a']);
    expect(ds.samples[0].image.data[0]).toBe(10);
    expect(ds.samples[1].mask.data[0]).toBe(2);
  });

  it('rejects a foreign manifest format', () => {
    const dir = path.join(tmp, 'foreign');
    makeDataset(dir, [{ id: 'a', fill: [0, 0, 0], mask: flat(0) }], 4, 3, 'elsewhere/9');
    expect(() => loadDataset(dir)).toThrow(LoadError);
  });

  it('rejects class ids at or above num_classes', () => {
    const dir = path.join(tmp, 'badclass');
    makeDataset(dir, [{ id: 'a', fill: [0, 0, 0], mask: flat(3) }]);
    expect(() => loadDataset(dir)).toThrow(LoadError);
  });

  it('accepts the ignore sentinel anywhere', () => {
    const dir = path.join(tmp, 'ignore');
    const mask = flat(1);
    mask[0] = 255;
    makeDataset(dir, [{ id: 'a', fill: [0, 0, 0], mask }]);
    expect(loadDataset(dir).samples[0].mask.data[0]).toBe(255);
  });
});

describe('toTensors', () => {
  it('maps ignore pixels to zero loss weight', () => {
    const dir = path.join(tmp, 'weights');
    const mask = flat(2);
    mask[0] = 255;
    mask[5] = 255;
    makeDataset(dir, [{ id: 'a', fill: [128, 0, 0], mask }]);
    const ds = loadDataset(dir);
    const batch = toTensors(ds, 4); // no resize: 4 -> 4
    const w = batch.w.dataSync();
    const y = batch.y.dataSync();
    expect(w[0]).toBe(0);
    expect(w[5]).toBe(0);
    expect(Array.from(w).filter((v) => v === 0)).toHaveLength(2);
    expect(y[0]).toBe(0); // dummy label under zero weight
    expect(y[1]).toBe(2);
    tf.dispose([batch.x, batch.y, batch.w]);
  });

  it('scales images into [0, 1] at the working resolution', () => {
    const dir = path.join(tmp, 'scale');
    makeDataset(dir, [{ id: 'a', fill: [255, 0, 128], mask: flat(1) }]);
    const batch = toTensors(loadDataset(dir), 8);
    expect(batch.x.shape).toEqual([1, 8, 8, 3]);
    const x = batch.x.dataSync();
    expect(x[0]).toBeCloseTo(1.0);
    expect(x[1]).toBeCloseTo(0.0);
    expect(x[2]).toBeCloseTo(128 / 255);
    tf.dispose([batch.x, batch.y, batch.w]);
  });
});

describe('writeMaskDirectory', () => {
  it('round-trips through loadDataset-compatible manifests', () => {
    const out = path.join(tmp, 'preds');
    writeMaskDirectory(
      [
        { id: 'x', mask: { width: 2, height: 2, data: Uint8Array.from([0, 1, 2, 1]) } },
        { id: 'y', mask: { width: 2, height: 2, data: Uint8Array.from([2, 2, 0, 0]) } },
      ],
      3,
      'test',
      out,
    );
    const manifest = JSON.parse(fs.readFileSync(path.join(out, 'manifest.json'), 'utf8'));
    expect(manifest.format).toBe('segpoison-masks/1');
    expect(manifest.samples).toEqual(['x', 'y']);
    expect(fs.existsSync(path.join(out, 'masks', 'x.png'))).toBe(true);
    expect(fs.existsSync(`${out}.tmp-${process.pid}`)).toBe(false);
  });
});
