/**
 * Lossless PNG helpers for the dataset interchange format.
 *
 * Images are 8-bit RGB, masks are 8-bit single-channel (grayscale) with
 * pixel value = class id and 255 as the ignore sentinel.  Masks must be
 * written as true grayscale (color type 0) so the evaluator on the other
 * side accepts them without remapping.
 */
import * as fs from 'node:fs';
import { PNG } from 'pngjs';

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triplets, length width * height * 3. */
  data: Uint8Array;
}

export interface Mask {
  width: number;
  height: number;
  /** Row-major class ids, length width * height. */
  data: Uint8Array;
}

export function readRgbPng(file: string): RgbImage {
  const png = PNG.sync.read(fs.readFileSync(file));
  const n = png.width * png.height;
  const data = new Uint8Array(n * 3);
  for (let i = 0; i < n; i++) {
    data[i * 3] = png.data[i * 4];
    data[i * 3 + 1] = png.data[i * 4 + 1];
    data[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, data };
}

export function readMaskPng(file: string): Mask {
  const png = PNG.sync.read(fs.readFileSync(file));
  const n = png.width * png.height;
  const data = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    // pngjs expands grayscale to RGBA; all channels carry the same value
    data[i] = png.data[i * 4];
  }
  return { width: png.width, height: png.height, data };
}

export function writeMaskPng(mask: Mask, file: string): void {
  const png = new PNG({ width: mask.width, height: mask.height, colorType: 0 });
  for (let i = 0; i < mask.data.length; i++) {
    const v = mask.data[i];
    png.data[i * 4] = v;
    png.data[i * 4 + 1] = v;
    png.data[i * 4 + 2] = v;
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(file, PNG.sync.write(png, { colorType: 0 }));
}
