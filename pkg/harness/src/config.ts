/**
 * Harness configuration document.
 *
 * Loaded from a JSON file; `datasetDir` must point at a dataset directory
 * with a valid manifest.  The device tag exists for forward compatibility;
 * only the pure-JS cpu backend is available here.
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

export const ARCHITECTURES = ['miniseg', 'context'] as const;
export type Architecture = (typeof ARCHITECTURES)[number];

export interface HarnessConfig {
  datasetDir: string;
  architecture: Architecture;
  epochs: number;
  /** Square working resolution; images and labels are resized to it. */
  resize: number;
  device: string;
  batchSize: number;
  learningRate: number;
}

export class ConfigError extends Error {}

export function resolveConfig(doc: Record<string, unknown>, baseDir = '.'): HarnessConfig {
  const datasetDir = path.resolve(baseDir, String(doc.dataset_dir ?? ''));
  if (!fs.existsSync(path.join(datasetDir, 'manifest.json'))) {
    throw new ConfigError(`dataset_dir ${datasetDir} has no manifest.json`);
  }
  const architecture = String(doc.architecture ?? 'miniseg') as Architecture;
  if (!ARCHITECTURES.includes(architecture)) {
    throw new ConfigError(
      `architecture must be one of ${ARCHITECTURES.join(', ')}, got ${architecture}`,
    );
  }
  const epochs = Number(doc.epochs ?? 2);
  const resize = Number(doc.resize ?? 32);
  const batchSize = Number(doc.batch_size ?? 8);
  const learningRate = Number(doc.learning_rate ?? 0.01);
  if (!Number.isInteger(epochs) || epochs < 1) {
    throw new ConfigError(`epochs must be a positive integer, got ${doc.epochs}`);
  }
  if (!Number.isInteger(resize) || resize < 8) {
    throw new ConfigError(`resize must be an integer >= 8, got ${doc.resize}`);
  }
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new ConfigError(`batch_size must be a positive integer, got ${doc.batch_size}`);
  }
  if (!(learningRate > 0)) {
    throw new ConfigError(`learning_rate must be positive, got ${doc.learning_rate}`);
  }
  const device = String(doc.device ?? 'cpu');
  if (device !== 'cpu') {
    throw new ConfigError(`only the cpu backend is available, got device ${device}`);
  }
  return { datasetDir, architecture, epochs, resize, device, batchSize, learningRate };
}

export function loadConfig(file: string): HarnessConfig {
  const doc = JSON.parse(fs.readFileSync(file, 'utf8'));
  return resolveConfig(doc, path.dirname(file));
}
