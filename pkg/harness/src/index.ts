export { ARCHITECTURES, ConfigError, loadConfig, resolveConfig } from './config.js';
export type { Architecture, HarnessConfig } from './config.js';
export {
  DATASET_FORMAT,
  IGNORE_VALUE,
  LoadError,
  MASKS_FORMAT,
  loadDataset,
  toTensors,
  writeMaskDirectory,
} from './dataset.js';
export type { Dataset, DatasetSample, TensorBatch } from './dataset.js';
export { readMaskPng, readRgbPng, writeMaskPng } from './png.js';
export type { Mask, RgbImage } from './png.js';
export { buildModel } from './model.js';
export {
  TrainingDiverged,
  predictDataset,
  trainAndDumpPredictions,
  trainModel,
} from './train.js';
export type { DumpedPredictions, TrainResult } from './train.js';
