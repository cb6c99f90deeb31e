import * as tf from '@tensorflow/tfjs';
import { describe, expect, it } from 'vitest';

import { buildModel } from '../src/model.js';
import { resolveConfig, ConfigError } from '../src/config.js';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

describe('buildModel', () => {
  it.each(['miniseg', 'context'] as const)(
    '%s maps [n, s, s, 3] to per-pixel logits over K classes',
    (architecture) => {
      const model = buildModel(architecture, 5, 16);
      const x = tf.zeros([2, 16, 16, 3]);
      const out = model.apply(x) as tf.Tensor4D;
      expect(out.shape).toEqual([2, 16, 16, 5]);
      tf.dispose([x, out]);
      model.dispose();
    },
  );
});

describe('resolveConfig', () => {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'harness-cfg-'));
  fs.writeFileSync(
    path.join(dir, 'manifest.json'),
    JSON.stringify({ format: 'segpoison-dataset/1', num_classes: 3, split: 'train', samples: [] }),
  );

  it('fills defaults and resolves the dataset path', () => {
    const config = resolveConfig({ dataset_dir: dir });
    expect(config.architecture).toBe('miniseg');
    expect(config.epochs).toBe(2);
    expect(config.resize).toBe(32);
    expect(config.datasetDir).toBe(dir);
  });

  it('rejects a dataset dir without a manifest', () => {
    expect(() => resolveConfig({ dataset_dir: path.join(dir, 'nope') })).toThrow(ConfigError);
  });

  it('rejects unknown architectures and bad numbers', () => {
    expect(() => resolveConfig({ dataset_dir: dir, architecture: 'resnet' })).toThrow(ConfigError);
    expect(() => resolveConfig({ dataset_dir: dir, epochs: 0 })).toThrow(ConfigError);
    expect(() => resolveConfig({ dataset_dir: dir, resize: 4 })).toThrow(ConfigError);
    expect(() => resolveConfig({ dataset_dir: dir, device: 'tpu' })).toThrow(ConfigError);
  });
});
