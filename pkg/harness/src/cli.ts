#!/usr/bin/env node
/**
 * Command line for the harness.
 *
 *   segpoison-harness --config harness.json \
 *     --benign-test data/test --attacked-test work/attacked --out work/preds
 *
 * Exit codes: 0 success, 1 configuration/input error (including training
 * divergence), 2 filesystem error.
 */
import { ConfigError, loadConfig } from './config.js';
import { LoadError } from './dataset.js';
import { TrainingDiverged, trainAndDumpPredictions } from './train.js';

interface Args {
  config: string;
  benignTest: string;
  attackedTest: string;
  out: string;
}

function parseArgs(argv: string[]): Args {
  const values = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith('--') || value === undefined) {
      throw new ConfigError(`malformed arguments near ${flag}`);
    }
    values.set(flag.slice(2), value);
  }
  const required = ['config', 'benign-test', 'attacked-test', 'out'];
  for (const name of required) {
    if (!values.has(name)) {
      throw new ConfigError(`missing --${name}`);
    }
  }
  return {
    config: values.get('config')!,
    benignTest: values.get('benign-test')!,
    attackedTest: values.get('attacked-test')!,
    out: values.get('out')!,
  };
}

export async function main(argv: string[]): Promise<number> {
  try {
    const args = parseArgs(argv);
    const config = loadConfig(args.config);
    const result = await trainAndDumpPredictions(
      config,
      args.benignTest,
      args.attackedTest,
      args.out,
      (line) => console.log(line),
    );
    console.log(
      `wrote predictions to ${result.benignDir} and ${result.attackedDir}`,
    );
    return 0;
  } catch (err) {
    if (
      err instanceof ConfigError ||
      err instanceof LoadError ||
      err instanceof TrainingDiverged ||
      err instanceof SyntaxError
    ) {
      console.error(`error: ${(err as Error).message}`);
      return 1;
    }
    if (err instanceof Error && 'code' in err) {
      console.error(`i/o error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
