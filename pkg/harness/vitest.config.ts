import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    // the round-trip test blocks the event loop for long stretches of
    // synchronous tfjs compute; forks tolerate that better than threads
    pool: 'forks',
    fileParallelism: false,
    testTimeout: 30_000,
  },
});
