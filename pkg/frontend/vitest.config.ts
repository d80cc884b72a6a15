import { defineConfig } from 'vitest/config'

// The e2e file paces a live simulation against the wall clock; running test
// files one at a time keeps its timing margins free of CPU contention.
export default defineConfig({
  test: {
    fileParallelism: false,
  },
})
