import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    environmentMatchGlobs: [["tests/integration/**", "node"]],
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
