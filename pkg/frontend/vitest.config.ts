import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // training tests run real optimization loops on the CPU backend
    testTimeout: 300_000,
    hookTimeout: 300_000,
    pool: "forks",
  },
});
