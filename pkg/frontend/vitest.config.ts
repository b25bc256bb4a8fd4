import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the end-to-end suite boots the real backend, give it room
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
