import { defineConfig } from "vitest/config";

export default defineConfig({
    test: {
        include: ["tests/**/*.test.ts"],
        // the service integration test builds a pipeline workspace first
        testTimeout: 120_000,
        hookTimeout: 180_000,
    },
});
