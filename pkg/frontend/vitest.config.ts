import { defineConfig } from 'vitest/config';

export default defineConfig({
    test: {
        include: ['tests/**/*.test.ts'],
        // the console smoke test spawns a real server and runs the
        // pipeline CLI twice; give it room
        testTimeout: 120_000,
        hookTimeout: 120_000,
    },
});
