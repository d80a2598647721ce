import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // The integration suite boots the Python advisor service in a child
    // process and waits for it to accept connections, so give it room.
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
