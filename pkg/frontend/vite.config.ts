/// <reference types="vitest" />
import { defineConfig } from "vite";

// The dev server proxies /api to a locally running `originsim serve`;
// a production build can be pointed at any host via VITE_API_BASE.
export default defineConfig({
  server: {
    proxy: {
      "/api": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
  },
});
