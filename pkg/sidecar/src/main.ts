/**
 * CLI entry:
 *   node dist/main.js --fixtures <dir> [--port N] [--disable /ground] [--config settings.json]
 *
 * Prints `sidecar listening on http://127.0.0.1:<port>` once ready, which
 * callers use as the readiness signal. Port 0 picks a free port. A config
 * file holds declarative settings (fixtures_dir, disabled endpoints, model
 * ids per endpoint, frame extraction rates); flags override it. Model
 * adapters are code-level plugins - an endpoint configured with a model
 * that has no registered adapter refuses to start and answers 503.
 */

import { readFileSync } from "node:fs";

import { FixtureStore } from "./replay.js";
import { createSidecarServer, resolveSettings, SidecarSettings } from "./server.js";
import { EndpointPath, PATHS } from "./schema.js";

interface Args {
  port: number;
  fixtures?: string;
  config?: string;
  disabled: EndpointPath[];
}

function parseArgs(argv: string[]): Args {
  const args: Args = { port: 0, disabled: [] };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    if (flag === "--port") args.port = Number(argv[++i]);
    else if (flag === "--fixtures") args.fixtures = argv[++i];
    else if (flag === "--config") args.config = argv[++i];
    else if (flag === "--disable") {
      const path = argv[++i] as EndpointPath;
      if (!PATHS.includes(path)) throw new Error(`--disable expects one of ${PATHS.join(", ")}`);
      args.disabled.push(path);
    } else {
      throw new Error(`unknown flag ${flag}`);
    }
  }
  return args;
}

function main(): void {
  const args = parseArgs(process.argv.slice(2));
  const settings: SidecarSettings = args.config
    ? (JSON.parse(readFileSync(args.config, "utf-8")) as SidecarSettings)
    : {};
  if (args.fixtures) settings.fixtures_dir = args.fixtures;
  settings.disabled = [...(settings.disabled ?? []), ...args.disabled];

  const config = resolveSettings(settings, FixtureStore.load);
  if (config.fixtures) {
    console.error(`loaded ${config.fixtures.size} fixture(s) from ${settings.fixtures_dir}`);
  }
  const server = createSidecarServer(config);
  server.listen(args.port, "127.0.0.1", () => {
    const address = server.address();
    const port = typeof address === "object" && address ? address.port : args.port;
    console.log(`sidecar listening on http://127.0.0.1:${port}`);
  });
}

main();
