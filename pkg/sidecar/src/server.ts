/**
 * HTTP sidecar implementing the pipeline's three wire endpoints.
 *
 * Endpoints run independently in one of three modes:
 *   replay   - answer from recorded fixtures, byte for byte (default when
 *              a fixture directory is given); no model required.
 *   adapter  - delegate to a pluggable async adapter wrapping real model
 *              weights (reasoner MLLM, pointing VLM, video tracker). The
 *              sidecar validates the adapter's response against the
 *              schema before serving it.
 *   disabled - respond 503; lets a deployment serve only the endpoints it
 *              has models for.
 */

import { IncomingMessage, Server, ServerResponse, createServer } from "node:http";

import { FixtureStore, digestOf } from "./replay.js";
import {
  Direction,
  EndpointPath,
  PATHS,
  SchemaError,
  validateRequestFor,
  validateResponseFor,
} from "./schema.js";

export type Adapter = (request: unknown) => Promise<unknown>;

export type EndpointMode = "replay" | "adapter" | "disabled";

export interface SidecarConfig {
  fixtures?: FixtureStore;
  adapters?: Partial<Record<EndpointPath, Adapter>>;
  modes?: Partial<Record<EndpointPath, EndpointMode>>;
}

/** Declarative deployment settings (JSON file passed via --config). */
export interface ModelSettings {
  id: string;
  device?: string;
  auth_token?: string;
}

export interface SidecarSettings {
  fixtures_dir?: string;
  disabled?: EndpointPath[];
  models?: Partial<Record<EndpointPath, ModelSettings>>;
  frame_extraction?: { reason_fps?: number; track_fps?: number };
}

export type AdapterFactory = (
  settings: ModelSettings,
  frameExtraction?: SidecarSettings["frame_extraction"],
) => Adapter;

/**
 * Resolve declarative settings into a runtime config. An endpoint whose
 * model has no registered adapter factory refuses to start (disabled with
 * an error log) instead of failing the whole service; other endpoints are
 * unaffected.
 */
export function resolveSettings(
  settings: SidecarSettings,
  loadFixtures: (dir: string) => FixtureStore,
  factories: Partial<Record<EndpointPath, AdapterFactory>> = {},
): SidecarConfig {
  const config: SidecarConfig = {};
  if (settings.fixtures_dir) {
    config.fixtures = loadFixtures(settings.fixtures_dir);
  }
  for (const [path, model] of Object.entries(settings.models ?? {})) {
    const endpoint = path as EndpointPath;
    const factory = factories[endpoint];
    if (!factory) {
      console.error(`no adapter available for ${endpoint} model ${model!.id}; endpoint disabled`);
      config.modes = { ...config.modes, [endpoint]: "disabled" };
      continue;
    }
    config.adapters = {
      ...config.adapters,
      [endpoint]: factory(model as ModelSettings, settings.frame_extraction),
    };
  }
  for (const endpoint of settings.disabled ?? []) {
    config.modes = { ...config.modes, [endpoint]: "disabled" };
  }
  return config;
}

function modeFor(config: SidecarConfig, path: EndpointPath): EndpointMode {
  const explicit = config.modes?.[path];
  if (explicit) return explicit;
  if (config.adapters?.[path]) return "adapter";
  if (config.fixtures) return "replay";
  return "disabled";
}

function send(res: ServerResponse, status: number, body: string | Buffer): void {
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
}

function sendError(res: ServerResponse, status: number, message: string): void {
  send(res, status, JSON.stringify({ error: message }));
}

function readBody(req: IncomingMessage): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => resolve(Buffer.concat(chunks)));
    req.on("error", reject);
  });
}

export function createSidecarServer(config: SidecarConfig): Server {
  return createServer(async (req, res) => {
    try {
      if (req.method === "GET" && req.url === "/healthz") {
        const endpoints = Object.fromEntries(PATHS.map((p) => [p, modeFor(config, p)]));
        send(res, 200, JSON.stringify({ ok: true, endpoints }));
        return;
      }
      if (req.method !== "POST" || !PATHS.includes(req.url as EndpointPath)) {
        sendError(res, 404, `no such endpoint: ${req.method} ${req.url}`);
        return;
      }
      const path = req.url as EndpointPath;
      const mode = modeFor(config, path);
      if (mode === "disabled") {
        sendError(res, 503, `${path} endpoint is disabled`);
        return;
      }

      const raw = await readBody(req);
      let body: unknown;
      try {
        body = JSON.parse(raw.toString("utf-8"));
      } catch {
        sendError(res, 400, "request body is not JSON");
        return;
      }
      try {
        validateRequestFor(path, body);
      } catch (err) {
        if (err instanceof SchemaError) {
          sendError(res, 400, err.message);
          return;
        }
        throw err;
      }

      if (mode === "replay") {
        const digest = digestOf(raw);
        const fixture = config.fixtures?.get(digest);
        if (!fixture) {
          sendError(res, 404, `no fixture for ${path} request ${digest}`);
          return;
        }
        if (fixture.path !== path) {
          sendError(res, 409, `fixture ${digest} belongs to ${fixture.path}`);
          return;
        }
        send(res, 200, fixture.response_body);
        return;
      }

      const adapter = config.adapters?.[path];
      if (!adapter) {
        sendError(res, 503, `${path} has no adapter configured`);
        return;
      }
      const direction =
        path === "/track" ? ((body as { direction: Direction }).direction ?? "forward") : undefined;
      const answer = await adapter(body);
      validateResponseFor(path, answer, direction);
      send(res, 200, JSON.stringify(answer));
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      sendError(res, 500, message);
    }
  });
}
