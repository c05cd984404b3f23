/**
 * Replay fixtures: a directory of `<digest>.json` files, each holding the
 * wire path, the original request object, and the exact response body to
 * serve. The digest is the SHA-256 of the raw request body bytes, so a
 * replayed conversation is byte-stable no matter which language produced
 * the fixtures.
 */

import { createHash } from "node:crypto";
import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { EndpointPath, PATHS, SchemaError, validateRequestFor } from "./schema.js";

export interface Fixture {
  path: EndpointPath;
  request: unknown;
  response_body: string;
}

export function digestOf(body: Buffer | string): string {
  return createHash("sha256").update(body).digest("hex");
}

export class FixtureStore {
  private fixtures = new Map<string, Fixture>();

  static load(dir: string): FixtureStore {
    const store = new FixtureStore();
    for (const name of readdirSync(dir)) {
      if (!name.endsWith(".json")) continue;
      const raw = JSON.parse(readFileSync(join(dir, name), "utf-8")) as Fixture;
      if (!PATHS.includes(raw.path)) {
        throw new SchemaError(`fixture ${name} has unknown path ${raw.path}`);
      }
      validateRequestFor(raw.path, raw.request);
      if (typeof raw.response_body !== "string") {
        throw new SchemaError(`fixture ${name} lacks a response_body string`);
      }
      store.fixtures.set(name.replace(/\.json$/, ""), raw);
    }
    return store;
  }

  add(digest: string, fixture: Fixture): void {
    this.fixtures.set(digest, fixture);
  }

  get(digest: string): Fixture | undefined {
    return this.fixtures.get(digest);
  }

  get size(): number {
    return this.fixtures.size;
  }
}
