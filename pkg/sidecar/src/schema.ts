/**
 * Wire protocol schema shared with the pipeline engine.
 *
 * Three POST endpoints, JSON bodies, normalized coordinates in [0, 1]:
 *
 *   /reason  {video_id, frame_refs: int[], prompt}          -> {raw_text}
 *   /ground  {video_id, frame: int, description}            -> {points: [{x, y, confidence?}]} | {failure: true}
 *   /track   {video_id, anchor: int, seed: {x,y}|{box:[4]},
 *             direction: "forward"|"backward", track_fps}   -> {boxes: [{frame, box: [4]}]}
 */

export class SchemaError extends Error {}

export type Direction = "forward" | "backward";

export interface ReasonRequest {
  video_id: string;
  frame_refs: number[];
  prompt: string;
}

export interface GroundRequest {
  video_id: string;
  frame: number;
  description: string;
}

export interface TrackRequest {
  video_id: string;
  anchor: number;
  seed: { x: number; y: number } | { box: [number, number, number, number] };
  direction: Direction;
  track_fps: number;
}

function fail(message: string): never {
  throw new SchemaError(message);
}

function isObject(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isNonNegativeInt(value: unknown): value is number {
  return typeof value === "number" && Number.isInteger(value) && value >= 0;
}

function isUnit(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value) && value >= 0 && value <= 1;
}

function isUnitBox(value: unknown): value is number[] {
  return (
    Array.isArray(value) &&
    value.length === 4 &&
    value.every(isUnit) &&
    (value[0] as number) < (value[2] as number) &&
    (value[1] as number) < (value[3] as number)
  );
}

export function validateReasonRequest(body: unknown): ReasonRequest {
  if (!isObject(body)) fail("reason request must be an object");
  if (typeof body.video_id !== "string") fail("video_id must be a string");
  if (!Array.isArray(body.frame_refs) || !body.frame_refs.every(isNonNegativeInt))
    fail("frame_refs must be non-negative integers");
  if (typeof body.prompt !== "string" || body.prompt === "") fail("prompt must be a non-empty string");
  return body as unknown as ReasonRequest;
}

export function validateGroundRequest(body: unknown): GroundRequest {
  if (!isObject(body)) fail("ground request must be an object");
  if (typeof body.video_id !== "string") fail("video_id must be a string");
  if (!isNonNegativeInt(body.frame)) fail("frame must be a non-negative integer");
  if (typeof body.description !== "string" || body.description === "")
    fail("description must be a non-empty string");
  return body as unknown as GroundRequest;
}

export function validateTrackRequest(body: unknown): TrackRequest {
  if (!isObject(body)) fail("track request must be an object");
  if (typeof body.video_id !== "string") fail("video_id must be a string");
  if (!isNonNegativeInt(body.anchor)) fail("anchor must be a non-negative integer");
  if (body.direction !== "forward" && body.direction !== "backward")
    fail("direction must be forward|backward");
  if (typeof body.track_fps !== "number" || !(body.track_fps > 0)) fail("track_fps must be positive");
  const seed = body.seed;
  if (!isObject(seed)) fail("seed must be an object");
  if ("box" in seed) {
    if (!isUnitBox(seed.box)) fail("seed box must be four normalized corners");
  } else if (!isUnit(seed.x) || !isUnit(seed.y)) {
    fail("seed must carry normalized x and y");
  }
  return body as unknown as TrackRequest;
}

export function validateReasonResponse(body: unknown): void {
  if (!isObject(body) || typeof body.raw_text !== "string") fail("reason response needs raw_text");
}

export function validateGroundResponse(body: unknown): void {
  if (!isObject(body)) fail("ground response must be an object");
  if (body.failure === true) return;
  if (!Array.isArray(body.points)) fail("ground response needs points or failure");
  for (const p of body.points) {
    if (!isObject(p) || !isUnit(p.x) || !isUnit(p.y)) fail("each point needs normalized x and y");
  }
}

export function validateTrackResponse(body: unknown, direction: Direction): void {
  if (!isObject(body) || !Array.isArray(body.boxes)) fail("track response needs boxes");
  let last: number | null = null;
  for (const entry of body.boxes) {
    if (!isObject(entry) || !isNonNegativeInt(entry.frame)) fail("track entry needs an integer frame");
    if (last !== null) {
      const ok = direction === "forward" ? (entry.frame as number) > last : (entry.frame as number) < last;
      if (!ok) fail(`track frames out of monotone order: ${last} then ${entry.frame}`);
    }
    last = entry.frame as number;
    if (!isUnitBox(entry.box)) fail("track entry needs a normalized box");
  }
}

export const PATHS = ["/reason", "/ground", "/track"] as const;
export type EndpointPath = (typeof PATHS)[number];

export function validateRequestFor(path: EndpointPath, body: unknown): void {
  if (path === "/reason") validateReasonRequest(body);
  else if (path === "/ground") validateGroundRequest(body);
  else validateTrackRequest(body);
}

export function validateResponseFor(path: EndpointPath, body: unknown, direction?: Direction): void {
  if (path === "/reason") validateReasonResponse(body);
  else if (path === "/ground") validateGroundResponse(body);
  else validateTrackResponse(body, direction ?? "forward");
}
