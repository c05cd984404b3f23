import { describe, expect, it } from "vitest";

import {
  SchemaError,
  validateGroundRequest,
  validateGroundResponse,
  validateReasonRequest,
  validateReasonResponse,
  validateTrackRequest,
  validateTrackResponse,
} from "../src/schema.js";

describe("request validation", () => {
  it("accepts a well-formed reason request", () => {
    expect(() =>
      validateReasonRequest({ video_id: "v", frame_refs: [0, 10, 20], prompt: "p" }),
    ).not.toThrow();
  });

  it("rejects reason requests with bad frame refs", () => {
    expect(() => validateReasonRequest({ video_id: "v", frame_refs: [0, -1], prompt: "p" })).toThrow(
      SchemaError,
    );
    expect(() => validateReasonRequest({ video_id: "v", frame_refs: [0.5], prompt: "p" })).toThrow();
  });

  it("rejects an empty prompt", () => {
    expect(() => validateReasonRequest({ video_id: "v", frame_refs: [], prompt: "" })).toThrow();
  });

  it("accepts a ground request", () => {
    expect(() =>
      validateGroundRequest({ video_id: "v", frame: 120, description: "the tilted blue book" }),
    ).not.toThrow();
  });

  it("rejects ground requests without a description", () => {
    expect(() => validateGroundRequest({ video_id: "v", frame: 0, description: "" })).toThrow();
  });

  it("accepts both track seed shapes", () => {
    const base = { video_id: "v", anchor: 120, direction: "forward", track_fps: 10 };
    expect(() => validateTrackRequest({ ...base, seed: { x: 0.5, y: 0.5 } })).not.toThrow();
    expect(() =>
      validateTrackRequest({ ...base, seed: { box: [0.1, 0.1, 0.2, 0.2] } }),
    ).not.toThrow();
  });

  it("rejects out-of-range seeds and directions", () => {
    const base = { video_id: "v", anchor: 120, track_fps: 10 };
    expect(() =>
      validateTrackRequest({ ...base, direction: "forward", seed: { x: 1.5, y: 0.5 } }),
    ).toThrow();
    expect(() =>
      validateTrackRequest({ ...base, direction: "sideways", seed: { x: 0.5, y: 0.5 } }),
    ).toThrow();
  });
});

describe("response validation", () => {
  it("reason responses need raw_text", () => {
    expect(() => validateReasonResponse({ raw_text: "Answer: x" })).not.toThrow();
    expect(() => validateReasonResponse({})).toThrow(SchemaError);
  });

  it("ground responses are points or an explicit failure", () => {
    expect(() => validateGroundResponse({ failure: true })).not.toThrow();
    expect(() => validateGroundResponse({ points: [{ x: 0.5, y: 0.25 }] })).not.toThrow();
    expect(() => validateGroundResponse({ points: [{ x: 2, y: 0.25 }] })).toThrow();
    expect(() => validateGroundResponse({})).toThrow();
  });

  it("track responses must be monotone per direction", () => {
    const asc = {
      boxes: [
        { frame: 0, box: [0.1, 0.1, 0.2, 0.2] },
        { frame: 3, box: [0.1, 0.1, 0.2, 0.2] },
      ],
    };
    const desc = { boxes: [...asc.boxes].reverse() };
    expect(() => validateTrackResponse(asc, "forward")).not.toThrow();
    expect(() => validateTrackResponse(asc, "backward")).toThrow();
    expect(() => validateTrackResponse(desc, "backward")).not.toThrow();
  });

  it("track boxes must be normalized corner pairs", () => {
    expect(() =>
      validateTrackResponse({ boxes: [{ frame: 0, box: [0.3, 0.1, 0.2, 0.2] }] }, "forward"),
    ).toThrow();
  });
});
