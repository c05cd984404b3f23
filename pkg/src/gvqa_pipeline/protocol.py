"""Wire protocol for remote model backends, plus record/replay fixtures.

Three HTTP endpoints, all POST with JSON bodies:

  /reason  {video_id, frame_refs: [int], prompt}            -> {raw_text}
  /ground  {video_id, frame: int, description}              -> {points: [{x, y, confidence?}]}
                                                             | {failure: true}
  /track   {video_id, anchor: int, seed: {x, y} | {box: [x1, y1, x2, y2]},
            direction: "forward" | "backward", track_fps}   -> {boxes: [{frame, box}]}

Requests are serialized canonically (sorted keys, compact separators) so a
request's identity is simply the SHA-256 of its body bytes. Replay
fixtures are keyed by that digest and store the exact response body to
serve, which keeps replays byte-stable across languages.

Coordinates on the wire are normalized to [0, 1], like everywhere else in
the engine. A non-2xx status or connection fault raises TransportError; a
2xx body that violates the schema raises SchemaError with the payload
logged.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
import urllib.error
import urllib.request
from pathlib import Path
from typing import Any, Callable, Sequence

from .errors import SchemaError, TransportError
from .geometry import BBox, PointAnno

logger = logging.getLogger(__name__)

REASON_PATH = "/reason"
GROUND_PATH = "/ground"
TRACK_PATH = "/track"


def canonical_body(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def request_digest(body: bytes) -> str:
    return hashlib.sha256(body).hexdigest()


def retry_transport(
    fn: Callable[[], Any],
    retries: int = 3,
    base_delay: float = 0.2,
    sleep: Callable[[float], None] = time.sleep,
) -> Any:
    """Run ``fn``, retrying TransportError with exponential backoff."""
    attempt = 0
    while True:
        try:
            return fn()
        except TransportError:
            if attempt >= retries:
                raise
            delay = base_delay * (2**attempt)
            logger.warning("transport error, retry %d in %.2fs", attempt + 1, delay)
            sleep(delay)
            attempt += 1


# ---------------------------------------------------------------------------
# Schema validation (shared by client and conformance tests)


def _require(cond: bool, message: str, payload: Any) -> None:
    if not cond:
        logger.error("schema violation: %s; payload=%r", message, payload)
        raise SchemaError(message)


def validate_reason_request(obj: Any) -> None:
    _require(isinstance(obj, dict), "reason request must be an object", obj)
    _require(isinstance(obj.get("video_id"), str), "video_id must be a string", obj)
    refs = obj.get("frame_refs")
    _require(
        isinstance(refs, list) and all(isinstance(f, int) and f >= 0 for f in refs),
        "frame_refs must be a list of non-negative ints",
        obj,
    )
    _require(isinstance(obj.get("prompt"), str) and obj["prompt"] != "", "prompt must be a non-empty string", obj)


def validate_reason_response(obj: Any) -> str:
    _require(isinstance(obj, dict) and isinstance(obj.get("raw_text"), str), "reason response needs raw_text", obj)
    return obj["raw_text"]


def validate_ground_request(obj: Any) -> None:
    _require(isinstance(obj, dict), "ground request must be an object", obj)
    _require(isinstance(obj.get("video_id"), str), "video_id must be a string", obj)
    _require(isinstance(obj.get("frame"), int) and obj["frame"] >= 0, "frame must be a non-negative int", obj)
    _require(isinstance(obj.get("description"), str) and obj["description"] != "", "description must be non-empty", obj)


def validate_ground_response(obj: Any) -> list[PointAnno] | None:
    _require(isinstance(obj, dict), "ground response must be an object", obj)
    if obj.get("failure") is True:
        return None
    points = obj.get("points")
    _require(isinstance(points, list), "ground response needs points or failure", obj)
    out = []
    for p in points:
        _require(isinstance(p, dict), "each point must be an object", obj)
        try:
            out.append(PointAnno(float(p["x"]), float(p["y"])))
        except (KeyError, TypeError, ValueError) as exc:
            _require(False, f"bad point: {exc}", obj)
    return out


def validate_track_request(obj: Any) -> None:
    _require(isinstance(obj, dict), "track request must be an object", obj)
    _require(isinstance(obj.get("video_id"), str), "video_id must be a string", obj)
    _require(isinstance(obj.get("anchor"), int) and obj["anchor"] >= 0, "anchor must be a non-negative int", obj)
    _require(obj.get("direction") in ("forward", "backward"), "direction must be forward|backward", obj)
    _require(isinstance(obj.get("track_fps"), (int, float)) and obj["track_fps"] > 0, "track_fps must be positive", obj)
    seed = obj.get("seed")
    _require(isinstance(seed, dict), "seed must be an object", obj)
    if "box" in seed:
        box = seed["box"]
        _require(isinstance(box, list) and len(box) == 4, "seed box must be 4 numbers", obj)
    else:
        _require(
            isinstance(seed.get("x"), (int, float)) and isinstance(seed.get("y"), (int, float)),
            "seed must carry x and y",
            obj,
        )


def validate_track_response(obj: Any, direction: str) -> list[tuple[int, BBox]]:
    _require(isinstance(obj, dict) and isinstance(obj.get("boxes"), list), "track response needs boxes", obj)
    out: list[tuple[int, BBox]] = []
    last: int | None = None
    for entry in obj["boxes"]:
        _require(isinstance(entry, dict), "each track entry must be an object", obj)
        frame = entry.get("frame")
        _require(isinstance(frame, int) and frame >= 0, "track frame must be a non-negative int", obj)
        if last is not None:
            ok = frame > last if direction == "forward" else frame < last
            _require(ok, f"track frames out of monotone order: {last} then {frame}", obj)
        last = frame
        try:
            box = BBox.from_sequence(entry["box"])
        except (KeyError, TypeError, ValueError) as exc:
            _require(False, f"bad track box: {exc}", obj)
        out.append((frame, box))
    return out


# ---------------------------------------------------------------------------
# HTTP client backends


class RemoteEndpoint:
    def __init__(self, base_url: str, timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def post(self, path: str, payload: dict) -> dict:
        body = canonical_body(payload)
        req = urllib.request.Request(
            self.base_url + path,
            data=body,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as exc:
            raise TransportError(f"{path} returned {exc.code}: {exc.read()[:200]!r}") from exc
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            raise TransportError(f"{path} unreachable: {exc}") from exc
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            logger.error("schema violation: non-JSON body %r", raw[:200])
            raise SchemaError(f"{path} returned non-JSON body") from exc


class RemoteReasoner:
    def __init__(self, endpoint: RemoteEndpoint):
        self.endpoint = endpoint

    def reason(self, video_ref: str, sampled_indices: Sequence[int], prompt: str) -> str:
        payload = {"video_id": video_ref, "frame_refs": list(sampled_indices), "prompt": prompt}
        validate_reason_request(payload)
        return validate_reason_response(self.endpoint.post(REASON_PATH, payload))


class RemoteGrounder:
    def __init__(self, endpoint: RemoteEndpoint):
        self.endpoint = endpoint

    def ground(self, video_ref: str, native_frame_idx: int, description: str) -> list[PointAnno] | None:
        payload = {"video_id": video_ref, "frame": native_frame_idx, "description": description}
        validate_ground_request(payload)
        return validate_ground_response(self.endpoint.post(GROUND_PATH, payload))


class RemoteTracker:
    def __init__(self, endpoint: RemoteEndpoint, track_fps: float = 10.0):
        self.endpoint = endpoint
        self.track_fps = track_fps

    def init(self, video_ref: str, native_frame_idx: int, seed: PointAnno | BBox, object_id: str) -> dict:
        seed_obj = {"box": seed.as_list()} if isinstance(seed, BBox) else {"x": seed.x, "y": seed.y}
        return {
            "video_id": video_ref,
            "anchor": native_frame_idx,
            "seed": seed_obj,
            "object_id": object_id,
        }

    def propagate(self, session: dict, direction: str) -> list[tuple[int, BBox | None]]:
        payload = {
            "video_id": session["video_id"],
            "anchor": session["anchor"],
            "seed": session["seed"],
            "direction": direction,
            "track_fps": self.track_fps,
        }
        validate_track_request(payload)
        resp = self.endpoint.post(TRACK_PATH, payload)
        return list(validate_track_response(resp, direction))


def remote_backends(
    url: str, track_fps: float = 10.0
) -> tuple[RemoteReasoner, RemoteGrounder, RemoteTracker]:
    ep = RemoteEndpoint(url)
    return RemoteReasoner(ep), RemoteGrounder(ep), RemoteTracker(ep, track_fps)


# ---------------------------------------------------------------------------
# Replay fixtures


class FixtureWriter:
    """Record wire-level request/response pairs while sim backends answer.

    Each fixture file is named by the request digest and stores the exact
    response body a replay server must serve.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def record(self, path: str, request: dict, response: dict) -> str:
        body = canonical_body(request)
        digest = request_digest(body)
        fixture = {
            "path": path,
            "request": request,
            "response_body": canonical_body(response).decode(),
        }
        out = self.root / f"{digest}.json"
        out.write_text(json.dumps(fixture, indent=2, sort_keys=True))
        return digest


class RecordingReasoner:
    def __init__(self, inner: Any, writer: FixtureWriter):
        self.inner = inner
        self.writer = writer

    def reason(self, video_ref: str, sampled_indices: Sequence[int], prompt: str) -> str:
        raw = self.inner.reason(video_ref, sampled_indices, prompt)
        request = {"video_id": video_ref, "frame_refs": list(sampled_indices), "prompt": prompt}
        self.writer.record(REASON_PATH, request, {"raw_text": raw})
        return raw


class RecordingGrounder:
    def __init__(self, inner: Any, writer: FixtureWriter):
        self.inner = inner
        self.writer = writer

    def ground(self, video_ref: str, native_frame_idx: int, description: str) -> list[PointAnno] | None:
        points = self.inner.ground(video_ref, native_frame_idx, description)
        request = {"video_id": video_ref, "frame": native_frame_idx, "description": description}
        if points is None:
            response: dict = {"failure": True}
        else:
            response = {"points": [{"x": p.x, "y": p.y} for p in points]}
        self.writer.record(GROUND_PATH, request, response)
        return points


class RecordingTracker:
    def __init__(self, inner: Any, writer: FixtureWriter, track_fps: float = 10.0):
        self.inner = inner
        self.writer = writer
        self.track_fps = track_fps

    def init(self, video_ref: str, native_frame_idx: int, seed: PointAnno | BBox, object_id: str) -> dict:
        inner_session = self.inner.init(video_ref, native_frame_idx, seed, object_id)
        seed_obj = {"box": seed.as_list()} if isinstance(seed, BBox) else {"x": seed.x, "y": seed.y}
        return {
            "inner": inner_session,
            "video_id": video_ref,
            "anchor": native_frame_idx,
            "seed": seed_obj,
        }

    def propagate(self, session: dict, direction: str) -> list[tuple[int, BBox | None]]:
        result = list(self.inner.propagate(session["inner"], direction))
        request = {
            "video_id": session["video_id"],
            "anchor": session["anchor"],
            "seed": session["seed"],
            "direction": direction,
            "track_fps": self.track_fps,
        }
        response = {
            "boxes": [{"frame": f, "box": b.as_list()} for f, b in result if b is not None]
        }
        self.writer.record(TRACK_PATH, request, response)
        return result
