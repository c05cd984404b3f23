"""Shared test fixtures: random HOTA instances, scripted backends, counters."""

from __future__ import annotations

import random
from typing import Callable

from gvqa_pipeline.geometry import BBox, PointAnno, Tracklet, TrackSet


def _clamped_box(x1: float, y1: float, w: float, h: float) -> BBox:
    x1 = min(max(x1, 0.0), 1.0 - w)
    y1 = min(max(y1, 0.0), 1.0 - h)
    return BBox(x1, y1, x1 + w, y1 + h)


def random_box(rng: random.Random) -> BBox:
    w = rng.uniform(0.08, 0.3)
    h = rng.uniform(0.08, 0.3)
    return _clamped_box(rng.uniform(0.0, 1.0 - w), rng.uniform(0.0, 1.0 - h), w, h)


def jittered(rng: random.Random, box: BBox, scale: float = 0.12) -> BBox:
    dx = rng.uniform(-scale, scale)
    dy = rng.uniform(-scale, scale)
    return _clamped_box(box.x1 + dx, box.y1 + dy, box.width, box.height)


def random_instance(
    rng: random.Random,
    max_tracks: int = 3,
    max_frames: int = 6,
) -> tuple[TrackSet, TrackSet]:
    """A small (pred, gt) pair with rich overlap structure.

    Ground-truth tracks get jittered/copied/dropped/relabeled into
    predictions so IoUs cluster around the sweep thresholds; a spurious
    prediction track appears sometimes. Boxes are continuous-uniform, so
    matching-objective ties have probability zero.
    """
    n_frames = rng.randint(1, max_frames)
    n_gt = rng.randint(0, max_tracks)
    gt_tracks: list[Tracklet] = []
    for i in range(n_gt):
        boxes = {f: random_box(rng) for f in range(n_frames) if rng.random() < 0.8}
        gt_tracks.append(Tracklet(f"g{i}", boxes))

    pred_tracks: list[Tracklet] = []
    pred_slots = 0
    for i, t in enumerate(gt_tracks):
        if pred_slots >= max_tracks or rng.random() < 0.15:
            continue  # dropped object
        boxes: dict[int, BBox] = {}
        for f, b in t.boxes.items():
            if rng.random() < 0.85:
                boxes[f] = jittered(rng, b)
        # occasionally hallucinate detections on frames the gt lacks
        for f in range(n_frames):
            if f not in boxes and rng.random() < 0.1:
                boxes[f] = random_box(rng)
        if boxes:
            pred_tracks.append(Tracklet(f"p{i}", boxes))
            pred_slots += 1
    if pred_slots < max_tracks and rng.random() < 0.3:
        boxes = {f: random_box(rng) for f in range(n_frames) if rng.random() < 0.5}
        if boxes:
            pred_tracks.append(Tracklet("spurious", boxes))

    return TrackSet("q", tuple(pred_tracks)), TrackSet("q", tuple(gt_tracks))


def perfect_clone(gt: TrackSet, rename: Callable[[str], str] = lambda s: f"pred-{s}") -> TrackSet:
    return TrackSet(
        gt.question_id,
        tuple(Tracklet(rename(t.object_id), dict(t.boxes)) for t in gt.tracklets),
    )


class ScriptedGrounder:
    """Grounder driven by an explicit frame -> response table.

    Values: list of PointAnno for success, None for a failure signal,
    an int n for "return n synthetic points", missing key for empty list.
    """

    def __init__(self, table: dict[int, object], default: object = ()):  # type: ignore[assignment]
        self.table = table
        self.default = default
        self.calls: list[int] = []

    def ground(self, video_ref: str, native_frame_idx: int, description: str):
        self.calls.append(native_frame_idx)
        value = self.table.get(native_frame_idx, self.default)
        if value is None:
            return None
        if isinstance(value, int):
            return [PointAnno(0.1 + 0.05 * (i % 10), 0.5) for i in range(value)]
        return list(value)


class CountingReasoner:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def reason(self, video_ref, sampled_indices, prompt):
        self.calls += 1
        return self.inner.reason(video_ref, sampled_indices, prompt)


class CountingGrounder:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def ground(self, video_ref, native_frame_idx, description):
        self.calls += 1
        return self.inner.ground(video_ref, native_frame_idx, description)


class CountingTracker:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def init(self, video_ref, native_frame_idx, seed, object_id):
        self.calls += 1
        return self.inner.init(video_ref, native_frame_idx, seed, object_id)

    def propagate(self, session, direction):
        self.calls += 1
        return self.inner.propagate(session, direction)
