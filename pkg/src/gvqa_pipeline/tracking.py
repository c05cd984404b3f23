"""Turn a grounded anchor into full-video tracklets.

A tracker backend propagates each seed point bidirectionally from the
anchor frame over the tracking grid (default 10 fps). Output tracklets are
sparse (grid frames only) until ``densify_track`` spreads each grid box
over its native-rate slot with a zero-order hold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Protocol

from .dataset import VideoMeta, sample_indices
from .geometry import BBox, PointAnno, Tracklet, point_to_seed_box

logger = logging.getLogger(__name__)

DIRECTION_FORWARD = "forward"
DIRECTION_BACKWARD = "backward"


class TrackerBackend(Protocol):
    """Propagates a seeded object across the tracking grid.

    ``propagate`` yields (native frame index, box or None) pairs in
    strictly monotone frame order for the requested direction; frames must
    lie on the tracking grid. A None box means the object was not located
    in that frame.
    """

    def init(
        self, video_ref: str, native_frame_idx: int, seed: PointAnno | BBox, object_id: str
    ) -> Any: ...

    def propagate(self, session: Any, direction: str) -> Iterable[tuple[int, BBox | None]]: ...


@dataclass(frozen=True)
class TrackRequest:
    anchor_frame: int
    seeds: tuple[tuple[str, PointAnno], ...]
    track_fps: float = 10.0

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("track request needs at least one seed")
        if self.anchor_frame < 0:
            raise ValueError("anchor frame must be >= 0")


def snap_to_grid(meta: VideoMeta, native_idx: int, track_fps: float) -> int:
    """Nearest tracking-grid index to ``native_idx``; ties break downward."""
    if not (0 <= native_idx < meta.frame_count):
        raise ValueError(f"frame {native_idx} outside video of {meta.frame_count} frames")
    grid = sample_indices(meta, track_fps)
    best = grid[0]
    best_dist = abs(native_idx - best)
    for g in grid[1:]:
        d = abs(native_idx - g)
        if d < best_dist:
            best, best_dist = g, d
    return best


def _collect_pass(
    tracker: TrackerBackend,
    session: Any,
    direction: str,
    anchor: int,
    grid: set[int],
) -> dict[int, BBox]:
    """Run one propagation direction, validating the backend contract."""
    out: dict[int, BBox] = {}
    last: int | None = None
    for frame, box in tracker.propagate(session, direction):
        if frame not in grid:
            raise ValueError(f"tracker emitted off-grid frame {frame}")
        if direction == DIRECTION_FORWARD and frame < anchor:
            raise ValueError(f"forward pass emitted frame {frame} before anchor {anchor}")
        if direction == DIRECTION_BACKWARD and frame > anchor:
            raise ValueError(f"backward pass emitted frame {frame} after anchor {anchor}")
        if last is not None:
            ok = frame > last if direction == DIRECTION_FORWARD else frame < last
            if not ok:
                raise ValueError(f"tracker frames not monotone: {last} then {frame}")
        last = frame
        if box is not None:
            out[frame] = box
    return out


def track_bidirectional(
    tracker: TrackerBackend,
    meta: VideoMeta,
    req: TrackRequest,
    half_extent: float = 0.05,
) -> tuple[list[Tracklet], dict[str, str]]:
    """Propagate every seed both ways from the anchor.

    Returns (tracklets, failures). A backend init failure poisons only its
    own object; remaining seeds still produce tracklets. A seed whose
    propagation comes back empty in both directions degrades to a
    single-frame tracklet holding the seed box at the anchor.
    """
    grid = set(sample_indices(meta, req.track_fps))
    if req.anchor_frame not in grid:
        raise ValueError(f"anchor frame {req.anchor_frame} is not on the tracking grid")
    tracklets: list[Tracklet] = []
    failures: dict[str, str] = {}
    for object_id, seed in req.seeds:
        try:
            session = tracker.init(meta.video_id, req.anchor_frame, seed, object_id)
        except Exception as exc:  # noqa: BLE001 - isolate per-object backend faults
            logger.error("tracker init failed for %s: %s", object_id, exc)
            failures[object_id] = str(exc)
            continue
        backward = _collect_pass(tracker, session, DIRECTION_BACKWARD, req.anchor_frame, grid)
        forward = _collect_pass(tracker, session, DIRECTION_FORWARD, req.anchor_frame, grid)
        boxes = dict(backward)
        boxes.update(forward)  # anchor frame deduplicates here
        if not boxes:
            boxes = {req.anchor_frame: point_to_seed_box(seed, half_extent)}
        tracklets.append(Tracklet(object_id, boxes))
    return tracklets, failures


def densify_track(t: Tracklet, meta: VideoMeta, track_fps: float, mode: str = "hold") -> Tracklet:
    """Spread grid-rate boxes to native rate.

    With the default zero-order ``hold``, each grid box covers the native
    frames of its own grid slot and any empty slots up to the next
    annotated grid frame. ``linear`` interpolates corners between
    annotated frames instead (experimental). Nothing is emitted before the
    first annotated frame, and the last annotated frame's hold stops at
    its own slot boundary - no extrapolation past the tracked span.
    """
    if mode not in ("hold", "linear"):
        raise ValueError(f"unknown densify mode {mode!r}")
    if not t.boxes:
        return Tracklet(t.object_id, {})
    grid = sample_indices(meta, track_fps)
    grid_set = set(grid)
    for f in t.boxes:
        if f not in grid_set:
            raise ValueError(f"tracklet frame {f} not on the tracking grid")
    next_boundary = {g: (grid[i + 1] if i + 1 < len(grid) else meta.frame_count) for i, g in enumerate(grid)}
    annotated = sorted(t.boxes)
    dense: dict[int, BBox] = {}
    for i, g in enumerate(annotated):
        if i + 1 < len(annotated):
            stop = annotated[i + 1]
        else:
            stop = min(next_boundary[g], meta.frame_count)
        for f in range(g, stop):
            if mode == "linear" and i + 1 < len(annotated):
                a, b = t.boxes[g], t.boxes[annotated[i + 1]]
                w = (f - g) / (annotated[i + 1] - g)
                dense[f] = BBox(
                    a.x1 + w * (b.x1 - a.x1),
                    a.y1 + w * (b.y1 - a.y1),
                    a.x2 + w * (b.x2 - a.x2),
                    a.y2 + w * (b.y2 - a.y2),
                )
            else:
                dense[f] = t.boxes[g]
    return Tracklet(t.object_id, dense)
