"""Geometric value types and the pure operations built on them.

Everything here works in normalized image coordinates: the full frame is
the unit square, boxes are corner pairs (x1, y1, x2, y2) with a top-left
origin. Pixel conversion happens only at file/wire boundaries, never here.
All types are immutable after construction and safe to share across tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in normalized coordinates, x1 < x2 and y1 < y2."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x1 < self.x2 <= 1.0 and 0.0 <= self.y1 < self.y2 <= 1.0):
            raise ValueError(f"invalid box corners: {(self.x1, self.y1, self.x2, self.y2)}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> "PointAnno":
        return PointAnno((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def contains(self, p: "PointAnno") -> bool:
        return self.x1 <= p.x <= self.x2 and self.y1 <= p.y <= self.y2

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @classmethod
    def from_sequence(cls, xs: Sequence[float]) -> "BBox":
        if len(xs) != 4:
            raise ValueError(f"box needs 4 coordinates, got {len(xs)}")
        return cls(float(xs[0]), float(xs[1]), float(xs[2]), float(xs[3]))


@dataclass(frozen=True)
class PointAnno:
    """A single normalized point, e.g. a grounder's pointing output."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"point outside unit square: {(self.x, self.y)}")


def bbox_iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; symmetric, in [0, 1]."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    if inter <= 0.0:
        return 0.0
    union = a.area + b.area - inter
    return inter / union


def point_to_seed_box(p: PointAnno, half_extent: float) -> BBox:
    """Expand a point into a small box for trackers that need a box seed.

    The box is centered on the point with the given half width/height and
    clamped to the unit square.
    """
    if half_extent <= 0.0:
        raise ValueError(f"half_extent must be positive, got {half_extent}")
    x1 = max(0.0, p.x - half_extent)
    y1 = max(0.0, p.y - half_extent)
    x2 = min(1.0, p.x + half_extent)
    y2 = min(1.0, p.y + half_extent)
    if not (x1 < x2 and y1 < y2):
        raise ValueError("degenerate seed box")
    return BBox(x1, y1, x2, y2)


@dataclass(frozen=True)
class Tracklet:
    """One object's per-frame boxes under a single stable association ID.

    ``boxes`` maps 0-based frame index to the object's box in that frame.
    Treat instances as immutable: derive modified copies via ``with_box``.
    """

    object_id: str
    boxes: Mapping[int, BBox] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for idx in self.boxes:
            if not isinstance(idx, int) or idx < 0:
                raise ValueError(f"bad frame index {idx!r} in tracklet {self.object_id!r}")

    def with_box(self, frame: int, box: BBox) -> "Tracklet":
        merged = dict(self.boxes)
        merged[frame] = box
        return Tracklet(self.object_id, merged)

    def frames(self) -> list[int]:
        return sorted(self.boxes)

    def __len__(self) -> int:
        return len(self.boxes)


def tracklet_coverage(t: Tracklet) -> tuple[int, int, int]:
    """Return (first annotated frame, last annotated frame, frame count)."""
    if not t.boxes:
        raise ValueError("empty tracklet")
    frames = t.boxes.keys()
    return (min(frames), max(frames), len(t.boxes))


def validate_tracklet_frames(t: Tracklet, frame_count: int) -> None:
    """Check every annotated frame lies inside [0, frame_count)."""
    for idx in t.boxes:
        if idx >= frame_count:
            raise ValueError(
                f"tracklet {t.object_id!r} frame {idx} outside video of {frame_count} frames"
            )


@dataclass(frozen=True)
class TrackSet:
    """All answer tracklets for one question."""

    question_id: str
    tracklets: tuple[Tracklet, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tracklets", tuple(self.tracklets))
        ids = [t.object_id for t in self.tracklets]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate object_ids in track set {self.question_id!r}")

    def is_empty(self) -> bool:
        return all(len(t) == 0 for t in self.tracklets)

    def frame_universe(self) -> set[int]:
        out: set[int] = set()
        for t in self.tracklets:
            out.update(t.boxes)
        return out
