"""Annotation ingest and frame-rate index mapping.

Three frame spaces exist in this pipeline: native video frames, the
low-rate sequence shown to the reasoner (default 3 fps), and the tracking
grid (default 10 fps). This module owns every conversion between them so
the rounding rule is pinned in exactly one place: sampled index ``k`` maps
to native frame ``round_half_up(k * fps / target_fps)``.

The canonical annotation schema (documented in the README) is a JSON
document ``{"videos": [...], "questions": [...]}``; a line-delimited
variant with per-record ``"kind"`` tags is accepted too.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

from .errors import DatasetError
from .geometry import BBox, Tracklet, validate_tracklet_frames

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    fps: float
    frame_count: int
    width: int | None = None
    height: int | None = None

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.frame_count < 1:
            raise ValueError(f"frame_count must be >= 1, got {self.frame_count}")


@dataclass(frozen=True)
class GvqaQuestion:
    question_id: str
    video_id: str
    text: str
    gt_tracks: tuple[Tracklet, ...] | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError(f"question {self.question_id!r} has empty text")
        if self.gt_tracks is not None:
            object.__setattr__(self, "gt_tracks", tuple(self.gt_tracks))


@dataclass(frozen=True)
class FrameSampling:
    """A native-to-target rate pairing and its index stride."""

    native_fps: float
    target_fps: float

    def __post_init__(self) -> None:
        if not (0 < self.target_fps <= self.native_fps):
            raise ValueError(
                f"target fps {self.target_fps} must be in (0, {self.native_fps}]"
            )

    @property
    def stride(self) -> float:
        return self.native_fps / self.target_fps


def round_half_up(x: float) -> int:
    """Round with .5 going up; the one rounding rule used for index maps."""
    return math.floor(x + 0.5)


def sample_indices(meta: VideoMeta, target_fps: float) -> list[int]:
    """Native frame indices of the ``target_fps`` subsampled sequence.

    Strictly increasing, always starts at frame 0, never reaches
    ``frame_count``.
    """
    if target_fps > meta.fps:
        raise ValueError("upsampling unsupported")
    stride = FrameSampling(meta.fps, target_fps).stride
    out: list[int] = []
    k = 0
    while True:
        native = round_half_up(k * stride)
        if native >= meta.frame_count:
            break
        out.append(native)
        k += 1
    return out


def sampled_to_native(meta: VideoMeta, target_fps: float, sampled_idx: int) -> int:
    """Map an index in the subsampled sequence back to a native frame."""
    if target_fps > meta.fps:
        raise ValueError("upsampling unsupported")
    if sampled_idx < 0:
        raise ValueError("trigger frame outside video")
    stride = FrameSampling(meta.fps, target_fps).stride
    native = round_half_up(sampled_idx * stride)
    if native >= meta.frame_count:
        raise ValueError("trigger frame outside video")
    return native


def sampled_length(meta: VideoMeta, target_fps: float) -> int:
    """Number of frames in the subsampled sequence."""
    return len(sample_indices(meta, target_fps))


class FrameProvider(Protocol):
    """Supplies frame pixel handles; the engine itself never decodes video.

    Implementations must tolerate concurrent ``get_frame`` calls.
    """

    def get_frame(self, video_id: str, native_idx: int) -> Any: ...


# ---------------------------------------------------------------------------
# Annotation file IO


def _parse_tracklet(obj: dict, record_index: int) -> Tracklet:
    try:
        object_id = str(obj["object_id"])
        boxes = {
            int(f["idx"]): BBox.from_sequence(f["box"])
            for f in obj["frames"]
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed track: {exc}", record_index, "gt_tracks") from exc
    return Tracklet(object_id, boxes)


def _parse_video(obj: dict, record_index: int) -> VideoMeta:
    try:
        return VideoMeta(
            video_id=str(obj["video_id"]),
            fps=float(obj["fps"]),
            frame_count=int(obj["frame_count"]),
            width=int(obj["width"]) if obj.get("width") is not None else None,
            height=int(obj["height"]) if obj.get("height") is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        field = exc.args[0] if isinstance(exc, KeyError) else None
        raise DatasetError(f"malformed video record: {exc}", record_index, field) from exc


def _parse_question(obj: dict, record_index: int) -> GvqaQuestion:
    try:
        gt = obj.get("gt_tracks")
        tracks = tuple(_parse_tracklet(t, record_index) for t in gt) if gt is not None else None
        return GvqaQuestion(
            question_id=str(obj["question_id"]),
            video_id=str(obj["video_id"]),
            text=str(obj["text"]),
            gt_tracks=tracks,
        )
    except DatasetError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        field = exc.args[0] if isinstance(exc, KeyError) else None
        raise DatasetError(f"malformed question record: {exc}", record_index, field) from exc


def load_dataset(path: str | Path) -> tuple[list[VideoMeta], list[GvqaQuestion]]:
    """Load an annotation file; returns (videos, questions).

    Every question must reference a known video and its ground-truth
    frames must fit inside that video.
    """
    text = Path(path).read_text()
    videos: list[VideoMeta] = []
    questions: list[GvqaQuestion] = []

    stripped = text.lstrip()
    if stripped.startswith("{") and "\n{" not in text.strip():
        doc = json.loads(text)
        for i, v in enumerate(doc.get("videos", [])):
            videos.append(_parse_video(v, i))
        for i, q in enumerate(doc.get("questions", [])):
            questions.append(_parse_question(q, i))
    else:
        for i, line in enumerate(l for l in text.splitlines() if l.strip()):
            obj = json.loads(line)
            kind = obj.get("kind")
            if kind == "video":
                videos.append(_parse_video(obj, i))
            elif kind == "question":
                questions.append(_parse_question(obj, i))
            else:
                raise DatasetError(f"unknown record kind {kind!r}", i, "kind")

    by_id = {v.video_id: v for v in videos}
    for i, q in enumerate(questions):
        if q.video_id not in by_id:
            raise DatasetError(f"unknown video_id {q.video_id!r}", i, "video_id")
        if q.gt_tracks:
            for t in q.gt_tracks:
                validate_tracklet_frames(t, by_id[q.video_id].frame_count)
    logger.info("loaded %d videos, %d questions from %s", len(videos), len(questions), path)
    return videos, questions


def dump_dataset(path: str | Path, videos: list[VideoMeta], questions: list[GvqaQuestion]) -> None:
    """Write annotations in the canonical single-document layout."""
    doc = {
        "videos": [
            {
                "video_id": v.video_id,
                "fps": v.fps,
                "frame_count": v.frame_count,
                **({"width": v.width} if v.width is not None else {}),
                **({"height": v.height} if v.height is not None else {}),
            }
            for v in videos
        ],
        "questions": [
            {
                "question_id": q.question_id,
                "video_id": q.video_id,
                "text": q.text,
                **(
                    {
                        "gt_tracks": [
                            {
                                "object_id": t.object_id,
                                "frames": [
                                    {"idx": f, "box": t.boxes[f].as_list()}
                                    for f in t.frames()
                                ],
                            }
                            for t in q.gt_tracks
                        ]
                    }
                    if q.gt_tracks is not None
                    else {}
                ),
            }
            for q in questions
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True))


def convert_perception_test(path: str | Path) -> tuple[list[VideoMeta], list[GvqaQuestion]]:
    """Best-effort converter from the official challenge annotation layout.

    The official layout is externally specified and may drift; this reads
    the commonly published shape (top-level map of video id to metadata
    plus a grounded QA list) and emits the canonical schema. Unknown
    structure raises a DatasetError rather than guessing.
    """
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise DatasetError("expected a top-level object keyed by video id")
    videos: list[VideoMeta] = []
    questions: list[GvqaQuestion] = []
    for vid, entry in doc.items():
        meta = entry.get("metadata", entry)
        try:
            videos.append(
                VideoMeta(
                    video_id=str(vid),
                    fps=float(meta["frame_rate"]) if "frame_rate" in meta else float(meta["fps"]),
                    frame_count=int(meta["num_frames"]) if "num_frames" in meta else int(meta["frame_count"]),
                    width=int(meta["resolution"][0]) if "resolution" in meta else None,
                    height=int(meta["resolution"][1]) if "resolution" in meta else None,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"unrecognized video metadata for {vid!r}: {exc}") from exc
        for i, q in enumerate(entry.get("grounded_question_answering", [])):
            try:
                qid = str(q.get("id", f"{vid}_{i}"))
                gt: list[Tracklet] = []
                for a in q.get("answers", []):
                    frames = {}
                    for f, box in zip(a.get("frame_ids", []), a.get("bounding_boxes", [])):
                        frames[int(f)] = BBox.from_sequence(box)
                    gt.append(Tracklet(str(a.get("id", len(gt))), frames))
                questions.append(
                    GvqaQuestion(
                        question_id=qid,
                        video_id=str(vid),
                        text=str(q["question"]),
                        gt_tracks=tuple(gt) if gt else None,
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"unrecognized question entry: {exc}", i) from exc
    return videos, questions
