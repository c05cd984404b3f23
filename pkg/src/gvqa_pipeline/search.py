"""Anchor search: locate the target description in some frame of the video.

Three strategies share one probe primitive:

* ``sliding_window``: probe frame 0, then every ``window_step`` frames
  forward until the grounder succeeds.
* ``sliding_plus_reverse``: run the forward scan only over the first
  ``reverse_threshold`` frames; if nothing is found there, probe backward
  from the last frame at the same stride.
* ``trigger_first``: probe the reasoner's trigger frame, falling back to
  the full sliding+reverse chain when that single probe fails.

A probe "fails" when the grounder signals failure, returns no points, or
returns more points than ``max_detections`` (a frame crowded with lookalike
instances is useless as an anchor). Transport problems are retried and are
never conflated with semantic failure. Within one search a frame is never
probed twice.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from .dataset import VideoMeta
from .errors import TransportError
from .geometry import PointAnno

logger = logging.getLogger(__name__)

STRATEGIES = ("sliding_window", "sliding_plus_reverse", "trigger_first")

RESULT_SUCCESS = "success"
RESULT_FAILURE = "failure_signal"
RESULT_TOO_MANY = "too_many"
RESULT_EMPTY = "empty"


class Grounder(Protocol):
    """Points at every instance of ``description`` in one frame.

    Returns a stably ordered list of points, or ``None`` as an explicit
    failure signal. Raises TransportError for infrastructure faults.
    """

    def ground(
        self, video_ref: str, native_frame_idx: int, description: str
    ) -> list[PointAnno] | None: ...


@dataclass(frozen=True)
class SearchConfig:
    window_step: int = 30
    reverse_threshold: int = 100
    max_detections: int = 7
    strategy: str = "trigger_first"
    transport_retries: int = 3
    retry_base_delay: float = 0.2

    def __post_init__(self) -> None:
        if self.window_step < 1:
            raise ValueError("window_step must be >= 1")
        if self.reverse_threshold < 0:
            raise ValueError("reverse_threshold must be >= 0")
        if self.max_detections < 1:
            raise ValueError("max_detections must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class Attempt:
    frame: int
    result: str


@dataclass(frozen=True)
class GroundingOutcome:
    """Anchor plus the complete probe log that led to it.

    ``anchor_frame`` is None when every probe failed; the attempt log is
    never empty.
    """

    anchor_frame: int | None
    anchor_points: tuple[PointAnno, ...]
    strategy_used: str | None
    attempts: tuple[Attempt, ...]

    @property
    def found(self) -> bool:
        return self.anchor_frame is not None

    def to_payload(self) -> dict:
        return {
            "anchor_frame": self.anchor_frame,
            "anchor_points": [[p.x, p.y] for p in self.anchor_points],
            "strategy_used": self.strategy_used,
            "attempts": [[a.frame, a.result] for a in self.attempts],
        }

    @classmethod
    def from_payload(cls, obj: dict) -> "GroundingOutcome":
        return cls(
            anchor_frame=obj["anchor_frame"],
            anchor_points=tuple(PointAnno(x, y) for x, y in obj["anchor_points"]),
            strategy_used=obj["strategy_used"],
            attempts=tuple(Attempt(f, r) for f, r in obj["attempts"]),
        )


def attempt_frame(
    grounder: Grounder,
    video_ref: str,
    frame: int,
    description: str,
    cfg: SearchConfig,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[str, list[PointAnno]]:
    """Probe a single frame; returns (result label, points on success).

    Transport errors are retried ``transport_retries`` times with
    exponential backoff before surfacing; semantic failures never retry.
    """
    attempt = 0
    while True:
        try:
            points = grounder.ground(video_ref, frame, description)
            break
        except TransportError:
            if attempt >= cfg.transport_retries:
                raise
            delay = cfg.retry_base_delay * (2**attempt)
            logger.warning("transport error probing frame %d, retry in %.2fs", frame, delay)
            sleep(delay)
            attempt += 1
    if points is None:
        return RESULT_FAILURE, []
    if len(points) == 0:
        return RESULT_EMPTY, []
    if len(points) > cfg.max_detections:
        return RESULT_TOO_MANY, []
    return RESULT_SUCCESS, list(points)


class _Probe:
    """Shared per-search state: attempt log and probed-frame dedupe."""

    def __init__(self, grounder: Grounder, video_ref: str, desc: str, cfg: SearchConfig):
        self.grounder = grounder
        self.video_ref = video_ref
        self.desc = desc
        self.cfg = cfg
        self.attempts: list[Attempt] = []
        self.seen: set[int] = set()

    def __call__(self, frame: int) -> list[PointAnno] | None:
        if frame in self.seen:
            return None
        self.seen.add(frame)
        result, points = attempt_frame(self.grounder, self.video_ref, frame, self.desc, self.cfg)
        self.attempts.append(Attempt(frame, result))
        return points if result == RESULT_SUCCESS else None


def _outcome(probe: _Probe, anchor: int | None, points: Sequence[PointAnno], used: str | None) -> GroundingOutcome:
    return GroundingOutcome(
        anchor_frame=anchor,
        anchor_points=tuple(points),
        strategy_used=used,
        attempts=tuple(probe.attempts),
    )


def _forward_scan(probe: _Probe, start: int, stop: int, step: int) -> tuple[int, list[PointAnno]] | None:
    frame = start
    while frame < stop:
        points = probe(frame)
        if points:
            return frame, points
        frame += step
    return None


def sliding_window_search(
    grounder: Grounder,
    meta: VideoMeta,
    description: str,
    cfg: SearchConfig,
    start: int = 0,
    _probe: _Probe | None = None,
) -> GroundingOutcome:
    """Forward probe every ``window_step`` frames from ``start``."""
    if start >= meta.frame_count:
        raise ValueError(f"start {start} past end of video ({meta.frame_count} frames)")
    probe = _probe or _Probe(grounder, meta.video_id, description, cfg)
    hit = _forward_scan(probe, start, meta.frame_count, cfg.window_step)
    if hit:
        return _outcome(probe, hit[0], hit[1], "sliding_window")
    return _outcome(probe, None, (), None)


def reverse_play_search(
    grounder: Grounder,
    meta: VideoMeta,
    description: str,
    cfg: SearchConfig,
    _probe: _Probe | None = None,
) -> GroundingOutcome:
    """Forward scan capped at ``reverse_threshold``, then backward from the end.

    The forward phase probes only frames whose index is <= the threshold;
    the backward phase starts at the last frame and steps down by the same
    stride, so the middle of the video is reached from the end first.
    """
    probe = _probe or _Probe(grounder, meta.video_id, description, cfg)
    forward_stop = min(cfg.reverse_threshold + 1, meta.frame_count)
    hit = _forward_scan(probe, 0, forward_stop, cfg.window_step)
    if hit:
        return _outcome(probe, hit[0], hit[1], "sliding_window")
    frame = meta.frame_count - 1
    while frame >= 0:
        points = probe(frame)
        if points:
            return _outcome(probe, frame, points, "reverse_play")
        frame -= cfg.window_step
    return _outcome(probe, None, (), None)


def trigger_first_search(
    grounder: Grounder,
    meta: VideoMeta,
    description: str,
    cfg: SearchConfig,
    trigger_native: int,
) -> GroundingOutcome:
    """Probe the trigger frame first; fall back to sliding+reverse.

    The fallback never re-probes the trigger frame. The attempt log spans
    the whole chain, so a fallback anchor is distinguishable from a direct
    trigger hit via ``strategy_used``.
    """
    if not (0 <= trigger_native < meta.frame_count):
        raise ValueError(f"trigger frame {trigger_native} outside video")
    probe = _Probe(grounder, meta.video_id, description, cfg)
    points = probe(trigger_native)
    if points:
        return _outcome(probe, trigger_native, points, "trigger_moment")
    return reverse_play_search(grounder, meta, description, cfg, _probe=probe)


def run_search(
    grounder: Grounder,
    meta: VideoMeta,
    description: str,
    cfg: SearchConfig,
    trigger_native: int | None = None,
) -> GroundingOutcome:
    """Dispatch on ``cfg.strategy``; trigger_first needs ``trigger_native``."""
    if cfg.strategy == "sliding_window":
        return sliding_window_search(grounder, meta, description, cfg)
    if cfg.strategy == "sliding_plus_reverse":
        return reverse_play_search(grounder, meta, description, cfg)
    if trigger_native is None:
        # Degraded mode: no usable trigger, fall back to the full chain.
        return reverse_play_search(grounder, meta, description, cfg)
    return trigger_first_search(grounder, meta, description, cfg, trigger_native)
