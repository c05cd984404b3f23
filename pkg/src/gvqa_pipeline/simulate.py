"""Deterministic synthetic scenarios and simulated backends.

A Scenario is a tiny scripted world: objects with linear trajectories and
visibility schedules inside a 300-frame, 30 fps video. The simulated
reasoner, grounder and tracker consult the scenario directly (frames are
opaque handles, nothing is rendered), which makes every pipeline run a
pure function of (preset, seed, noise, config).

Presets encode the failure modes the search strategies differ on:

* ``plain``           - one target visible throughout; every strategy wins.
* ``decoy_first``     - a lookalike decoy appears after the reverse-play
                        threshold but before the real target, which itself
                        disappears briefly near the end. Forward scanning
                        anchors the decoy; scanning from the end anchors
                        the target's short final segment; the trigger
                        anchors its long main segment.
* ``late_appearance`` - target only appears late in the video.
* ``occluded_trigger``- trigger frame falls inside an occlusion gap, so
                        trigger-first must fall back.
* ``overlap_initial`` - several lookalike instances overlap early, tripping
                        the too-many-detections rule until they separate.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .cortex import ReasonerBackend
from .dataset import GvqaQuestion, VideoMeta, sample_indices
from .geometry import BBox, PointAnno, Tracklet, TrackSet

PRESETS = ("plain", "decoy_first", "overlap_initial", "late_appearance", "occluded_trigger")

DEFAULT_FRAME_COUNT = 300
DEFAULT_FPS = 30.0

# Sampled-sequence stride at the default 3 fps reasoning rate.
_REASON_STRIDE = 10


def _stable_rng(*parts: object) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


@dataclass(frozen=True)
class SimObject:
    """One scripted object: a linear trajectory over its visible frames."""

    object_id: str
    descriptor: str
    boxes: Mapping[int, BBox]
    decoy_for: str | None = None

    def visible_at(self, frame: int) -> bool:
        return frame in self.boxes

    def center_at(self, frame: int) -> PointAnno:
        return self.boxes[frame].center

    def matches(self, desc: str) -> bool:
        return self.descriptor == desc or self.decoy_for == desc


@dataclass(frozen=True)
class ScriptedReason:
    answer: str
    reasoning: str
    trigger_moment: int  # index into the 3 fps sampled sequence


@dataclass(frozen=True)
class Scenario:
    preset: str
    seed: int
    meta: VideoMeta
    objects: tuple[SimObject, ...]
    question: GvqaQuestion
    scripted_reason: ScriptedReason
    trigger_valid: bool
    overlap_window: tuple[int, int] | None = None
    overlap_apparent: int = 0

    @property
    def targets(self) -> tuple[SimObject, ...]:
        return tuple(o for o in self.objects if o.decoy_for is None)

    @property
    def decoys(self) -> tuple[SimObject, ...]:
        return tuple(o for o in self.objects if o.decoy_for is not None)

    @property
    def target_descriptor(self) -> str:
        return self.targets[0].descriptor

    def gt_track_set(self) -> TrackSet:
        return TrackSet(self.question.question_id, self.question.gt_tracks or ())

    def visible_span(self, o: SimObject) -> tuple[int, int]:
        frames = sorted(o.boxes)
        return frames[0], frames[-1]


@dataclass(frozen=True)
class SimNoise:
    seed: int = 0
    box_jitter: float = 0.0
    miss_prob: float = 0.0
    drift_per_frame: float = 0.0

    def __post_init__(self) -> None:
        if self.box_jitter < 0 or self.miss_prob < 0 or self.drift_per_frame < 0:
            raise ValueError("noise magnitudes must be >= 0")


ZERO_NOISE = SimNoise()


# ---------------------------------------------------------------------------
# Scenario generation


def _linear_object(
    rng: random.Random,
    object_id: str,
    descriptor: str,
    frames: Iterable[int],
    cx_range: tuple[float, float],
    decoy_for: str | None = None,
) -> SimObject:
    w = rng.uniform(0.10, 0.14)
    h = rng.uniform(0.10, 0.14)
    cx0 = rng.uniform(*cx_range)
    cy0 = rng.uniform(0.40, 0.60)
    vx = rng.uniform(-0.0002, 0.0002)
    vy = rng.uniform(-0.0002, 0.0002)
    boxes = {}
    for f in frames:
        cx = _clamp(cx0 + vx * f, w / 2 + 0.005, 1 - w / 2 - 0.005)
        cy = _clamp(cy0 + vy * f, h / 2 + 0.005, 1 - h / 2 - 0.005)
        boxes[f] = BBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
    return SimObject(object_id, descriptor, boxes, decoy_for)


_ADJECTIVES = ("red", "blue", "green", "striped", "wooden", "shiny", "matte")
_NOUNS = ("mug", "block", "toy car", "notebook", "bottle", "cushion", "bowl")


def _descriptor(rng: random.Random) -> str:
    return f"the {rng.choice(_ADJECTIVES)} {rng.choice(_NOUNS)}"


def _reasoning_text(descriptor: str, trigger_native: int) -> str:
    return (
        f"Step 1: The object the question refers to is {descriptor}, which is the "
        f"only object matching the described interaction. Step 2: Around native "
        f"frame {trigger_native} it is unoccluded and fully in view, so that "
        f"moment localizes it best."
    )


def _build(
    preset: str,
    seed: int,
    objects: Sequence[SimObject],
    trigger_native: int,
    trigger_valid: bool,
    overlap_window: tuple[int, int] | None = None,
    overlap_apparent: int = 0,
) -> Scenario:
    meta = VideoMeta(
        video_id=f"sim-{preset}-{seed}", fps=DEFAULT_FPS, frame_count=DEFAULT_FRAME_COUNT
    )
    targets = [o for o in objects if o.decoy_for is None]
    descriptor = targets[0].descriptor
    gt = tuple(Tracklet(o.object_id, dict(o.boxes)) for o in targets)
    question = GvqaQuestion(
        question_id=f"{preset}-{seed}",
        video_id=meta.video_id,
        text=f"Track {descriptor} that the person interacts with.",
        gt_tracks=gt,
    )
    reason = ScriptedReason(
        answer=descriptor,
        reasoning=_reasoning_text(descriptor, trigger_native),
        trigger_moment=trigger_native // _REASON_STRIDE,
    )
    return Scenario(
        preset=preset,
        seed=seed,
        meta=meta,
        objects=tuple(objects),
        question=question,
        scripted_reason=reason,
        trigger_valid=trigger_valid,
        overlap_window=overlap_window,
        overlap_apparent=overlap_apparent,
    )


def _trigger_candidates(lo: int, hi: int) -> list[int]:
    """Multiples of 30 inside [lo, hi]."""
    return [m for m in range(0, DEFAULT_FRAME_COUNT, 30) if lo <= m <= hi]


def gen_scenario(preset: str, seed: int) -> Scenario:
    """Deterministically build one scenario; same (preset, seed) -> same world.

    Visibility boundaries are aligned to the 10 fps tracking grid and
    triggers to both sampling grids, so coverage arithmetic in tests stays
    exact.
    """
    rng = _stable_rng("scenario", preset, seed)
    if preset == "plain":
        desc = _descriptor(rng)
        target = _linear_object(rng, "obj-0", desc, range(0, 300), (0.40, 0.60))
        trigger = rng.choice(_trigger_candidates(90, 210))
        return _build(preset, seed, [target], trigger, True)

    if preset == "decoy_first":
        desc = _descriptor(rng)
        decoy_start = 3 * rng.randint(34, 40)   # (100, 120]: past the reverse threshold
        decoy_end = 3 * rng.randint(61, 66)     # covers forward probes 120 and 150
        target_start = 3 * rng.randint(68, 72)
        main_len = 3 * rng.randint(15, 20)
        gap_len = 3 * rng.randint(3, 5)
        gap_start = target_start + main_len
        late_start = gap_start + gap_len
        target_frames = list(range(target_start, gap_start)) + list(range(late_start, 300))
        target = _linear_object(rng, "obj-0", desc, target_frames, (0.62, 0.78))
        decoy = _linear_object(
            rng, "decoy-0", f"{desc} lookalike", range(decoy_start, decoy_end), (0.15, 0.25),
            decoy_for=desc,
        )
        trigger = rng.choice(_trigger_candidates(target_start + 3, gap_start - 4))
        return _build(preset, seed, [target, decoy], trigger, True)

    if preset == "late_appearance":
        desc = _descriptor(rng)
        start = 3 * rng.randint(61, 81)
        target = _linear_object(rng, "obj-0", desc, range(start, 300), (0.40, 0.60))
        trigger = rng.choice(_trigger_candidates(start + 3, 294))
        return _build(preset, seed, [target], trigger, True)

    if preset == "occluded_trigger":
        desc = _descriptor(rng)
        first_start = 3 * rng.randint(1, 9)
        gap_start = 3 * rng.randint(50, 70)
        gap_len = 3 * rng.randint(11, 15)
        gap_end = gap_start + gap_len
        frames = list(range(first_start, gap_start)) + list(range(gap_end, 300))
        target = _linear_object(rng, "obj-0", desc, frames, (0.40, 0.60))
        trigger = rng.choice(_trigger_candidates(gap_start, gap_end - 1))
        return _build(preset, seed, [target], trigger, trigger_valid=False)

    if preset == "overlap_initial":
        desc = "the magnetic plastic letters"
        window_end = 3 * rng.randint(31, 39)
        bands = ((0.15, 0.25), (0.45, 0.55), (0.75, 0.85))
        objects = [
            _linear_object(rng, f"obj-{i}", desc, range(0, 300), band)
            for i, band in enumerate(bands)
        ]
        trigger = rng.choice(_trigger_candidates(window_end + 3, 290))
        return _build(
            preset, seed, objects, trigger, True,
            overlap_window=(0, window_end), overlap_apparent=9,
        )

    raise ValueError(f"unknown preset {preset!r}")


# ---------------------------------------------------------------------------
# Simulated backends


class SimReasoner:
    """Replays the scenario's scripted reasoning as labeled response text."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def reason(self, video_ref: str, sampled_indices: Sequence[int], prompt: str) -> str:
        r = self.scenario.scripted_reason
        return (
            f"Answer: {r.answer}\n"
            f"Reasoning: {r.reasoning}\n"
            f"Trigger_moment: {r.trigger_moment}"
        )


class SimGrounder:
    """Points at the center of every visible object matching a description."""

    def __init__(self, scenario: Scenario, noise: SimNoise = ZERO_NOISE):
        self.scenario = scenario
        self.noise = noise

    def ground(self, video_ref: str, native_frame_idx: int, description: str) -> list[PointAnno] | None:
        rng = _stable_rng(self.noise.seed, "ground", video_ref, native_frame_idx, description)
        if self.noise.miss_prob > 0 and rng.random() < self.noise.miss_prob:
            return None
        matched = sorted(
            (
                o
                for o in self.scenario.objects
                if o.matches(description) and o.visible_at(native_frame_idx)
            ),
            key=lambda o: o.object_id,
        )
        points: list[PointAnno] = []
        for o in matched:
            box = o.boxes[native_frame_idx]
            c = box.center
            x = _clamp(c.x + rng.gauss(0.0, self.noise.box_jitter), box.x1, box.x2)
            y = _clamp(c.y + rng.gauss(0.0, self.noise.box_jitter), box.y1, box.y2)
            points.append(PointAnno(_clamp(x, 0.0, 1.0), _clamp(y, 0.0, 1.0)))

        window = self.scenario.overlap_window
        if (
            window is not None
            and points
            and window[0] <= native_frame_idx < window[1]
            and self.scenario.overlap_apparent > len(points)
        ):
            # Overlapping lookalikes read as many near-duplicate instances.
            extra = self.scenario.overlap_apparent - len(points)
            for i in range(extra):
                base = points[i % len(points)]
                points.append(
                    PointAnno(
                        _clamp(base.x + 0.01 * (1 + i // len(points)), 0.0, 1.0),
                        _clamp(base.y + 0.01, 0.0, 1.0),
                    )
                )
        return points


class SimTracker:
    """Propagates the scripted trajectory of whichever object holds the seed.

    Propagation walks the tracking grid away from the anchor and stops at
    the first grid frame where the object is invisible, mimicking a real
    tracker losing its target at an occlusion. A seed point inside no
    object snaps to the nearest visible object and the session is flagged
    misanchored - this is exactly how an early decoy anchor turns into a
    near-zero final score.
    """

    def __init__(self, scenario: Scenario, noise: SimNoise = ZERO_NOISE, track_fps: float = 10.0):
        self.scenario = scenario
        self.noise = noise
        self.track_fps = track_fps
        self.sessions: list[dict] = []

    def init(self, video_ref: str, native_frame_idx: int, seed: PointAnno | BBox, object_id: str) -> dict:
        point = seed.center if isinstance(seed, BBox) else seed
        visible = sorted(
            (o for o in self.scenario.objects if o.visible_at(native_frame_idx)),
            key=lambda o: o.object_id,
        )
        if not visible:
            raise RuntimeError(f"nothing visible at frame {native_frame_idx}")
        containing = [o for o in visible if o.boxes[native_frame_idx].contains(point)]
        if containing:
            obj, misanchored = containing[0], False
        else:
            obj = min(
                visible,
                key=lambda o: (o.center_at(native_frame_idx).x - point.x) ** 2
                + (o.center_at(native_frame_idx).y - point.y) ** 2,
            )
            misanchored = True
        session = {
            "object": obj,
            "init": native_frame_idx,
            "object_id": object_id,
            "misanchored": misanchored,
        }
        self.sessions.append(session)
        return session

    def _drifted(self, box: BBox, steps_away: int, angle: float) -> BBox:
        if self.noise.drift_per_frame == 0.0 or steps_away == 0:
            return box
        mag = self.noise.drift_per_frame * steps_away
        dx = _clamp(mag * math.cos(angle), -box.x1, 1 - box.x2)
        dy = _clamp(mag * math.sin(angle), -box.y1, 1 - box.y2)
        return BBox(box.x1 + dx, box.y1 + dy, box.x2 + dx, box.y2 + dy)

    def propagate(self, session: dict, direction: str) -> list[tuple[int, BBox | None]]:
        grid = sample_indices(self.scenario.meta, self.track_fps)
        init = session["init"]
        if init not in grid:
            raise ValueError(f"anchor {init} not on tracking grid")
        pos = grid.index(init)
        indices = range(pos, len(grid)) if direction == "forward" else range(pos, -1, -1)
        obj: SimObject = session["object"]
        # One drift direction per session keeps error growth monotone in the
        # distance from the anchor.
        rng = _stable_rng(self.noise.seed, "track", obj.object_id, init, direction)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        out: list[tuple[int, BBox | None]] = []
        for i in indices:
            f = grid[i]
            if not obj.visible_at(f):
                break
            out.append((f, self._drifted(obj.boxes[f], abs(f - init), angle)))
        return out


class SimFrameProvider:
    """Opaque frame handles; nothing is decoded in the simulation."""

    def get_frame(self, video_id: str, native_idx: int) -> tuple[str, str, int]:
        return ("sim-frame", video_id, native_idx)


# ---------------------------------------------------------------------------
# Multi-scenario suite: one backend set dispatching on video id


@dataclass
class ScenarioSuite:
    scenarios: tuple[Scenario, ...]
    noise: SimNoise = ZERO_NOISE

    def __post_init__(self) -> None:
        self.by_video = {s.meta.video_id: s for s in self.scenarios}

    def videos(self) -> list[VideoMeta]:
        return [s.meta for s in self.scenarios]

    def questions(self) -> list[GvqaQuestion]:
        return [s.question for s in self.scenarios]

    def gt_track_sets(self) -> dict[str, TrackSet]:
        return {s.question.question_id: s.gt_track_set() for s in self.scenarios}

    def _scenario(self, video_ref: str) -> Scenario:
        return self.by_video[video_ref]

    @property
    def reasoner(self) -> "SuiteReasoner":
        return SuiteReasoner(self)

    @property
    def grounder(self) -> "SuiteGrounder":
        return SuiteGrounder(self)

    @property
    def tracker(self) -> "SuiteTracker":
        return SuiteTracker(self)


class SuiteReasoner:
    def __init__(self, suite: ScenarioSuite):
        self.suite = suite

    def reason(self, video_ref: str, sampled_indices: Sequence[int], prompt: str) -> str:
        return SimReasoner(self.suite._scenario(video_ref)).reason(video_ref, sampled_indices, prompt)


class SuiteGrounder:
    def __init__(self, suite: ScenarioSuite):
        self.suite = suite

    def ground(self, video_ref: str, native_frame_idx: int, description: str) -> list[PointAnno] | None:
        g = SimGrounder(self.suite._scenario(video_ref), self.suite.noise)
        return g.ground(video_ref, native_frame_idx, description)


class SuiteTracker:
    def __init__(self, suite: ScenarioSuite):
        self.suite = suite

    def init(self, video_ref: str, native_frame_idx: int, seed: PointAnno | BBox, object_id: str) -> dict:
        tracker = SimTracker(self.suite._scenario(video_ref), self.suite.noise)
        session = tracker.init(video_ref, native_frame_idx, seed, object_id)
        session["_tracker"] = tracker
        return session

    def propagate(self, session: dict, direction: str) -> list[tuple[int, BBox | None]]:
        return session["_tracker"].propagate(session, direction)


# ---------------------------------------------------------------------------
# Scenario serialization (replayable fixtures)


def scenario_to_payload(s: Scenario) -> dict:
    return {
        "preset": s.preset,
        "seed": s.seed,
        "meta": {
            "video_id": s.meta.video_id,
            "fps": s.meta.fps,
            "frame_count": s.meta.frame_count,
        },
        "question": {
            "question_id": s.question.question_id,
            "video_id": s.question.video_id,
            "text": s.question.text,
            "gt_tracks": [
                {
                    "object_id": t.object_id,
                    "frames": [{"idx": f, "box": t.boxes[f].as_list()} for f in t.frames()],
                }
                for t in (s.question.gt_tracks or ())
            ],
        },
        "scripted_reason": {
            "answer": s.scripted_reason.answer,
            "reasoning": s.scripted_reason.reasoning,
            "trigger_moment": s.scripted_reason.trigger_moment,
        },
        "trigger_valid": s.trigger_valid,
        "overlap_window": list(s.overlap_window) if s.overlap_window else None,
        "overlap_apparent": s.overlap_apparent,
        "objects": [
            {
                "object_id": o.object_id,
                "descriptor": o.descriptor,
                "decoy_for": o.decoy_for,
                "frames": [{"idx": f, "box": o.boxes[f].as_list()} for f in sorted(o.boxes)],
            }
            for o in s.objects
        ],
    }


def scenario_from_payload(obj: dict) -> Scenario:
    meta = VideoMeta(**obj["meta"])
    objects = tuple(
        SimObject(
            object_id=o["object_id"],
            descriptor=o["descriptor"],
            decoy_for=o.get("decoy_for"),
            boxes={f["idx"]: BBox.from_sequence(f["box"]) for f in o["frames"]},
        )
        for o in obj["objects"]
    )
    q = obj["question"]
    question = GvqaQuestion(
        question_id=q["question_id"],
        video_id=q["video_id"],
        text=q["text"],
        gt_tracks=tuple(
            Tracklet(t["object_id"], {f["idx"]: BBox.from_sequence(f["box"]) for f in t["frames"]})
            for t in q.get("gt_tracks", [])
        ),
    )
    r = obj["scripted_reason"]
    return Scenario(
        preset=obj["preset"],
        seed=obj["seed"],
        meta=meta,
        objects=objects,
        question=question,
        scripted_reason=ScriptedReason(r["answer"], r["reasoning"], r["trigger_moment"]),
        trigger_valid=obj["trigger_valid"],
        overlap_window=tuple(obj["overlap_window"]) if obj.get("overlap_window") else None,
        overlap_apparent=obj.get("overlap_apparent", 0),
    )


def save_scenarios(path: str | Path, scenarios: Iterable[Scenario]) -> None:
    payload = [scenario_to_payload(s) for s in scenarios]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def load_scenarios(path: str | Path) -> list[Scenario]:
    return [scenario_from_payload(o) for o in json.loads(Path(path).read_text())]
