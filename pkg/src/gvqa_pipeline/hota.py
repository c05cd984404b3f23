"""Higher-order tracking accuracy (HOTA / DetA / AssA) over an IoU sweep.

Scores are computed per localization threshold alpha with a two-pass
scheme, then averaged over the sweep:

  pass 1  for every (gt id, pred id) pair, count the frames where the two
          could match (IoU >= alpha). Turn the counts into an association
          prior: count / (gt frames + pred frames - count).
  pass 2  rematch every frame with an optimal one-to-one assignment that
          maximizes sum(prior + 1e-6 * IoU) over pairs with IoU >= alpha,
          so global association dominates and IoU only breaks ties.

From the final per-frame matches: DetA = TP / (TP + FN + FP); AssA is the
mean over matched detections of TPA / (TPA + FNA + FPA), where TPA counts
frames in which the same (gt, pred) pair was matched, and FNA / FPA count
the remaining detections of that gt / pred; HOTA = sqrt(DetA * AssA).

``compute_hota_bruteforce`` recomputes the same quantity by exhaustively
enumerating per-frame assignments with plain dict arithmetic. It exists to
pin the optimized implementation on small instances and shares none of its
matching machinery.

Conventions: a question with empty ground truth and empty prediction
scores 1.0 (vacuously perfect); empty prediction against non-empty ground
truth scores 0.0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BBox, TrackSet, bbox_iou

logger = logging.getLogger(__name__)

# Weight of raw IoU in the pass-2 matching objective; small enough that the
# association prior always dominates.
IOU_TIEBREAK = 1e-6

DEFAULT_ALPHAS: tuple[float, ...] = tuple(i / 20 for i in range(1, 20))


@dataclass(frozen=True)
class AlphaSweep:
    thresholds: tuple[float, ...] = DEFAULT_ALPHAS

    def __post_init__(self) -> None:
        if not self.thresholds:
            raise ValueError("sweep needs at least one threshold")
        prev = 0.0
        for a in self.thresholds:
            if not (0.0 < a < 1.0) or a <= prev:
                raise ValueError("thresholds must be strictly increasing within (0, 1)")
            prev = a


@dataclass(frozen=True)
class MatchResult:
    """One frame's assignment at a fixed alpha: matches plus TP/FP/FN."""

    matches: tuple[tuple[str, str], ...]  # (pred_id, gt_id)
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class AlphaScores:
    alpha: float
    hota: float
    deta: float
    assa: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class HotaBreakdown:
    """Per-alpha scores plus their arithmetic means over the sweep."""

    per_alpha: tuple[AlphaScores, ...]
    hota: float
    deta: float
    assa: float

    def to_payload(self) -> dict:
        return {
            "hota": self.hota,
            "deta": self.deta,
            "assa": self.assa,
            "per_alpha": [
                {
                    "alpha": s.alpha,
                    "hota": s.hota,
                    "deta": s.deta,
                    "assa": s.assa,
                    "tp": s.tp,
                    "fp": s.fp,
                    "fn": s.fn,
                }
                for s in self.per_alpha
            ],
        }


def _tracks_by_frame(ts: TrackSet) -> dict[int, dict[str, BBox]]:
    out: dict[int, dict[str, BBox]] = {}
    for t in ts.tracklets:
        for f, b in t.boxes.items():
            out.setdefault(f, {})[t.object_id] = b
    return out


def _assign(weights: np.ndarray, feasible: np.ndarray) -> list[tuple[int, int]]:
    """Max-weight one-to-one assignment restricted to feasible cells."""
    n_g, n_p = weights.shape
    if n_g == 0 or n_p == 0 or not feasible.any():
        return []
    if n_g == 1 and n_p == 1:
        return [(0, 0)] if feasible[0, 0] else []
    rows, cols = linear_sum_assignment(np.where(feasible, weights, 0.0), maximize=True)
    return [(i, j) for i, j in zip(rows, cols) if feasible[i, j]]


def match_frame(
    preds: Mapping[str, BBox],
    gts: Mapping[str, BBox],
    alpha: float,
    assoc_prior: Callable[[str, str], float] | None = None,
) -> MatchResult:
    """Optimally match one frame's predictions to its ground truth.

    Pairs with IoU below ``alpha`` are never matched. ``assoc_prior`` maps
    (pred_id, gt_id) to the association score added to the tie-break IoU
    term; omitted, matching maximizes IoU alone.
    """
    gt_ids = sorted(gts)
    pred_ids = sorted(preds)
    iou = np.array(
        [[bbox_iou(gts[g], preds[p]) for p in pred_ids] for g in gt_ids], dtype=float
    ).reshape(len(gt_ids), len(pred_ids))
    prior = np.zeros_like(iou)
    if assoc_prior is not None:
        for i, g in enumerate(gt_ids):
            for j, p in enumerate(pred_ids):
                prior[i, j] = assoc_prior(p, g)
    feasible = iou >= alpha
    pairs = _assign(prior + IOU_TIEBREAK * iou, feasible)
    matches = tuple((pred_ids[j], gt_ids[i]) for i, j in pairs)
    tp = len(matches)
    return MatchResult(matches, tp=tp, fp=len(pred_ids) - tp, fn=len(gt_ids) - tp)


def _vacuous(sweep: AlphaSweep) -> HotaBreakdown:
    rows = tuple(AlphaScores(a, 1.0, 1.0, 1.0, 0, 0, 0) for a in sweep.thresholds)
    return HotaBreakdown(rows, 1.0, 1.0, 1.0)


def compute_hota(
    pred: TrackSet, gt: TrackSet, sweep: AlphaSweep | None = None
) -> HotaBreakdown:
    """Score one prediction set against ground truth over the alpha sweep."""
    sweep = sweep or AlphaSweep()
    gt_frames = _tracks_by_frame(gt)
    pred_frames = _tracks_by_frame(pred)
    total_gt = sum(len(v) for v in gt_frames.values())
    total_pred = sum(len(v) for v in pred_frames.values())
    if total_gt == 0 and total_pred == 0:
        return _vacuous(sweep)

    frames = sorted(set(gt_frames) | set(pred_frames))
    gt_ids = sorted({g for v in gt_frames.values() for g in v})
    pred_ids = sorted({p for v in pred_frames.values() for p in v})
    g_index = {g: i for i, g in enumerate(gt_ids)}
    p_index = {p: i for i, p in enumerate(pred_ids)}

    # Per-frame IoU matrices and id index lists, computed once for all alphas.
    per_frame: list[tuple[list[int], list[int], np.ndarray]] = []
    gt_count = np.zeros(len(gt_ids), dtype=np.int64)
    pred_count = np.zeros(len(pred_ids), dtype=np.int64)
    for f in frames:
        gs = sorted(gt_frames.get(f, {}))
        ps = sorted(pred_frames.get(f, {}))
        iou = np.array(
            [[bbox_iou(gt_frames[f][g], pred_frames[f][p]) for p in ps] for g in gs],
            dtype=float,
        ).reshape(len(gs), len(ps))
        gi = [g_index[g] for g in gs]
        pi = [p_index[p] for p in ps]
        for i in gi:
            gt_count[i] += 1
        for j in pi:
            pred_count[j] += 1
        per_frame.append((gi, pi, iou))

    rows: list[AlphaScores] = []
    for alpha in sweep.thresholds:
        # Pass 1: potential association counts per (gt, pred) pair.
        n_pot = np.zeros((len(gt_ids), len(pred_ids)), dtype=np.int64)
        for gi, pi, iou in per_frame:
            if not gi or not pi:
                continue
            mask = iou >= alpha
            if mask.any():
                n_pot[np.ix_(gi, pi)] += mask
        denom = gt_count[:, None] + pred_count[None, :] - n_pot
        prior = np.divide(n_pot, denom, out=np.zeros(n_pot.shape), where=denom > 0)

        # Pass 2: per-frame optimal rematch with association-dominant scores.
        tpa = np.zeros_like(n_pot)
        for gi, pi, iou in per_frame:
            if not gi or not pi:
                continue
            feasible = iou >= alpha
            weights = prior[np.ix_(gi, pi)] + IOU_TIEBREAK * iou
            for i, j in _assign(weights, feasible):
                tpa[gi[i], pi[j]] += 1

        tp = int(tpa.sum())
        fn = total_gt - tp
        fp = total_pred - tp
        deta = tp / (tp + fn + fp) if (tp + fn + fp) > 0 else 0.0
        if tp > 0:
            final_denom = gt_count[:, None] + pred_count[None, :] - tpa
            ass = np.divide(tpa, final_denom, out=np.zeros(tpa.shape), where=final_denom > 0)
            assa = float((tpa * ass).sum() / tp)
        else:
            assa = 0.0
        rows.append(AlphaScores(alpha, math.sqrt(deta * assa), deta, assa, tp, fp, fn))

    n = len(rows)
    return HotaBreakdown(
        tuple(rows),
        hota=sum(r.hota for r in rows) / n,
        deta=sum(r.deta for r in rows) / n,
        assa=sum(r.assa for r in rows) / n,
    )


# ---------------------------------------------------------------------------
# Brute-force oracle


def _enumerate_assignments(
    gt_ids: Sequence[str],
    pred_ids: Sequence[str],
    weight: Mapping[tuple[str, str], float],
) -> list[tuple[str, str]]:
    """Exhaustively find the max-total-weight one-to-one pairing.

    Only pairs present in ``weight`` are allowed. Ties keep the first
    assignment found in lexicographic enumeration order.
    """
    best_total = 0.0
    best: list[tuple[str, str]] = []

    def recurse(i: int, used: set[str], chosen: list[tuple[str, str]], total: float) -> None:
        nonlocal best_total, best
        if i == len(gt_ids):
            if total > best_total:
                best_total = total
                best = list(chosen)
            return
        g = gt_ids[i]
        recurse(i + 1, used, chosen, total)  # leave g unmatched
        for p in pred_ids:
            if p in used or (g, p) not in weight:
                continue
            chosen.append((g, p))
            used.add(p)
            recurse(i + 1, used, chosen, total + weight[(g, p)])
            used.remove(p)
            chosen.pop()

    recurse(0, set(), [], 0.0)
    return best


def compute_hota_bruteforce(
    pred: TrackSet, gt: TrackSet, sweep: AlphaSweep | None = None, max_side: int = 6
) -> HotaBreakdown:
    """Reference HOTA by exhaustive per-frame assignment enumeration.

    Intended for small instances only; refuses frames with more than
    ``max_side`` boxes on either side.
    """
    sweep = sweep or AlphaSweep()
    gt_frames = _tracks_by_frame(gt)
    pred_frames = _tracks_by_frame(pred)
    total_gt = sum(len(v) for v in gt_frames.values())
    total_pred = sum(len(v) for v in pred_frames.values())
    if total_gt == 0 and total_pred == 0:
        return _vacuous(sweep)

    frames = sorted(set(gt_frames) | set(pred_frames))
    for f in frames:
        if len(gt_frames.get(f, {})) > max_side or len(pred_frames.get(f, {})) > max_side:
            raise ValueError("instance too large for brute force")

    gt_total: dict[str, int] = {}
    pred_total: dict[str, int] = {}
    ious: dict[int, dict[tuple[str, str], float]] = {}
    for f in frames:
        ious[f] = {}
        for g, gb in gt_frames.get(f, {}).items():
            gt_total[g] = gt_total.get(g, 0) + 1
            for p, pb in pred_frames.get(f, {}).items():
                ious[f][(g, p)] = bbox_iou(gb, pb)
        for p in pred_frames.get(f, {}):
            pred_total[p] = pred_total.get(p, 0) + 1

    rows: list[AlphaScores] = []
    for alpha in sweep.thresholds:
        potential: dict[tuple[str, str], int] = {}
        for f in frames:
            for pair, v in ious[f].items():
                if v >= alpha:
                    potential[pair] = potential.get(pair, 0) + 1

        matched: dict[tuple[str, str], int] = {}
        for f in frames:
            weight: dict[tuple[str, str], float] = {}
            for (g, p), v in ious[f].items():
                if v < alpha:
                    continue
                n = potential[(g, p)]
                prior = n / (gt_total[g] + pred_total[p] - n)
                weight[(g, p)] = prior + IOU_TIEBREAK * v
            gs = sorted(gt_frames.get(f, {}))
            ps = sorted(pred_frames.get(f, {}))
            for pair in _enumerate_assignments(gs, ps, weight):
                matched[pair] = matched.get(pair, 0) + 1

        tp = sum(matched.values())
        fn = total_gt - tp
        fp = total_pred - tp
        deta = tp / (tp + fn + fp) if (tp + fn + fp) > 0 else 0.0
        if tp > 0:
            assa = (
                sum(
                    c * (c / (gt_total[g] + pred_total[p] - c))
                    for (g, p), c in matched.items()
                )
                / tp
            )
        else:
            assa = 0.0
        rows.append(AlphaScores(alpha, math.sqrt(deta * assa), deta, assa, tp, fp, fn))

    n = len(rows)
    return HotaBreakdown(
        tuple(rows),
        hota=sum(r.hota for r in rows) / n,
        deta=sum(r.deta for r in rows) / n,
        assa=sum(r.assa for r in rows) / n,
    )


# ---------------------------------------------------------------------------
# Dataset-level scoring


@dataclass(frozen=True)
class DatasetScore:
    per_question: tuple[tuple[str, HotaBreakdown], ...]  # sorted by question id
    mean_hota: float
    mean_deta: float
    mean_assa: float
    skipped: tuple[str, ...]

    def to_payload(self) -> dict:
        return {
            "mean": {"hota": self.mean_hota, "deta": self.mean_deta, "assa": self.mean_assa},
            "per_question": {q: b.to_payload() for q, b in self.per_question},
            "skipped": list(self.skipped),
        }


def score_dataset(
    preds: Mapping[str, TrackSet],
    gts: Mapping[str, TrackSet],
    sweep: AlphaSweep | None = None,
    video_by_question: Mapping[str, str] | None = None,
) -> DatasetScore:
    """Score every question; report per-question and mean breakdowns.

    Questions with ground truth but no prediction are scored against an
    empty TrackSet. Predictions without ground truth are skipped with a
    warning and excluded from the mean. By default the mean weighs every
    question equally; pass ``video_by_question`` to pool per video first
    (each video's questions are averaged, then videos are averaged).
    """
    sweep = sweep or AlphaSweep()
    skipped = tuple(sorted(q for q in preds if q not in gts))
    for q in skipped:
        logger.warning("prediction for %s has no ground truth; skipping", q)
    rows: list[tuple[str, HotaBreakdown]] = []
    for q in sorted(gts):
        pred = preds.get(q, TrackSet(q, ()))
        rows.append((q, compute_hota(pred, gts[q], sweep)))
    if not rows:
        raise ValueError("no questions to score")

    if video_by_question is None:
        n = len(rows)
        mean_hota = sum(b.hota for _, b in rows) / n
        mean_deta = sum(b.deta for _, b in rows) / n
        mean_assa = sum(b.assa for _, b in rows) / n
    else:
        by_video: dict[str, list[HotaBreakdown]] = {}
        for q, b in rows:
            by_video.setdefault(video_by_question[q], []).append(b)
        video_means = [
            (
                sum(b.hota for b in bs) / len(bs),
                sum(b.deta for b in bs) / len(bs),
                sum(b.assa for b in bs) / len(bs),
            )
            for _, bs in sorted(by_video.items())
        ]
        m = len(video_means)
        mean_hota = sum(v[0] for v in video_means) / m
        mean_deta = sum(v[1] for v in video_means) / m
        mean_assa = sum(v[2] for v in video_means) / m
    return DatasetScore(
        per_question=tuple(rows),
        mean_hota=mean_hota,
        mean_deta=mean_deta,
        mean_assa=mean_assa,
        skipped=skipped,
    )
