import itertools
import math
import random

import pytest

from gvqa_pipeline.geometry import BBox, Tracklet, TrackSet, bbox_iou
from gvqa_pipeline.hota import (
    AlphaSweep,
    compute_hota,
    compute_hota_bruteforce,
    match_frame,
    score_dataset,
)

from helpers import perfect_clone, random_instance

A = BBox(0.1, 0.1, 0.3, 0.3)
B = BBox(0.6, 0.6, 0.8, 0.8)


def track(oid, frame_boxes):
    return Tracklet(oid, dict(frame_boxes))


class TestAlphaSweep:
    def test_default_is_19_step_sweep(self):
        sweep = AlphaSweep()
        assert len(sweep.thresholds) == 19
        assert sweep.thresholds[0] == pytest.approx(0.05)
        assert sweep.thresholds[-1] == pytest.approx(0.95)

    def test_rejects_unordered(self):
        with pytest.raises(ValueError):
            AlphaSweep((0.5, 0.3))
        with pytest.raises(ValueError):
            AlphaSweep((0.0, 0.5))


class TestMatchFrame:
    def test_identical_single_box(self):
        r = match_frame({"p": A}, {"g": A}, 0.5)
        assert r.matches == (("p", "g"),)
        assert (r.tp, r.fp, r.fn) == (1, 0, 0)

    def test_disjoint_boxes(self):
        r = match_frame({"p": A}, {"g": B}, 0.5)
        assert r.matches == ()
        assert (r.tp, r.fp, r.fn) == (0, 1, 1)

    def test_crossed_ious_pick_better_diagonal(self):
        gts = {"g1": BBox(0.0, 0.0, 0.2, 0.2), "g2": BBox(0.05, 0.0, 0.25, 0.2)}
        preds = {"p1": BBox(0.01, 0.0, 0.21, 0.2), "p2": BBox(0.06, 0.0, 0.26, 0.2)}
        # independent check: enumerate both complete pairings by IoU sum
        pairings = [
            [("p1", "g1"), ("p2", "g2")],
            [("p1", "g2"), ("p2", "g1")],
        ]
        sums = [sum(bbox_iou(gts[g], preds[p]) for p, g in pairing) for pairing in pairings]
        expected = pairings[sums.index(max(sums))]
        r = match_frame(preds, gts, 0.5)
        assert sorted(r.matches) == sorted(expected)
        assert (r.tp, r.fp, r.fn) == (2, 0, 0)

    def test_assoc_prior_overrides_iou(self):
        # Both predictions overlap g; the prior forces the lower-IoU one.
        g = BBox(0.1, 0.1, 0.5, 0.5)
        p_close = BBox(0.12, 0.1, 0.52, 0.5)
        p_far = BBox(0.2, 0.1, 0.6, 0.5)
        preds = {"close": p_close, "far": p_far}
        prior = lambda p, _g: 1.0 if p == "far" else 0.0
        r = match_frame(preds, {"g": g}, 0.05, assoc_prior=prior)
        assert r.matches == (("far", "g"),)

    def test_threshold_gates_matches(self):
        shifted = BBox(0.2, 0.1, 0.4, 0.3)  # IoU 1/3 with A
        assert match_frame({"p": shifted}, {"g": A}, 0.3).tp == 1
        assert match_frame({"p": shifted}, {"g": A}, 0.5).tp == 0

    def test_empty_sides(self):
        assert match_frame({}, {"g": A}, 0.5).fn == 1
        assert match_frame({"p": A}, {}, 0.5).fp == 1
        r = match_frame({}, {}, 0.5)
        assert (r.tp, r.fp, r.fn) == (0, 0, 0)


class TestComputeHotaIdentities:
    def test_perfect_prediction_scores_one(self):
        gt = TrackSet("q", (track("g1", {f: A for f in range(5)}), track("g2", {f: B for f in range(5)})))
        pred = perfect_clone(gt)
        b = compute_hota(pred, gt)
        assert b.hota == 1.0
        assert all(s.hota == 1.0 and s.deta == 1.0 and s.assa == 1.0 for s in b.per_alpha)

    def test_empty_pred_nonempty_gt_scores_zero(self):
        gt = TrackSet("q", (track("g1", {0: A}),))
        b = compute_hota(TrackSet("q", ()), gt)
        assert b.hota == 0.0

    def test_nonempty_pred_empty_gt_scores_zero(self):
        pred = TrackSet("q", (track("p1", {0: A}),))
        assert compute_hota(pred, TrackSet("q", ())).hota == 0.0

    def test_both_empty_vacuously_perfect(self):
        b = compute_hota(TrackSet("q", ()), TrackSet("q", ()))
        assert b.hota == 1.0 and b.deta == 1.0 and b.assa == 1.0

    def test_id_swap_matches_oracle_value(self):
        gt = TrackSet("q", (track("g1", {f: A for f in range(4)}), track("g2", {f: B for f in range(4)})))
        pred = TrackSet(
            "q",
            (
                track("p1", {0: A, 1: A, 2: B, 3: B}),
                track("p2", {0: B, 1: B, 2: A, 3: A}),
            ),
        )
        b = compute_hota(pred, gt)
        # frozen from the exhaustive oracle: DetA = 1, AssA = 1/3 at every alpha
        assert b.hota == pytest.approx(0.577350269189626, abs=1e-12)
        assert b.deta == pytest.approx(1.0, abs=1e-12)
        assert b.assa == pytest.approx(1 / 3, abs=1e-12)

    def test_sqrt_identity_everywhere(self):
        rng = random.Random(7)
        for _ in range(25):
            pred, gt = random_instance(rng)
            for s in compute_hota(pred, gt).per_alpha:
                assert abs(s.hota - math.sqrt(s.deta * s.assa)) <= 1e-12


class TestOracleEquivalence:
    def test_random_small_instances(self):
        rng = random.Random(12345)
        for i in range(60):
            pred, gt = random_instance(rng)
            fast = compute_hota(pred, gt)
            slow = compute_hota_bruteforce(pred, gt)
            for a, b in zip(fast.per_alpha, slow.per_alpha):
                assert (a.tp, a.fp, a.fn) == (b.tp, b.fp, b.fn), f"instance {i} alpha {a.alpha}"
                assert abs(a.hota - b.hota) <= 1e-9, f"instance {i} alpha {a.alpha}"
                assert abs(a.assa - b.assa) <= 1e-9
            assert abs(fast.hota - slow.hota) <= 1e-9

    def test_oracle_rejects_large_frames(self):
        boxes = {0: A}
        tracks = tuple(track(f"g{i}", boxes) for i in range(7))
        big = TrackSet("q", tracks)
        with pytest.raises(ValueError, match="too large"):
            compute_hota_bruteforce(big, big)


class TestInvariants:
    def test_id_relabel_invariance(self):
        rng = random.Random(99)
        for _ in range(20):
            pred, gt = random_instance(rng)
            base = compute_hota(pred, gt)
            mapping = {}

            def relabel(ts, prefix):
                out = []
                for t in ts.tracklets:
                    new = mapping.setdefault(t.object_id, f"{prefix}{rng.randrange(10**6)}-{t.object_id}")
                    out.append(Tracklet(new, dict(t.boxes)))
                return TrackSet(ts.question_id, tuple(out))

            renamed = compute_hota(relabel(pred, "x"), relabel(gt, "y"))
            assert renamed.hota == pytest.approx(base.hota, abs=1e-12)
            assert renamed.assa == pytest.approx(base.assa, abs=1e-12)

    def test_tp_monotone_nonincreasing_in_alpha(self):
        rng = random.Random(4242)
        for _ in range(30):
            pred, gt = random_instance(rng)
            rows = compute_hota(pred, gt).per_alpha
            tps = [r.tp for r in rows]
            assert all(a >= b for a, b in zip(tps, tps[1:]))

    def test_pure_fp_tracklet_never_helps(self):
        rng = random.Random(2024)
        for _ in range(15):
            pred, gt = random_instance(rng)
            # squeeze everything into the left half, then add a right-half FP
            def squeeze(ts):
                return TrackSet(
                    ts.question_id,
                    tuple(
                        Tracklet(
                            t.object_id,
                            {f: BBox(b.x1 * 0.45, b.y1, b.x2 * 0.45 + 1e-4, b.y2) for f, b in t.boxes.items()},
                        )
                        for t in ts.tracklets
                    ),
                )

            pred_s, gt_s = squeeze(pred), squeeze(gt)
            frames = sorted(gt_s.frame_universe() | pred_s.frame_universe()) or [0]
            fp_track = Tracklet("fp", {f: BBox(0.6, 0.6, 0.9, 0.9) for f in frames})
            pred_fp = TrackSet(pred_s.question_id, pred_s.tracklets + (fp_track,))
            assert compute_hota(pred_fp, gt_s).hota <= compute_hota(pred_s, gt_s).hota + 1e-12


class TestScoreDataset:
    def make_gt(self, qid):
        return TrackSet(qid, (track("g", {f: A for f in range(4)}),))

    def test_all_perfect(self):
        gts = {q: self.make_gt(q) for q in ("q1", "q2")}
        preds = {q: perfect_clone(ts) for q, ts in gts.items()}
        score = score_dataset(preds, gts)
        assert score.mean_hota == 1.0

    def test_half_perfect_half_empty(self):
        gts = {q: self.make_gt(q) for q in ("q1", "q2")}
        preds = {"q1": perfect_clone(gts["q1"]), "q2": TrackSet("q2", ())}
        score = score_dataset(preds, gts)
        per_q = dict(score.per_question)
        assert per_q["q1"].hota == 1.0
        assert per_q["q2"].hota == 0.0
        assert score.mean_hota == pytest.approx(0.5)

    def test_missing_prediction_scored_as_empty(self):
        gts = {"q1": self.make_gt("q1")}
        score = score_dataset({}, gts)
        assert dict(score.per_question)["q1"].hota == 0.0

    def test_prediction_without_gt_skipped(self):
        gts = {"q1": self.make_gt("q1")}
        preds = {"q1": perfect_clone(gts["q1"]), "phantom": TrackSet("phantom", ())}
        score = score_dataset(preds, gts)
        assert score.skipped == ("phantom",)
        assert score.mean_hota == 1.0

    def test_deterministic_ordering(self):
        gts = {f"q{i}": self.make_gt(f"q{i}") for i in range(5)}
        score = score_dataset({}, gts)
        assert [q for q, _ in score.per_question] == sorted(gts)

    def test_per_video_pooling(self):
        # video A has two questions (one perfect, one empty), video B one
        # perfect question: per-question mean 2/3, per-video mean 3/4.
        gts = {q: self.make_gt(q) for q in ("a1", "a2", "b1")}
        preds = {
            "a1": perfect_clone(gts["a1"]),
            "a2": TrackSet("a2", ()),
            "b1": perfect_clone(gts["b1"]),
        }
        flat = score_dataset(preds, gts)
        assert flat.mean_hota == pytest.approx(2 / 3)
        pooled = score_dataset(
            preds, gts, video_by_question={"a1": "A", "a2": "A", "b1": "B"}
        )
        assert pooled.mean_hota == pytest.approx(0.75)
