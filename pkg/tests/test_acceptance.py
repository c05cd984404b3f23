"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one `[ACCEPTANCE] <criterion>: PASS|FAIL` line (visible
with `pytest -s tests/test_acceptance.py`).
"""

import dataclasses
import math
import random
import time
from contextlib import contextmanager

import pytest

from gvqa_pipeline.cortex import (
    DEFAULT_EXEMPLARS,
    parse_cortex_response,
    render_exemplar_response,
)
from gvqa_pipeline.dataset import VideoMeta, sample_indices, sampled_to_native
from gvqa_pipeline.geometry import BBox, PointAnno, Tracklet, TrackSet
from gvqa_pipeline.hota import compute_hota, compute_hota_bruteforce
from gvqa_pipeline.pipeline import (
    Backends,
    PipelineConfig,
    make_ablation_suite,
    run_ablation,
    run_batch,
)
from gvqa_pipeline.search import SearchConfig, run_search
from gvqa_pipeline.simulate import ScenarioSuite, SimGrounder, gen_scenario
from gvqa_pipeline.tracking import snap_to_grid

from helpers import (
    CountingGrounder,
    CountingReasoner,
    CountingTracker,
    ScriptedGrounder,
    perfect_clone,
    random_instance,
)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\n[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"\n[ACCEPTANCE] {name}: PASS")


POINT = PointAnno(0.5, 0.5)
META_300 = VideoMeta("v", 30.0, 300)


def test_hota_oracle_equivalence():
    with criterion("HOTA oracle equivalence (200 instances, 1e-9, <60s)"):
        rng = random.Random(777)
        started = time.perf_counter()
        checked = 0
        for _ in range(200):
            pred, gt = random_instance(rng, max_tracks=3, max_frames=6)
            fast = compute_hota(pred, gt)
            slow = compute_hota_bruteforce(pred, gt)
            assert abs(fast.hota - slow.hota) <= 1e-9
            assert abs(fast.deta - slow.deta) <= 1e-9
            assert abs(fast.assa - slow.assa) <= 1e-9
            for a, b in zip(fast.per_alpha, slow.per_alpha):
                assert (a.tp, a.fp, a.fn) == (b.tp, b.fp, b.fn)
                assert abs(a.hota - b.hota) <= 1e-9
            checked += 1
        elapsed = time.perf_counter() - started
        assert checked == 200
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_hota_identities():
    with criterion("HOTA identities (perfect=1, empty=0, sqrt to 1e-12, relabel x50)"):
        box = {f: BBox(0.2, 0.2, 0.4, 0.4) for f in range(6)}
        gt = TrackSet("q", (Tracklet("g", box),))
        assert compute_hota(perfect_clone(gt), gt).hota == 1.0
        assert compute_hota(TrackSet("q", ()), gt).hota == 0.0

        rng = random.Random(31337)
        for _ in range(50):
            pred, gt_r = random_instance(rng)
            breakdown = compute_hota(pred, gt_r)
            for s in breakdown.per_alpha:
                assert abs(s.hota - math.sqrt(s.deta * s.assa)) <= 1e-12
            # relabel both sides with fresh ids
            def relabel(ts, prefix):
                return TrackSet(
                    ts.question_id,
                    tuple(
                        Tracklet(f"{prefix}-{i}-{rng.randrange(10**6)}", dict(t.boxes))
                        for i, t in enumerate(ts.tracklets)
                    ),
                )

            renamed = compute_hota(relabel(pred, "p"), relabel(gt_r, "g"))
            assert abs(renamed.hota - breakdown.hota) <= 1e-12
            assert abs(renamed.deta - breakdown.deta) <= 1e-12
            assert abs(renamed.assa - breakdown.assa) <= 1e-12


def test_ablation_ordering():
    with criterion(
        "Ablation ordering (100 scenarios: trigger > sliding+reverse > sliding, strict on decoys, <2min)"
    ):
        started = time.perf_counter()
        suite = make_ablation_suite(n_decoy=50, n_late=25, n_occluded=25, base_seed=0)
        assert len(suite.scenarios) == 100
        result = run_ablation(suite)
        means = dict(result.rows)
        assert means["trigger_first"] > means["sliding_plus_reverse"] > means["sliding_window"], means
        decoy = result.decoy_means
        assert decoy["trigger_first"] > decoy["sliding_plus_reverse"] > decoy["sliding_window"], decoy
        elapsed = time.perf_counter() - started
        assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_decoy_determinism():
    with criterion("Decoy determinism (anchor sides fixed for every seed, zero noise)"):
        for seed in range(50):
            scenario = gen_scenario("decoy_first", seed)
            grounder = SimGrounder(scenario)
            desc = scenario.target_descriptor
            decoy_first_f, decoy_last_f = scenario.visible_span(scenario.decoys[0])
            target = scenario.targets[0]
            trigger_native = scenario.scripted_reason.trigger_moment * 10

            sliding = run_search(grounder, scenario.meta, desc, SearchConfig(strategy="sliding_window"))
            assert sliding.found
            assert decoy_first_f <= sliding.anchor_frame <= decoy_last_f, seed

            reverse = run_search(grounder, scenario.meta, desc, SearchConfig(strategy="sliding_plus_reverse"))
            assert reverse.found
            assert target.visible_at(reverse.anchor_frame), seed

            trigger = run_search(
                grounder, scenario.meta, desc,
                SearchConfig(strategy="trigger_first"), trigger_native=trigger_native,
            )
            assert trigger.found
            assert trigger.anchor_frame == trigger_native
            assert target.visible_at(trigger.anchor_frame), seed


def test_search_procedure_exactness():
    with criterion("Search-procedure exactness (hand-computed probe sequences, >7 rule)"):
        cfg = SearchConfig()

        def probes(outcome):
            return [a.frame for a in outcome.attempts]

        # sliding window: full forward scan, step 30
        out = run_search(ScriptedGrounder({}), META_300, "d", dataclasses.replace(cfg, strategy="sliding_window"))
        assert probes(out) == [0, 30, 60, 90, 120, 150, 180, 210, 240, 270]
        assert not out.found

        out = run_search(
            ScriptedGrounder({60: [POINT]}), META_300, "d", dataclasses.replace(cfg, strategy="sliding_window")
        )
        assert probes(out) == [0, 30, 60] and out.anchor_frame == 60

        # sliding+reverse: forward probes at most the 100-frame threshold,
        # then backward from the last frame at the same stride
        out = run_search(ScriptedGrounder({}), META_300, "d", dataclasses.replace(cfg, strategy="sliding_plus_reverse"))
        assert probes(out) == [0, 30, 60, 90, 299, 269, 239, 209, 179, 149, 119, 89, 59, 29]

        table = {f: [POINT] for f in range(150, 180)}
        out = run_search(
            ScriptedGrounder(table), META_300, "d", dataclasses.replace(cfg, strategy="sliding_plus_reverse")
        )
        assert probes(out) == [0, 30, 60, 90, 299, 269, 239, 209, 179]
        assert out.anchor_frame == 179

        # trigger first: one probe on success; full fallback chain on failure
        out = run_search(
            ScriptedGrounder({240: [POINT]}), META_300, "d", cfg, trigger_native=240
        )
        assert probes(out) == [240] and out.anchor_frame == 240

        out = run_search(ScriptedGrounder({}), META_300, "d", cfg, trigger_native=240)
        assert probes(out) == [240, 0, 30, 60, 90, 299, 269, 239, 209, 179, 149, 119, 89, 59, 29]

        # >7 detections in a frame is a failure that skips forward
        g = ScriptedGrounder({0: 9, 30: 9, 60: 9, 90: 9, 120: 8, 150: [POINT]})
        out = run_search(g, META_300, "d", dataclasses.replace(cfg, strategy="sliding_window"))
        assert probes(out) == [0, 30, 60, 90, 120, 150]
        assert [a.result for a in out.attempts] == ["too_many"] * 5 + ["success"]
        assert out.anchor_frame == 150


def test_frame_space_round_trips():
    with criterion("Frame-space round-trips (fps 24/25/30/60 x target 3/10; snap ties)"):
        rng = random.Random(555)
        for fps in (24.0, 25.0, 30.0, 60.0):
            for target in (3.0, 10.0):
                for _ in range(20):
                    frame_count = rng.randint(1, 1500)
                    meta = VideoMeta("v", fps, frame_count)
                    indices = sample_indices(meta, target)
                    assert indices[0] == 0
                    assert all(b > a for a, b in zip(indices, indices[1:]))
                    for k, native in enumerate(indices):
                        assert sampled_to_native(meta, target, k) == native
                # snap tie rule at every residue
                meta = VideoMeta("v", fps, int(fps * 3))
                grid = sample_indices(meta, target)
                for native in range(meta.frame_count):
                    expected = min(grid, key=lambda g: (abs(native - g), g))
                    assert snap_to_grid(meta, native, target) == expected


def test_cortex_parser_fixtures():
    with criterion("CORTEX parser fixtures (3 exemplars exact, 10 malformed errors)"):
        expected = {
            "the tilted blue book": 25,
            "the magnetic plastic letters": 48,
            "the blue cup on the right": 16,
        }
        assert {e.answer: e.trigger_moment for e in DEFAULT_EXEMPLARS} == expected
        for ex in DEFAULT_EXEMPLARS:
            parsed = parse_cortex_response(render_exemplar_response(ex))
            assert parsed.answer == ex.answer
            assert parsed.reasoning == ex.reasoning
            assert parsed.trigger_moment == ex.trigger_moment
        ocr = parse_cortex_response(render_exemplar_response(DEFAULT_EXEMPLARS[1]))
        assert ocr.is_ocr_case

        malformed = [
            ("", "missing answer"),
            ("   \n\t", "missing answer"),
            ("Reasoning: r\nTrigger_moment: 3", "missing answer"),
            ("Answer:\nReasoning: r\nTrigger_moment: 3", "missing answer"),
            ("Answer: a\nTrigger_moment: 3", "missing reasoning"),
            ("Answer: a\nReasoning: r", "missing trigger_moment"),
            ("Answer: a\nReasoning: r\nTrigger_moment:", "missing trigger_moment"),
            ("just some prose without any labels", "missing answer"),
            ("Answer: a\nReasoning: r\nTrigger_moment: later", "bad trigger"),
            ("Answer: a\nReasoning: r\nTrigger_moment: -2", "bad trigger"),
        ]
        assert len(malformed) == 10
        for raw, message in malformed:
            with pytest.raises(ValueError, match=message):
                parse_cortex_response(raw)


def test_pipeline_determinism_and_cache_soundness(tmp_path):
    with criterion("Pipeline determinism & cache soundness (byte-identical, zero warm calls)"):
        scenarios = tuple(
            gen_scenario(p, s)
            for p, s in [("plain", 0), ("decoy_first", 0), ("late_appearance", 0), ("occluded_trigger", 0)]
        )
        suite = ScenarioSuite(scenarios)

        # two cold runs, separate caches: identical submission bytes
        blobs = []
        for tag in ("a", "b"):
            cfg = dataclasses.replace(
                PipelineConfig(),
                cache_dir=str(tmp_path / f"cache-{tag}"),
                output_dir=str(tmp_path / f"out-{tag}"),
            )
            backends = Backends(suite.reasoner, suite.grounder, suite.tracker)
            batch = run_batch(cfg, suite.videos(), suite.questions(), backends)
            blobs.append(batch.submission_path.read_bytes())
        assert blobs[0] == blobs[1]

        # warm rerun: zero backend calls, identical bytes again
        reasoner = CountingReasoner(suite.reasoner)
        grounder = CountingGrounder(suite.grounder)
        tracker = CountingTracker(suite.tracker)
        cfg = dataclasses.replace(
            PipelineConfig(),
            cache_dir=str(tmp_path / "cache-a"),
            output_dir=str(tmp_path / "out-warm"),
        )
        batch = run_batch(cfg, suite.videos(), suite.questions(), Backends(reasoner, grounder, tracker))
        assert (reasoner.calls, grounder.calls, tracker.calls) == (0, 0, 0)
        assert batch.submission_path.read_bytes() == blobs[0]
