"""Command line front end.

Subcommands: run, eval, ablate, gen-scenarios, convert. Configuration
merges, in increasing precedence: built-in defaults, a TOML config file
(--config), GVQA_* environment variables, explicit flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .dataset import dump_dataset, load_dataset, convert_perception_test
from .geometry import TrackSet
from .hota import score_dataset
from .pipeline import (
    PipelineConfig,
    load_submission,
    make_ablation_suite,
    render_ablation,
    render_report,
    resolve_backends,
    run_ablation,
    run_batch,
)
from .simulate import PRESETS, ScenarioSuite, SimNoise, gen_scenario, load_scenarios, save_scenarios

logger = logging.getLogger(__name__)

_CONFIG_FLAGS = (
    "strategy",
    "reason_fps",
    "track_fps",
    "window_step",
    "reverse_threshold",
    "max_detections",
    "reasoner",
    "grounder",
    "tracker",
    "cache_dir",
    "output_dir",
    "trigger_frame_space",
    "half_extent",
    "workers",
    "limit",
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--strategy", choices=("sliding_window", "sliding_plus_reverse", "trigger_first"))
    p.add_argument("--reason-fps", type=float, dest="reason_fps")
    p.add_argument("--track-fps", type=float, dest="track_fps")
    p.add_argument("--window-step", type=int, dest="window_step")
    p.add_argument("--reverse-threshold", type=int, dest="reverse_threshold")
    p.add_argument("--max-detections", type=int, dest="max_detections")
    p.add_argument("--reasoner", help="sim or remote:<url>")
    p.add_argument("--grounder", help="sim or remote:<url>")
    p.add_argument("--tracker", help="sim or remote:<url>")
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--trigger-frame-space", choices=("sampled", "native"), dest="trigger_frame_space")
    p.add_argument("--half-extent", type=float, dest="half_extent")
    p.add_argument("--workers", type=int)
    p.add_argument("--limit", type=int)
    p.add_argument("--sparse", action="store_true", help="emit tracking-grid frames only")
    p.add_argument("--pixel-space", action="store_true", help="submission boxes in pixels")


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    cfg = cfg.apply_env()
    overrides = {
        name: getattr(args, name)
        for name in _CONFIG_FLAGS
        if getattr(args, name, None) is not None
    }
    if getattr(args, "sparse", False):
        overrides["dense"] = False
    if getattr(args, "pixel_space", False):
        overrides["submission_pixel_space"] = True
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    if args.scenarios:
        suite = ScenarioSuite(tuple(load_scenarios(args.scenarios)), SimNoise())
        videos, questions = suite.videos(), suite.questions()
    else:
        if not args.dataset:
            print("run needs --scenarios (sim) or --dataset (remote backends)", file=sys.stderr)
            return 2
        suite = None
        videos, questions = load_dataset(args.dataset)
    if cfg.cache_dir and Path(cfg.cache_dir).exists() and any(Path(cfg.cache_dir).iterdir()):
        if not args.resume:
            logger.warning("cache dir %s is non-empty; reusing it (pass --resume to silence)", cfg.cache_dir)
    backends = resolve_backends(cfg, suite)
    batch = run_batch(cfg, videos, questions, backends)
    print(f"submission: {batch.submission_path}")
    statuses = sorted(r.status for r in batch.results.values())
    print(f"questions: {len(batch.results)} ({', '.join(sorted(set(statuses)))})")
    if batch.score is not None:
        print(render_report(cfg, batch.score, batch.results))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    preds = load_submission(args.pred)
    _, questions = load_dataset(args.gt)
    gts = {
        q.question_id: TrackSet(q.question_id, q.gt_tracks)
        for q in questions
        if q.gt_tracks is not None
    }
    video_by_question = (
        {q.question_id: q.video_id for q in questions} if args.per_video else None
    )
    score = score_dataset(preds, gts, video_by_question=video_by_question)
    text = render_report(cfg, score)
    print(text)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "report.txt").write_text(text)
        (Path(args.out) / "report.json").write_text(
            json.dumps(score.to_payload(), indent=2, sort_keys=True)
        )
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    suite = make_ablation_suite(args.decoy, args.late, args.occluded, args.seed)
    result = run_ablation(suite, cfg)
    text = render_ablation(result, cfg)
    print(text)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "ablation.txt").write_text(text)
        (Path(args.out) / "ablation.json").write_text(
            json.dumps(
                {
                    "rows": [{"strategy": s, "mean_hota": m} for s, m in result.rows],
                    "decoy_means": result.decoy_means,
                },
                indent=2,
                sort_keys=True,
            )
        )
    return 0 if result.ordered() else 1


def _cmd_gen_scenarios(args: argparse.Namespace) -> int:
    scenarios = [gen_scenario(args.preset, args.seed + i) for i in range(args.count)]
    save_scenarios(args.out, scenarios)
    print(f"wrote {len(scenarios)} scenario(s) to {args.out}")
    if args.dataset_out:
        suite = ScenarioSuite(tuple(scenarios))
        dump_dataset(args.dataset_out, suite.videos(), suite.questions())
        print(f"wrote annotations to {args.dataset_out}")
    return 0


def _cmd_convert(args: argparse.Namespace) -> int:
    videos, questions = convert_perception_test(args.input)
    dump_dataset(args.out, videos, questions)
    print(f"converted {len(videos)} videos / {len(questions)} questions to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gvqa", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the pipeline over a dataset or scenario suite")
    _add_config_flags(p)
    p.add_argument("--scenarios", help="scenario suite file (sim backends)")
    p.add_argument("--dataset", help="annotation file (remote backends)")
    p.add_argument("--resume", action="store_true", help="reuse an existing cache dir to retry failures")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("eval", help="score a submission against ground truth")
    _add_config_flags(p)
    p.add_argument("--pred", required=True, help="submission file")
    p.add_argument("--gt", required=True, help="annotation file with gt_tracks")
    p.add_argument("--out", help="directory for report files")
    p.add_argument("--per-video", action="store_true", dest="per_video",
                   help="pool questions per video before averaging")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("ablate", help="compare the three search strategies on a simulated suite")
    _add_config_flags(p)
    p.add_argument("--decoy", type=int, default=50)
    p.add_argument("--late", type=int, default=25)
    p.add_argument("--occluded", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for ablation outputs")
    p.set_defaults(fn=_cmd_ablate)

    p = sub.add_parser("gen-scenarios", help="write a deterministic scenario suite")
    p.add_argument("--preset", choices=PRESETS, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--dataset-out", dest="dataset_out", help="also write the annotation file")
    p.set_defaults(fn=_cmd_gen_scenarios)

    p = sub.add_parser("convert", help="convert the official annotation layout to the canonical schema")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_convert)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
