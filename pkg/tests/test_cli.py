import json

import pytest

from gvqa_pipeline.cli import main
from gvqa_pipeline.dataset import dump_dataset, load_dataset
from gvqa_pipeline.simulate import ScenarioSuite, gen_scenario, save_scenarios


def test_gen_scenarios_then_run_then_eval(tmp_path, capsys):
    scen = tmp_path / "suite.json"
    data = tmp_path / "data.json"
    rc = main([
        "gen-scenarios", "--preset", "plain", "--count", "2", "--seed", "0",
        "--out", str(scen), "--dataset-out", str(data),
    ])
    assert rc == 0
    videos, questions = load_dataset(data)
    assert len(videos) == 2 and len(questions) == 2

    out = tmp_path / "out"
    rc = main([
        "run", "--scenarios", str(scen),
        "--output-dir", str(out), "--cache-dir", str(tmp_path / "cache"),
    ])
    assert rc == 0
    submission = out / "submission.json"
    assert submission.exists()
    assert (out / "report.txt").exists()

    rc = main(["eval", "--pred", str(submission), "--gt", str(data), "--out", str(tmp_path / "eval")])
    assert rc == 0
    report = json.loads((tmp_path / "eval" / "report.json").read_text())
    assert report["mean"]["hota"] == 1.0


def test_run_rejects_missing_inputs(tmp_path):
    assert main(["run", "--output-dir", str(tmp_path)]) == 2


def test_ablate_small(tmp_path, capsys):
    rc = main([
        "ablate", "--decoy", "3", "--late", "1", "--occluded", "1",
        "--seed", "0", "--out", str(tmp_path),
    ])
    assert rc == 0
    text = (tmp_path / "ablation.txt").read_text()
    lines = [l for l in text.splitlines() if l and l.split()[0] in
             ("sliding_window", "sliding_plus_reverse", "trigger_first")]
    assert [l.split()[0] for l in lines] == ["sliding_window", "sliding_plus_reverse", "trigger_first"]
    means = [float(l.split()[1]) for l in lines]
    assert means[0] < means[1] < means[2]
    data = json.loads((tmp_path / "ablation.json").read_text())
    assert [r["strategy"] for r in data["rows"]] == [
        "sliding_window", "sliding_plus_reverse", "trigger_first"
    ]


def test_convert(tmp_path):
    official = {
        "vid1": {
            "metadata": {"frame_rate": 30.0, "num_frames": 60},
            "grounded_question_answering": [
                {"id": 0, "question": "Track the cup.", "answers": []}
            ],
        }
    }
    src = tmp_path / "official.json"
    src.write_text(json.dumps(official))
    out = tmp_path / "canonical.json"
    assert main(["convert", "--input", str(src), "--out", str(out)]) == 0
    videos, questions = load_dataset(out)
    assert videos[0].video_id == "vid1"
    assert questions[0].text == "Track the cup."


def test_strategy_flag_changes_outcome(tmp_path):
    scen = tmp_path / "suite.json"
    save_scenarios(scen, [gen_scenario("decoy_first", 0)])
    for strategy, expected in (("sliding_window", 0.0), ("trigger_first", None)):
        out = tmp_path / strategy
        rc = main([
            "run", "--scenarios", str(scen), "--strategy", strategy,
            "--output-dir", str(out),
        ])
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        hota = report["mean"]["hota"]
        if expected is None:
            assert hota > 0.5
        else:
            assert hota == expected
