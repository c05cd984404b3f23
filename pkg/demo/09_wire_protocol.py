"""Recording wire fixtures and replaying them through the sidecar.

Every backend exchange can be captured as a fixture file keyed by the
SHA-256 of the canonical request body. The TypeScript sidecar (sidecar/)
replays those fixtures over HTTP so the remote-backend client can be
exercised with zero model weights. This demo records fixtures and, when a
built sidecar is available, drives the full remote path.
"""

import dataclasses
import shutil
import subprocess
import tempfile
import time
from pathlib import Path

from gvqa_pipeline import Backends, PipelineConfig, resolve_backends, run_batch
from gvqa_pipeline.protocol import FixtureWriter, RecordingGrounder, RecordingReasoner, RecordingTracker
from gvqa_pipeline.simulate import ScenarioSuite, gen_scenario

suite = ScenarioSuite((gen_scenario("plain", 0),))
cfg = PipelineConfig()

fixtures = Path(tempfile.mkdtemp(prefix="gvqa-fixtures-"))
writer = FixtureWriter(fixtures)
recording = Backends(
    RecordingReasoner(suite.reasoner, writer),
    RecordingGrounder(suite.grounder, writer),
    RecordingTracker(suite.tracker, writer, track_fps=cfg.track_fps),
)
reference = run_batch(cfg, suite.videos(), suite.questions(), recording, write_outputs=False)
print(f"recorded {len(list(fixtures.glob('*.json')))} fixtures into {fixtures}")

entry = Path(__file__).resolve().parent.parent / "sidecar" / "dist" / "main.js"
if shutil.which("node") is None or not entry.exists():
    print("sidecar not built (run `npm install && npm run build` in sidecar/); stopping here")
    raise SystemExit(0)

proc = subprocess.Popen(
    ["node", str(entry), "--fixtures", str(fixtures), "--port", "0"],
    stdout=subprocess.PIPE,
    text=True,
)
try:
    url = proc.stdout.readline().strip().rsplit(" ", 1)[-1]
    print(f"sidecar up at {url}")
    time.sleep(0.1)
    remote_cfg = dataclasses.replace(
        cfg, reasoner=f"remote:{url}", grounder=f"remote:{url}", tracker=f"remote:{url}"
    )
    remote = run_batch(remote_cfg, suite.videos(), suite.questions(), resolve_backends(remote_cfg), write_outputs=False)
    qid = suite.questions()[0].question_id
    print("remote TrackSet equals the simulated one:", remote.track_sets[qid] == reference.track_sets[qid])
finally:
    proc.terminate()
    proc.wait()
