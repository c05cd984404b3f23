"""From one anchored point to a full-video track.

The tracker propagates bidirectionally over the 10 fps grid; densifying
spreads each grid box across its native-rate slot with a zero-order hold.
"""

from gvqa_pipeline import TrackRequest, densify_track, snap_to_grid, track_bidirectional
from gvqa_pipeline.simulate import SimTracker, gen_scenario

scenario = gen_scenario("plain", 1)
meta = scenario.meta
target = scenario.targets[0]

anchor = snap_to_grid(meta, 151, 10.0)  # grounding anchored near mid-video
seed = target.center_at(anchor)
print(f"anchor snapped to grid: 151 -> {anchor}")

tracker = SimTracker(scenario)
tracklets, failures = track_bidirectional(
    tracker, meta, TrackRequest(anchor_frame=anchor, seeds=(("obj-0", seed),))
)
sparse = tracklets[0]
first, last, count = sparse.frames()[0], sparse.frames()[-1], len(sparse)
print(f"sparse track: {count} grid frames covering {first}..{last} (anchor appears once)")

dense = densify_track(sparse, meta, 10.0)
print(f"dense track:  {len(dense)} native frames covering {dense.frames()[0]}..{dense.frames()[-1]}")

# The hold never extrapolates past the tracked span:
from gvqa_pipeline import Tracklet  # noqa: E402

single = Tracklet("lonely", {60: sparse.boxes[anchor]})
print("a single grid box densifies to its own slot only:", densify_track(single, meta, 10.0).frames())
