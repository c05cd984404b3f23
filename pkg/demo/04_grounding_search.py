"""The three anchor-search strategies and why trigger-first wins on decoys.

A decoy object matching the target description appears before the real
target. Forward scanning is deceived; searching from the end is not; a
good trigger skips the search entirely.
"""

from gvqa_pipeline import SearchConfig, run_search
from gvqa_pipeline.simulate import SimGrounder, gen_scenario

scenario = gen_scenario("decoy_first", 7)
grounder = SimGrounder(scenario)
desc = scenario.target_descriptor
target = scenario.targets[0]
decoy = scenario.decoys[0]
trigger_native = scenario.scripted_reason.trigger_moment * 10

print("description:     ", desc)
print("decoy visible:   ", scenario.visible_span(decoy))
print("target visible:  ", scenario.visible_span(target), "(with a short gap near the end)")
print("trigger (native):", trigger_native)
print()

for strategy in ("sliding_window", "sliding_plus_reverse", "trigger_first"):
    cfg = SearchConfig(strategy=strategy)
    out = run_search(grounder, scenario.meta, desc, cfg, trigger_native=trigger_native)
    probes = [a.frame for a in out.attempts]
    side = "DECOY" if decoy.visible_at(out.anchor_frame) else "target"
    print(f"{strategy:22s} probes {probes} -> anchor {out.anchor_frame} ({side})")

print()
print("Probing every 30 frames from the start walks straight into the decoy;")
print("the reverse phase reaches the target's tail first; the trigger lands")
print("inside the target's main segment without inspecting anything else.")
