"""Frame spaces: native, reasoning rate (3 fps), tracking grid (10 fps).

The reasoner only ever sees the downsampled sequence, so its trigger index
must be mapped back to a native frame and then snapped onto the tracking
grid before anything downstream runs.
"""

from gvqa_pipeline import VideoMeta, sample_indices, sampled_to_native, snap_to_grid

meta = VideoMeta(video_id="demo", fps=30.0, frame_count=300)

reason_frames = sample_indices(meta, 3.0)
track_grid = sample_indices(meta, 10.0)
print(f"{meta.frame_count} native frames at {meta.fps:g} fps")
print(f"reasoning sees {len(reason_frames)} frames: {reason_frames[:6]} ...")
print(f"tracking grid has {len(track_grid)} frames: {track_grid[:6]} ...")

# The reasoner answered "frame 8" in its 3 fps world:
trigger_sampled = 8
native = sampled_to_native(meta, 3.0, trigger_sampled)
print(f"sampled trigger {trigger_sampled} -> native frame {native}")
print(f"native {native} snapped to the tracking grid -> {snap_to_grid(meta, native, 10.0)}")

# Fractional strides round half-up, and the round trip is exact:
odd = VideoMeta("odd", fps=25.0, frame_count=50)
indices = sample_indices(odd, 10.0)
print("25 fps at target 10 fps (stride 2.5):", indices[:8], "...")
assert all(sampled_to_native(odd, 10.0, k) == f for k, f in enumerate(indices))

# Ties snap downward:
tie = VideoMeta("tie", fps=20.0, frame_count=40)  # grid stride 2
print("native 3 on a stride-2 grid snaps down to", snap_to_grid(tie, 3, 10.0))
