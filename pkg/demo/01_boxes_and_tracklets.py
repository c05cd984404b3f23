"""Core value types: boxes, points, tracklets.

Everything in the engine speaks normalized coordinates: the frame is the
unit square regardless of video resolution. Run this file directly; it
prints a small tour.
"""

from gvqa_pipeline import BBox, PointAnno, Tracklet, bbox_iou, point_to_seed_box, tracklet_coverage

# Boxes are corner pairs (x1, y1, x2, y2), validated on construction.
a = BBox(0.0, 0.0, 1.0, 1.0)
b = BBox(0.5, 0.0, 1.0, 1.0)
print("full-frame vs right-half IoU:", bbox_iou(a, b))  # 0.5: inter 0.5 / union 1.0
print("self IoU is exactly 1.0:", bbox_iou(a, a))

# Grounding backends answer with points; trackers that need a box seed get
# a small square around the point, clamped to the frame.
center = PointAnno(0.5, 0.5)
corner = PointAnno(0.0, 0.0)
print("seed box at the center:", point_to_seed_box(center, 0.1).as_list())
print("seed box clamped at a corner:", point_to_seed_box(corner, 0.1).as_list())

# A tracklet is one object's boxes keyed by frame index under a stable id.
track = Tracklet("cup-1", {0: a, 1: b})
track = track.with_box(1, a)  # inserting at an existing frame replaces
first, last, count = tracklet_coverage(track)
print(f"tracklet covers frames {first}..{last} with {count} annotations")
