"""HOTA scoring: detection and association, swept over IoU thresholds.

The optimized implementation is pinned by a brute-force oracle that
enumerates every per-frame assignment on small instances.
"""

import random

from gvqa_pipeline import BBox, Tracklet, TrackSet, compute_hota, compute_hota_bruteforce

A = BBox(0.1, 0.1, 0.3, 0.3)
B = BBox(0.6, 0.6, 0.8, 0.8)

gt = TrackSet("q", (
    Tracklet("g1", {f: A for f in range(4)}),
    Tracklet("g2", {f: B for f in range(4)}),
))

perfect = TrackSet("q", (
    Tracklet("p1", {f: A for f in range(4)}),
    Tracklet("p2", {f: B for f in range(4)}),
))
print("perfect prediction:     HOTA =", compute_hota(perfect, gt).hota)

# Same boxes, but identities swap halfway: detection stays perfect while
# association collapses to 1/3, so HOTA = sqrt(1 * 1/3).
swapped = TrackSet("q", (
    Tracklet("p1", {0: A, 1: A, 2: B, 3: B}),
    Tracklet("p2", {0: B, 1: B, 2: A, 3: A}),
))
b = compute_hota(swapped, gt)
print(f"mid-video ID swap:      HOTA = {b.hota:.6f} (DetA {b.deta:.3f}, AssA {b.assa:.3f})")

print("empty prediction:       HOTA =", compute_hota(TrackSet("q", ()), gt).hota)
print("empty gt + empty pred:  HOTA =", compute_hota(TrackSet("q", ()), TrackSet("q", ())).hota)

# The oracle recomputes the same quantity by exhaustive enumeration:
rng = random.Random(0)
shift = lambda box, d: BBox(box.x1 + d, box.y1, box.x2 + d, box.y2)
noisy = TrackSet("q", (
    Tracklet("p1", {f: shift(A, 0.02 * f) for f in range(4)}),
    Tracklet("p2", {f: shift(B, 0.015 * f) for f in range(4)}),
))
fast = compute_hota(noisy, gt)
slow = compute_hota_bruteforce(noisy, gt)
print(f"drifting prediction:    HOTA = {fast.hota:.12f}")
print(f"brute-force oracle:     HOTA = {slow.hota:.12f} (difference {abs(fast.hota - slow.hota):.1e})")
