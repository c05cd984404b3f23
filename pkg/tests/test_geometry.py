import pytest
from hypothesis import given, strategies as st

from gvqa_pipeline.geometry import (
    BBox,
    PointAnno,
    Tracklet,
    TrackSet,
    bbox_iou,
    point_to_seed_box,
    tracklet_coverage,
)


def boxes(min_size=1e-3):
    def build(x1, y1, w, h):
        return BBox(x1, y1, min(1.0, x1 + w), min(1.0, y1 + h))

    return st.builds(
        build,
        st.floats(0, 0.9),
        st.floats(0, 0.9),
        st.floats(min_size, 1.0),
        st.floats(min_size, 1.0),
    )


class TestBBox:
    def test_rejects_inverted_corners(self):
        with pytest.raises(ValueError):
            BBox(0.5, 0.1, 0.4, 0.2)
        with pytest.raises(ValueError):
            BBox(0.0, 0.0, 1.0, 1.2)
        with pytest.raises(ValueError):
            BBox(0.2, 0.2, 0.2, 0.4)

    def test_area_positive(self):
        assert BBox(0, 0, 0.5, 0.25).area == pytest.approx(0.125)


class TestIou:
    def test_identity(self):
        b = BBox(0, 0, 1, 1)
        assert bbox_iou(b, b) == 1.0

    def test_disjoint(self):
        assert bbox_iou(BBox(0, 0, 0.5, 0.5), BBox(0.5, 0.5, 1, 1)) == 0.0

    def test_half_overlap(self):
        # intersection 0.5, union 1.0
        assert bbox_iou(BBox(0, 0, 1, 1), BBox(0.5, 0, 1, 1)) == pytest.approx(0.5)

    @given(boxes(), boxes())
    def test_symmetry_and_bounds(self, a, b):
        assert bbox_iou(a, b) == bbox_iou(b, a)
        assert 0.0 <= bbox_iou(a, b) <= 1.0

    @given(boxes())
    def test_self_iou_is_one(self, a):
        assert bbox_iou(a, a) == 1.0

    def test_strictly_below_one_for_different_boxes(self):
        a = BBox(0.1, 0.1, 0.6, 0.6)
        b = BBox(0.15, 0.1, 0.6, 0.6)
        assert bbox_iou(a, b) < 1.0


class TestSeedBox:
    def test_centered(self):
        assert point_to_seed_box(PointAnno(0.5, 0.5), 0.1) == BBox(0.4, 0.4, 0.6, 0.6)

    def test_clamped_at_corner(self):
        assert point_to_seed_box(PointAnno(0.0, 0.0), 0.1) == BBox(0.0, 0.0, 0.1, 0.1)

    def test_clamped_one_side(self):
        b = point_to_seed_box(PointAnno(0.95, 0.5), 0.1)
        assert b == BBox(0.85, 0.4, 1.0, 0.6)

    def test_degenerate_raises(self):
        # Rounding swallows a tiny extent at the far edge.
        with pytest.raises(ValueError, match="degenerate seed box"):
            point_to_seed_box(PointAnno(1.0, 0.5), 5e-324)

    def test_nonpositive_extent_rejected(self):
        with pytest.raises(ValueError):
            point_to_seed_box(PointAnno(0.5, 0.5), 0.0)

    @given(
        st.floats(0, 1),
        st.floats(0, 1),
        st.floats(1e-3, 0.5),
    )
    def test_containment(self, x, y, extent):
        p = PointAnno(x, y)
        assert point_to_seed_box(p, extent).contains(p)


class TestTracklet:
    def test_coverage(self):
        t = Tracklet("a", {f: BBox(0, 0, 0.1, 0.1) for f in (0, 1, 2)})
        assert tracklet_coverage(t) == (0, 2, 3)

    def test_coverage_sparse(self):
        t = Tracklet("a", {10: BBox(0, 0, 0.1, 0.1), 20: BBox(0, 0, 0.1, 0.1)})
        assert tracklet_coverage(t) == (10, 20, 2)

    def test_empty_raises(self):
        with pytest.raises(ValueError, match="empty tracklet"):
            tracklet_coverage(Tracklet("a", {}))

    def test_with_box_replaces(self):
        b1 = BBox(0, 0, 0.1, 0.1)
        b2 = BBox(0.2, 0.2, 0.3, 0.3)
        t = Tracklet("a", {5: b1}).with_box(5, b2)
        assert t.boxes[5] == b2
        assert tracklet_coverage(t)[2] == 1

    def test_negative_frame_rejected(self):
        with pytest.raises(ValueError):
            Tracklet("a", {-1: BBox(0, 0, 0.1, 0.1)})


class TestTrackSet:
    def test_duplicate_ids_rejected(self):
        t = Tracklet("a", {0: BBox(0, 0, 0.1, 0.1)})
        with pytest.raises(ValueError):
            TrackSet("q", (t, t))

    def test_frame_universe(self):
        ts = TrackSet(
            "q",
            (
                Tracklet("a", {0: BBox(0, 0, 0.1, 0.1)}),
                Tracklet("b", {2: BBox(0, 0, 0.1, 0.1)}),
            ),
        )
        assert ts.frame_universe() == {0, 2}
