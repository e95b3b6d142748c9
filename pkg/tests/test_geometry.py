import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from panotrack.geometry import Box3D, diou3d, giou3d, iou3d, points_in_box

from oracles import mc_iou


def unit_cube(cx=0.0, cy=0.0, cz=0.0):
    return Box3D(cx, cy, cz, 1.0, 1.0, 1.0)


boxes = st.builds(
    Box3D,
    cx=st.floats(-20, 20), cy=st.floats(-20, 20), cz=st.floats(-20, 20),
    l=st.floats(0.1, 10), w=st.floats(0.1, 10), h=st.floats(0.1, 10),
)


class TestIoU:
    def test_identical(self):
        assert iou3d(unit_cube(), unit_cube()) == 1.0

    def test_disjoint(self):
        assert iou3d(unit_cube(), unit_cube(cx=10.0)) == 0.0

    def test_half_offset(self):
        # interval arithmetic: intersection 0.5, union 1.5
        assert iou3d(unit_cube(), unit_cube(cx=0.5)) == pytest.approx(
            1.0 / 3.0, abs=1e-12)

    def test_invalid_dims_rejected(self):
        with pytest.raises(ValueError):
            Box3D(0, 0, 0, -1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            Box3D(0, 0, 0, 1.0, 0.0, 1.0)

    def test_score_range_rejected(self):
        with pytest.raises(ValueError):
            Box3D(0, 0, 0, 1, 1, 1, score=1.5)


class TestDIoU:
    def test_identical(self):
        assert diou3d(unit_cube(), unit_cube()) == 1.0

    def test_approaches_minus_one(self):
        values = [diou3d(unit_cube(), unit_cube(cx=d))
                  for d in (10.0, 100.0, 1000.0)]
        assert values[0] > values[1] > values[2] > -1.0
        assert values[2] < -0.99

    def test_half_offset(self):
        # 1/3 - 0.25 / (1.5^2 + 1 + 1), checked by scalar computation
        assert diou3d(unit_cube(), unit_cube(cx=0.5)) == pytest.approx(
            0.2745098039215686, abs=1e-12)


class TestGIoU:
    def test_identical(self):
        assert giou3d(unit_cube(), unit_cube()) == 1.0

    def test_far_separation(self):
        assert giou3d(unit_cube(), unit_cube(cx=1000.0)) < -0.99

    def test_half_offset_union_fills_enclosure(self):
        # enclosing box volume equals the union: dead-space term vanishes
        assert giou3d(unit_cube(), unit_cube(cx=0.5)) == pytest.approx(
            1.0 / 3.0, abs=1e-12)


@pytest.mark.parametrize("metric", [iou3d, diou3d, giou3d])
@given(a=boxes, b=boxes)
@settings(max_examples=50, deadline=None)
def test_symmetry(metric, a, b):
    assert metric(a, b) == pytest.approx(metric(b, a), abs=1e-12)


@given(a=boxes, b=boxes)
@settings(max_examples=100, deadline=None)
def test_bounds(a, b):
    assert 0.0 <= iou3d(a, b) <= 1.0 + 1e-12
    assert -1.0 < diou3d(a, b) <= 1.0 + 1e-12
    assert -1.0 < giou3d(a, b) <= 1.0 + 1e-12


@given(a=boxes, b=boxes)
@settings(max_examples=100, deadline=None)
def test_diou_never_exceeds_iou(a, b):
    assert diou3d(a, b) <= iou3d(a, b) + 1e-12
    centers_match = (a.cx, a.cy, a.cz) == (b.cx, b.cy, b.cz)
    if centers_match:
        assert diou3d(a, b) == pytest.approx(iou3d(a, b), abs=1e-12)


@given(a=boxes, b=boxes,
       shift=st.tuples(st.floats(-50, 50), st.floats(-50, 50),
                       st.floats(-50, 50)))
@settings(max_examples=50, deadline=None)
def test_translation_invariance(a, b, shift):
    def moved(box):
        return Box3D(box.cx + shift[0], box.cy + shift[1], box.cz + shift[2],
                     box.l, box.w, box.h)

    for metric in (iou3d, diou3d, giou3d):
        assert metric(a, b) == pytest.approx(
            metric(moved(a), moved(b)), abs=1e-12)


def test_monte_carlo_agreement_sample():
    rng = np.random.default_rng(42)
    for _ in range(5):
        a = Box3D(*rng.uniform(-2, 2, 3), *rng.uniform(0.5, 3, 3))
        b = Box3D(*rng.uniform(-2, 2, 3), *rng.uniform(0.5, 3, 3))
        assert iou3d(a, b) == pytest.approx(
            mc_iou(a, b, 10**6, rng), abs=1e-2)


class TestPointsInBox:
    def test_center_included(self):
        box = Box3D(1.0, 2.0, 3.0, 2.0, 2.0, 2.0)
        idx = points_in_box(np.array([[1.0, 2.0, 3.0]]), box)
        assert idx.tolist() == [0]

    def test_face_boundary_included(self):
        box = unit_cube()
        pts = np.array([[0.5, 0.0, 0.0], [0.5 + 1e-9, 0.0, 0.0]])
        assert points_in_box(pts, box).tolist() == [0]

    def test_grid_half_cover(self):
        # 3x3x3 grid over {0,1,2}^3; box spans x in [0,1] and all y, z:
        # exactly the 18 points with x in {0, 1}
        grid = np.array([[x, y, z] for x in range(3) for y in range(3)
                         for z in range(3)], dtype=float)
        box = Box3D(0.5, 1.0, 1.0, 1.0, 2.0, 2.0)
        idx = points_in_box(grid, box)
        assert len(idx) == 18
        assert np.all(grid[idx][:, 0] <= 1.0)

    def test_empty_result_allowed(self):
        assert len(points_in_box(np.array([[5.0, 5.0, 5.0]]), unit_cube())) == 0

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            points_in_box(np.zeros((3, 2)), unit_cube())
