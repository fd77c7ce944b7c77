import numpy as np
import pytest
from scipy import ndimage

from oracles import zhang_suen_loops
from roadsnake.baseline import (
    THRESHOLD_GRID,
    binarize,
    components_to_polylines,
    remove_collinear,
    run_baseline,
    skeletonize,
    sweep_thresholds,
)
from roadsnake.fields import Polyline
from roadsnake.groundtruth import detection_map
from roadsnake.metrics import assign, connectivity
from roadsnake.raster import rasterize_to_mask

EIGHT = np.ones((3, 3), dtype=int)


class TestBinarize:
    def test_high_threshold_gives_boundary(self):
        b = [Polyline([[0, 3], [40, 30], [79, 31]])]
        s = detection_map(b, 80, 60)
        assert np.array_equal(binarize(s, 0.99), rasterize_to_mask(b, 80, 60))

    def test_above_max(self):
        assert not binarize(np.full((5, 5), 0.5), 0.6).any()

    def test_inclusive(self):
        assert binarize(np.full((2, 2), 0.5), 0.5).all()

    @pytest.mark.parametrize("t", [0.0, 1.0, -0.2, 1.5])
    def test_threshold_range(self, t):
        with pytest.raises(ValueError):
            binarize(np.zeros((3, 3)), t)


class TestSkeletonize:
    def test_bar(self):
        m = np.zeros((9, 28), dtype=bool)
        m[3:6, 4:24] = True
        sk = skeletonize(m)
        ys, xs = np.nonzero(sk)
        assert set(ys) == {4}
        assert 17 <= len(xs) <= 20
        assert np.all(np.diff(np.sort(xs)) == 1)

    def test_thin_line_fixed_point(self):
        m = rasterize_to_mask([Polyline([[2, 2], [30, 17], [45, 3]])], 50, 20)
        assert np.array_equal(skeletonize(m), m)

    def test_empty(self):
        assert not skeletonize(np.zeros((6, 6), dtype=bool)).any()

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_reference_on_blobs(self, seed):
        rng = np.random.default_rng(seed)
        m = ndimage.binary_closing(rng.random((24, 30)) < 0.55, iterations=2)
        sk = skeletonize(m)
        assert np.array_equal(sk, zhang_suen_loops(m))
        assert not (sk & ~m).any()
        _, n_in = ndimage.label(m, structure=EIGHT)
        _, n_out = ndimage.label(sk, structure=EIGHT)
        assert n_in == n_out

    def test_thick_road_is_thin(self):
        b = [Polyline([[0, 20], [60, 40], [119, 35]])]
        sk = skeletonize(binarize(detection_map(b, 120, 70), 0.8))
        # one pixel wide: no solid 2x2 block anywhere
        assert not (sk[:-1, :-1] & sk[1:, :-1] & sk[:-1, 1:] & sk[1:, 1:]).any()
        assert np.all(sk.sum(axis=0) <= 2)


class TestComponents:
    def test_straight(self):
        m = np.zeros((10, 60), dtype=bool)
        m[4, 5:55] = True
        (p,) = components_to_polylines(m)
        assert p.vertices.tolist() in ([[5, 4], [54, 4]], [[54, 4], [5, 4]])

    def test_two_segments_and_order(self):
        m = np.zeros((30, 60), dtype=bool)
        m[20, 5:25] = True
        m[3, 30:55] = True
        ps = components_to_polylines(m)
        assert len(ps) == 2
        assert ps[0].vertices[:, 1].min() == 3

    def test_speck_dropped(self):
        m = np.zeros((10, 10), dtype=bool)
        m[4, 4:6] = True
        assert components_to_polylines(m) == []

    def test_branch_takes_longest_path(self):
        m = np.zeros((40, 60), dtype=bool)
        m[20, 2:58] = True
        m[21:30, 30] = True
        (p,) = components_to_polylines(m)
        xs = sorted(p.vertices[:, 0])
        assert xs[0] == 2 and xs[-1] == 57 and np.all(p.vertices[:, 1] == 20)

    def test_remove_collinear(self):
        pts = np.array([[0, 0], [1, 1], [2, 2], [3, 2], [4, 2], [5, 3]], dtype=float)
        assert remove_collinear(pts).tolist() == [[0, 0], [2, 2], [4, 2], [5, 3]]


class TestRunBaseline:
    b = [Polyline([[0, 30], [70, 45], [149, 40]])]

    def test_clean_single_polyline(self):
        ps = run_baseline(detection_map(self.b, 150, 80), 0.8)
        assert len(ps) == 1
        assert connectivity(assign(ps, self.b)) == 1.0

    @pytest.mark.parametrize("gaps", [1, 2, 3])
    def test_gaps_fragment(self, gaps):
        s = detection_map(self.b, 150, 80)
        for k in range(gaps):
            x = 30 + 35 * k
            s[:, x:x + 6] = 0.0
        ps = run_baseline(s, 0.8)
        assert len(ps) >= gaps + 1
        assert connectivity(assign(ps, self.b)) <= 0.5

    def test_empty(self):
        assert run_baseline(np.full((20, 20), 0.2), 0.5) == []


def test_sweep_picks_best():
    b = [[Polyline([[0, 30], [99, 34]])], [Polyline([[10, 0], [30, 79]])]]
    dets = [detection_map(g, 100, 80) for g in b]
    best, table = sweep_thresholds(dets, b)
    assert set(table) == set(THRESHOLD_GRID) and len(THRESHOLD_GRID) == 10
    assert table[best] == max(table.values())
    assert THRESHOLD_GRID[0] == 0.5 and THRESHOLD_GRID[-1] == 0.95
