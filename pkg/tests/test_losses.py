import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_chamfer
from roadsnake.fields import Polyline
from roadsnake.losses import (
    LossWeights,
    chamfer,
    detection_loss,
    direction_loss,
    endpoint_loss,
    total_loss,
)
from roadsnake.raster import rasterize_polyline

rng = np.random.default_rng(2024)


@pytest.mark.parametrize("loss", [detection_loss, endpoint_loss])
class TestRegression:
    def test_identical(self, loss):
        a = rng.random((17, 23))
        assert loss(a, a) == 0.0

    def test_constant_offset(self, loss):
        a = rng.random((17, 23))
        assert loss(a + 0.25, a) == pytest.approx(0.0625, abs=1e-12)

    def test_direct_summation(self, loss):
        a, b = rng.random((2, 31, 19))
        total = 0.0
        for x, y in zip(a.ravel(), b.ravel()):
            total += (x - y) ** 2
        assert abs(loss(a, b) - total / a.size) < 1e-9

    def test_mismatch(self, loss):
        with pytest.raises(ValueError):
            loss(np.zeros((3, 4)), np.zeros((4, 3)))


def _unit(theta):
    return np.stack([np.cos(theta), np.sin(theta)])


class TestDirection:
    theta = rng.uniform(0, 2 * np.pi, (12, 9))

    def test_identical(self):
        d = _unit(self.theta)
        assert direction_loss(d, d) == pytest.approx(0.0, abs=1e-12)

    def test_opposite(self):
        d = _unit(self.theta)
        assert direction_loss(-d, d) == pytest.approx(2.0)

    def test_perpendicular(self):
        assert direction_loss(_unit(self.theta + np.pi / 2), _unit(self.theta)) == pytest.approx(1.0)

    def test_zero_pixels_excluded(self):
        d = _unit(self.theta)
        p = -d.copy()
        p[:, :6] = 0.0
        g = d.copy()
        g[:, 6:, :3] = 0.0
        # the remaining pixels are all opposite, so the masked mean stays 2
        assert direction_loss(p, g) == pytest.approx(2.0)

    def test_all_excluded(self):
        assert direction_loss(np.zeros((2, 5, 5)), _unit(self.theta[:5, :5])) == 0.0

    def test_scale_invariant(self):
        d = _unit(self.theta)
        g = _unit(self.theta + 0.3)
        assert direction_loss(3.0 * d, g) == pytest.approx(direction_loss(d, g))

    def test_mismatch(self):
        with pytest.raises(ValueError):
            direction_loss(np.zeros((2, 3, 3)), np.zeros((2, 3, 4)))


class TestTotal:
    s, e = rng.random((2, 10, 10))
    d = _unit(rng.uniform(0, 6, (10, 10)))

    def test_perfect(self):
        assert total_loss(self.s, self.e, self.d, self.s, self.e, self.d) == pytest.approx(0.0, abs=1e-12)

    def test_weighted_sum(self):
        s2, e2 = rng.random((2, 10, 10))
        d2 = _unit(rng.uniform(0, 6, (10, 10)))
        a, b, c = detection_loss(s2, self.s), endpoint_loss(e2, self.e), direction_loss(d2, self.d)
        assert total_loss(s2, e2, d2, self.s, self.e, self.d) == pytest.approx(a + 10 * b + 10 * c)
        w = LossWeights(0.0, 0.0)
        assert total_loss(s2, e2, d2, self.s, self.e, self.d, w) == pytest.approx(a)
        w = LossWeights(2.0, 0.5)
        assert total_loss(s2, e2, d2, self.s, self.e, self.d, w) == pytest.approx(a + 2 * b + 0.5 * c)

    def test_negative_weight(self):
        with pytest.raises(ValueError):
            LossWeights(-1.0, 1.0)


class TestChamfer:
    def test_identity(self):
        p = Polyline([[0, 0], [13, 7], [20, 30]])
        assert chamfer(p, p) == 0.0

    def test_parallel_segments(self):
        assert chamfer(Polyline([[0, 0], [2, 0]]), Polyline([[0, 3], [2, 3]])) == 18.0

    def test_collinear_midpoint(self):
        q = Polyline([[3, 40], [50, 2]])
        for p, mid in [
            (Polyline([[0, 0], [40, 0]]), Polyline([[0, 0], [17, 0], [40, 0]])),
            (Polyline([[0, 0], [30, 30]]), Polyline([[0, 0], [11, 11], [30, 30]])),
        ]:
            assert np.array_equal(rasterize_polyline(p), rasterize_polyline(mid))
            assert chamfer(mid, q) == chamfer(p, q)

    def test_collinear_offgrid_midpoint_bounded(self):
        p = Polyline([[0, 0], [37, 11]])
        mid = Polyline([[0, 0], [37 * 0.43, 11 * 0.43], [37, 11]])
        q = Polyline([[0, 20], [40, 25]])
        n = len(rasterize_polyline(p)) + len(rasterize_polyline(mid)) + len(rasterize_polyline(q))
        assert abs(chamfer(mid, q) - chamfer(p, q)) <= n


pts = st.lists(st.tuples(st.integers(0, 60), st.integers(0, 60)), min_size=2, max_size=5)


def _poly(raw):
    return Polyline.from_points(raw) if len(set(raw)) > 1 else None


@settings(max_examples=150, deadline=None)
@given(pts, pts)
def test_chamfer_matches_brute_force(a, b):
    p, q = _poly(a), _poly(b)
    if p is None or q is None:
        return
    ra, rb = rasterize_polyline(p), rasterize_polyline(q)
    if len(ra) > 200 or len(rb) > 200:
        return
    c = chamfer(p, q)
    assert c == pytest.approx(brute_chamfer(ra, rb), abs=1e-9)
    assert c == chamfer(q, p)
    assert c >= 0
    same = {tuple(x) for x in ra} == {tuple(x) for x in rb}
    assert (c == 0) == same
