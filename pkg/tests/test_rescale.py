import json
import math
from fractions import Fraction

import numpy as np
import pytest

from onionlab.geometry import PointCloud
from onionlab.rescale import (
    Paraboloid,
    PolePoint,
    RescaledCloud,
    from_rescaled,
    in_cap,
    in_paraboloid,
    intensity_density,
    to_rescaled,
)
from onionlab.sampler import SeedSpec, sample_ball_poisson

from conftest import ball_points


def random_ball_cloud(rng, n, d):
    return PointCloud.from_coords(ball_points(rng, n, d))


class TestScalingMap:
    def test_north_axis_point(self):
        rc = to_rescaled(PointCloud.from_coords([[0.0, 0.7]]), 1000.0)
        assert rc.v[0] == pytest.approx([0.0])
        assert rc.h[0] == pytest.approx(1000 ** (2 / 3) * 0.3)

    def test_small_angle_arc_length(self):
        theta = 0.01
        x = [math.sin(theta) * 0.9, math.cos(theta) * 0.9]
        rc = to_rescaled(PointCloud.from_coords([x]), 1000.0)
        assert rc.v[0][0] == pytest.approx(1000 ** (1 / 3) * theta, rel=1e-12)
        assert rc.h[0] == pytest.approx(1000 ** (2 / 3) * 0.1, rel=1e-12)

    def test_pole_segment_rejected(self):
        with pytest.raises(PolePoint):
            to_rescaled(PointCloud.from_coords([[0.0, -0.5]]), 100.0)
        with pytest.raises(PolePoint):
            to_rescaled(PointCloud.from_coords([[0.0, 0.0]]), 100.0)

    def test_origin_image_of_north_pole_direction(self):
        rc = RescaledCloud(
            d=2, lam=100.0, ids=(0,), v=np.zeros((1, 1)), h=np.zeros(1)
        )
        cloud = from_rescaled(rc)
        assert cloud.coords[0] == pytest.approx([0.0, 1.0])

    @pytest.mark.parametrize("lam", [1e2, 1e3, 1e4])
    def test_round_trip(self, rng, lam):
        cloud = random_ball_cloud(rng, 3000, 3)
        back = from_rescaled(to_rescaled(cloud, lam))
        assert np.max(np.abs(back.coords - cloud.coords)) < 1e-10

    def test_membership_in_window(self, rng):
        lam = 500.0
        rc = to_rescaled(random_ball_cloud(rng, 2000, 2), lam)
        assert np.all(np.linalg.norm(rc.v, axis=1) < lam ** (1 / 3) * math.pi)
        assert np.all((rc.h >= 0) & (rc.h < lam ** (2 / 3)))

    def test_csv_with_sidecar(self, tmp_path, rng):
        rc = to_rescaled(random_ball_cloud(rng, 5, 2), 100.0)
        path = tmp_path / "rc.csv"
        rc.to_csv(path)
        assert path.read_text().splitlines()[0] == "id,v1,h"
        side = json.loads((tmp_path / "rc.csv.json").read_text())
        assert side == {"lambda": 100.0, "d": 2}


class TestCap:
    def test_axis_examples(self):
        x0 = [0.0, 0.5]
        assert in_cap([0.0, 0.9], x0)
        assert not in_cap([0.0, 0.4], x0)

    def test_exact_rational(self):
        x0 = [Fraction(0), Fraction(1, 2)]
        assert in_cap([Fraction(0), Fraction(9, 10)], x0)
        assert not in_cap([Fraction(1, 2), Fraction(1, 2)], x0)

    def test_zero_apex_rejected(self):
        with pytest.raises(ValueError):
            in_cap([0.1, 0.1], [0.0, 0.0])

    def test_conjugacy_with_quasi_paraboloid(self, rng):
        # cap membership transports to downward quasi-paraboloid membership
        lam = 800.0
        hits, total = 0, 0
        for _ in range(2000):
            x = ball_points(rng, 1, 2)[0]
            x0 = ball_points(rng, 1, 2)[0]
            if np.linalg.norm(x0) < 1e-3:
                continue
            if abs(x[0]) < 1e-9 and x[1] <= 0:
                continue
            if abs(x0[0]) < 1e-9 and x0[1] <= 0:
                continue
            rc = to_rescaled(PointCloud.from_coords([x, x0]), lam)
            p = Paraboloid(tuple(rc.v[1]), float(rc.h[1]), "down", lam)
            total += 1
            hits += in_cap(x, x0) == in_paraboloid((rc.v[0], rc.h[0]), p)
        assert hits == total


class TestParaboloid:
    def test_limit_down_examples(self):
        p = Paraboloid((0.0,), 2.0, "down")
        assert in_paraboloid(((1.0,), 1.0), p)  # 1 < 2 - 0.5
        assert not in_paraboloid(((2.0,), 0.1), p)  # 0.1 >= 2 - 2

    def test_direction_validation(self):
        with pytest.raises(ValueError):
            Paraboloid((0.0,), 1.0, "sideways")

    @pytest.mark.parametrize("lam", [math.inf, 500.0])
    def test_up_down_duality(self, rng, lam):
        bound = 5.0 if math.isinf(lam) else 0.8 * lam ** (2 / 3)
        for _ in range(2000):
            w0 = (rng.uniform(-2, 2, size=1), rng.uniform(0, bound))
            w1 = (rng.uniform(-2, 2, size=1), rng.uniform(0, bound))
            up = in_paraboloid(w1, Paraboloid(tuple(w0[0]), w0[1], "up", lam))
            down = in_paraboloid(w0, Paraboloid(tuple(w1[0]), w1[1], "down", lam))
            assert up == down

    def test_beyond_cap_reach_is_outside(self):
        # geodesic distance beyond pi/2: the cap cannot contain the point
        lam = 100.0
        a = lam ** (1 / 3)
        p = Paraboloid((0.0,), 1.0, "down", lam)
        assert not in_paraboloid(((a * 2.0,), 0.5), p)

    def test_quasi_converges_to_parabola(self):
        # boundary height of the finite-lambda shape near the exact parabola
        v0, h0 = 1.0, 3.0
        for lam, tol in ((1e6, 1e-2),):
            b = lam ** (2 / 3)
            worst = 0.0
            for v in np.linspace(v0 - 5, v0 + 5, 201):
                p = Paraboloid((v0,), h0, "down", lam)
                # bisect the boundary height in h
                lo, hi = 0.0, b * 0.5
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if in_paraboloid(((v,), mid), p):
                        lo = mid
                    else:
                        hi = mid
                finite_boundary = 0.5 * (lo + hi)
                exact = max(0.0, h0 - 0.5 * (v - v0) ** 2)
                worst = max(worst, abs(finite_boundary - exact))
            assert worst < tol


class TestIntensityDensity:
    def test_unit_at_origin(self):
        assert intensity_density([0.0, 0.0], 0.0, 1000.0, 3) == pytest.approx(1.0)

    def test_vanishes_at_ceiling(self):
        lam = 1000.0
        assert intensity_density([0.1], lam ** (2 / 3), lam, 2) == pytest.approx(0.0)

    def test_d2_is_linear_in_h(self):
        lam = 500.0
        for h in (0.0, 10.0, 30.0):
            assert intensity_density([3.0], h, lam, 2) == pytest.approx(
                1 - h / lam ** (2 / 3)
            )

    def test_empirical_box_counts(self):
        # counts of rescaled samples in unit boxes track the density
        lam, reps, d = 800.0, 60, 2
        edges_v = np.arange(-3.0, 3.0 + 1e-9, 1.0)
        edges_h = np.arange(0.0, 4.0 + 1e-9, 1.0)
        totals = np.zeros((len(edges_v) - 1, len(edges_h) - 1))
        for r in range(reps):
            cloud = sample_ball_poisson(d, lam, SeedSpec(77, r))
            rc = to_rescaled(cloud, lam)
            H, _, _ = np.histogram2d(rc.v[:, 0], rc.h, bins=(edges_v, edges_h))
            totals += H
        for i in range(totals.shape[0]):
            for j in range(totals.shape[1]):
                vc = 0.5 * (edges_v[i] + edges_v[i + 1])
                hc = 0.5 * (edges_h[j] + edges_h[j + 1])
                expect = intensity_density([vc], hc, lam, d) * reps
                se = math.sqrt(max(expect, 1.0))
                assert abs(totals[i, j] - expect) < 4 * se
