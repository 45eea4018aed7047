import math
from fractions import Fraction

import numpy as np
import pytest

from onionlab import oracles
from onionlab.geometry import PointCloud
from onionlab.parabolic import (
    GeneralPositionViolated,
    Window,
    criterion_check,
    half_paraboloid_check,
    layer_height_profile,
    lift,
    limit_score,
    parabolic_layer_index,
    parabolic_peel,
    point_score,
    tree_fixture,
)
from onionlab.rescale import Paraboloid, in_paraboloid
from onionlab.sampler import SeedSpec, sample_halfspace_poisson

from conftest import halfspace_points


class TestLift:
    def test_examples(self):
        lc = lift(PointCloud.from_coords([[0.0, 3.0], [2.0, 1.0]]))
        assert lc.z == pytest.approx([3.0, 3.0])

    def test_negative_height_rejected(self):
        with pytest.raises(ValueError):
            lift(PointCloud.from_coords([[0.0, -1.0]]))

    def test_membership_equivalence(self, rng):
        # downward paraboloid membership == lifted strict half-space test
        for _ in range(10_000):
            d1 = int(rng.integers(1, 3))
            v = rng.uniform(-4, 4, d1)
            h = rng.uniform(0, 6)
            v1 = rng.uniform(-4, 4, d1)
            h1 = rng.uniform(0, 6)
            member = in_paraboloid((v, h), Paraboloid(tuple(v1), h1, "down"))
            z = h + 0.5 * float(v @ v)
            z1 = h1 + 0.5 * float(v1 @ v1)
            lifted = z < z1 + float(v1 @ (v - v1))
            assert member == lifted


class TestParabolicPeel:
    def test_three_point_example(self):
        cl = PointCloud.from_coords([[0, 0], [1, 5], [2, 0]])
        diag = parabolic_peel(cl, method="exact")
        assert diag.layer_of == {0: 1, 1: 2, 2: 1}

    def test_single_point(self):
        assert parabolic_peel(PointCloud.from_coords([[0.5, 2.0]])).layer_of == {0: 1}

    @pytest.mark.parametrize("method", ["exact", "qhull"])
    @pytest.mark.parametrize("d1", [1, 2])
    def test_first_layer_matches_paraboloid_oracle(self, rng, method, d1):
        for _ in range(25):
            n = int(rng.integers(4, 11))
            cloud = PointCloud.from_coords(halfspace_points(rng, n, d1))
            diag = parabolic_peel(cloud, method=method)
            coords = [tuple(r) for r in cloud.coords]
            for i in range(n):
                expected = oracles.paraboloid_extreme(coords, i)
                assert (diag.layer_of[i] == 1) == expected

    @pytest.mark.parametrize("method", ["exact", "qhull"])
    @pytest.mark.parametrize("d1", [1, 2])
    def test_full_peel_matches_oracle(self, rng, method, d1):
        for _ in range(20):
            n = int(rng.integers(4, 13))
            cloud = PointCloud.from_coords(halfspace_points(rng, n, d1))
            assert parabolic_peel(cloud, method=method).layer_of == (
                oracles.brute_force_parabolic_peel(cloud)
            )

    def test_window_containment_enforced(self):
        w = Window(r=1.0, height=2.0, r_inner=0.5)
        with pytest.raises(ValueError, match="window"):
            parabolic_peel(PointCloud.from_coords([[5.0, 0.5]]), window=w)

    def test_score_sum_identity(self, rng):
        cloud = PointCloud.from_coords(halfspace_points(rng, 40, 1, r=6, height=8))
        diag = parabolic_peel(cloud, method="exact")
        for n in (1, 2):
            for k in (0, 1):
                total = sum(point_score(diag, i, n, k) for i in cloud.ids)
                expect = len(diag.layers[n - 1].faces.get(k, []))
                assert total == Fraction(expect)


class TestLayerIndexAndCriterion:
    def test_deep_point_below_everything(self, rng):
        cloud = PointCloud.from_coords(halfspace_points(rng, 15, 1, r=3, height=5) + [0, 3])
        assert parabolic_layer_index((np.array([0.0]), 0.0), cloud) == 1

    def test_monotone_under_superset(self, rng):
        for _ in range(20):
            pts = halfspace_points(rng, 20, 1)
            small = PointCloud.from_coords(pts[:12])
            big = PointCloud.from_coords(pts)
            w = (rng.uniform(-2, 2, 1), rng.uniform(0, 3))
            assert parabolic_layer_index(w, small) <= parabolic_layer_index(w, big)

    @pytest.mark.parametrize("d1", [1, 2])
    def test_criterion_matches_layer_index(self, rng, d1):
        for _ in range(30):
            n_pts = int(rng.integers(6, 13))
            cloud = PointCloud.from_coords(halfspace_points(rng, n_pts, d1))
            w = (rng.uniform(-2, 2, d1), rng.uniform(0, 4))
            depth = parabolic_layer_index(w, cloud, method="exact")
            assert criterion_check(w, cloud, depth)
            if depth > 1:
                assert not criterion_check(w, cloud, depth - 1)

    def test_general_position_guard(self):
        cloud = PointCloud.from_coords([[1.0, 2.0]])
        with pytest.raises(GeneralPositionViolated):
            criterion_check((np.array([1.0]), 2.0), cloud, 1)


class TestLimitScore:
    def test_empty_cloud_floor_point(self):
        far = PointCloud.from_coords([[9.0, 0.2]])
        assert limit_score(0.0, far, None, 1, 0) == Fraction(1)

    def test_huge_height_scores_zero_on_first_layer(self, rng):
        cloud = PointCloud.from_coords(halfspace_points(rng, 30, 1, r=4, height=3))
        assert limit_score(50.0, cloud, None, 1, 0) == 0

    def test_duplicate_insert_rejected(self):
        cloud = PointCloud.from_coords([[0.0, 1.0]])
        with pytest.raises(ValueError):
            limit_score(1.0, cloud, None, 1, 0)


class TestTreeFixture:
    def test_root_only(self):
        fx = tree_fixture(1, 5.0, 3)
        assert len(fx) == 1
        assert fx.coords[0] == pytest.approx([0.0, 0.0, 5.0])

    def test_n2_d2_coordinates(self):
        fx = tree_fixture(2, 8.0, 2)
        assert fx.coords.tolist() == [[0.0, 8.0], [2.0, 1.0], [-2.0, 1.0]]

    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_generations_land_on_their_layers(self, d, n):
        fx = tree_fixture(n, 8.0, d)
        diag = parabolic_peel(fx, method="exact")
        idx = 0
        for depth in range(n):
            for _ in range((2 * (d - 1)) ** depth):
                assert diag.layer_of[fx.ids[idx]] == n - depth
                idx += 1

    def test_sibling_paraboloids_disjoint(self, rng):
        # sampled membership: no point of one child's paraboloid is in another's
        for d in (2, 3):
            fx = tree_fixture(2, 8.0, d)
            children = fx.coords[1:]
            for i in range(len(children)):
                vi, hi = children[i][:-1], children[i][-1]
                for j in range(len(children)):
                    if i == j:
                        continue
                    pj = Paraboloid(tuple(children[j][:-1]), children[j][-1], "down")
                    for _ in range(300):
                        off = rng.uniform(-1, 1, len(vi))
                        off *= rng.random() * math.sqrt(2 * hi) / max(
                            1e-12, np.linalg.norm(off)
                        )
                        cap = hi - 0.5 * float(off @ off)
                        if cap <= 0:
                            continue
                        sample = (vi + off, rng.random() * cap)
                        assert not in_paraboloid(sample, pj)

    def test_nested_in_parent(self, rng):
        fx = tree_fixture(2, 8.0, 2)
        parent = Paraboloid((0.0,), 8.0, "down")
        child = fx.coords[1]
        for _ in range(500):
            off = rng.uniform(-1, 1) * math.sqrt(2 * child[1])
            cap = child[1] - 0.5 * off * off
            if cap <= 0:
                continue
            assert in_paraboloid(((child[0] + off,), rng.random() * cap), parent)

    def test_validation(self):
        with pytest.raises(ValueError):
            tree_fixture(0, 1.0, 2)


class TestHalfParaboloid:
    def test_boundary_pair(self):
        w0 = ((0.0,), 1.0)
        w1 = ((math.sqrt(4.0),), 3.0)
        assert half_paraboloid_check(w0, w1, n_samples=3000)

    def test_apex_above(self):
        assert half_paraboloid_check(((0.0,), 1.0), ((0.0,), 1.0), n_samples=2000)

    def test_precondition_enforced(self):
        with pytest.raises(ValueError):
            half_paraboloid_check(((0.0,), 1.0), ((5.0,), 1.5))

    def test_random_boundary_pairs_2d_base(self, rng):
        for _ in range(40):
            v0 = rng.uniform(-3, 3, 2)
            h0 = rng.uniform(0.1, 4)
            v1 = rng.uniform(-3, 3, 2)
            h1 = h0 + 0.5 * float((v1 - v0) @ (v1 - v0))
            assert half_paraboloid_check((v0, h0), (v1, h1), n_samples=800)


class TestHeightProfile:
    def test_bounds_and_empty(self):
        w = Window.for_radius(6.0, 1)
        cloud = sample_halfspace_poisson(1, w.r, w.height, 1.0, SeedSpec(2))
        diag = parabolic_peel(cloud, window=w)
        hs = layer_height_profile(diag, 1)
        assert all(0 <= h <= w.height for h in hs)
        assert layer_height_profile(diag, diag.n_layers + 5) == []

    @pytest.mark.slow
    def test_median_height_increases_with_layer(self):
        w = Window.for_radius(8.0, 3)
        med = {1: [], 2: [], 3: []}
        for r in range(100):
            cloud = sample_halfspace_poisson(1, w.r, w.height, 1.0, SeedSpec(31, r))
            diag = parabolic_peel(cloud, window=w, max_layers=3)
            for n in (1, 2, 3):
                hs = layer_height_profile(diag, n)
                if hs:
                    med[n].append(np.median(hs))
        m = [np.mean(med[n]) for n in (1, 2, 3)]
        assert m[0] < m[1] < m[2]

    def test_window_defaults(self):
        w = Window.for_radius(16.0, 2)
        assert w.height == pytest.approx(32.0)
        assert w.r_inner == pytest.approx(2.0)


class TestWindowConsistency:
    @pytest.mark.slow
    def test_enlarging_window_keeps_inner_labels(self):
        # layer labels of points well inside the cylinder are insensitive to
        # widening it (empirical echo of score stabilization)
        r, height = 8.0, 20.0
        good = 0
        reps = 100
        for rep in range(reps):
            big = sample_halfspace_poisson(1, 1.5 * r, height, 1.0, SeedSpec(99, rep))
            mask = np.abs(big.coords[:, 0]) <= r
            small = PointCloud(
                dim=2,
                ids=tuple(np.array(big.ids)[mask]),
                coords=big.coords[mask],
            )
            diag_small = parabolic_peel(small)
            diag_big = parabolic_peel(big)
            ok = True
            for pid in small.ids:
                layer = diag_small.layer_of[pid]
                v = small.coords[small.index_of(pid), 0]
                if abs(v) <= r / 2 ** (layer + 1):
                    if diag_big.layer_of[pid] != layer:
                        ok = False
                        break
            good += ok
        assert good >= 0.99 * reps


class TestFixturePerturbation:
    def test_small_jitter_keeps_layers(self):
        fx = tree_fixture(3, 8.0, 2, epsilon=1e-4, seed=1)
        diag = parabolic_peel(fx, method="exact")
        idx = 0
        for depth in range(3):
            for _ in range(2**depth):
                assert diag.layer_of[fx.ids[idx]] == 3 - depth
                idx += 1
