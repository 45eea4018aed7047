import math

import numpy as np
import pytest
from scipy import stats as sstats

from onionlab.geometry import unit_ball_volume
from onionlab.sampler import (
    SeedSpec,
    sample_ball_binomial,
    sample_ball_poisson,
    sample_halfspace_poisson,
)


class TestDeterminism:
    def test_same_seed_identical(self):
        a = sample_ball_poisson(2, 100.0, SeedSpec(42, 3))
        b = sample_ball_poisson(2, 100.0, SeedSpec(42, 3))
        assert np.array_equal(a.coords, b.coords)

    def test_distinct_replications_differ(self):
        a = sample_ball_poisson(2, 100.0, SeedSpec(42, 0))
        b = sample_ball_poisson(2, 100.0, SeedSpec(42, 1))
        assert a.coords.shape != b.coords.shape or not np.array_equal(
            a.coords, b.coords
        )


class TestBallPoisson:
    def test_mean_count(self):
        lam, reps = 100.0, 200
        counts = [
            len(sample_ball_poisson(2, lam, SeedSpec(7, r))) for r in range(reps)
        ]
        target = lam * math.pi
        se = math.sqrt(target / reps)
        assert abs(np.mean(counts) - target) < 3 * se

    def test_points_inside_open_ball(self):
        cloud = sample_ball_poisson(3, 500.0, SeedSpec(1))
        assert np.all(np.linalg.norm(cloud.coords, axis=1) < 1.0)

    def test_d_validation(self):
        with pytest.raises(ValueError):
            sample_ball_poisson(1, 10.0, SeedSpec(0))


class TestBallBinomial:
    def test_exact_count_and_containment(self):
        cloud = sample_ball_binomial(4, 257, SeedSpec(9))
        assert len(cloud) == 257
        assert np.all(np.linalg.norm(cloud.coords, axis=1) < 1.0)

    def test_single_point(self):
        assert len(sample_ball_binomial(2, 1, SeedSpec(0))) == 1

    def test_radial_law(self):
        # |X|^d is uniform on [0, 1] for uniform ball points
        cloud = sample_ball_binomial(3, 10_000, SeedSpec(11))
        u = np.linalg.norm(cloud.coords, axis=1) ** 3
        stat = sstats.kstest(u, "uniform").statistic
        assert stat < 1.36 / math.sqrt(10_000) * 1.5


class TestHalfspacePoisson:
    def test_mean_count_interval_base(self):
        # intensity 1 on [-10, 10] x [0, 5]: expect 100 points
        reps = 200
        counts = [
            len(sample_halfspace_poisson(1, 10.0, 5.0, 1.0, SeedSpec(5, r)))
            for r in range(reps)
        ]
        se = math.sqrt(100.0 / reps)
        assert abs(np.mean(counts) - 100.0) < 3 * se

    def test_empty_probability_unit_volume(self):
        # unit-volume region: P(no point) = exp(-1)
        reps = 1500
        empty = sum(
            len(sample_halfspace_poisson(1, 0.5, 1.0, 1.0, SeedSpec(6, r))) == 0
            for r in range(reps)
        )
        p = math.exp(-1)
        se = math.sqrt(p * (1 - p) / reps)
        assert abs(empty / reps - p) < 3.5 * se

    def test_disjoint_box_counts_independent(self):
        reps = 400
        left, right = [], []
        for r in range(reps):
            cloud = sample_halfspace_poisson(1, 4.0, 4.0, 1.0, SeedSpec(8, r))
            v, h = cloud.coords[:, 0], cloud.coords[:, 1]
            left.append(int(np.sum((v < 0) & (h < 2.0))))
            right.append(int(np.sum((v >= 0) & (h < 2.0))))
        left, right = np.array(left), np.array(right)
        med_l, med_r = np.median(left), np.median(right)
        table = np.array(
            [
                [np.sum((left <= med_l) & (right <= med_r)),
                 np.sum((left <= med_l) & (right > med_r))],
                [np.sum((left > med_l) & (right <= med_r)),
                 np.sum((left > med_l) & (right > med_r))],
            ]
        )
        assert sstats.chi2_contingency(table).pvalue > 1e-3

    def test_ball_base_in_higher_dimension(self):
        reps = 150
        counts = [
            len(sample_halfspace_poisson(2, 3.0, 2.0, 1.0, SeedSpec(10, r)))
            for r in range(reps)
        ]
        target = unit_ball_volume(2) * 9.0 * 2.0
        se = math.sqrt(target / reps)
        assert abs(np.mean(counts) - target) < 3 * se

    def test_validation(self):
        with pytest.raises(ValueError):
            sample_halfspace_poisson(1, -1.0, 5.0, 1.0, SeedSpec(0))
