import json
import math
from fractions import Fraction

import numpy as np
import pytest

from onionlab import oracles
from onionlab.geometry import PointCloud, k_face_counts
from onionlab.peeling import (
    PeelingDiagram,
    layer_index,
    layer_stats,
    peel,
    score,
    total_layers,
)
from onionlab.sampler import SeedSpec, sample_ball_poisson

from conftest import ball_points

SQUARE_CENTER = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]]


class TestPeel:
    def test_single_point(self):
        d = peel(PointCloud.from_coords([[0.2, 0.3]]))
        assert d.layer_of == {0: 1}
        assert total_layers(d) == 1

    def test_simplex_single_layer(self):
        d = peel(PointCloud.from_coords([[0, 0], [1, 0], [0, 1]]))
        assert d.n_layers == 1

    def test_square_plus_center(self):
        cloud = PointCloud.from_coords(SQUARE_CENTER)
        expected = oracles.brute_force_peel(cloud)
        d = peel(cloud, method="exact")
        assert d.layer_of == expected
        assert d.layer_of[4] == 2

    def test_nested_squares(self):
        outer = [[1, 1], [1, -1], [-1, 1], [-1, -1]]
        inner = [[0.3, 0.3], [0.3, -0.3], [-0.3, 0.3], [-0.3, -0.3]]
        cloud = PointCloud.from_coords(outer + inner)
        d = peel(cloud, method="exact")
        assert d.layer_of == oracles.brute_force_peel(cloud)
        assert [d.layer_of[i] for i in range(8)] == [1, 1, 1, 1, 2, 2, 2, 2]

    @pytest.mark.parametrize("method", ["exact", "qhull"])
    @pytest.mark.parametrize("d", [2, 3])
    def test_oracle_equivalence_small(self, rng, method, d):
        for _ in range(30):
            n = int(rng.integers(5, 16))
            cloud = PointCloud.from_coords(ball_points(rng, n, d))
            assert peel(cloud, method=method).layer_of == oracles.brute_force_peel(
                cloud
            )

    def test_partition_and_vertex_membership(self, rng):
        cloud = PointCloud.from_coords(ball_points(rng, 120, 2))
        d = peel(cloud)
        assert sorted(d.layer_of) == sorted(cloud.ids)
        assert set(d.layer_of.values()) == set(range(1, d.n_layers + 1))
        for n, lattice in enumerate(d.layers, start=1):
            for v in lattice.vertex_ids:
                assert d.layer_of[v] == n

    def test_rotation_invariance(self, rng):
        pts = ball_points(rng, 60, 2)
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        a = peel(PointCloud.from_coords(pts)).layer_of
        b = peel(PointCloud.from_coords(pts @ q.T)).layer_of
        assert a == b

    def test_collinear_consumed_in_one_layer(self):
        cloud = PointCloud.from_coords([[i, 2.0 * i] for i in range(5)])
        d = peel(cloud, method="exact")
        assert d.n_layers == 1
        assert d.layers[0].dim_hull == 1

    def test_degenerate_terminal_layer(self):
        # square plus three interior collinear points: the last layer is flat
        pts = [[2, 2], [2, -2], [-2, 2], [-2, -2], [-0.5, 0], [0, 0], [0.5, 0]]
        d = peel(PointCloud.from_coords(pts), method="exact")
        assert d.n_layers == 2
        assert d.layers[1].dim_hull == 1
        assert all(d.layer_of[i] == 2 for i in (4, 5, 6))

    def test_max_layers_partial(self, rng):
        cloud = PointCloud.from_coords(ball_points(rng, 200, 2))
        d = peel(cloud, max_layers=2)
        assert not d.complete
        assert len(d.layers) == 2

    def test_json_export(self, tmp_path, rng):
        cloud = PointCloud.from_coords(ball_points(rng, 20, 2))
        d = peel(cloud)
        path = tmp_path / "diag.json"
        d.to_json(path)
        doc = json.loads(path.read_text())
        assert doc["n_layers"] == d.n_layers
        assert len(doc["layer_of"]) == 20


class TestLayerIndex:
    def test_far_outside_is_first_layer(self, rng):
        cloud = PointCloud.from_coords(ball_points(rng, 30, 2) * 0.5)
        assert layer_index([5.0, 5.0], cloud) == 1

    def test_center_of_square(self):
        cloud = PointCloud.from_coords(SQUARE_CENTER[:4])
        assert layer_index([0.5, 0.5], cloud) == 2
        assert layer_index([0.5, 0.5], cloud) == oracles.brute_force_layer_index(
            [0.5, 0.5], cloud
        )

    def test_monotone_in_the_set(self, rng):
        # depth never decreases when the cloud grows
        for _ in range(25):
            pts = ball_points(rng, 30, 2)
            sub = PointCloud.from_coords(pts[:18])
            full = PointCloud.from_coords(pts)
            x = ball_points(rng, 1, 2)[0]
            assert layer_index(x, sub) <= layer_index(x, full)

    def test_additive_bound(self, rng):
        for _ in range(25):
            pts = ball_points(rng, 24, 2)
            extra = int(rng.integers(1, 6))
            sub = PointCloud.from_coords(pts[: 24 - extra])
            full = PointCloud.from_coords(pts)
            x = ball_points(rng, 1, 2)[0]
            assert layer_index(x, full) <= layer_index(x, sub) + extra


class TestScore:
    def test_triangle_scores(self):
        d = peel(PointCloud.from_coords([[0, 0], [1, 0], [0, 1]]))
        assert score(0, d, 1, 0) == Fraction(1)
        assert score(0, d, 1, 1) == Fraction(1)  # two edges, halved
        assert score(0, d, 2, 0) == 0

    def test_unknown_id(self):
        d = peel(PointCloud.from_coords([[0, 0], [1, 0], [0, 1]]))
        with pytest.raises(KeyError):
            score(99, d, 1, 0)

    @pytest.mark.parametrize("d_dim", [2, 3])
    def test_sum_identity_exact(self, rng, d_dim):
        cloud = PointCloud.from_coords(ball_points(rng, 45, d_dim))
        diagram = peel(cloud, method="exact")
        for n in range(1, min(3, diagram.n_layers) + 1):
            counts = k_face_counts(diagram.layers[n - 1])
            for k in range(d_dim):
                total = sum(score(i, diagram, n, k) for i in cloud.ids)
                assert total == Fraction(counts.get(k, 0))


class TestLayerStats:
    def test_square_area_defect(self):
        s = 1 / math.sqrt(2)
        cloud = PointCloud.from_coords(
            [[s, s], [s, -s], [-s, s], [-s, -s], [0.0, 0.0]]
        )
        stats = layer_stats(peel(cloud, method="exact"), max_layer=1)
        rec = stats.records[0]
        assert rec.defect_volumes[2] == pytest.approx(math.pi - 2.0)
        assert rec.origin_interior

    def test_triangle_perimeter_defect(self):
        pts = [[0.9, 0], [-0.4, 0.6], [-0.3, -0.7]]
        cloud = PointCloud.from_coords(pts)
        stats = layer_stats(peel(cloud, method="exact"), max_layer=1)
        perim = sum(
            np.linalg.norm(np.array(pts[i]) - np.array(pts[(i + 1) % 3]))
            for i in range(3)
        )
        assert stats.records[0].defect_volumes[1] == pytest.approx(
            math.pi - perim / 2
        )

    def test_defects_nondecreasing_in_layer(self):
        cloud = sample_ball_poisson(2, 200, SeedSpec(12))
        stats = layer_stats(peel(cloud), max_layer=4)
        deeper = [r.defect_volumes[2] for r in stats.records if r.defect_volumes]
        assert all(a <= b + 1e-12 for a, b in zip(deeper, deeper[1:]))

    def test_vertex_count_matches_members(self):
        cloud = sample_ball_poisson(2, 150, SeedSpec(3))
        diagram = peel(cloud)
        stats = layer_stats(diagram, max_layer=3)
        for rec in stats.records:
            members = [i for i, n in diagram.layer_of.items() if n == rec.n]
            assert rec.face_counts[0] == len(members)

    def test_degenerate_layer_volumes_missing(self):
        pts = [[2, 2], [2, -2], [-2, 2], [-2, -2], [-0.5, 0], [0, 0], [0.5, 0]]
        stats = layer_stats(peel(PointCloud.from_coords(pts), method="exact"))
        assert stats.records[1].defect_volumes is None
        assert stats.excluded_degenerate == 1
