import numpy as np
import pytest

from anomseg.segment import (
    Detection,
    InstanceMask,
    SegmenterConfig,
    anomaly_scores,
    assign_clusters,
    connected_components,
    disparity_map,
    fit_bbox,
    kmeans,
    morphological_cleanup,
    select_anomalous_clusters,
)
from oracles import flood_fill_components, naive_opening


class TestDisparityMap:
    def test_identical_inputs_zero(self):
        x = np.random.default_rng(0).random((8, 8, 3))
        assert np.abs(disparity_map(x, x.copy())).max() == 0.0

    def test_constant_difference(self):
        a = np.full((4, 4, 3), 0.8)
        b = np.full((4, 4, 3), 0.3)
        assert np.allclose(disparity_map(a, b), 0.5, atol=1e-12)

    def test_antisymmetry(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((6, 6, 3)), rng.random((6, 6, 3))
        assert np.array_equal(disparity_map(a, b), -disparity_map(b, a))

    def test_rejects_single_channel(self):
        with pytest.raises(ValueError):
            disparity_map(np.zeros((4, 4, 1)), np.zeros((4, 4, 1)))


class TestKMeans:
    def test_one_cluster_per_point(self):
        points = np.array([[0.0, 0, 0], [1, 1, 1], [2, 2, 2]])
        result = kmeans(points, 3, seed=0)
        assert result.wcss < 1e-12
        assert sorted(result.labels.tolist()) == [0, 1, 2]

    def test_identical_points_single_cluster(self):
        points = np.tile([0.5, 0.2, 0.1], (10, 1))
        result = kmeans(points, 1, seed=0)
        assert np.allclose(result.centroids[0], [0.5, 0.2, 0.1], atol=1e-12)
        assert result.wcss < 1e-12

    def test_two_tight_blobs(self):
        rng = np.random.default_rng(2)
        a = rng.normal(0.0, 0.01, (40, 3))
        b = 1.0 + rng.normal(0.0, 0.01, (40, 3))
        points = np.vstack([a, b])
        result = kmeans(points, 2, seed=3)
        labels = result.labels
        assert len(set(labels[:40])) == 1
        assert len(set(labels[40:])) == 1
        assert labels[0] != labels[40]

    def test_wcss_history_non_increasing(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            points = rng.random((200, 3))
            result = kmeans(points, 4, seed=trial)
            history = result.wcss_history
            assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))

    def test_nearest_centroid_property_at_termination(self):
        rng = np.random.default_rng(4)
        points = rng.random((150, 3))
        result = kmeans(points, 3, seed=9)
        relabeled = assign_clusters(points, result.centroids)
        assert np.array_equal(relabeled, result.labels)

    def test_deterministic(self):
        points = np.random.default_rng(5).random((100, 3))
        a = kmeans(points, 4, seed=11)
        b = kmeans(points, 4, seed=11)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.centroids, b.centroids)

    def test_more_clusters_than_points_rejected(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((2, 3)), 3)


class TestClusterSelection:
    def test_block_against_zero_background(self):
        disparity = np.zeros((32, 32, 3))
        disparity[6:26, 6:26, :] = 0.6
        result = kmeans(disparity.reshape(-1, 3), 2, seed=0)
        mask = select_anomalous_clusters(disparity, result)
        expected = np.zeros((32, 32), dtype=bool)
        expected[6:26, 6:26] = True
        assert np.array_equal(mask, expected)

    def test_scale_invariance(self):
        rng = np.random.default_rng(6)
        disparity = rng.normal(0, 0.05, (16, 16, 3))
        disparity[4:10, 4:10, :] += 0.5
        r1 = kmeans(disparity.reshape(-1, 3), 3, seed=7)
        m1 = select_anomalous_clusters(disparity, r1)
        scaled = disparity * 2.0
        r2 = kmeans(scaled.reshape(-1, 3), 3, seed=7)
        m2 = select_anomalous_clusters(scaled, r2)
        assert np.array_equal(m1, m2)

    def test_degenerate_all_zero_map(self):
        disparity = np.zeros((16, 16, 3))
        result = kmeans(disparity.reshape(-1, 3), 2, seed=0)
        mask = select_anomalous_clusters(disparity, result)
        cleaned = morphological_cleanup(
            mask, SegmenterConfig(min_area=20, opening_radius=2)
        )
        assert not cleaned.any()


class TestAnomalyScores:
    def test_range_and_values(self):
        disparity = np.zeros((4, 4, 3))
        disparity[0, 0] = [1.0, 1.0, 1.0]
        disparity[1, 1] = [-1.0, -1.0, -1.0]
        scores = anomaly_scores(disparity)
        assert abs(scores[0, 0] - 1.0) < 1e-12
        assert abs(scores[1, 1] - 1.0) < 1e-12
        assert scores[2, 2] == 0.0


class TestMorphology:
    def test_empty_mask(self):
        mask = np.zeros((16, 16), dtype=bool)
        out = morphological_cleanup(mask, SegmenterConfig(min_area=1))
        assert not out.any()

    def test_single_pixel_removed_by_min_area(self):
        mask = np.zeros((16, 16), dtype=bool)
        mask[8, 8] = True
        out = morphological_cleanup(
            mask, SegmenterConfig(min_area=20, opening_radius=0)
        )
        assert not out.any()

    def test_square_preserved_exactly(self):
        # 30x30 solid square, radius-2 opening: interior and corners intact
        mask = np.zeros((40, 40), dtype=bool)
        mask[5:35, 5:35] = True
        out = morphological_cleanup(
            mask, SegmenterConfig(min_area=1, opening_radius=2)
        )
        assert np.array_equal(out, mask)

    @pytest.mark.parametrize("radius", [1, 2])
    def test_matches_naive_opening_oracle(self, radius):
        rng = np.random.default_rng(7)
        for _ in range(10):
            mask = rng.random((24, 24)) < 0.55
            got = morphological_cleanup(
                mask, SegmenterConfig(min_area=1, opening_radius=radius)
            )
            want = naive_opening(mask, radius)
            assert np.array_equal(got, want)

    def test_anti_extensive(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            mask = rng.random((20, 20)) < 0.6
            out = morphological_cleanup(mask, SegmenterConfig(min_area=1))
            assert not (out & ~mask).any()

    def test_default_min_area_scales_with_image(self):
        cfg = SegmenterConfig()
        assert cfg.resolve_min_area((128, 128)) == 8
        assert cfg.resolve_min_area((16, 16)) == 1


class TestConnectedComponents:
    def test_empty_mask(self):
        assert connected_components(np.zeros((8, 8), dtype=bool)) == []

    def test_full_mask_single_component(self):
        comps = connected_components(np.ones((6, 7), dtype=bool))
        assert len(comps) == 1
        assert comps[0].area == 42

    def test_diagonal_touch_is_connected(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[0, 0] = mask[1, 1] = True
        comps = connected_components(mask)
        assert len(comps) == 1

    def test_matches_flood_fill_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            mask = rng.random((20, 20)) < 0.4
            got = connected_components(mask)
            want = flood_fill_components(mask)
            got_sets = [set(map(tuple, c.pixels)) for c in got]
            assert len(got_sets) == len(want)
            # raster discovery order must match the oracle's order
            for g, w in zip(got_sets, want):
                assert g == w

    def test_partition_property(self):
        rng = np.random.default_rng(10)
        mask = rng.random((30, 30)) < 0.5
        comps = connected_components(mask)
        union = np.zeros_like(mask)
        total = 0
        for comp in comps:
            union[comp.pixels[:, 0], comp.pixels[:, 1]] = True
            total += comp.area
        assert np.array_equal(union, mask)
        assert total == mask.sum()


class TestFitBbox:
    def test_single_pixel(self):
        inst = InstanceMask(1, np.array([[5, 3]]), (8, 8))
        assert fit_bbox(inst) == (3, 5, 3, 5)

    def test_filled_rectangle(self):
        mask = np.zeros((12, 12), dtype=bool)
        mask[2:7, 4:9] = True
        (inst,) = connected_components(mask)
        assert fit_bbox(inst) == (4, 2, 8, 6)

    def test_l_shape(self):
        mask = np.zeros((12, 12), dtype=bool)
        mask[2:11, 3] = True
        mask[10, 3:9] = True
        (inst,) = connected_components(mask)
        assert fit_bbox(inst) == (3, 2, 8, 10)

    def test_minimality_on_random_masks(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            mask = rng.random((15, 15)) < 0.3
            if not mask.any():
                continue
            for inst in connected_components(mask):
                x0, y0, x1, y1 = fit_bbox(inst)
                rows = inst.pixels[:, 0]
                cols = inst.pixels[:, 1]
                # shrinking any side excludes at least one pixel
                assert (cols == x0).any() and (cols == x1).any()
                assert (rows == y0).any() and (rows == y1).any()

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            fit_bbox(InstanceMask(1, np.empty((0, 2), dtype=int), (4, 4)))
