import math

import numpy as np
import pytest

from sensokit.bilinear import PreprocessSpec, fit_plsr
from sensokit.dataset import Dataset
from sensokit.errors import ValidationError
from sensokit.prefmap import PrefmapSpec, assign_sectors, build_prefmap, prefmap_payloads


class TestBuildPrefmap:
    def test_internal_sets_liking_as_x(self, apple_like_datasets):
        liking, descriptive = apple_like_datasets
        pm = build_prefmap(liking, descriptive, PrefmapSpec("internal", "plsr"), loo=False)
        assert pm.consumer_side == "x"
        assert pm.model.all_x_labels == liking.col_labels
        assert pm.model.all_y_labels == descriptive.col_labels

    def test_external_swaps(self, apple_like_datasets):
        liking, descriptive = apple_like_datasets
        pm = build_prefmap(liking, descriptive, PrefmapSpec("external", "pcr"), loo=False)
        assert pm.consumer_side == "y"
        assert pm.model.all_x_labels == descriptive.col_labels

    def test_row_count_mismatch(self, apple_like_datasets):
        liking, descriptive = apple_like_datasets
        bad = Dataset(id="x", name="d8", role="descriptive", values=np.ones((8, 3)),
                      row_labels=[f"P{i}" for i in range(8)], col_labels=list("abc"))
        with pytest.raises(ValidationError, match=r"row counts differ \(5 vs 8\)"):
            build_prefmap(liking, bad, PrefmapSpec())

    def test_delegation_identity(self, apple_like_datasets):
        liking, descriptive = apple_like_datasets
        pm = build_prefmap(liking, descriptive,
                           PrefmapSpec("internal", "plsr", n_components=3), loo=True)
        direct = fit_plsr(
            liking.values, descriptive.values,
            spec_x=PreprocessSpec(False), spec_y=PreprocessSpec(False),
            n_components=3, row_labels=liking.row_labels,
            x_labels=liking.col_labels, y_labels=descriptive.col_labels, loo=True,
        )
        np.testing.assert_array_equal(pm.model.x_scores, direct.x_scores)
        np.testing.assert_array_equal(pm.model.y_loadings, direct.y_loadings)
        np.testing.assert_array_equal(pm.model.valid_explvar_y, direct.valid_explvar_y)


class TestSectors:
    def test_diagonal_point_in_first_sector(self):
        sa = assign_sectors([(0.5, 0.5)], 4)
        assert sa.point_sector == [0]

    def test_one_point_per_quadrant(self):
        pts = [(math.cos(a), math.sin(a)) for a in
               (math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4)]
        sa = assign_sectors(pts, 4)
        assert sa.sector_counts == [1, 1, 1, 1]

    def test_origin_goes_to_sector_zero_with_flag(self):
        sa = assign_sectors([(0.0, 0.0), (1.0, 0.1)], 4)
        assert sa.point_sector[0] == 0
        assert sa.origin_points == [0]

    def test_boundary_is_half_open(self):
        sa = assign_sectors([(1.0, 0.0), (0.0, 1.0)], 4)
        assert sa.point_sector == [0, 1]

    @pytest.mark.parametrize("n", range(2, 13))
    def test_counts_sum_to_point_count(self, n):
        rng = np.random.default_rng(n)
        pts = rng.normal(size=(57, 2))
        sa = assign_sectors(pts, n)
        assert sum(sa.sector_counts) == 57

    @pytest.mark.parametrize("n", [2, 3, 4, 6, 12])
    def test_rotation_permutes_counts_cyclically(self, n):
        rng = np.random.default_rng(n + 100)
        pts = rng.normal(size=(40, 2))
        ang = 2 * math.pi / n
        R = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
        a = assign_sectors(pts, n)
        b = assign_sectors(pts @ R.T, n)
        assert b.sector_counts == a.sector_counts[-1:] + a.sector_counts[:-1]

    def test_minimum_two_sectors(self):
        with pytest.raises(ValidationError):
            assign_sectors([(1.0, 0.0)], 1)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationError, match="finite"):
            assign_sectors([(math.nan, 0.0)], 4)


class TestPayloads:
    def test_sector_payload_fields(self, apple_like_datasets):
        liking, descriptive = apple_like_datasets
        pm = build_prefmap(liking, descriptive, PrefmapSpec(), loo=False)
        payloads = prefmap_payloads(pm, n_sectors=4)
        corr = payloads["corr_loadings"]
        assert len(corr["sector_boundaries"]) == 4
        assert sum(corr["sector_counts"]) == liking.shape[1]
        assert len(corr["point_sector"]) == liking.shape[1]
        assert corr["rings"] == [0.7071067811865476, 1.0]

    def test_sector_range_enforced(self, apple_like_datasets):
        liking, descriptive = apple_like_datasets
        pm = build_prefmap(liking, descriptive, PrefmapSpec(), loo=False)
        with pytest.raises(ValidationError):
            prefmap_payloads(pm, n_sectors=13)
