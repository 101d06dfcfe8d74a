import numpy as np
import pytest

from sensokit.basicstats import box_stats, product_histogram, stacked_histogram
from sensokit.dataset import Dataset, transpose_copy
from sensokit.errors import ValidationError


def liking(values, labels=None):
    values = np.asarray(values, dtype=float)
    return Dataset(
        id="d", name="lik", role="liking", values=values,
        row_labels=labels or [f"P{i + 1}" for i in range(values.shape[0])],
        col_labels=[f"C{i + 1}" for i in range(values.shape[1])],
    )


class TestBoxStats:
    def test_symmetric_odd_series(self):
        b = box_stats(liking([[1, 2, 3, 4, 5]]))[0]
        assert (b.min, b.q25, b.median, b.q75, b.max) == (1, 2, 3, 4, 5)

    def test_constant_series(self):
        b = box_stats(liking([[9, 9, 9]]))[0]
        assert (b.min, b.q25, b.median, b.q75, b.max) == (9, 9, 9, 9, 9)

    def test_linear_interpolation_quartiles(self):
        b = box_stats(liking([[1, 2, 3, 4]]))[0]
        assert (b.q25, b.median, b.q75) == (1.75, 2.5, 3.25)

    def test_missing_rejected(self):
        with pytest.raises(ValidationError, match="missing"):
            box_stats(liking([[1, np.nan]]))

    def test_columnwise_equals_rowwise_of_transpose(self):
        rng = np.random.default_rng(4)
        d = liking(np.round(rng.uniform(1, 9, size=(4, 7))))
        a = box_stats(d, "column_wise")
        b = box_stats(transpose_copy(d), "row_wise")
        for x, y in zip(a, b):
            assert x.as_row() == y.as_row()


class TestStackedHistogram:
    def test_counts_and_percents(self):
        t = stacked_histogram(liking([[1, 1, 2, 9]]), scale=(1, 9))
        assert t.bin_values == list(range(1, 10))
        assert t.counts[0].tolist() == [2, 1, 0, 0, 0, 0, 0, 0, 1]
        np.testing.assert_allclose(
            t.percents[0], [50, 25, 0, 0, 0, 0, 0, 0, 25]
        )

    def test_single_value_everywhere(self):
        t = stacked_histogram(liking([[5] * 81]))
        assert t.counts[0].tolist() == [81]
        np.testing.assert_allclose(t.percents[0], [100.0])

    def test_two_products(self):
        t = stacked_histogram(liking([[1, 2], [2, 2]]))
        assert t.counts.tolist() == [[1, 1], [0, 2]]

    def test_percents_sum_to_100(self):
        rng = np.random.default_rng(0)
        t = stacked_histogram(liking(np.round(rng.uniform(1, 9, (6, 40)))))
        np.testing.assert_allclose(t.percents.sum(axis=1), 100.0, atol=1e-9)

    def test_counts_reproduce_multiset(self):
        rng = np.random.default_rng(1)
        vals = np.round(rng.uniform(1, 9, (3, 25)))
        t = stacked_histogram(liking(vals))
        for i in range(3):
            rebuilt = [b for b, c in zip(t.bin_values, t.counts[i]) for _ in range(c)]
            assert sorted(rebuilt) == sorted(vals[i].astype(int).tolist())

    def test_non_integer_rejected(self):
        with pytest.raises(ValidationError, match="integer"):
            stacked_histogram(liking([[1.5, 2]]))

    def test_value_outside_declared_scale(self):
        with pytest.raises(ValidationError, match="outside"):
            stacked_histogram(liking([[1, 11]]), scale=(1, 9))


class TestProductHistogram:
    def test_percentages(self):
        t = product_histogram(liking([[3, 3, 4]]), "P1")
        assert t.bin_values == [3, 4]
        np.testing.assert_allclose(t.percents[0], [200 / 3, 100 / 3])

    def test_unknown_series(self):
        with pytest.raises(ValidationError, match="no such series"):
            product_histogram(liking([[1, 2]]), "nope")

    def test_single_consumer(self):
        t = product_histogram(liking([[7]]), "P1")
        np.testing.assert_allclose(t.percents[0], [100.0])
