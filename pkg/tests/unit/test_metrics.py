import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.exceptions import ConfigurationError
from core.metrics import (
    batch_standard_error,
    chain_means,
    histogram_on_grid,
    normalize_measure,
    summarize,
    total_variation,
)

cells = arrays(float, (4, 4), elements=st.floats(0.0, 10.0)).filter(lambda m: m.sum() > 1e-6)


def test_histogram_on_grid_bins_by_imaginary_then_real():
    edges = np.array([0.0, 1.0, 2.0])
    counts = histogram_on_grid(np.array([0.5 + 1.5j, 1.5 + 0.5j, 5.0 + 5.0j]), None, edges, edges)
    assert counts.shape == (2, 2)
    assert counts[1, 0] == pytest.approx(1 / 3)
    assert counts[0, 1] == pytest.approx(1 / 3)
    assert counts.sum() == pytest.approx(2 / 3)


def test_histogram_rejects_mismatched_weights():
    edges = np.array([0.0, 1.0])
    with pytest.raises(ConfigurationError):
        histogram_on_grid(np.array([0.5 + 0.5j]), np.ones(2), edges, edges)


def test_normalize_measure_truncates_negative_mass():
    assert np.allclose(normalize_measure(np.array([2.0, -1.0, np.nan, 2.0])), [0.5, 0.0, 0.0, 0.5])
    with pytest.raises(ConfigurationError):
        normalize_measure(np.array([-1.0, 0.0]))


@given(cells, cells)
@settings(max_examples=50, deadline=None)
def test_total_variation_is_a_bounded_symmetric_distance(p, q):
    tv = total_variation(p, q)
    assert 0.0 <= tv <= 1.0 + 1e-12
    assert tv == pytest.approx(total_variation(q, p))
    assert total_variation(p, p) == pytest.approx(0.0, abs=1e-12)


def test_total_variation_of_disjoint_measures():
    assert total_variation(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        total_variation(np.ones(2), np.ones(3))


def test_chain_means_and_standard_error():
    values = np.array([1.0, 3.0, 2.0, 4.0, 6.0, 8.0])
    ids = np.array([0, 0, 1, 1, 2, 2])
    means = chain_means(values, ids)
    assert np.allclose(means, [2.0, 3.0, 7.0])
    assert batch_standard_error(means) == pytest.approx(np.std(means, ddof=1) / np.sqrt(3))
    with pytest.raises(ConfigurationError):
        batch_standard_error([1.0])


@pytest.mark.parametrize("chain_ids,stderr", [
    (None, np.std([1.0, 2.0, 3.0, 6.0], ddof=1) / 2.0),
    (np.array([0, 0, 1, 1]), np.std([1.5, 4.5], ddof=1) / np.sqrt(2)),
    (np.zeros(4, dtype=int), np.std([1.0, 2.0, 3.0, 6.0], ddof=1) / 2.0),
])
def test_summarize(chain_ids, stderr):
    stats = summarize(np.array([1.0, 2.0, 3.0, 6.0]), chain_ids)
    assert stats["mean"] == pytest.approx(3.0)
    assert stats["median"] == pytest.approx(2.5)
    assert stats["min"] == 1.0 and stats["max"] == 6.0
    assert stats["stderr"] == pytest.approx(stderr)


def test_summarize_edge_cases():
    assert summarize(np.array([4.0]))["stderr"] == 0.0
    with pytest.raises(ConfigurationError):
        summarize(np.array([]))
