"""Measure Metrics Module.

This module provides the statistics used to compare measures and to report
Monte-Carlo uncertainty: grid histograms of weighted point sets, total
variation distances and standard errors over independent chains.
"""

import logging
from typing import Dict, Optional, Sequence

import numpy as np

from core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


def histogram_on_grid(points: np.ndarray, weights: Optional[np.ndarray], x_edges: np.ndarray,
                      y_edges: np.ndarray) -> np.ndarray:
    """Bin weighted complex points on a rectangular grid.

    Args:
        points: Complex points.
        weights: Point weights; uniform if None.
        x_edges: Bin edges along the real axis.
        y_edges: Bin edges along the imaginary axis.

    Returns:
        np.ndarray: Binned weights indexed [iy, ix]; points outside the
        edges are dropped.
    """
    points = np.asarray(points, dtype=complex).ravel()
    if weights is None:
        weights = np.full(points.size, 1.0 / max(points.size, 1))
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.shape != points.shape:
        raise ConfigurationError(f"{points.size} points but {weights.size} weights")
    counts, _, _ = np.histogram2d(points.imag, points.real, bins=(y_edges, x_edges), weights=weights)
    return counts


def normalize_measure(mass: np.ndarray) -> np.ndarray:
    """Truncate negative cells to zero and rescale to total mass 1."""
    positive = np.clip(np.nan_to_num(np.asarray(mass, dtype=float)), 0.0, None)
    total = positive.sum()
    if total <= 0:
        raise ConfigurationError("Cannot normalise a measure without positive mass")
    return positive / total


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two binned measures after normalisation."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ConfigurationError(f"Measures on different bins: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(normalize_measure(p) - normalize_measure(q)).sum())


def chain_means(values: np.ndarray, chain_ids: np.ndarray) -> np.ndarray:
    """Mean of values per chain, for chains 0..max(chain_ids)."""
    chain_ids = np.asarray(chain_ids)
    counts = np.bincount(chain_ids)
    sums = np.bincount(chain_ids, weights=np.asarray(values, dtype=float))
    present = counts > 0
    return sums[present] / counts[present]


def batch_standard_error(means: Sequence[float]) -> float:
    """Standard error of the grand mean from independent batch means."""
    means = np.asarray(means, dtype=float)
    if means.size < 2:
        raise ConfigurationError("Batch standard error needs at least two batches")
    return float(np.std(means, ddof=1) / np.sqrt(means.size))


def summarize(values: np.ndarray, chain_ids: Optional[np.ndarray] = None) -> Dict[str, float]:
    """Summary statistics of a Monte-Carlo sample.

    Returns:
        Dict[str, float]: min, max, mean, median and stderr. The standard
        error is taken over chain means when more than one chain is present,
        otherwise over the raw values.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ConfigurationError("Cannot summarise an empty sample")
    if chain_ids is not None and len(np.unique(chain_ids)) > 1:
        stderr = batch_standard_error(chain_means(values, chain_ids))
    elif values.size > 1:
        stderr = float(np.std(values, ddof=1) / np.sqrt(values.size))
    else:
        stderr = 0.0
    return {
        "min": float(values.min()),
        "max": float(values.max()),
        "mean": float(values.mean()),
        "median": float(np.median(values)),
        "stderr": stderr,
    }
