"""Sample-based distances and densities: MMD, W2, and grid KDE.

MMD uses the Gaussian kernel k(a, b) = exp(-||a-b||^2 / (2 h^2)) with the
biased V-statistic (always nonnegative). W2 is the square root of the
mean optimal-assignment cost under squared Euclidean ground cost, computed
exactly on moderate sample sizes and by averaged subsampling above that.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

__all__ = ["MmdConfig", "MetricCurve", "mmd2", "mmd", "mmd_curve", "w2", "kde2", "pick_eval_times"]


@dataclass(frozen=True)
class MmdConfig:
    bandwidth: float = 2.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


def _gauss_kernel_mean(X: np.ndarray, Y: np.ndarray, h: float) -> float:
    return float(np.mean(np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * h * h))))


def mmd2(X, Y, cfg: MmdConfig = MmdConfig()) -> float:
    """Squared MMD V-statistic between sample sets X (N, d) and Y (M, d).

    mean k(x_i, x_j) + mean k(y_i, y_j) - 2 mean k(x_i, y_j), clamped at 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise ValueError("sample sets must be nonempty")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    h = cfg.bandwidth
    val = (
        _gauss_kernel_mean(X, X, h)
        + _gauss_kernel_mean(Y, Y, h)
        - 2.0 * _gauss_kernel_mean(X, Y, h)
    )
    return max(val, 0.0)


def mmd(X, Y, cfg: MmdConfig = MmdConfig()) -> float:
    return float(np.sqrt(mmd2(X, Y, cfg)))


@dataclass
class MetricCurve:
    """A distance evaluated along the time grid, plus its normalizer."""

    times: np.ndarray
    values: np.ndarray
    normalizer: float

    @property
    def normalized(self) -> np.ndarray:
        return self.values / self.normalizer


def pick_eval_times(times: np.ndarray, max_times: int = 50) -> np.ndarray:
    """Evenly spaced subset of grid indices, always keeping both endpoints."""
    times = np.asarray(times)
    if times.size <= max_times:
        return np.arange(times.size)
    return np.unique(np.linspace(0, times.size - 1, max_times).round().astype(int))


def mmd_curve(
    batch,
    reference_at: Callable[[float], np.ndarray],
    p0_samples: np.ndarray,
    p1_samples: np.ndarray,
    cfg: MmdConfig = MmdConfig(),
    max_times: int = 50,
) -> MetricCurve:
    """MMD between rollout states and time-matched reference samples.

    ``reference_at(t)`` regenerates reference bridge samples at time t (for
    a trained law these come from the frozen training pairs). The curve is
    sqrt(mmd2) at <= max_times grid times, and the normalizer is the MMD
    between fresh initial- and target-distribution samples.
    """
    idx = pick_eval_times(batch.times, max_times)
    values = np.empty(idx.size)
    for i, k in enumerate(idx):
        values[i] = mmd(batch.states[:, k, :], reference_at(float(batch.times[k])), cfg)
    normalizer = mmd(p0_samples, p1_samples, cfg)
    return MetricCurve(batch.times[idx], values, normalizer)


def w2(
    X,
    Y,
    max_exact: int = 512,
    repeats: int = 4,
    rng: np.random.Generator | None = None,
    exact: bool = False,
) -> float:
    """Wasserstein-2 distance between equal-size sample sets.

    sqrt(optimal assignment cost / count) under squared Euclidean ground
    cost. Exact assignment when both sets fit in ``max_exact`` (or when
    ``exact``); otherwise the mean over ``repeats`` random subsamples of
    size max_exact (the unequal-size case subsamples the larger set).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise ValueError("sample sets must be nonempty")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")

    def assignment_cost(A: np.ndarray, B: np.ndarray) -> float:
        cost = cdist(A, B, "sqeuclidean")
        r, c = linear_sum_assignment(cost)
        return float(cost[r, c].sum() / A.shape[0])

    n = min(X.shape[0], Y.shape[0])
    if exact or max(X.shape[0], Y.shape[0]) <= max_exact:
        if rng is None:
            rng = np.random.default_rng(0)
        A = X if X.shape[0] == n else X[rng.choice(X.shape[0], n, replace=False)]
        B = Y if Y.shape[0] == n else Y[rng.choice(Y.shape[0], n, replace=False)]
        return float(np.sqrt(assignment_cost(A, B)))

    if rng is None:
        rng = np.random.default_rng(0)
    size = min(max_exact, n)
    vals = []
    for _ in range(repeats):
        A = X[rng.choice(X.shape[0], size, replace=False)]
        B = Y[rng.choice(Y.shape[0], size, replace=False)]
        vals.append(np.sqrt(assignment_cost(A, B)))
    return float(np.mean(vals))


def kde2(
    points: np.ndarray, x_grid: np.ndarray, y_grid: np.ndarray, bandwidth: float
) -> np.ndarray:
    """Isotropic Gaussian KDE of 2-D points on a rectangular grid.

    Returns densities of shape (len(x_grid), len(y_grid)); the grid sum
    times the cell area approximates 1 when the grid covers the samples.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != 2:
        raise ValueError("kde2 needs 2-D points; project first")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    gx = np.asarray(x_grid, dtype=float)
    gy = np.asarray(y_grid, dtype=float)
    dx2 = (gx[:, None] - points[None, :, 0]) ** 2
    dy2 = (gy[:, None] - points[None, :, 1]) ** 2
    h2 = 2.0 * bandwidth * bandwidth
    ex = np.exp(-dx2 / h2)
    ey = np.exp(-dy2 / h2)
    dens = ex @ ey.T / (points.shape[0] * np.pi * h2)
    return dens
