"""Initial/target distributions and the independent endpoint coupling.

Gaussian mixtures (with stable log-density), uniform-on-circle supports,
and empirical sample files. Samplers are pure given an explicit numpy
Generator; use ``spawn_rngs`` for deterministic parallel streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "GaussianMixture",
    "UniformCircle",
    "Empirical",
    "IndependentCoupling",
    "spawn_rngs",
]


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Deterministic independent generator streams from one integer seed.

    Stream k is ``default_rng(SeedSequence(seed).spawn(count)[k])``; the
    split depends only on (seed, count, k), never on thread scheduling.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


class GaussianMixture:
    """Mixture of L Gaussians with weights w_l, means m_l, covariances Q_l.

    Weights must sum to 1 (tolerance 1e-12) and every covariance must be
    symmetric PSD. A single Gaussian is the L = 1 case.
    """

    def __init__(self, weights, means, covs):
        w = np.asarray(weights, dtype=float).ravel()
        mu = np.atleast_2d(np.asarray(means, dtype=float))
        Q = np.asarray(covs, dtype=float)
        if Q.ndim == 2:
            Q = Q[None, :, :]
        if w.size < 1:
            raise ValueError("mixture needs at least one component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must be nonnegative and sum to 1, got sum {w.sum()!r}")
        L, n = mu.shape
        if w.shape != (L,) or Q.shape != (L, n, n):
            raise ValueError(
                f"inconsistent mixture shapes: weights {w.shape}, means {mu.shape}, covs {Q.shape}"
            )
        for l in range(L):
            dev = np.linalg.norm(Q[l] - Q[l].T)
            if dev > 1e-10 * max(np.linalg.norm(Q[l]), 1e-300):
                raise ValueError(f"covariance {l} is not symmetric")
            if np.linalg.eigvalsh(Q[l])[0] < -1e-10 * max(np.linalg.norm(Q[l], 2), 1e-300):
                raise ValueError(f"covariance {l} is not PSD")
        self.weights = w
        self.means = mu
        self.covs = 0.5 * (Q + Q.transpose(0, 2, 1))

    @classmethod
    def single(cls, mean, cov) -> "GaussianMixture":
        mean = np.asarray(mean, dtype=float).ravel()
        return cls(np.array([1.0]), mean[None, :], np.asarray(cov, dtype=float)[None, :, :])

    @classmethod
    def standard(cls, n: int) -> "GaussianMixture":
        return cls.single(np.zeros(n), np.eye(n))

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.weights.size

    def component_sqrts(self) -> np.ndarray:
        w, V = np.linalg.eigh(self.covs)
        return (V * np.sqrt(np.clip(w, 0.0, None))[:, None, :]) @ V.transpose(0, 2, 1)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be >= 1")
        idx = rng.choice(self.n_components, size=count, p=self.weights)
        z = rng.standard_normal((count, self.dim))
        sqrts = self.component_sqrts()
        return self.means[idx] + np.einsum("bij,bj->bi", sqrts[idx], z)

    def log_density(self, xi) -> np.ndarray:
        """log sum_l w_l N(xi; m_l, Q_l), max-shifted for stability.

        Requires strictly PD covariances. ``xi`` may be (n,) or (N, n);
        returns a scalar or (N,).
        """
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        pts = np.atleast_2d(xi)
        n = self.dim
        comp = np.empty((self.n_components, pts.shape[0]))
        for l in range(self.n_components):
            try:
                c, low = scipy.linalg.cho_factor(self.covs[l], lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise ValueError(f"covariance {l} is singular; log_density needs PD components") from exc
            dev = pts - self.means[l]
            sol = scipy.linalg.cho_solve((c, low), dev.T)
            maha = np.einsum("nb,nb->b", dev.T, sol)
            logdet = 2.0 * np.sum(np.log(np.diag(c)))
            comp[l] = np.log(self.weights[l] + 1e-300) - 0.5 * (
                maha + logdet + n * np.log(2.0 * np.pi)
            )
        shift = comp.max(axis=0)
        out = shift + np.log(np.sum(np.exp(comp - shift), axis=0))
        return float(out[0]) if single else out

    def marginal(self, dims) -> "GaussianMixture":
        """Marginal mixture over the given coordinate indices."""
        dims = np.asarray(dims, dtype=int)
        return GaussianMixture(
            self.weights, self.means[:, dims], self.covs[:, dims[:, None], dims[None, :]]
        )


class UniformCircle:
    """Uniform distribution on the circumference of a circle in the plane."""

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0):
        center = np.asarray(center, dtype=float).ravel()
        if center.shape != (2,):
            raise ValueError("circle center must be a 2-vector")
        if not radius > 0:
            raise ValueError("circle radius must be positive")
        self.center = center
        self.radius = float(radius)

    @property
    def dim(self) -> int:
        return 2

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be >= 1")
        theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
        return self.center + self.radius * np.column_stack([np.cos(theta), np.sin(theta)])


class Empirical:
    """Resampling distribution over rows of a sample matrix or CSV file."""

    def __init__(self, samples_or_path):
        if isinstance(samples_or_path, (str, Path)):
            path = Path(samples_or_path)
            if not path.exists():
                raise FileNotFoundError(f"empirical sample file not found: {path}")
            rows = []
            width = None
            with open(path, "r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    parts = line.split(",")
                    try:
                        row = [float(p) for p in parts]
                    except ValueError:
                        if lineno == 1:  # header line
                            continue
                        raise ValueError(f"{path}:{lineno}: non-numeric row")
                    if width is None:
                        width = len(row)
                    elif len(row) != width:
                        raise ValueError(f"{path}:{lineno}: ragged row ({len(row)} != {width})")
                    rows.append(row)
            if not rows:
                raise ValueError(f"{path}: no samples")
            samples = np.array(rows, dtype=float)
        else:
            samples = np.atleast_2d(np.asarray(samples_or_path, dtype=float))
        if not np.all(np.isfinite(samples)):
            raise ValueError("empirical samples must be finite")
        self.samples = samples

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be >= 1")
        idx = rng.integers(0, self.samples.shape[0], size=count)
        return self.samples[idx]


@dataclass(frozen=True)
class IndependentCoupling:
    """Product coupling: endpoint pairs (x, y) with x ~ P0 and y ~ P1, independent."""

    p0: object
    p1: object

    def __post_init__(self):
        if self.p0.dim != self.p1.dim:
            raise ValueError(f"marginal dimensions differ: {self.p0.dim} vs {self.p1.dim}")

    @property
    def dim(self) -> int:
        return self.p0.dim

    def draw_pairs(self, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """(xs, ys) arrays of shape (count, n); x and y streams are independent."""
        xs = self.p0.sample(count, rng)
        ys = self.p1.sample(count, rng)
        return xs, ys
