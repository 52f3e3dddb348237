"""Point-to-point bridges through a linear control system.

Given endpoints (x, y), the minimum-energy interpolant, the feedback gain
that steers any state to y by time 1, the Gaussian marginal of the
noise-pinned bridge, and sampling of (state, control) training pairs. The
same feedback gain serves the deterministic and stochastic cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .systems import BridgeKernel

__all__ = [
    "EndpointPair",
    "BridgeSample",
    "bridge_gain",
    "det_interpolate",
    "bridge_marginal",
    "sample_training_pair",
    "sample_training_batch",
]


@dataclass(frozen=True)
class EndpointPair:
    """Initial point x and target point y, both n-vectors."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError(f"endpoint dimensions differ: {x.shape} vs {y.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("endpoints must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class BridgeSample:
    """One (t, state, control) draw from the bridge between pair endpoints."""

    t: float
    state: np.ndarray
    control: np.ndarray
    pair: EndpointPair


def _pair(pair_or_x, y=None) -> EndpointPair:
    if isinstance(pair_or_x, EndpointPair):
        return pair_or_x
    return EndpointPair(pair_or_x, y)


def bridge_gain(kernel: BridgeKernel, t: float, xi, y) -> np.ndarray:
    """Feedback control B^T e^{(1-t)A^T} Phi_{1-t}^{-1} (y - e^{(1-t)A} xi).

    Steers the system from state xi at time t to y at time 1. t is clamped
    to 1 - delta, where the gain would otherwise blow up. ``xi``/``y`` may
    be single n-vectors or (N, n) batches.
    """
    t = float(kernel.clamp(t))
    node = kernel.node(t)
    xi = np.asarray(xi, dtype=float)
    y = np.asarray(y, dtype=float)
    single = xi.ndim == 1 and y.ndim == 1
    xi2 = np.atleast_2d(xi)
    y2 = np.atleast_2d(y)
    resid = y2 - xi2 @ node.exp_1mtA.T
    w = np.linalg.solve(node.phi_1mt, resid.T)
    u = (kernel.system.B.T @ node.exp_1mtA.T @ w).T
    return u[0] if single else u


def det_interpolate(kernel: BridgeKernel, pair_or_x, y_or_t, t=None) -> np.ndarray:
    """Minimum-energy trajectory point R_t x + S_t y.

    Interpolates exactly: t = 0 gives x, t = 1 gives y. Accepts
    ``det_interpolate(kernel, pair, t)`` or ``det_interpolate(kernel, x, y, t)``;
    t may be a scalar or a 1-D array of times (returning (len(t), n)).
    """
    if t is None:
        pair, ts = _pair(pair_or_x), y_or_t
    else:
        pair, ts = _pair(pair_or_x, y_or_t), t
    ts_arr = np.atleast_1d(np.asarray(ts, dtype=float))
    batch = kernel.nodes(ts_arr)
    states = batch.R @ pair.x + batch.S @ pair.y
    return states[0] if np.isscalar(ts) or np.asarray(ts).ndim == 0 else states


def bridge_marginal(kernel: BridgeKernel, pair_or_x, y_or_t, t=None) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the noise-pinned bridge state at time t.

    The mean equals the deterministic interpolant; the covariance is
    epsilon^2 Sigma_t, which vanishes at both endpoints (and identically
    when epsilon = 0).
    """
    if t is None:
        pair, t = _pair(pair_or_x), y_or_t
    else:
        pair = _pair(pair_or_x, y_or_t)
    node = kernel.node(float(t))
    mean = node.R @ pair.x + node.S @ pair.y
    cov = kernel.system.epsilon**2 * node.sigma
    return mean, cov


def sample_training_pair(kernel: BridgeKernel, pair_or_x, y_or_t, t=None, rng=None) -> BridgeSample:
    """Draw one bridge state at time t and the control that generated it.

    The state is mean + epsilon Sigma_t^{1/2} Z with Z standard normal; the
    control is the feedback gain evaluated at that state.
    """
    if rng is None:
        raise ValueError("rng is required")
    if t is None:
        pair, t = _pair(pair_or_x), y_or_t
    else:
        pair = _pair(pair_or_x, y_or_t)
    t = float(t)
    states, controls = sample_training_batch(
        kernel, pair.x[None, :], pair.y[None, :], np.array([t]), rng
    )
    return BridgeSample(t, states[0], controls[0], pair)


def sample_training_batch(
    kernel: BridgeKernel, xs: np.ndarray, ys: np.ndarray, ts: np.ndarray, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized bridge sampling: one (state, control) row per (x, y, t).

    States are exact draws from the bridge marginal (no SDE simulation);
    controls are the shared feedback gain at the sampled state. Times are
    clamped to 1 - delta.

    Returns ``(states, controls)`` with shapes (N, n) and (N, m).
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    ts = np.asarray(ts, dtype=float)
    if xs.shape != ys.shape or xs.shape[0] != ts.shape[0]:
        raise ValueError("xs, ys, ts must agree on the batch dimension")
    ts = kernel.clamp(ts)
    batch = kernel.nodes(ts)
    mean = np.einsum("bij,bj->bi", batch.R, xs) + np.einsum("bij,bj->bi", batch.S, ys)
    eps = kernel.system.epsilon
    if eps > 0.0:
        z = rng.standard_normal(xs.shape)
        states = mean + eps * np.einsum("bij,bj->bi", batch.sigma_sqrt, z)
    else:
        states = mean
    resid = ys - np.einsum("bij,bj->bi", batch.exp_1mtA, states)
    w = np.linalg.solve(batch.phi_1mt, resid[:, :, None])[:, :, 0]
    controls = np.einsum("bji,bj->bi", batch.exp_1mtA, w) @ kernel.system.B
    return states, controls
