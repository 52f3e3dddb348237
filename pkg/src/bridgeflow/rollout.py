"""Euler-Maruyama simulation of the controlled system under a feedback law.

A flow field maps (t, states) to controls; the rollout discretizes
``dX = (A X + B u) dt + eps B dW`` on a uniform step grid, evaluating the
law at times clamped to 1 - delta while still advancing the state to t = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixture_law import MixtureLawContext, mixture_feedback
from .mlp import MlpParams, mlp_forward
from .systems import BridgeKernel, LinearSystem

__all__ = [
    "PointBridgeLaw",
    "ClosedFormMixtureLaw",
    "LearnedLaw",
    "TrajectoryBatch",
    "RolloutDivergedError",
    "rollout",
    "moments",
]


class PointBridgeLaw:
    """Feedback gain steering every path to one fixed target point y."""

    def __init__(self, kernel: BridgeKernel, y):
        self.kernel = kernel
        self.y = np.asarray(y, dtype=float).ravel()
        if self.y.shape != (kernel.n,):
            raise ValueError(f"target point must have dimension {kernel.n}")
        self.law_id = "point_bridge"

    def control(self, t: float, states: np.ndarray) -> np.ndarray:
        node = self.kernel.node(float(self.kernel.clamp(t)))
        resid = self.y - states @ node.exp_1mtA.T
        w = np.linalg.solve(node.phi_1mt, resid.T)
        return (self.kernel.system.B.T @ node.exp_1mtA.T @ w).T


class ClosedFormMixtureLaw:
    """Analytic Gaussian-to-mixture steering law."""

    def __init__(self, ctx: MixtureLawContext):
        self.ctx = ctx
        self.law_id = "closed_form"

    def control(self, t: float, states: np.ndarray) -> np.ndarray:
        return mixture_feedback(self.ctx, t, states)


class LearnedLaw:
    """Trained MLP evaluated as the feedback control."""

    def __init__(self, params: MlpParams):
        self.params = params
        self.law_id = "learned"

    def control(self, t: float, states: np.ndarray) -> np.ndarray:
        return mlp_forward(self.params, t, states)


@dataclass
class TrajectoryBatch:
    """Simulated paths on a uniform time grid with rollout metadata."""

    times: np.ndarray  # (S,)
    states: np.ndarray  # (paths, S, n)
    dt: float
    epsilon: float
    law_id: str
    system_name: str = ""
    seed: int | None = None

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    def terminal(self) -> np.ndarray:
        return self.states[:, -1, :]


class RolloutDivergedError(RuntimeError):
    """A path left the finite range; reports the step and first bad path."""

    def __init__(self, step: int, t: float, path_id: int):
        super().__init__(f"non-finite state at step {step} (t={t:.6g}), path {path_id}")
        self.step = step
        self.t = t
        self.path_id = path_id


def rollout(
    system: LinearSystem,
    kernel: BridgeKernel,
    law,
    init: np.ndarray,
    dt: float = 1e-3,
    rng: np.random.Generator | None = None,
    store_stride: int = 1,
    t_end: float = 1.0,
    seed: int | None = None,
) -> TrajectoryBatch:
    """Simulate all paths from ``init`` (shape (N, n)) under the law.

    Update per step: X += (A X + B u) dt + eps B sqrt(dt) Z with fresh
    standard-normal Z of dimension m per path. States are stored every
    ``store_stride`` steps (the final time is always stored).
    """
    init = np.atleast_2d(np.asarray(init, dtype=float))
    if init.shape[0] < 1 or init.shape[1] != system.n:
        raise ValueError(f"init must be (paths, {system.n}), got {init.shape}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if store_stride < 1:
        raise ValueError("store_stride must be >= 1")
    steps = int(round(t_end / dt))
    if abs(steps * dt - t_end) > 1e-9:
        raise ValueError(f"t_end={t_end} is not a whole number of dt={dt} steps")
    eps = system.epsilon
    if eps > 0.0 and rng is None:
        raise ValueError("rng is required for stochastic rollouts")

    stored = sorted(set(range(0, steps + 1, store_stride)) | {steps})
    store_pos = {s: i for i, s in enumerate(stored)}
    times = np.array([k * dt for k in stored])
    states = np.empty((init.shape[0], len(stored), system.n))
    X = init.copy()
    states[:, 0, :] = X
    AT = system.A.T
    BT = system.B.T
    sq = np.sqrt(dt)

    for k in range(steps):
        t = k * dt
        u = law.control(t, X)
        drift = X @ AT + u @ BT
        X = X + drift * dt
        if eps > 0.0:
            X = X + (eps * sq) * (rng.standard_normal((X.shape[0], system.m)) @ BT)
        if not np.all(np.isfinite(X)):
            bad = int(np.argwhere(~np.isfinite(X).all(axis=1))[0, 0])
            raise RolloutDivergedError(k + 1, (k + 1) * dt, bad)
        pos = store_pos.get(k + 1)
        if pos is not None:
            states[:, pos, :] = X

    return TrajectoryBatch(
        times, states, dt, eps, getattr(law, "law_id", "custom"), system.name, seed
    )


def moments(batch: TrajectoryBatch, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and covariance across paths at stored time t.

    t must match a stored grid time (up to floating fuzz); off-grid times
    are rejected.
    """
    idx = int(np.argmin(np.abs(batch.times - t)))
    if abs(batch.times[idx] - t) > 1e-9:
        raise ValueError(f"t={t} is off the stored grid (nearest {batch.times[idx]})")
    slab = batch.states[:, idx, :]
    mean = slab.mean(axis=0)
    n = batch.states.shape[2]
    if slab.shape[0] < 2:
        return mean, np.zeros((n, n))
    cov = np.cov(slab, rowvar=False).reshape(n, n)
    return mean, cov
