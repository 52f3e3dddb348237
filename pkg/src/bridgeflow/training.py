"""Least-squares regression of the steering law on bridge samples.

A fixed set of N endpoint pairs is drawn once from the coupling; every
iteration draws a minibatch of pairs, fresh times uniform on [0, 1-delta],
fresh bridge noise, and takes one Adam step with exponentially decayed
learning rate on the squared regression error against the per-pair bridge
controls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bridges import sample_training_batch
from .distributions import IndependentCoupling
from .mlp import AdamState, MlpParams, adam_step, init_params, loss_and_grad
from .systems import BridgeKernel, LinearSystem, build_kernel

__all__ = ["TrainConfig", "TrainResult", "TrainingDivergedError", "train"]


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 10_000
    dataset_size: int = 2_000
    batch_size: int = 64
    lr0: float = 1e-2
    decay: float = 0.999
    seed: int = 0
    time_clamp: float = 1e-3
    width: int = 32
    n_blocks: int = 3

    def __post_init__(self):
        if min(self.iterations, self.dataset_size, self.batch_size) < 1:
            raise ValueError("iterations, dataset_size and batch_size must be positive")
        if not (self.lr0 > 0 and 0.0 < self.decay <= 1.0):
            raise ValueError("need lr0 > 0 and decay in (0, 1]")
        if not 0.0 < self.time_clamp < 0.5:
            raise ValueError("time_clamp must lie in (0, 0.5)")


@dataclass
class TrainResult:
    params: MlpParams
    loss_trace: np.ndarray
    pair_xs: np.ndarray
    pair_ys: np.ndarray


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the trace up to the failing iteration."""

    def __init__(self, iteration: int, trace: np.ndarray):
        super().__init__(f"non-finite training loss at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace


def train(
    system: LinearSystem,
    coupling: IndependentCoupling,
    config: TrainConfig,
    kernel: BridgeKernel | None = None,
    rng: np.random.Generator | None = None,
) -> TrainResult:
    """Fit the residual MLP to the bridge control field.

    The rng (default: seeded from config.seed) drives, in order: parameter
    init, the one-time pair draw, then per-iteration batch indices, times
    and bridge noise. Identical seeds give identical loss traces.
    """
    if kernel is None:
        kernel = build_kernel(system, delta=config.time_clamp)
    if coupling.dim != system.n:
        raise ValueError(f"coupling dimension {coupling.dim} != system n {system.n}")
    if config.batch_size > config.dataset_size:
        raise ValueError("batch_size cannot exceed dataset_size")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    params = init_params(system.n, system.m, rng, width=config.width, n_blocks=config.n_blocks)
    xs, ys = coupling.draw_pairs(config.dataset_size, rng)
    state = AdamState.for_params(params)
    trace = np.empty(config.iterations)
    t_hi = 1.0 - config.time_clamp

    for it in range(config.iterations):
        idx = rng.choice(config.dataset_size, size=config.batch_size, replace=False)
        ts = rng.uniform(0.0, t_hi, size=config.batch_size)
        states, controls = sample_training_batch(kernel, xs[idx], ys[idx], ts, rng)
        loss, grads = loss_and_grad(params, ts, states, controls)
        if not np.isfinite(loss):
            raise TrainingDivergedError(it, trace[:it].copy())
        trace[it] = loss
        adam_step(params, grads, state, lr=config.lr0 * config.decay**it)

    return TrainResult(params, trace, xs, ys)
