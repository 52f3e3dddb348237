"""Small residual MLP with hand-rolled reverse-mode gradients and Adam.

The network maps [t, state] to a control vector: an input affine layer to
the hidden width, three residual blocks (two affine layers with an ELU
between, identity skip), and an affine output layer. Everything is plain
numpy so gradients are exact and runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MlpParams", "AdamState", "init_params", "mlp_forward", "loss_and_grad", "adam_step"]


def elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, x, np.expm1(np.minimum(x, 0.0)))


def elu_deriv(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, 1.0, np.exp(np.minimum(x, 0.0)))


@dataclass
class MlpParams:
    """Parameter arrays in fixed order: input, blocks (lin1, lin2 each), output.

    Weight shapes: w_in (width, n+1), block w (width, width), w_out (m, width);
    biases match the output dimension of their layer.
    """

    w_in: np.ndarray
    b_in: np.ndarray
    blocks: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    w_out: np.ndarray
    b_out: np.ndarray

    @property
    def state_dim(self) -> int:
        return self.w_in.shape[1] - 1

    @property
    def control_dim(self) -> int:
        return self.w_out.shape[0]

    @property
    def width(self) -> int:
        return self.w_in.shape[0]

    def arrays(self) -> list[np.ndarray]:
        """Flat parameter list in documented order (views, not copies)."""
        out = [self.w_in, self.b_in]
        for w1, b1, w2, b2 in self.blocks:
            out.extend([w1, b1, w2, b2])
        out.extend([self.w_out, self.b_out])
        return out

    def copy(self) -> "MlpParams":
        return MlpParams(
            self.w_in.copy(),
            self.b_in.copy(),
            [(w1.copy(), b1.copy(), w2.copy(), b2.copy()) for w1, b1, w2, b2 in self.blocks],
            self.w_out.copy(),
            self.b_out.copy(),
        )


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def init_params(
    state_dim: int, control_dim: int, rng: np.random.Generator, width: int = 32, n_blocks: int = 3
) -> MlpParams:
    """Glorot-uniform weights, zero biases, fixed draw order for a given rng."""
    w_in = _glorot(rng, width, state_dim + 1)
    blocks = []
    for _ in range(n_blocks):
        w1 = _glorot(rng, width, width)
        w2 = _glorot(rng, width, width)
        blocks.append((w1, np.zeros(width), w2, np.zeros(width)))
    w_out = _glorot(rng, control_dim, width)
    return MlpParams(w_in, np.zeros(width), blocks, w_out, np.zeros(control_dim))


def _stack_inputs(t, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    pts = np.atleast_2d(xi)
    ts = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],))
    return np.column_stack([ts, pts])


def _forward(params: MlpParams, inputs: np.ndarray):
    h = inputs @ params.w_in.T + params.b_in
    cache = [inputs, h]
    for w1, b1, w2, b2 in params.blocks:
        u1 = h @ w1.T + b1
        a = elu(u1)
        h = h + a @ w2.T + b2
        cache.extend([u1, a, h])
    out = h @ params.w_out.T + params.b_out
    return out, cache


def mlp_forward(params: MlpParams, t, xi) -> np.ndarray:
    """Network output for time t and state xi ((n,) or (N, n); t scalar or (N,))."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1 and np.ndim(t) == 0
    out, _ = _forward(params, _stack_inputs(t, xi))
    return out[0] if single else out


def loss_and_grad(params: MlpParams, t, xi, u) -> tuple[float, list[np.ndarray]]:
    """Mean squared-norm regression loss and its exact parameter gradient.

    loss = mean_i ||f(t_i, xi_i) - u_i||^2 over the batch; the gradient list
    matches ``params.arrays()`` order.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    inputs = _stack_inputs(t, xi)
    out, cache = _forward(params, inputs)
    diff = out - u
    n_batch = inputs.shape[0]
    loss = float(np.sum(diff * diff) / n_batch)

    d_out = 2.0 * diff / n_batch
    h_last = cache[-1]
    g_w_out = d_out.T @ h_last
    g_b_out = d_out.sum(axis=0)
    dh = d_out @ params.w_out

    g_blocks = []
    for bi in range(len(params.blocks) - 1, -1, -1):
        w1, b1, w2, b2 = params.blocks[bi]
        u1, a, _ = cache[2 + 3 * bi : 5 + 3 * bi]
        h_in = cache[1 + 3 * bi]
        g_w2 = dh.T @ a
        g_b2 = dh.sum(axis=0)
        da = dh @ w2
        du1 = da * elu_deriv(u1)
        g_w1 = du1.T @ h_in
        g_b1 = du1.sum(axis=0)
        dh = dh + du1 @ w1  # skip connection plus transform path
        g_blocks.append((g_w1, g_b1, g_w2, g_b2))
    g_blocks.reverse()

    g_w_in = dh.T @ inputs
    g_b_in = dh.sum(axis=0)

    grads = [g_w_in, g_b_in]
    for g in g_blocks:
        grads.extend(g)
    grads.extend([g_w_out, g_b_out])
    return loss, grads


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: MlpParams) -> "AdamState":
        arrays = params.arrays()
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays])


def adam_step(
    params: MlpParams,
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place on the parameter arrays."""
    state.step += 1
    c1 = 1.0 - beta1**state.step
    c2 = 1.0 - beta2**state.step
    for p, g, m, v in zip(params.arrays(), grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
