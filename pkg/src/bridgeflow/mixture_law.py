"""Closed-form steering law for Gaussian-to-Gaussian-mixture problems.

When the initial distribution is one Gaussian and the target is a mixture
of Gaussians, the population feedback law has an analytic form: the bridge
gain template with the fixed target y replaced by the posterior mean of y
given the current state. The posterior is a responsibility-weighted blend
of per-component linear estimators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .distributions import GaussianMixture
from .systems import BridgeKernel

__all__ = ["MixtureLawContext", "DegenerateQueryError", "posterior_mean_y", "mixture_feedback"]


class DegenerateQueryError(ArithmeticError):
    """All component responsibilities vanished at a query point."""


@dataclass(frozen=True)
class MixtureLawContext:
    """Kernel plus the (single-Gaussian P0, mixture P1) pair it steers between."""

    kernel: BridgeKernel
    p0: GaussianMixture
    p1: GaussianMixture

    def __post_init__(self):
        if self.p0.n_components != 1:
            raise ValueError("closed-form law needs a single-Gaussian initial distribution")
        n = self.kernel.n
        if self.p0.dim != n or self.p1.dim != n:
            raise ValueError(
                f"distribution dimension mismatch: system n={n}, "
                f"P0 dim={self.p0.dim}, P1 dim={self.p1.dim}"
            )


def _posterior_terms(ctx: MixtureLawContext, t: float, pts: np.ndarray):
    """Responsibilities (N, L) and per-component posterior means (L, N, n)."""
    node = ctx.kernel.node(float(ctx.kernel.clamp(t)))
    R, S = node.R, node.S
    eps2_sigma = ctx.kernel.system.epsilon**2 * node.sigma
    m0 = ctx.p0.means[0]
    Q0 = ctx.p0.covs[0]
    base = pts - m0 @ R.T
    RQ0RT = R @ Q0 @ R.T

    L = ctx.p1.n_components
    n = ctx.kernel.n
    N = pts.shape[0]
    log_w = np.empty((N, L))
    post = np.empty((L, N, n))
    for l in range(L):
        Ql = ctx.p1.covs[l]
        C = RQ0RT + S @ Ql @ S.T + eps2_sigma
        C = 0.5 * (C + C.T)
        try:
            cf = scipy.linalg.cho_factor(C, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise DegenerateQueryError(
                f"component {l}: conditioning covariance is singular at t={t}"
            ) from exc
        resid = base - ctx.p1.means[l] @ S.T
        sol = scipy.linalg.cho_solve(cf, resid.T)
        maha = np.einsum("nb,nb->b", resid.T, sol)
        log_w[:, l] = np.log(ctx.p1.weights[l] + 1e-300) - 0.5 * maha
        post[l] = ctx.p1.means[l] + sol.T @ (S @ Ql)
    shift = log_w.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(shift)):
        raise DegenerateQueryError("all responsibilities underflowed")
    resp = np.exp(log_w - shift)
    resp /= resp.sum(axis=1, keepdims=True)
    return resp, post


def posterior_mean_y(ctx: MixtureLawContext, t: float, xi) -> np.ndarray:
    """E[y | bridge state at time t equals xi] for the coupled mixture target.

    Per component: gain K_l = Q_l S_t^T C_l^{-1} against the innovation
    xi - R_t m_0 - S_t m_l, where C_l = R_t Q_0 R_t^T + S_t Q_l S_t^T +
    eps^2 Sigma_t; responsibilities are the component likelihoods of xi,
    computed max-shifted. ``xi`` may be (n,) or (N, n).
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = np.atleast_2d(xi)
    resp, post = _posterior_terms(ctx, t, pts)
    mean = np.einsum("nl,lnj->nj", resp, post)
    return mean[0] if single else mean


def mixture_feedback(ctx: MixtureLawContext, t: float, xi) -> np.ndarray:
    """Closed-form steering control: the bridge gain aimed at E[y | state].

    Equals B^T e^{(1-t)A^T} Phi_{1-t}^{-1} (E[y|X_t=xi] - e^{(1-t)A} xi)
    with t clamped to 1 - delta.
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = np.atleast_2d(xi)
    t = float(ctx.kernel.clamp(t))
    yhat = np.atleast_2d(posterior_mean_y(ctx, t, pts))
    node = ctx.kernel.node(t)
    resid = yhat - pts @ node.exp_1mtA.T
    w = np.linalg.solve(node.phi_1mt, resid.T)
    u = (ctx.kernel.system.B.T @ node.exp_1mtA.T @ w).T
    return u[0] if single else u
