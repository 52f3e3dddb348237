"""Linear control systems and the precomputed bridge kernel.

A ``LinearSystem`` is the triple (A, B, epsilon) of
``dX_t = A X_t dt + B (u_t dt + epsilon dW_t)`` with state dimension n and
input dimension m (epsilon = 0 gives the deterministic system). The
``BridgeKernel`` caches, on a uniform time grid over [0, 1], every matrix
the bridge and feedback formulas need: e^{tA}, e^{(1-t)A}, the Gramians
Phi_t and Phi_{1-t}, the pinned-bridge covariance Sigma_t with its square
root, and the endpoint-mixing maps R_t, S_t.

Off-grid times are served by exact recomputation: the cached node at the
nearest lower grid time is composed with a short-interval matrix
exponential evaluated by a scaled truncated Taylor series, which is
accurate to machine precision (this is the semigroup identity, not
interpolation).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import gramian_and_exp

__all__ = [
    "LinearSystem",
    "ControllabilityReport",
    "UncontrollableSystemError",
    "controllability_matrix",
    "check_controllability",
    "is_controllable",
    "builtin_system",
    "mass_spring_system",
    "BUILTIN_NAMES",
    "KernelNode",
    "BridgeKernel",
    "build_kernel",
]

#: Singular values above RANK_RTOL * sigma_max count toward the rank.
RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Constant-coefficient linear control system (A, B, epsilon)."""

    A: np.ndarray
    B: np.ndarray
    epsilon: float = 0.0
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise ValueError(f"B must be {A.shape[0]} x m, got shape {B.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("system matrices must be finite")
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps < 0:
            raise ValueError("epsilon must be a finite nonnegative scalar")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "epsilon", eps)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def with_epsilon(self, epsilon: float) -> "LinearSystem":
        return LinearSystem(self.A, self.B, epsilon, self.name)


@dataclass(frozen=True)
class ControllabilityReport:
    controllable: bool
    rank: int
    n: int
    singular_values: tuple[float, ...]

    def __str__(self) -> str:
        verdict = "controllable" if self.controllable else "NOT controllable"
        return f"rank {self.rank} of {self.n}: {verdict}"


class UncontrollableSystemError(ValueError):
    """Raised when an operation requires a controllable (A, B) pair."""

    def __init__(self, report: ControllabilityReport):
        super().__init__(f"system is not controllable ({report})")
        self.report = report


def controllability_matrix(A, B) -> np.ndarray:
    """Kalman matrix [B, AB, ..., A^{n-1}B], shape (n, n*m)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
        raise ValueError(f"incompatible shapes A {A.shape}, B {B.shape}")
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def check_controllability(A, B) -> ControllabilityReport:
    """Rank test of the Kalman matrix via singular values."""
    K = controllability_matrix(A, B)
    sv = np.linalg.svd(K, compute_uv=False)
    n = K.shape[0]
    rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv[0] > 0 else 0
    return ControllabilityReport(rank == n, rank, n, tuple(float(s) for s in sv))


def is_controllable(A, B) -> bool:
    return check_controllability(A, B).controllable


def mass_spring_system(d: int, epsilon: float = 1.0) -> LinearSystem:
    """Chain of d/2 unit masses, unit springs between neighbors and from the
    first mass to a wall, with one force input per mass.

    States are (positions, velocities); A = [[0, I], [-T, 0]] with T the
    tridiagonal stiffness matrix (2 on the diagonal except 1 in the last
    entry, -1 off-diagonal), B = [[0], [I]]. Full actuation keeps the
    short-horizon Gramian representable in double precision: with a single
    actuator its smallest eigenvalue scales like delta^(2d-1), which
    underflows the clamp window and makes bridge controls blow up.
    """
    if d < 2 or d % 2 != 0:
        raise ValueError(f"mass_spring dimension must be even and >= 2, got {d}")
    p = d // 2
    T = 2.0 * np.eye(p) - np.eye(p, k=1) - np.eye(p, k=-1)
    T[-1, -1] = 1.0
    A = np.zeros((d, d))
    A[:p, p:] = np.eye(p)
    A[p:, :p] = -T
    B = np.zeros((d, p))
    B[p:, :] = np.eye(p)
    sys = LinearSystem(A, B, epsilon, name=f"mass_spring({d})")
    report = check_controllability(A, B)
    if not report.controllable:  # pragma: no cover - chain is always controllable
        raise UncontrollableSystemError(report)
    return sys


_TWO_DIM = {
    "double_integrator": [[0.0, 1.0], [0.0, 0.0]],
    "oscillator": [[0.0, 5.0], [-5.0, 0.0]],
    "nyquist_johnson": [[0.0, 1.0], [-1.0, -1.0]],
}

BUILTIN_NAMES = tuple(_TWO_DIM) + ("mass_spring(d)",)

_MASS_SPRING_RE = re.compile(r"^mass_spring\((\d+)\)$")


def builtin_system(name: str, epsilon: float = 1.0) -> LinearSystem:
    """Benchmark catalog: double_integrator, oscillator, nyquist_johnson
    (all with B = [0, 1]^T), and mass_spring(d)."""
    name = name.strip()
    if name in _TWO_DIM:
        return LinearSystem(np.array(_TWO_DIM[name]), np.array([[0.0], [1.0]]), epsilon, name=name)
    match = _MASS_SPRING_RE.match(name)
    if match:
        return mass_spring_system(int(match.group(1)), epsilon)
    raise ValueError(f"unknown system {name!r}; known: {', '.join(BUILTIN_NAMES)}")


class KernelNode(NamedTuple):
    """All time-t matrices used by the bridge and feedback formulas."""

    t: float
    exp_tA: np.ndarray
    exp_1mtA: np.ndarray
    phi_t: np.ndarray
    phi_1mt: np.ndarray
    sigma: np.ndarray
    sigma_sqrt: np.ndarray
    R: np.ndarray
    S: np.ndarray


class BatchNodes(NamedTuple):
    """Stacked KernelNode fields for a vector of query times."""

    t: np.ndarray
    exp_tA: np.ndarray
    exp_1mtA: np.ndarray
    phi_t: np.ndarray
    phi_1mt: np.ndarray
    sigma: np.ndarray
    sigma_sqrt: np.ndarray
    R: np.ndarray
    S: np.ndarray


def _expm_scaled_taylor(M: np.ndarray, r: np.ndarray, order: int = 12) -> np.ndarray:
    """e^{M r_b} for a fixed matrix M and a batch of scalars r, shape (B, n, n).

    Scaled so the truncated Taylor series is accurate to machine precision.
    """
    n = M.shape[0]
    r = np.asarray(r, dtype=float)
    nb = r.shape[0]
    scale = np.max(np.abs(r)) * np.linalg.norm(M, 1) if nb else 0.0
    squarings = 0 if scale <= 0.25 else int(np.ceil(np.log2(scale / 0.25)))
    rs = r / (2.0**squarings)
    out = np.broadcast_to(np.eye(n), (nb, n, n)).copy()
    coeff = np.ones(nb)
    P = np.eye(n)
    for j in range(1, order + 1):
        P = P @ M
        coeff = coeff * rs / j
        out += coeff[:, None, None] * P
    for _ in range(squarings):
        out = out @ out
    return out


class BridgeKernel:
    """Uniform-grid cache of bridge quantities for one system.

    The grid spans [0, 1] with ``grid_size`` nodes. ``delta`` is the
    interior clamp: feedback laws evaluate Phi_{1-t}^{-1}, which diverges at
    t = 1, so law evaluations use min(t, 1 - delta).
    """

    def __init__(self, system: LinearSystem, grid_size: int = 1001, delta: float = 1e-3):
        if grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if not 0.0 < delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5)")
        report = check_controllability(system.A, system.B)
        if not report.controllable:
            raise UncontrollableSystemError(report)
        self.system = system
        self.delta = float(delta)
        self.grid_size = int(grid_size)
        self._K = grid_size - 1
        self._dt = 1.0 / self._K
        self.times = np.linspace(0.0, 1.0, grid_size)

        n = system.n
        A, B = system.A, system.B
        self._block = np.zeros((2 * n, 2 * n))
        self._block[:n, :n] = -A
        self._block[:n, n:] = B @ B.T
        self._block[n:, n:] = A.T

        exp_tA = np.empty((grid_size, n, n))
        phi = np.empty((grid_size, n, n))
        for k, t in enumerate(self.times):
            phi[k], exp_tA[k] = gramian_and_exp(A, B, t)
        phi[0] = 0.0
        exp_tA[0] = np.eye(n)

        self.exp_A = exp_tA[-1]
        self.phi_1 = phi[-1]
        rev = slice(None, None, -1)
        S = np.linalg.solve(self.phi_1, exp_tA[rev] @ phi).transpose(0, 2, 1)
        S[0] = 0.0
        S[-1] = np.eye(n)
        R = exp_tA - S @ self.exp_A
        R[0] = np.eye(n)
        R[-1] = 0.0
        sigma = phi - S @ exp_tA[rev] @ phi
        sigma = 0.5 * (sigma + sigma.transpose(0, 2, 1))
        sigma[0] = 0.0
        sigma[-1] = 0.0
        w, V = np.linalg.eigh(sigma)
        w = np.clip(w, 0.0, None)
        self._grid_sigma = (V * w[:, None, :]) @ V.transpose(0, 2, 1)
        self._grid_sigma_sqrt = (V * np.sqrt(w)[:, None, :]) @ V.transpose(0, 2, 1)
        self._grid_exp_tA = exp_tA
        self._grid_phi = phi
        self._grid_R = R
        self._grid_S = S

        # gains solve against Phi_{1-t} for all t <= 1 - delta; verify that
        # the smallest cached positive-time Gramian is numerically PD
        try:
            np.linalg.cholesky(phi[1])
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                f"Gramian at t={self.times[1]:g} is numerically singular "
                f"(min eigenvalue {np.linalg.eigvalsh(phi[1])[0]:.3e}); "
                "the grid is too fine for this system in double precision"
            ) from exc

    # -- basic properties ------------------------------------------------

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def m(self) -> int:
        return self.system.m

    def clamp(self, t):
        """Interior clamp min(t, 1 - delta) applied before law evaluations."""
        return np.minimum(t, 1.0 - self.delta)

    # -- node queries ------------------------------------------------------

    def grid_index(self, t: float) -> int | None:
        """Index of t on the grid, or None if t is off-grid."""
        k = int(round(float(t) / self._dt))
        if 0 <= k <= self._K and abs(t - self.times[k]) <= 1e-12:
            return k
        return None

    def node_at(self, k: int) -> KernelNode:
        """Cached node at grid index k."""
        return KernelNode(
            float(self.times[k]),
            self._grid_exp_tA[k],
            self._grid_exp_tA[self._K - k],
            self._grid_phi[k],
            self._grid_phi[self._K - k],
            self._grid_sigma[k],
            self._grid_sigma_sqrt[k],
            self._grid_R[k],
            self._grid_S[k],
        )

    def node(self, t: float) -> KernelNode:
        """Node at arbitrary t in [0, 1]: cached when on-grid, recomputed otherwise."""
        k = self.grid_index(t)
        if k is not None:
            return self.node_at(k)
        batch = self.nodes(np.array([float(t)]))
        return KernelNode(float(t), *(arr[0] for arr in batch[1:]))

    def nodes(self, ts: np.ndarray) -> BatchNodes:
        """Vectorized node computation for a batch of arbitrary times in [0, 1]."""
        ts = np.asarray(ts, dtype=float)
        if ts.ndim != 1:
            raise ValueError("ts must be a 1-D array of times")
        if np.any((ts < 0.0) | (ts > 1.0)):
            raise ValueError("times must lie in [0, 1]")
        n = self.n
        k = np.minimum((ts / self._dt).astype(int), self._K)
        r = np.clip(ts - self.times[k], 0.0, None)

        blk = _expm_scaled_taylor(self._block, r)
        exp_rA = blk[:, n:, n:].transpose(0, 2, 1)
        phi_r = exp_rA @ blk[:, :n, n:]
        phi_r = 0.5 * (phi_r + phi_r.transpose(0, 2, 1))
        exp_mrA = _expm_scaled_taylor(self.system.A, -r)

        exp_tA = exp_rA @ self._grid_exp_tA[k]
        phi_t = exp_rA @ self._grid_phi[k] @ exp_rA.transpose(0, 2, 1) + phi_r
        phi_t = 0.5 * (phi_t + phi_t.transpose(0, 2, 1))
        j = self._K - k
        exp_1mtA = exp_mrA @ self._grid_exp_tA[j]
        phi_1mt = exp_mrA @ (self._grid_phi[j] - phi_r) @ exp_mrA.transpose(0, 2, 1)
        phi_1mt = 0.5 * (phi_1mt + phi_1mt.transpose(0, 2, 1))

        S = np.linalg.solve(self.phi_1, exp_1mtA @ phi_t).transpose(0, 2, 1)
        R = exp_tA - S @ self.exp_A
        sigma = phi_t - S @ exp_1mtA @ phi_t
        sigma = 0.5 * (sigma + sigma.transpose(0, 2, 1))
        w, V = np.linalg.eigh(sigma)
        w = np.clip(w, 0.0, None)
        sigma_cl = (V * w[:, None, :]) @ V.transpose(0, 2, 1)
        sigma_sqrt = (V * np.sqrt(w)[:, None, :]) @ V.transpose(0, 2, 1)
        return BatchNodes(ts, exp_tA, exp_1mtA, phi_t, phi_1mt, sigma_cl, sigma_sqrt, R, S)

    def gain_operators(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-time matrices (M_t, W_t) with feedback gain W_t (y - M_t xi).

        M_t = e^{(1-t)A}, shape (S, n, n); W_t = B^T M_t^T Phi_{1-t}^{-1},
        shape (S, m, n). Times must already be clamped to t <= 1 - delta.
        """
        ts = np.asarray(ts, dtype=float)
        if np.any(ts > 1.0 - self.delta + 1e-12):
            raise ValueError("gain operators need t <= 1 - delta; clamp first")
        batch = self.nodes(ts)
        MB = batch.exp_1mtA @ self.system.B
        W = np.linalg.solve(batch.phi_1mt, MB).transpose(0, 2, 1)
        return batch.exp_1mtA, W


def build_kernel(system: LinearSystem, grid_size: int = 1001, delta: float = 1e-3) -> BridgeKernel:
    """Precompute the bridge kernel cache; refuses uncontrollable systems."""
    return BridgeKernel(system, grid_size=grid_size, delta=delta)
