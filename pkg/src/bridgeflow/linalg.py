"""Dense small-matrix numerics shared by every bridge formula.

Matrix exponentials, controllability Gramians, symmetric PSD square roots
and SPD solves, for small (n <= ~100) dense systems. All functions accept
array-likes and return float64 ndarrays; none mutate their inputs.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "NotPsdError",
    "SingularMatrixError",
    "mat_exp",
    "gramian",
    "gramian_and_exp",
    "psd_sqrt",
    "solve_spd",
    "symmetrize",
    "require_symmetric",
    "require_psd",
]

#: Relative Frobenius tolerance for symmetry checks.
SYMMETRY_RTOL = 1e-10

#: Eigenvalues above -PSD_EIG_RTOL * spectral_norm count as nonnegative.
PSD_EIG_RTOL = 1e-8


class NotPsdError(ValueError):
    """Raised when a matrix required to be PSD has a genuinely negative eigenvalue."""


class SingularMatrixError(ValueError):
    """Raised when an SPD solve meets a (near-)singular matrix.

    Attributes
    ----------
    min_eigenvalue : float
        Smallest eigenvalue of the offending matrix.
    """

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = float(min_eigenvalue)


def _as_matrix(M, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _as_square(M, name: str = "matrix") -> np.ndarray:
    M = _as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def symmetrize(S) -> np.ndarray:
    """Return the symmetric part (S + S^T)/2."""
    S = _as_square(S)
    return 0.5 * (S + S.T)


def require_symmetric(S, rtol: float = SYMMETRY_RTOL, name: str = "matrix") -> np.ndarray:
    """Validate symmetry to a relative Frobenius tolerance; return the symmetrized matrix."""
    S = _as_square(S, name)
    scale = np.linalg.norm(S, "fro")
    dev = np.linalg.norm(S - S.T, "fro")
    if dev > rtol * max(scale, 1e-300):
        raise ValueError(f"{name} is not symmetric: rel. asymmetry {dev / max(scale, 1e-300):.3e}")
    return 0.5 * (S + S.T)


def require_psd(S, eig_rtol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    """Validate that S is symmetric PSD; return the symmetrized matrix.

    Eigenvalues are allowed to dip to -eig_rtol * spectral_norm to absorb
    roundoff; anything lower raises NotPsdError.
    """
    S = require_symmetric(S, name=name)
    w = np.linalg.eigvalsh(S)
    spectral = max(abs(w[0]), abs(w[-1]), 1e-300)
    if w[0] < -eig_rtol * spectral:
        raise NotPsdError(f"{name} has negative eigenvalue {w[0]:.3e} (spectral norm {spectral:.3e})")
    return S


def mat_exp(M, t: float = 1.0) -> np.ndarray:
    """Matrix exponential e^{M t}.

    t may be negative. Uses scaling-and-squaring with a Pade core
    (scipy.linalg.expm).
    """
    M = _as_square(M)
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    return scipy.linalg.expm(M * t)


def gramian_and_exp(A, B, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Controllability Gramian and e^{A t} from one block exponential.

    Exponentiates the block matrix [[-A, B B^T], [0, A^T]] scaled by t and
    reads off Phi_t = integral_0^t e^{(t-s)A} B B^T e^{(t-s)A^T} ds together
    with e^{A t} (Van Loan's method).

    Returns
    -------
    (Phi_t, expAt) : pair of ndarrays, Phi_t symmetrized.
    """
    A = _as_square(A, "A")
    B = _as_matrix(B, "B")
    n = A.shape[0]
    if B.shape[0] != n:
        raise ValueError(f"B must have {n} rows to match A, got shape {B.shape}")
    t = float(t)
    if t < 0:
        raise ValueError("Gramian time must be nonnegative")
    C = np.zeros((2 * n, 2 * n))
    C[:n, :n] = -A
    C[:n, n:] = B @ B.T
    C[n:, n:] = A.T
    E = scipy.linalg.expm(C * t)
    expAt = E[n:, n:].T.copy()
    phi = expAt @ E[:n, n:]
    return 0.5 * (phi + phi.T), expAt


def gramian(A, B, t: float) -> np.ndarray:
    """Controllability Gramian Phi_t = int_0^t e^{(t-s)A} B B^T e^{(t-s)A^T} ds.

    Phi_0 = 0; Phi_t is PSD, and strictly PD for t > 0 when (A, B) is
    controllable.
    """
    phi, _ = gramian_and_exp(A, B, t)
    return phi


def psd_sqrt(S) -> np.ndarray:
    """Symmetric square root R of a PSD matrix, R @ R = S.

    Eigenvalues in [-PSD_EIG_RTOL * spectral_norm, 0) are clamped to zero;
    lower ones raise NotPsdError.
    """
    S = require_symmetric(S, name="psd_sqrt input")
    w, V = np.linalg.eigh(S)
    spectral = max(abs(w[0]), abs(w[-1]), 1e-300)
    if w[0] < -PSD_EIG_RTOL * spectral:
        raise NotPsdError(f"psd_sqrt input has negative eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    R = (V * np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)


def solve_spd(S, V) -> np.ndarray:
    """Solve S @ X = V for symmetric positive definite S via Cholesky.

    Raises SingularMatrixError (carrying the smallest eigenvalue) when S is
    not numerically SPD.
    """
    S = require_symmetric(S, name="solve_spd matrix")
    V = np.asarray(V, dtype=float)
    rhs = V.reshape(-1, 1) if V.ndim == 1 else V
    if rhs.shape[0] != S.shape[0]:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, expected {S.shape[0]}")
    try:
        c, low = scipy.linalg.cho_factor(S, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own
        raise SingularMatrixError(str(exc), np.linalg.eigvalsh(S)[0]) from exc
    except scipy.linalg.LinAlgError as exc:
        min_eig = float(np.linalg.eigvalsh(S)[0])
        raise SingularMatrixError(
            f"matrix is not positive definite (min eigenvalue {min_eig:.3e})", min_eig
        ) from exc
    X = scipy.linalg.cho_solve((c, low), rhs, check_finite=False)
    return X[:, 0] if V.ndim == 1 else X
