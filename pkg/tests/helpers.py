"""Shared test oracles.

The steering oracle integrates the controlled ODE independently of the
interpolant formulas: classical RK4 with time-matched stage evaluations,
geometric step refinement approaching t = 1 (the pinning gain is singular
there and amplifies stage-state errors like (dt/(1-t))^2), and a single
Euler step across the final clamped interval, mirroring the rollout
contract that the law is never evaluated at t = 1.
"""

import numpy as np


def rk4_steer(kernel, xs, ys, dt=1e-4, refine_window=64, refine_factor=64):
    """Integrate dX/dt = A X + B k(t, X) from t=0 to 1 for each (x, y) row."""
    A, B = kernel.system.A, kernel.system.B
    steps = int(round(1.0 / dt))
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))

    coarse_end = max(steps - refine_window, 0)
    half = np.linspace(0.0, coarse_end * dt, 2 * coarse_end + 1)
    Mc, Wc = kernel.gain_operators(kernel.clamp(half))

    def make_f(M, W):
        def f(i, state):
            return state @ A.T + ((ys - state @ M[i].T) @ W[i].T) @ B.T

        return f

    fc = make_f(Mc, Wc)
    X = xs.copy()
    for k in range(coarse_end):
        i = 2 * k
        k1 = fc(i, X)
        k2 = fc(i + 1, X + 0.5 * dt * k1)
        k3 = fc(i + 1, X + 0.5 * dt * k2)
        k4 = fc(i + 2, X + dt * k3)
        X = X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    h = dt / refine_factor
    n_fine = (steps - coarse_end - 1) * refine_factor
    halff = coarse_end * dt + np.arange(2 * n_fine + 1) * (0.5 * h)
    Mf, Wf = kernel.gain_operators(kernel.clamp(halff))
    ff = make_f(Mf, Wf)
    for k in range(n_fine):
        i = 2 * k
        k1 = ff(i, X)
        k2 = ff(i + 1, X + 0.5 * h * k1)
        k3 = ff(i + 1, X + 0.5 * h * k2)
        k4 = ff(i + 2, X + h * k3)
        X = X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    # final interval [1-dt, 1]: one Euler step with the law at the clamp
    return X + dt * ff(2 * n_fine, X)
