"""Point-to-point bridges through the three 2-D benchmark systems.

For a fixed endpoint pair, draws the deterministic minimum-energy
interpolant and a fan of noise-pinned stochastic bridges simulated with
Euler-Maruyama under the shared feedback gain. All paths start at x and
are pinned to y at t = 1 regardless of the noise.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from bridgeflow import PointBridgeLaw, build_kernel, builtin_system, det_interpolate, rollout

OUT = __import__("pathlib").Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

x = np.array([-1.5, 0.0])
y = np.array([1.5, 1.0])
ts = np.linspace(0.0, 1.0, 201)

fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
for ax, name in zip(axes, ("double_integrator", "oscillator", "nyquist_johnson")):
    system = builtin_system(name, epsilon=1.0)
    kernel = build_kernel(system)

    # stochastic fan: same gain, noise pinned at both ends
    rng = np.random.default_rng(5)
    batch = rollout(
        system, kernel, PointBridgeLaw(kernel, y),
        np.tile(x, (12, 1)), dt=1e-3, rng=rng, store_stride=5,
    )
    for p in range(batch.n_paths):
        ax.plot(batch.states[p, :, 0], batch.states[p, :, 1], lw=0.5, color="0.65")

    # deterministic interpolant on top
    path = det_interpolate(kernel, x, y, ts)
    ax.plot(path[:, 0], path[:, 1], color="tab:blue", lw=1.8, label="interpolant")
    ax.plot(*x, "o", color="tab:green")
    ax.plot(*y, "X", color="tab:red", markersize=9)
    ax.set_title(name)
axes[0].legend()
fig.tight_layout()
fig.savefig(OUT / "point_bridges.png", dpi=130)
print(f"wrote {OUT / 'point_bridges.png'}")
