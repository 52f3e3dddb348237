"""Regressing the steering law with the residual MLP.

Shortened training run (2000 iterations instead of the production 10^4)
on the Gaussian-to-mixture problem, then a side-by-side of the learned
control field against the closed-form law along a probe line, and a
rollout MMD check.
"""

import numpy as np

from bridgeflow import (
    GaussianMixture,
    IndependentCoupling,
    LearnedLaw,
    MixtureLawContext,
    TrainConfig,
    build_kernel,
    builtin_system,
    mixture_feedback,
    mlp_forward,
    mmd,
    rollout,
    train,
)

system = builtin_system("double_integrator", epsilon=1.0)
kernel = build_kernel(system)
p0 = GaussianMixture.standard(2)
p1 = GaussianMixture(
    np.array([0.5, 0.5]),
    np.array([[-2.5, 0.0], [2.5, 0.0]]),
    np.stack([0.25 * np.eye(2)] * 2),
)
coupling = IndependentCoupling(p0, p1)

config = TrainConfig(iterations=2000, dataset_size=1000, batch_size=64, seed=12)
result = train(system, coupling, config, kernel=kernel)
print(f"loss: first-100 mean {result.loss_trace[:100].mean():.1f}, "
      f"last-100 mean {result.loss_trace[-100:].mean():.1f}")

ctx = MixtureLawContext(kernel, p0, p1)
t = 0.5
print(f"\ncontrol field at t={t} along the x_1 axis:")
print(f"{'x_1':>6} {'learned':>9} {'closed':>9}")
for x1 in (-3.0, -1.5, 0.0, 1.5, 3.0):
    xi = np.array([x1, 0.0])
    got = mlp_forward(result.params, t, xi)[0]
    want = mixture_feedback(ctx, t, xi)[0]
    print(f"{x1:6.1f} {got:9.3f} {want:9.3f}")

rng = np.random.default_rng(1)
batch = rollout(
    system, kernel, LearnedLaw(result.params), p0.sample(2000, rng),
    dt=1e-3, rng=rng, store_stride=100,
)
score = mmd(batch.terminal(), p1.sample(2000, rng)) / mmd(p0.sample(2000, rng), p1.sample(2000, rng))
print(f"\nnormalized terminal MMD after 2000 iterations: {score:.3f}")
print("(the production configs in configs/ train for 10^4 iterations)")
