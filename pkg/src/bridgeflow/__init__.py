"""Steering probability distributions through linear control systems.

Bridge-based flow matching for systems dX = A X dt + B (u dt + eps dW):
closed-form point-to-point bridges and Gramian feedback gains, an analytic
steering law for Gaussian-to-Gaussian-mixture problems, least-squares
training of a small residual MLP for general targets, Euler-Maruyama
prediction, and MMD / W2 / KDE evaluation.
"""

from .bridges import (
    BridgeSample,
    EndpointPair,
    bridge_gain,
    bridge_marginal,
    det_interpolate,
    sample_training_batch,
    sample_training_pair,
)
from .distributions import (
    Empirical,
    GaussianMixture,
    IndependentCoupling,
    UniformCircle,
    spawn_rngs,
)
from .linalg import gramian, mat_exp, psd_sqrt, solve_spd
from .metrics import MetricCurve, MmdConfig, kde2, mmd, mmd2, mmd_curve, w2
from .mixture_law import MixtureLawContext, mixture_feedback, posterior_mean_y
from .mlp import AdamState, MlpParams, adam_step, init_params, loss_and_grad, mlp_forward
from .rollout import (
    ClosedFormMixtureLaw,
    LearnedLaw,
    PointBridgeLaw,
    TrajectoryBatch,
    moments,
    rollout,
)
from .systems import (
    BridgeKernel,
    LinearSystem,
    build_kernel,
    builtin_system,
    check_controllability,
    controllability_matrix,
    is_controllable,
    mass_spring_system,
)
from .training import TrainConfig, TrainResult, train

__version__ = "0.1.0"
