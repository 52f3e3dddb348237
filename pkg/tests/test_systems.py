import numpy as np
import pytest

from bridgeflow.linalg import gramian, mat_exp
from bridgeflow.systems import (
    LinearSystem,
    UncontrollableSystemError,
    build_kernel,
    builtin_system,
    check_controllability,
    controllability_matrix,
    is_controllable,
    mass_spring_system,
)


class TestControllability:
    def test_double_integrator_controllable(self):
        sys = builtin_system("double_integrator")
        assert is_controllable(sys.A, sys.B)

    def test_zero_input_map(self):
        assert not is_controllable(np.eye(2), np.zeros((2, 1)))

    def test_rank_deficient_diagonal(self):
        report = check_controllability(np.diag([1.0, 2.0]), np.array([[1.0], [0.0]]))
        assert not report.controllable
        assert report.rank == 1

    def test_kalman_matrix(self):
        A = np.diag([1.0, 2.0])
        B = np.array([[1.0], [0.0]])
        np.testing.assert_allclose(controllability_matrix(A, B), [[1.0, 1.0], [0.0, 0.0]])


class TestBuiltins:
    def test_oscillator(self):
        sys = builtin_system("oscillator")
        np.testing.assert_array_equal(sys.A, [[0.0, 5.0], [-5.0, 0.0]])
        np.testing.assert_array_equal(sys.B, [[0.0], [1.0]])

    def test_double_integrator(self):
        sys = builtin_system("double_integrator")
        np.testing.assert_array_equal(sys.A, [[0.0, 1.0], [0.0, 0.0]])

    def test_nyquist_johnson(self):
        sys = builtin_system("nyquist_johnson")
        np.testing.assert_array_equal(sys.A, [[0.0, 1.0], [-1.0, -1.0]])

    def test_all_two_dim_share_input_map(self):
        for name in ("double_integrator", "oscillator", "nyquist_johnson"):
            np.testing.assert_array_equal(builtin_system(name).B, [[0.0], [1.0]])

    @pytest.mark.parametrize("d", [2, 4, 8])
    def test_mass_spring_controllable(self, d):
        sys = builtin_system(f"mass_spring({d})")
        assert sys.n == d
        assert is_controllable(sys.A, sys.B)

    def test_mass_spring_structure(self):
        sys = mass_spring_system(4)
        np.testing.assert_array_equal(sys.A[:2, 2:], np.eye(2))
        np.testing.assert_array_equal(sys.A[2:, :2], [[-2.0, 1.0], [1.0, -1.0]])
        np.testing.assert_array_equal(sys.B[:2], np.zeros((2, 2)))
        np.testing.assert_array_equal(sys.B[2:], np.eye(2))

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown system"):
            builtin_system("pendulum")

    def test_odd_mass_spring_dimension(self):
        with pytest.raises(ValueError, match="even"):
            mass_spring_system(3)

    def test_epsilon_validation(self):
        with pytest.raises(ValueError, match="epsilon"):
            LinearSystem(np.zeros((2, 2)), np.eye(2), epsilon=-1.0)


@pytest.fixture(scope="module")
def di_kernel():
    return build_kernel(builtin_system("double_integrator", epsilon=1.0), grid_size=1001)


class TestBridgeKernel:
    def test_refuses_uncontrollable(self):
        sys = LinearSystem(np.eye(2), np.zeros((2, 1)))
        with pytest.raises(UncontrollableSystemError) as err:
            build_kernel(sys)
        assert err.value.report.rank == 0

    def test_endpoint_sigmas_vanish(self, di_kernel):
        assert np.max(np.abs(di_kernel.node(0.0).sigma)) <= 1e-8
        assert np.max(np.abs(di_kernel.node(1.0).sigma)) <= 1e-8

    def test_gramian_at_one(self, di_kernel):
        np.testing.assert_allclose(
            di_kernel.phi_1, [[1.0 / 3.0, 0.5], [0.5, 1.0]], atol=1e-12
        )

    def test_integrator_degenerates_to_linear_interpolation(self):
        # A = 0, B = I: R_t = (1-t) I, S_t = t I, Sigma_t = t (1-t) I
        sys = LinearSystem(np.zeros((2, 2)), np.eye(2), epsilon=1.0)
        kernel = build_kernel(sys, grid_size=11)
        for t in (0.0, 0.3, 0.5, 1.0):
            node = kernel.node(t)
            np.testing.assert_allclose(node.R, (1 - t) * np.eye(2), atol=1e-12)
            np.testing.assert_allclose(node.S, t * np.eye(2), atol=1e-12)
            np.testing.assert_allclose(node.sigma, t * (1 - t) * np.eye(2), atol=1e-12)
        np.testing.assert_allclose(kernel.node(0.5).sigma, 0.25 * np.eye(2), atol=1e-12)

    def test_r_s_identity_exact(self, di_kernel):
        # R_t = e^{tA} - S_t e^{A} by construction
        for t in (0.0, 0.25, 0.731, 1.0):
            node = di_kernel.node(t)
            np.testing.assert_array_equal(node.R, node.exp_tA - node.S @ di_kernel.exp_A)

    def test_sigma_psd_and_dominated_by_gramian(self, di_kernel):
        rng = np.random.default_rng(1)
        for t in np.linspace(0, 1, 21):
            node = di_kernel.node(t)
            assert np.linalg.eigvalsh(node.sigma)[0] >= -1e-12
            for x in rng.standard_normal((5, 2)):
                assert x @ node.sigma @ x <= x @ node.phi_t @ x + 1e-10

    def test_sigma_sqrt_squares_back(self, di_kernel):
        node = di_kernel.node(0.37)
        np.testing.assert_allclose(node.sigma_sqrt @ node.sigma_sqrt, node.sigma, atol=1e-12)

    def test_offgrid_matches_direct_computation(self, di_kernel):
        sys = di_kernel.system
        for t in (0.0003, 0.2718, 0.9996):
            node = di_kernel.node(t)
            np.testing.assert_allclose(node.exp_tA, mat_exp(sys.A, t), atol=1e-13)
            np.testing.assert_allclose(node.phi_t, gramian(sys.A, sys.B, t), atol=1e-13)
            np.testing.assert_allclose(node.phi_1mt, gramian(sys.A, sys.B, 1 - t), atol=1e-13)

    def test_offgrid_on_coarse_grid_still_exact(self):
        # large off-node offsets exercise the scaled-series path
        sys = builtin_system("oscillator", epsilon=1.0)
        kernel = build_kernel(sys, grid_size=11)
        for t in (0.049, 0.55001, 0.9312):
            node = kernel.node(t)
            np.testing.assert_allclose(node.exp_tA, mat_exp(sys.A, t), atol=1e-12)
            np.testing.assert_allclose(
                node.phi_t, gramian(sys.A, sys.B, t), atol=1e-12
            )

    def test_batch_nodes_match_scalar(self, di_kernel):
        ts = np.array([0.1, 0.333, 0.77])
        batch = di_kernel.nodes(ts)
        for i, t in enumerate(ts):
            node = di_kernel.node(float(t))
            np.testing.assert_allclose(batch.R[i], node.R, atol=1e-13)
            np.testing.assert_allclose(batch.S[i], node.S, atol=1e-13)
            np.testing.assert_allclose(batch.sigma[i], node.sigma, atol=1e-13)

    def test_clamp(self, di_kernel):
        assert di_kernel.clamp(0.3) == 0.3
        assert di_kernel.clamp(1.0) == 1.0 - di_kernel.delta

    def test_grid_validation(self):
        sys = builtin_system("double_integrator")
        with pytest.raises(ValueError):
            build_kernel(sys, grid_size=1)
        with pytest.raises(ValueError):
            build_kernel(sys, delta=0.7)

    def test_gain_operators_match_node(self, di_kernel):
        ts = np.array([0.2, 0.8])
        M, W = di_kernel.gain_operators(ts)
        for i, t in enumerate(ts):
            node = di_kernel.node(float(t))
            np.testing.assert_allclose(M[i], node.exp_1mtA, atol=1e-13)
            want = di_kernel.system.B.T @ node.exp_1mtA.T @ np.linalg.inv(node.phi_1mt)
            np.testing.assert_allclose(W[i], want, rtol=1e-9)
