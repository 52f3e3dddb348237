import numpy as np
import pytest

from bridgeflow.distributions import (
    Empirical,
    GaussianMixture,
    IndependentCoupling,
    UniformCircle,
    spawn_rngs,
)


def two_mixture(sep=2.5, scale=0.25):
    return GaussianMixture(
        np.array([0.5, 0.5]),
        np.array([[-sep, 0.0], [sep, 0.0]]),
        np.stack([scale * np.eye(2)] * 2),
    )


class TestGaussianMixture:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            GaussianMixture(np.array([0.6, 0.6]), np.zeros((2, 2)), np.stack([np.eye(2)] * 2))

    def test_covariance_must_be_psd(self):
        with pytest.raises(ValueError, match="PSD"):
            GaussianMixture.single(np.zeros(2), np.diag([1.0, -1.0]))

    def test_gaussian_sample_mean_clt(self):
        rng = np.random.default_rng(0)
        n = 100_000
        samples = GaussianMixture.standard(2).sample(n, rng)
        assert np.all(np.abs(samples.mean(axis=0)) <= 4.0 / np.sqrt(n))

    def test_degenerate_weights_select_one_component(self):
        gm = GaussianMixture(
            np.array([1.0, 0.0]),
            np.array([[0.0, 0.0], [100.0, 100.0]]),
            np.stack([1e-6 * np.eye(2)] * 2),
        )
        samples = gm.sample(500, np.random.default_rng(1))
        assert np.all(np.linalg.norm(samples, axis=1) < 1.0)

    def test_component_frequencies_match_weights(self):
        w = 0.3
        gm = GaussianMixture(
            np.array([w, 1 - w]),
            np.array([[-50.0, 0.0], [50.0, 0.0]]),
            np.stack([np.eye(2)] * 2),
        )
        n = 20_000
        samples = gm.sample(n, np.random.default_rng(2))
        frac = np.mean(samples[:, 0] < 0)
        assert abs(frac - w) <= 4.0 * np.sqrt(w * (1 - w) / n)

    def test_log_density_standard_normal_at_mode(self):
        gm = GaussianMixture.single(np.zeros(1), np.eye(1))
        assert gm.log_density(np.zeros(1)) == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-12)

    def test_log_density_against_direct_sum(self):
        gm = two_mixture()
        rng = np.random.default_rng(3)
        pts = rng.normal(scale=3.0, size=(50, 2))
        # direct dense-formula oracle
        def dens(p):
            total = 0.0
            for w, m, Q in zip(gm.weights, gm.means, gm.covs):
                dev = p - m
                total += (
                    w
                    * np.exp(-0.5 * dev @ np.linalg.solve(Q, dev))
                    / np.sqrt((2 * np.pi) ** 2 * np.linalg.det(Q))
                )
            return np.log(total)

        got = gm.log_density(pts)
        want = np.array([dens(p) for p in pts])
        np.testing.assert_allclose(got, want, rtol=1e-10)

    def test_density_integrates_to_one(self):
        gm = two_mixture()
        g = np.linspace(-8, 8, 401)
        xx, yy = np.meshgrid(g, g, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        mass = np.exp(gm.log_density(pts)).sum() * (g[1] - g[0]) ** 2
        assert abs(mass - 1.0) <= 1e-3

    def test_symmetric_midpoint_mixes_equally(self):
        gm = two_mixture()
        midline = np.array([0.0, 0.7])
        one = GaussianMixture.single(gm.means[0], gm.covs[0])
        # at the symmetry axis the mixture density is twice one component's
        np.testing.assert_allclose(
            gm.log_density(midline),
            one.log_density(midline) + np.log(1.0),
            atol=1e-9,
        )

    def test_marginal(self):
        gm = GaussianMixture.single(np.array([1.0, 2.0, 3.0]), np.diag([1.0, 4.0, 9.0]))
        marg = gm.marginal([1, 2])
        np.testing.assert_array_equal(marg.means, [[2.0, 3.0]])
        np.testing.assert_array_equal(marg.covs[0], np.diag([4.0, 9.0]))


class TestUniformCircle:
    def test_samples_on_circumference(self):
        circ = UniformCircle((0.0, 0.0), 3.0)
        samples = circ.sample(1000, np.random.default_rng(0))
        np.testing.assert_allclose(np.linalg.norm(samples, axis=1), 3.0, atol=1e-12)

    def test_center_offset(self):
        circ = UniformCircle((1.0, -2.0), 0.5)
        samples = circ.sample(1000, np.random.default_rng(1))
        np.testing.assert_allclose(
            np.linalg.norm(samples - [1.0, -2.0], axis=1), 0.5, atol=1e-12
        )

    def test_angle_uniformity(self):
        samples = UniformCircle((0, 0), 1.0).sample(20_000, np.random.default_rng(2))
        angles = np.arctan2(samples[:, 1], samples[:, 0])
        hist, _ = np.histogram(angles, bins=8, range=(-np.pi, np.pi))
        assert hist.min() > 0.8 * 20_000 / 8


class TestEmpirical:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            Empirical(tmp_path / "nope.csv")

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ValueError, match="ragged"):
            Empirical(path)

    def test_roundtrip_samples(self, tmp_path):
        path = tmp_path / "samples.csv"
        path.write_text("x_1,x_2\n1.0,2.0\n3.0,4.0\n")
        emp = Empirical(path)
        assert emp.samples.shape == (2, 2)
        draws = emp.sample(100, np.random.default_rng(0))
        assert set(map(tuple, draws)) <= {(1.0, 2.0), (3.0, 4.0)}


class TestCoupling:
    def test_shapes(self):
        coup = IndependentCoupling(GaussianMixture.standard(2), two_mixture())
        xs, ys = coup.draw_pairs(64, np.random.default_rng(0))
        assert xs.shape == (64, 2) and ys.shape == (64, 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimensions differ"):
            IndependentCoupling(GaussianMixture.standard(2), GaussianMixture.standard(3))

    def test_point_masses_give_constant_pairs(self):
        p0 = GaussianMixture.single(np.array([1.0, 2.0]), 0.0 * np.eye(2))
        p1 = GaussianMixture.single(np.array([-1.0, 0.0]), 0.0 * np.eye(2))
        xs, ys = IndependentCoupling(p0, p1).draw_pairs(10, np.random.default_rng(0))
        np.testing.assert_array_equal(xs, np.tile([1.0, 2.0], (10, 1)))
        np.testing.assert_array_equal(ys, np.tile([-1.0, 0.0], (10, 1)))

    def test_independence_correlation_bound(self):
        n = 40_000
        coup = IndependentCoupling(GaussianMixture.standard(2), GaussianMixture.standard(2))
        xs, ys = coup.draw_pairs(n, np.random.default_rng(4))
        for i in range(2):
            for j in range(2):
                corr = np.corrcoef(xs[:, i], ys[:, j])[0, 1]
                assert abs(corr) <= 4.0 / np.sqrt(n)


class TestDeterminism:
    def test_identical_seed_identical_stream(self):
        gm = two_mixture()
        a = gm.sample(100, np.random.default_rng(123))
        b = gm.sample(100, np.random.default_rng(123))
        np.testing.assert_array_equal(a, b)

    def test_spawned_streams_stable_and_distinct(self):
        r1 = spawn_rngs(7, 3)
        r2 = spawn_rngs(7, 3)
        vals1 = [r.standard_normal(4) for r in r1]
        vals2 = [r.standard_normal(4) for r in r2]
        for a, b in zip(vals1, vals2):
            np.testing.assert_array_equal(a, b)
        assert not np.allclose(vals1[0], vals1[1])
