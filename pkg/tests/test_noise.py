import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from noisyoptics import noise as nz
from noisyoptics.circuits import bs_matrix
from noisyoptics.rng import CounterStream

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)


def draws(n, seed=0):
    rng = np.random.default_rng(seed)
    return nz.StochasticDraw(*(rng.normal(size=n) * 2 for _ in range(8)))


def unitary_err(u):
    eye = np.eye(u.shape[-1])
    return np.abs(u @ np.conj(np.swapaxes(u, -1, -2)) - eye).max()


class TestEpsilon:
    def test_values(self):
        assert nz.epsilon_from_p(0) == 0
        assert nz.epsilon_from_p(0.432332358381693654) == pytest.approx(1, abs=1e-12)
        assert nz.epsilon_from_p(0.01) == pytest.approx(0.1005054906896122, abs=1e-14)

    def test_domain(self):
        for p in (-0.1, 0.5, 0.7):
            with pytest.raises(nz.NoiseDomainError):
                nz.epsilon_from_p(p)

    @given(st.floats(0, 0.499))
    def test_inverse(self, p):
        assert nz.p_from_epsilon(nz.epsilon_from_p(p)) == pytest.approx(p, abs=1e-12)

    def test_monotone(self):
        ps = np.linspace(0, 0.49, 50)
        eps = [nz.epsilon_from_p(p) for p in ps]
        assert np.all(np.diff(eps) > 0)


class TestIcs:
    def test_covariance_examples(self):
        assert nz.ics_covariance(0) == pytest.approx((1, 0, 0))
        assert nz.ics_covariance(math.pi) == pytest.approx((0.5, 0.5, 0), abs=1e-15)
        assert nz.ics_covariance(math.pi / 2) == pytest.approx((0.5, 0.5, 1 / math.pi))

    @given(st.floats(-20, 20))
    def test_variances_sum_to_one(self, t):
        vc, vs, cov = nz.ics_covariance(t)
        assert vc + vs == pytest.approx(1)
        assert cov * cov <= vc * vs + 1e-12

    def test_zero_stream(self):
        class Zeros:
            def standard_normal(self, size):
                return np.zeros(size)

        assert nz.draw_ics(1.0, Zeros()) == (0.0, 0.0)

    def test_degenerate_row(self):
        stream = CounterStream(4, 0, 0)
        for _ in range(20):
            assert nz.draw_ics(0.0, stream)[1] == 0.0

    @pytest.mark.parametrize("theta", [0.0, math.pi / 2, math.pi])
    def test_sample_covariance(self, theta):
        z = np.random.default_rng(1).normal(size=(2, 10**6))
        ic, is_ = nz.ics_from_normals(theta, z[0], z[1])
        want = nz.ics_covariance(theta)
        n = z.shape[1]
        for got, w, x, y in (
            (np.mean(ic * ic), want[0], ic, ic),
            (np.mean(is_ * is_), want[1], is_, is_),
            (np.mean(ic * is_), want[2], ic, is_),
        ):
            sigma = np.std(x * y) / math.sqrt(n)
            assert abs(got - w) <= 3 * sigma + 1e-15


class TestPhaseShifter:
    def test_noiseless(self):
        u = nz.noisy_phase_shifter(0.7, 0.0, draws(1))
        assert np.allclose(u, np.diag([np.exp(0.7j), 1]))
        assert np.allclose(nz.noisy_phase_shifter_traced(0.7, 0.0, draws(1)), np.exp(0.7j))

    def test_full_swap(self):
        u = nz.noisy_phase_shifter(0.0, 1.0, nz.StochasticDraw(i_c=math.pi / 2))
        assert np.allclose(u, [[0, 1j], [1j, 0]])

    def test_traced_value(self):
        g = nz.noisy_phase_shifter_traced(0.0, 1.0, nz.StochasticDraw(i_c=math.pi / 3))
        assert g[0, 0] == pytest.approx(0.5)

    def test_unitary(self):
        u = nz.noisy_phase_shifter(1.3, 0.8, draws(10**4))
        assert unitary_err(u) < 1e-12

    def test_traced_is_corner_of_untraced(self):
        d = draws(100)
        full = nz.noisy_phase_shifter(0.4, 0.3, d)
        traced = nz.noisy_phase_shifter_traced(0.4, 0.3, d)
        # vacuum in the virtual mode: physical amplitude is the (0, 0) entry
        # times the loss part of the other factor
        assert np.all(np.abs(traced[:, 0, 0]) <= 1 + 1e-15)
        assert np.allclose(np.abs(full[:, 0, 0]) ** 2 + np.abs(full[:, 1, 0]) ** 2, 1)

    def test_mean_survival(self):
        theta, p = 0.9, 0.01
        eps = nz.epsilon_from_p(p)
        z = np.random.default_rng(3).normal(size=(2, 10**5))
        ic, is_ = nz.ics_from_normals(theta, z[0], z[1])
        g = nz.noisy_phase_shifter_traced(theta, eps, nz.StochasticDraw(i_c=ic, i_s=is_))
        s = np.abs(g[:, 0, 0]) ** 2
        assert abs(s.mean() - (1 - eps**2)) <= 3 * s.std() / math.sqrt(s.size) + eps**4


class TestBeamSplitter:
    def test_noiseless(self):
        want = np.eye(3, dtype=complex)
        want[:2, :2] = bs_matrix(1.1, 0.2)
        assert np.allclose(nz.noisy_beam_splitter(1.1, 0.2, 0, 0, draws(1)), want)
        assert np.allclose(nz.noisy_beam_splitter(1.1, 0.2, 0.4, 0.4, nz.ZERO_DRAW), want)
        assert np.allclose(nz.noisy_beam_splitter_traced(1.1, 0.2, 0, 0, draws(1)), bs_matrix(1.1, 0.2))

    def test_unitary(self):
        assert unitary_err(nz.noisy_beam_splitter(2.0, 0.5, 0.3, 0.6, draws(10**4))) < 1e-12

    def test_traced_damping_at_zero_angle(self):
        d = nz.StochasticDraw(i_c=0.3, i_s=0.4, i_c1=0.5, i_s1=0.6)
        g = nz.noisy_beam_splitter_traced(0.0, 0.0, 1.0, 1.0, d)
        assert np.allclose(g, np.diag([math.cos(0.3) * math.cos(0.6), math.cos(0.4) * math.cos(0.5)]))

    def test_traced_singular_values(self):
        g = nz.noisy_beam_splitter_traced(1.7, 0.3, 0.5, 0.9, draws(10**3))
        assert np.linalg.svd(g, compute_uv=False).max() <= 1 + 1e-12


class TestDepolarization:
    def test_examples(self):
        assert np.allclose(nz.depolarization_layer(0.0, draws(1)), np.eye(2))
        assert np.allclose(nz.depolarization_layer(1.0, nz.StochasticDraw(w_x=math.pi)), -np.eye(2))
        assert np.allclose(nz.depolarization_layer(1.0, nz.StochasticDraw(w_x=math.pi / 2)), [[0, 1j], [1j, 0]])

    def test_unitary(self):
        assert unitary_err(nz.depolarization_layer(0.7, draws(10**4))) < 1e-12


class TestLoss:
    def test_examples(self):
        assert np.allclose(nz.loss_channel_traced(0.0, draws(1)), 1)
        assert abs(nz.loss_channel_traced(1.0, nz.StochasticDraw(w=math.pi / 2))[0, 0]) < 1e-15
        assert unitary_err(nz.loss_channel(0.5, draws(10**4))) < 1e-12

    @pytest.mark.parametrize("p", [0.01, 0.05, 0.1])
    def test_calibration(self, p):
        eps = nz.epsilon_from_p(p)
        w = np.random.default_rng(7).normal(size=10**5)
        s = np.abs(nz.loss_channel_traced(eps, nz.StochasticDraw(w=w))[:, 0, 0]) ** 2
        exact = (1 + math.exp(-2 * eps * eps)) / 2
        assert exact == pytest.approx(1 - p)
        assert abs(s.mean() - exact) <= 3 * s.std() / math.sqrt(s.size)


class TestSecondOrderFactorization:
    """Factored rotations vs the joint exponential of the same generator.

    The difference is a commutator term proportional to ``eps^2 I_C I_S``; it
    averages out when ``I_C`` and ``I_S`` are uncorrelated, leaving a higher
    order residual.
    """

    @staticmethod
    def diff(eps, ic, is_):
        factored = nz.rot_b(eps * ic) @ nz.rot_c(eps * is_)
        joint = expm(1j * eps * (ic * SX - is_ * SY))
        return factored - joint

    def test_pointwise_second_order(self):
        grid = np.array([0.01, 0.02, 0.05])
        norms = [np.abs(self.diff(e, 0.8, -1.1)).max() for e in grid]
        slope = np.polyfit(np.log(grid), np.log(norms), 1)[0]
        assert slope == pytest.approx(2, abs=0.05)

    def test_exact_when_one_integral_vanishes(self):
        assert np.abs(self.diff(0.05, 0.8, 0.0)).max() < 1e-15
        assert np.abs(self.diff(0.05, 0.0, 0.8)).max() < 1e-15

    def test_mean_is_higher_order_when_uncorrelated(self):
        x, w = np.polynomial.hermite_e.hermegauss(21)
        w = w / w.sum()
        sd = math.sqrt(0.5)  # theta_eff = pi: var_c = var_s = 1/2, cov = 0
        grid = np.array([0.01, 0.02, 0.05])
        norms = []
        for e in grid:
            acc = sum(wi * wj * self.diff(e, sd * xi, sd * xj) for xi, wi in zip(x, w) for xj, wj in zip(x, w))
            norms.append(np.abs(acc).max())
        slope = np.polyfit(np.log(grid), np.log(norms), 1)[0]
        assert slope >= 2.9
