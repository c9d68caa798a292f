import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from nordwave import linear
from nordwave.linear import ModeState, linear_energy_bound, propagate_mode, propagate_zero_mode, solve_linear
from nordwave.spectral import SpectralField, make_field, random_field, sobolev_norm, zeros


def mode_oracle(ksq, kappa, u0, v0, t, source=None):
    """Integrate u'' + 2 kappa u' + |k|^2 u = source(s) with a high-order adaptive method."""
    def rhs(s, y):
        u, v = y[0] + 1j * y[1], y[2] + 1j * y[3]
        a = -2 * kappa * v - ksq * u + (0 if source is None else source(s))
        return [v.real, v.imag, a.real, a.imag]
    sol = solve_ivp(rhs, (0, t), [u0.real, u0.imag, v0.real, v0.imag], method="DOP853", rtol=1e-13, atol=1e-14)
    y = sol.y[:, -1]
    return y[0] + 1j * y[1], y[2] + 1j * y[3]


def lines_oracle(f, g, kappa, times, forcing=None):
    """Method of lines on every stored mode at once."""
    ksq = f.lattice.ksq.ravel()
    n = ksq.size

    def rhs(s, y):
        u = y[:n] + 1j * y[n:2 * n]
        v = y[2 * n:3 * n] + 1j * y[3 * n:]
        a = -2 * kappa * v - ksq * u
        if forcing is not None:
            a = a + math.exp(-kappa * s) * forcing(s).coeffs.ravel()
        return np.concatenate([v.real, v.imag, a.real, a.imag])
    y0 = np.concatenate([f.coeffs.ravel().real, f.coeffs.ravel().imag, g.coeffs.ravel().real, g.coeffs.ravel().imag])
    sol = solve_ivp(rhs, (times[0], times[-1]), y0, t_eval=times, method="DOP853", rtol=1e-12, atol=1e-14)
    shape = f.coeffs.shape
    return [SpectralField((sol.y[:n, i] + 1j * sol.y[n:2 * n, i]).reshape(shape)) for i in range(len(times))]


class TestPropagateMode:
    def test_zero(self):
        out = propagate_mode((1, 0, 0), 0.5, ModeState((1, 0, 0), 0, 0), t=3.0)
        assert out.u_hat == 0 and out.v_hat == 0

    def test_closed_form(self):
        nu = math.sqrt(0.75)
        exact = math.exp(-0.5) * (math.cos(nu) + 0.5 / nu * math.sin(nu))
        out = propagate_mode((1, 0, 0), 0.5, ModeState((1, 0, 0), 1.0, 0.0), t=1.0)
        u_ode, _ = mode_oracle(1.0, 0.5, 1.0 + 0j, 0j, 1.0)
        assert out.u_hat.real == pytest.approx(exact, abs=1e-14)
        assert abs(out.u_hat - u_ode) < 1e-12

    def test_forced(self):
        out = propagate_mode((2, 1, 0), 0.3, ModeState((2, 1, 0), 0, 0), forcing=lambda s: np.exp(0.3 * s), t=2.0)
        u, v = mode_oracle(5.0, 0.3, 0j, 0j, 2.0, source=lambda s: 1.0)
        assert abs(out.u_hat - u) < 1e-9 and abs(out.v_hat - v) < 1e-9

    def test_rejects_zero_mode(self):
        with pytest.raises(ValueError):
            propagate_mode((0, 0, 0), 0.5, ModeState((0, 0, 0), 1, 0), t=1.0)

    @pytest.mark.parametrize("kappa", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_kappa(self, kappa):
        with pytest.raises(ValueError):
            propagate_mode((1, 0, 0), kappa, ModeState((1, 0, 0), 1, 0), t=1.0)

    def test_near_critical_damping(self):
        # nu^2 = |k|^2 - kappa^2 is small for |k| = 1, kappa close to 1
        out = propagate_mode((1, 0, 0), 0.999999, ModeState((1, 0, 0), 1.0, 0.5), t=2.0)
        u, v = mode_oracle(1.0, 0.999999, 1.0 + 0j, 0.5 + 0j, 2.0)
        assert abs(out.u_hat - u) < 1e-11 and abs(out.v_hat - v) < 1e-11


class TestZeroMode:
    def test_equilibrium(self):
        for t in (0.0, 1.0, 50.0):
            assert propagate_zero_mode(0.4, 1.0, 0.0, t=t) == 1.0

    def test_velocity_only(self):
        k = 0.4
        for t in (0.5, 3.0, 40.0):
            assert propagate_zero_mode(k, 0.0, 2 * k, t=t) == pytest.approx(1 - math.exp(-2 * k * t), rel=1e-14)

    def test_constant_forcing(self):
        k, a0 = 0.5, 0.3
        for t in (0.5, 2.0, 10.0):
            exact = a0 / (2 * k) / k * (1 - math.exp(-k * t)) ** 2
            assert propagate_zero_mode(k, 0.0, 0.0, forcing=lambda s: a0, t=t) == pytest.approx(exact, rel=1e-12)

    def test_vs_oracle(self):
        k = 0.3
        F = lambda s: 0.2 + 0.1 * np.sin(s)  # noqa: E731
        u, v = propagate_zero_mode(k, 0.1, 0.05, forcing=F, t=7.0, return_derivative=True)
        uo, vo = mode_oracle(0.0, k, 0.1 + 0j, 0.05 + 0j, 7.0, source=lambda s: math.exp(-k * s) * F(s))
        assert abs(u - uo) < 1e-10 and abs(v - vo) < 1e-10


class TestSolveLinear:
    def test_zero(self):
        states = solve_linear(zeros(2), zeros(2), None, 0.5, [0, 1, 2])
        assert all(np.abs(s.u.coeffs).max() == 0 for s in states)

    def test_decoupling(self):
        f = make_field(3, [((1, 0, 0), 0.5)])
        s = solve_linear(f, zeros(3), None, 0.5, [0.0, 1.5])[-1]
        mode = propagate_mode((1, 0, 0), 0.5, ModeState((1, 0, 0), 0.5, 0), t=1.5)
        assert s.u.coeff((1, 0, 0)) == pytest.approx(mode.u_hat, abs=1e-15)
        assert s.u.coeff((-1, 0, 0)) == pytest.approx(mode.u_hat, abs=1e-15)
        mask = np.ones(s.u.coeffs.shape, bool)
        mask[4, 3, 3] = mask[2, 3, 3] = False
        assert np.abs(s.u.coeffs[mask]).max() == 0

    def test_vs_method_of_lines(self):
        rng = np.random.default_rng(4)
        f = random_field(2, rng, amplitude=0.3, decay=1.0)
        g = random_field(2, rng, amplitude=0.3, decay=1.0)
        prof = random_field(2, rng, amplitude=0.1, decay=2.0)
        forcing = lambda s: prof * (1.0 + 0.5 * math.cos(s))  # noqa: E731
        times = list(np.linspace(0, 5, 11))
        ours = solve_linear(f, g, forcing, 0.5, times)
        ref = lines_oracle(f, g, 0.5, times, forcing)
        for a, b in zip(ours, ref):
            assert sobolev_norm(a.u - b, 3) < 1e-8

    def test_semigroup(self):
        rng = np.random.default_rng(8)
        f, g = random_field(3, rng), random_field(3, rng)
        direct = solve_linear(f, g, None, 0.35, [0.0, 4.0])[-1]
        half = solve_linear(f, g, None, 0.35, [0.0, 1.3])[-1]
        split = solve_linear(half.u, half.ut, None, 0.35, [0.0, 2.7])[-1]
        scale = np.abs(direct.u.coeffs).max()
        assert np.abs(split.u.coeffs - direct.u.coeffs).max() < 1e-11 * scale
        assert np.abs(split.ut.coeffs - direct.ut.coeffs).max() < 1e-11 * scale

    def test_rejects_mismatched_radii(self):
        with pytest.raises(ValueError):
            solve_linear(zeros(2), zeros(3), None, 0.5, [0, 1])

    def test_times_must_start_at_zero(self):
        with pytest.raises(ValueError):
            solve_linear(zeros(2), zeros(2), None, 0.5, [1, 2])


class TestEnergyBound:
    def test_zero(self):
        assert linear_energy_bound(zeros(2), zeros(2), [0.0], 0.5, 2, 3.0) == 0.0

    def test_cosine_at_zero(self):
        f = make_field(2, [((1, 0, 0), 0.5)])
        assert linear_energy_bound(f, zeros(2), [0.0], 0.5, 2, 0.0) == pytest.approx(2.5, rel=1e-15)

    @settings(max_examples=50)
    @given(st.integers(0, 2**31), st.floats(0.05, 0.8), st.floats(0.0, 0.3))
    def test_dominates_solution(self, seed, kappa, forcing_amp):
        rng = np.random.default_rng(seed)
        f, g = random_field(2, rng, decay=2.0), random_field(2, rng, decay=1.0)
        prof = random_field(2, rng, amplitude=forcing_amp, decay=2.0)
        forcing = lambda s: prof * math.cos(s)  # noqa: E731
        times = np.linspace(0.0, 6.0, 25)
        states = solve_linear(f, g, forcing, kappa, times)
        for i, s in enumerate(states):
            ts = np.linspace(0.0, times[i], 401)
            norms = [sobolev_norm(prof, 2) * abs(math.cos(x)) for x in ts]
            bound = linear_energy_bound(f, g, norms, kappa, 2, times[i], ts)
            # the trapezoid rule on |cos| undercuts the integral by at most a relative 1e-4
            assert sobolev_norm(s.u, 3) ** 2 <= bound * (1 + 1e-4) + 1e-14

    @given(st.integers(0, 2**31), st.floats(0.05, 0.8))
    def test_unforced_decay(self, seed, kappa):
        rng = np.random.default_rng(seed)
        f, g = random_field(2, rng, decay=1.5), random_field(2, rng)
        times = np.linspace(0.0, 20.0, 41)
        a = 2 * (1 + kappa**2) * sobolev_norm(f, 3) ** 2 + 2 * sobolev_norm(g, 2) ** 2
        for s in solve_linear(f, g, None, kappa, times):
            assert sobolev_norm(s.u, 3) <= 2 * math.exp(-kappa * s.t) * math.sqrt(a) * (1 + 1e-12)


    def test_fails_near_critical_damping(self):
        # the bound is not uniform in kappa: a pure velocity mode beats it near kappa = 1
        g = make_field(2, [((1, 0, 0), 0.5)])
        ratios = []
        for s in solve_linear(zeros(2), g, None, 0.95, np.linspace(0, 10, 201)):
            ratios.append(sobolev_norm(s.u, 3) ** 2 / linear_energy_bound(zeros(2), g, [0.0], 0.95, 2, s.t))
        assert max(ratios) > 1.0


class TestKappaCheck:
    def test_allow_zero(self):
        assert linear.check_kappa(0.0, allow_zero=True) == 0.0
        with pytest.raises(ValueError):
            linear.check_kappa(0.0)
