import math

import numpy as np
import pytest

from nordwave import blowup, wave
from nordwave.linear import solve_linear
from nordwave.scenarios import cos_mode, mean_field, sin_mode
from nordwave.spectral import random_field, sobolev_norm, zeros
from nordwave.states import WaveState
from nordwave.wave import ForcingModel, ScenarioConfig, nonlinear_forcing

from conftest import crop, direct_convolve


def config(N=3, kappa=0.5, f=None, g=None, forcing=None, **kw):
    f = zeros(N) if f is None else f
    g = zeros(N) if g is None else g
    forcing = ForcingModel.zero(N) if forcing is None else forcing
    return ScenarioConfig(kappa, f, g, forcing, **kw)


def linear_scenario(dt, scheme="exprk2"):
    rng = np.random.default_rng(21)
    f = random_field(3, rng, amplitude=0.1, decay=2.0, mean=False)
    g = random_field(3, rng, amplitude=0.1, decay=2.0, mean=False)
    prof = random_field(3, rng, amplitude=0.05, decay=2.0)
    forcing = ForcingModel(prof, kind="separable", amplitude=0.5, frequency=2.0, coupling="none")
    return config(3, 0.4, f, g, forcing, t_final=2.0, dt=dt, scheme=scheme)


class TestNonlinearForcing:
    def test_constant_at_zero(self):
        st = WaveState(0.0, zeros(2), zeros(2))
        out = nonlinear_forcing(st, ForcingModel(mean_field(2, 0.3)), kappa=0.5)
        assert out.coeff((0, 0, 0)) == pytest.approx(0.3, rel=1e-15)
        assert np.abs(out.coeffs).sum() == pytest.approx(0.3, rel=1e-13)

    def test_halving_time(self):
        kappa = 0.5
        st = WaveState(math.log(2) / kappa, zeros(2), zeros(2))
        out = nonlinear_forcing(st, ForcingModel(mean_field(2, 0.3)), kappa=kappa)
        assert out.coeff((0, 0, 0)) == pytest.approx(0.15, rel=1e-14)

    def test_drop_factor(self):
        st = WaveState(3.0, zeros(2), zeros(2))
        out = nonlinear_forcing(st, ForcingModel(mean_field(2, 0.3)), drop_exp_factor=True, kappa=0.5)
        assert out.coeff((0, 0, 0)) == pytest.approx(0.3, rel=1e-15)

    def test_vs_convolution(self):
        u = cos_mode(3, (1, 0, 0), 1.0)
        a = random_field(3, np.random.default_rng(2), amplitude=0.2)
        out = nonlinear_forcing(WaveState(0.0, u, zeros(3)), ForcingModel(a), kappa=0.5)
        w = u.coeffs.copy()
        w[3, 3, 3] += 1
        ref = crop(direct_convolve(a.coeffs, direct_convolve(w, direct_convolve(w, w))), 3)
        assert np.abs(out.coeffs - ref).max() < 1e-11 * np.abs(ref).max()


class TestStep:
    def test_zero_state(self):
        cfg = config(dt=0.01)
        out = wave.step(cfg.initial_state(), cfg)
        assert out.t == pytest.approx(0.01)
        assert np.abs(out.u.coeffs).max() == 0 and np.abs(out.ut.coeffs).max() == 0

    @pytest.mark.parametrize("scheme,order", [("exprk2", 2), ("exprk4", 4)])
    def test_linear_convergence_order(self, scheme, order):
        errs = []
        for dt in (0.1, 0.05, 0.025):
            cfg = linear_scenario(dt, scheme)
            final = wave.run(cfg).final_state
            exact = solve_linear(cfg.f, cfg.g, cfg.forcing.at, cfg.kappa, [0.0, cfg.t_final])[-1]
            errs.append(sobolev_norm(final.u - exact.u, 3, homogeneous=False))
        ratios = [errs[i] / errs[i + 1] for i in range(2)]
        lo, hi = (3.5, 4.5) if order == 2 else (14.0, 18.0)
        assert all(lo <= r <= hi for r in ratios), ratios

    def test_nonlinear_self_convergence(self):
        f = cos_mode(3, (1, 0, 0), 0.01)
        cfg = config(3, 0.5, f, None, ForcingModel(mean_field(3, 0.01)), t_final=1.0, dt=1e-3)
        a = wave.run(cfg).final_state
        b = wave.run(cfg.with_(dt=5e-4)).final_state
        assert sobolev_norm(a.u - b.u, 3, homogeneous=False) < 1e-6

    def test_adaptive_matches_fixed(self):
        f = cos_mode(3, (1, 0, 0), 0.05)
        forcing = ForcingModel(mean_field(3, 0.05) + cos_mode(3, (0, 1, 0), 0.02))
        cfg = config(3, 0.5, f, sin_mode(3, (0, 0, 1), 0.03), forcing, t_final=2.0, dt=0.05,
                     scheme="exprk4", adaptive=True, rtol=1e-11)
        a = wave.run(cfg).final_state
        b = wave.run(cfg.with_(adaptive=False, dt=2e-3)).final_state
        assert a.t == pytest.approx(2.0)
        assert sobolev_norm(a.u - b.u, 3, homogeneous=False) < 1e-9

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            config(dt=0.0)
        with pytest.raises(ValueError):
            config(scheme="euler")
        with pytest.raises(ValueError):
            config(kappa=1.0)


class TestRun:
    def test_zero_records(self):
        r = wave.run(config(t_final=10.0, dt=0.05), sample_every=20)
        assert r.records[-1].t == pytest.approx(10.0)
        assert all(x.hnorm_u == 0 and x.norm_u == 0 and x.energy_E == 0 for x in r.records)

    def test_linear_limit(self):
        cfg = linear_scenario(0.01, "exprk4")
        r = wave.run(cfg, keep_states=True, sample_every=50)
        times = [s.t for s in r.states]
        exact = solve_linear(cfg.f, cfg.g, cfg.forcing.at, cfg.kappa, times)
        for s, e in zip(r.states, exact):
            assert sobolev_norm(s.u - e.u, 3, homogeneous=False) < 1e-8

    def test_hermitian_preserved(self):
        rng = np.random.default_rng(6)
        f = random_field(2, rng, amplitude=0.05, decay=1.0)
        forcing = ForcingModel(random_field(2, rng, amplitude=0.05, decay=2.0))
        cfg = config(2, 0.5, f, zeros(2), forcing, t_final=10.0, dt=1e-3)
        final = wave.run(cfg, sample_every=10**4).final_state
        assert round(final.t / 1e-3) >= 10**4
        assert final.u.hermitian_defect() < 1e-11 and final.ut.hermitian_defect() < 1e-11

    def test_blowup_flag(self):
        p = blowup.BlowupParams(0.25, 200.0, 0.0, 0.1)
        ode = blowup.integrate_F(p)
        cfg = config(1, p.kappa, mean_field(1, p.f0), mean_field(1, p.g0), ForcingModel(mean_field(1, p.a0)),
                     t_final=5.0, dt=1e-4, scheme="exprk4")
        r = wave.run(cfg, sample_every=100)
        assert r.blew_up
        assert "blowup" in r.records[-1].flags
        # the PDE flags at 1e6 on the full norm, the ODE at 1e8, so the PDE flags first;
        # the flag is raised at the end of the offending step
        assert r.blowup.t <= ode.blowup_time + cfg.dt
        assert ode.blowup_time < p.t1

    def test_mode_zero_residual(self):
        kappa = 0.5

        def residual(dt):
            f = cos_mode(2, (1, 0, 0), 0.05)
            cfg = config(2, kappa, f, sin_mode(2, (0, 1, 0), 0.05), ForcingModel(mean_field(2, 0.2)),
                         t_final=1.0, dt=dt, scheme="exprk2")
            states = wave.run(cfg, keep_states=True).states
            u0 = np.array([s.u.coeffs[2, 2, 2].real for s in states])
            worst = 0.0
            for i in range(1, len(states) - 1):
                d2 = (u0[i + 1] - 2 * u0[i] + u0[i - 1]) / dt**2
                d1 = (u0[i + 1] - u0[i - 1]) / (2 * dt)
                F0 = nonlinear_forcing(states[i], cfg.forcing, kappa=kappa).coeffs[2, 2, 2].real
                worst = max(worst, abs(d2 + 2 * kappa * d1 - F0))
            return worst

        r1, r2 = residual(0.02), residual(0.01)
        assert r2 < 1e-4
        assert 3.0 <= r1 / r2 <= 5.0

    def test_resume_is_exact(self):
        f = cos_mode(2, (1, 0, 0), 0.05)
        cfg = config(2, 0.5, f, zeros(2), ForcingModel(mean_field(2, 0.1)), t_final=1.0, dt=0.01)
        whole = wave.run(cfg).final_state
        half = wave.run(cfg.with_(t_final=0.5)).final_state
        rest = wave.run(cfg, initial_state=half).final_state
        assert np.abs(rest.u.coeffs - whole.u.coeffs).max() <= 1e-14


class TestPicard:
    def test_zero(self):
        res = wave.picard_fixed_point(config(t_final=2.0))
        assert all(i == 1 for i in res.iterations)
        assert all(np.abs(s.u.coeffs).max() == 0 for s in res.states)

    def test_contraction_regime(self):
        f = cos_mode(2, (1, 0, 0), 0.01)
        cfg = config(2, 0.5, f, zeros(2), ForcingModel(mean_field(2, 0.01)), t_final=2.0, dt=1e-3)
        res = wave.picard_fixed_point(cfg)
        assert max(res.contraction) < 1.0
        ref = wave.run(cfg.with_(scheme="exprk4", dt=0.01)).final_state
        assert res.states[-1].t == pytest.approx(2.0)
        assert sobolev_norm(res.states[-1].u - ref.u, 3, homogeneous=False) < 1e-6

    def test_run_dispatch(self):
        f = cos_mode(2, (1, 0, 0), 0.01)
        cfg = config(2, 0.5, f, zeros(2), ForcingModel(mean_field(2, 0.01)), t_final=1.0, scheme="picard")
        r = wave.run(cfg)
        assert r.final_state.t == pytest.approx(1.0)

    def test_large_forcing_surfaces_error(self):
        cfg = config(1, 0.25, mean_field(1, 0.0), mean_field(1, 0.1), ForcingModel(mean_field(1, 200.0)),
                     t_final=2.0)
        with pytest.raises((wave.PicardNonConvergence, wave.BlowupDetected)):
            wave.picard_fixed_point(cfg, max_iter=20)
