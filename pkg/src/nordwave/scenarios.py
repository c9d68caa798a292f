"""Reference scenarios used by the acceptance suite and the harness defaults.

Each builder returns a ready-to-run configuration whose data are placed at a
fixed fraction of the relevant smallness budget, so the corresponding check
is passed with a visible margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import blowup, diagnostics, hyperbolic
from .spectral import (SpectralField, make_field, multiplication_constant, random_field,
                       sobolev_norm, zeros)
from .wave import ForcingModel, ScenarioConfig

__all__ = [
    "cos_mode",
    "sin_mode",
    "mean_field",
    "default_C_m",
    "thm1_scenario",
    "thm1_amplitudes",
    "energy_amplitudes",
    "thm32_scenario",
    "conservative_scenario",
    "energy_scenario",
    "cross_solver_scenarios",
    "default_blowup_params",
]


def cos_mode(N: int, k, amp: float) -> SpectralField:
    """``amp cos(k . x)``."""
    return make_field(N, [(k, amp / 2.0)])


def sin_mode(N: int, k, amp: float) -> SpectralField:
    """``amp sin(k . x)``."""
    return make_field(N, [(k, -0.5j * amp)])


def mean_field(N: int, value: float) -> SpectralField:
    return make_field(N, [((0, 0, 0), value)])


@lru_cache(maxsize=None)
def default_C_m(m: float = 2.0) -> float:
    return multiplication_constant(m).value


def thm1_scenario(N: int = 8, t_final: float = 30.0, dt: float = 0.01, kappa: float = 0.5,
                  m: float = 2.0, C_m: float | None = None, scheme: str = "exprk2") -> ScenarioConfig:
    """``f = eps cos x1`` at half the data budget, constant ``a`` at half the forcing budget.

    With ``g = 0`` the data budget reads ``(1 + kappa^2) eps^2 / 2 = 1/64``.
    """
    eps, a = thm1_amplitudes(kappa, default_C_m(m) if C_m is None else C_m)
    f = cos_mode(N, (1, 0, 0), eps)
    return ScenarioConfig(kappa, f, zeros(N), ForcingModel(mean_field(N, a)), m=m,
                          t_final=t_final, dt=dt, scheme=scheme)


def thm1_amplitudes(kappa: float, C_m: float, fraction: float = 0.5) -> tuple[float, float]:
    """``(eps, a)`` placing ``eps cos x1`` and the constant ``a`` at ``fraction`` of their budgets."""
    eps = math.sqrt(2.0 * fraction / (32.0 * (1.0 + kappa**2)))
    a_sq = fraction * 4.0 * (math.e * kappa) ** 2 / (125.0 * C_m**6)
    return eps, math.sqrt(a_sq)


def thm32_scenario(N: int = 8, t_final: float = 100.0, dt: float = 0.05, kappa: float = 0.5,
                   a0: float = 0.05, data: float = 0.01, m: float = 2.0) -> ScenarioConfig:
    """Constant forcing ``a0`` with small zero-mean data and ``f0 = g0 = 0``."""
    f = cos_mode(N, (1, 0, 0), data)
    g = sin_mode(N, (0, 1, 0), data)
    return ScenarioConfig(kappa, f, g, ForcingModel(mean_field(N, a0)), m=m, t_final=t_final,
                          dt=dt, scheme="exprk4")


def conservative_scenario(N: int = 8, t_final: float = 10.0, dt: float = 0.01,
                          m: float = 2.0) -> ScenarioConfig:
    """Undamped, unforced low-mode data for the energy conservation check."""
    f = cos_mode(N, (1, 0, 0), 0.1) + sin_mode(N, (0, 1, 0), 0.05)
    g = sin_mode(N, (0, 0, 1), 0.08)
    return ScenarioConfig(0.0, f, g, ForcingModel.zero(N), m=m, t_final=t_final, dt=dt)


@dataclass(frozen=True)
class EnergyScenario:
    cfg: ScenarioConfig
    params: hyperbolic.ExpDecayParams
    C_m: float
    alpha: float
    reports: tuple


def energy_scenario(N: int = 8, t_final: float = 50.0, dt: float = 0.02, kappa: float = 0.5,
                    alpha: float = 1.0, m: float = 2.0, C_m: float | None = None,
                    fraction: float = 0.5) -> EnergyScenario:
    """Data of energy ``alpha^2`` with forcing at ``fraction`` of both energy budgets.

    ``f = A cos x1`` and ``g = A sin x1`` are a quarter period apart, so the
    mode amplitude never vanishes and the norm decays without zeros.
    """
    C = default_C_m(m) if C_m is None else C_m
    A, c = energy_amplitudes(kappa, alpha, m, C, fraction)
    f = cos_mode(N, (1, 0, 0), A)
    g = sin_mode(N, (1, 0, 0), A)
    st = hyperbolic.assemble_state(f, g, kappa)
    U0 = math.sqrt(hyperbolic.energy(st, m))
    params = hyperbolic.ExpDecayParams.default(kappa)
    profile = mean_field(N, c) + cos_mode(N, (0, 1, 0), 0.5 * c)
    sup_a = sobolev_norm(profile, m, homogeneous=False)
    cfg = ScenarioConfig(kappa, f, g, ForcingModel(profile), m=m, t_final=t_final, dt=dt)
    reports = (diagnostics.check_smallness_thm51(U0, sup_a, kappa, None, C),
               diagnostics.check_smallness_thm52(U0, sup_a, kappa, params, None, C))
    return EnergyScenario(cfg, params, C, U0, reports)


def energy_amplitudes(kappa: float, alpha: float, m: float, C_m: float,
                      fraction: float = 0.5) -> tuple[float, float]:
    """``(A, c)`` for ``f = A cos x1``, ``g = A sin x1`` and ``a = c (1 + cos(x2) / 2)``.

    ``A`` gives data energy ``alpha^2``; ``c`` puts ``||a||_{H^m}`` at
    ``fraction`` of the smaller of the two energy budgets.
    """
    A = alpha * math.sqrt(2.0 / (2.0 + kappa**2))
    params = hyperbolic.ExpDecayParams.default(kappa)
    r51 = diagnostics.check_smallness_thm51(alpha, 1.0, kappa, None, C_m)
    r52 = diagnostics.check_smallness_thm52(alpha, 1.0, kappa, params, None, C_m)
    # ||1 + cos(x2)/2||_{H^m}^2 = 1 + 2 (1/4)^2
    unit = math.sqrt(1.0 + 0.125)
    return A, fraction * min(r51.rhs, r52.rhs) / unit


def cross_solver_scenarios(N: int = 6, t_final: float = 5.0, kappa: float = 0.5,
                           seed: int = 11) -> dict[str, ScenarioConfig]:
    """Three configurations shared by both solvers: unforced, forced, forced without decay."""
    rng = np.random.default_rng(seed)
    f = random_field(N, rng, amplitude=0.05, decay=2.0, mean=False, radius=2)
    g = random_field(N, rng, amplitude=0.05, decay=2.0, mean=False, radius=2)
    a = mean_field(N, 0.02) + cos_mode(N, (1, 1, 0), 0.01)
    base = ScenarioConfig(kappa, f, g, ForcingModel.zero(N), t_final=t_final, dt=0.01, scheme="exprk4")
    return {
        "unforced": base,
        "forced": base.with_(forcing=ForcingModel(a)),
        "forced_no_decay": base.with_(forcing=ForcingModel(a), drop_exp_factor=True),
    }


def default_blowup_params(kappa: float = 0.25, f0: float = 0.0, g0: float = 0.1) -> blowup.BlowupParams:
    """Smallest forcing floor for which the lifespan bound is finite."""
    return blowup.BlowupParams(kappa, blowup.minimal_a0_for_lifespan(kappa, f0, g0), f0, g0)
