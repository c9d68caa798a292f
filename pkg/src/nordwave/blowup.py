"""Finite-time blow-up of the mean value under a positive forcing floor.

The mean ``F(t)`` of a solution obeys

    F'' + 2 kappa F' = exp(-kappa t) a0_hat(t) (1 + F)^3,   F(0) = f0, F'(0) = g0.

With ``tau = omega(t) = 2 - exp(-2 kappa t)`` and ``F(t) = G(omega(t))`` the
damping disappears and ``G'' >= a0 / (4 kappa^2) (1 + G)^3`` on ``[1, 2)``.
Integrating that inequality twice gives an explicit lower bound for ``G``
that diverges at ``tau_1``; blow-up happens in finite time when ``tau_1 < 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .diagnostics import ConditionReport

__all__ = [
    "BlowupParams",
    "OdeTrajectory",
    "TransformedResiduals",
    "InconclusiveBound",
    "integrate_F",
    "omega",
    "omega_inv",
    "lifespan_bound",
    "check_blowup_conditions",
    "G_lower_bound",
    "transformed_comparison",
    "minimal_a0_for_lifespan",
    "minimal_a0_observed",
]

_TINY = math.nextafter(0.0, 1.0)
REASONS = {0: "horizon", 1: "threshold", 2: "step_collapse", 3: "step_budget"}


class InconclusiveBound(ValueError):
    """The lifespan formula degenerates (zero discriminant)."""


@dataclass(frozen=True)
class BlowupParams:
    """Parameters of the mean-value problem and the derived constants.

    ``alpha = (a0/2)^{1/4}``, ``lam = sqrt(a0 (1+f0)^4 / 2 - g0^2)``,
    ``beta = (alpha (1+f0) - sqrt(lam)) / (alpha (1+f0) + sqrt(lam))``.
    Derived values are ``nan`` where undefined.
    """

    kappa: float
    a0: float
    f0: float
    g0: float

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"damping kappa must lie in (0, 1), got {self.kappa}")
        if not self.a0 >= 0:
            raise ValueError(f"forcing floor a0 must be nonnegative, got {self.a0}")

    @property
    def alpha(self) -> float:
        return (self.a0 / 2.0) ** 0.25

    @property
    def discriminant(self) -> float:
        """``(a0/2)(1+f0)^4 - g0^2``; must be nonnegative."""
        return 0.5 * self.a0 * (1.0 + self.f0) ** 4 - self.g0**2

    @property
    def lam(self) -> float:
        d = self.discriminant
        return math.sqrt(d) if d >= 0 else math.nan

    @property
    def beta(self) -> float:
        x = self.alpha * (1.0 + self.f0)
        r = math.sqrt(self.lam) if self.lam >= 0 else math.nan
        return (x - r) / (x + r) if x + r > 0 else math.nan

    @property
    def lifespan_ratio(self) -> float:
        """``kappa ln(1/beta) / (alpha sqrt(lam))``; below 1 means a finite bound."""
        lam, beta = self.lam, self.beta
        if not (lam > 0 and 0 < beta < 1):
            return math.inf
        return self.kappa * math.log(1.0 / beta) / (self.alpha * math.sqrt(lam))

    @property
    def tau1(self) -> float:
        return self.lifespan_ratio + 1.0

    @property
    def t1(self) -> float:
        return omega_inv(self.tau1, self.kappa)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("kappa", "a0", "f0", "g0", "alpha", "lam", "beta", "tau1", "t1")}
        return {k: (v if math.isfinite(v) else repr(v)) for k, v in d.items()}


@dataclass(frozen=True)
class OdeTrajectory:
    t: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    blowup_time: float | None
    terminal_reason: str

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.F.tolist(), self.dF.tolist()))

    def at(self, times: Sequence[float]) -> np.ndarray:
        """``F`` at times that were requested through ``t_eval``."""
        idx = np.searchsorted(self.t, times)
        idx = np.clip(idx, 0, self.t.size - 1)
        if not np.allclose(self.t[idx], times, rtol=0, atol=1e-12):
            raise KeyError("requested times are not trajectory samples; pass them as t_eval")
        return self.F[idx]


def integrate_F(params: BlowupParams, a_hat0: Callable[[float], float] | None = None,
                t_max: float = 200.0, threshold: float = 1e8, rtol: float = 1e-10,
                atol: float = 1e-12, h_min: float = 1e-14, h0: float = 1e-3,
                t_eval: Sequence[float] = (), max_steps: int = 10_000_000) -> OdeTrajectory:
    """Adaptive Dormand-Prince integration of the mean-value equation.

    ``a_hat0`` defaults to the constant floor ``params.a0``. Integration
    stops at ``t_max``, at the first sample with ``F >= threshold`` (the
    crossing time is interpolated in ``1/F``), or on step-size collapse below
    ``h_min``. Every time in ``t_eval`` is hit exactly.

    Raises
    ------
    RuntimeError
        On step-size collapse or an exhausted step budget without a
        threshold crossing.
    """
    tev = np.asarray(sorted(t_eval), dtype=float)
    args = (params.kappa, params.f0, params.g0, float(t_max), float(threshold), float(rtol),
            float(atol), float(h_min), float(h0), tev, int(max_steps))
    if a_hat0 is None:
        t, F, dF, status, tc = kernels.dopri_blowup(params.kappa, params.a0, *args[1:])
    else:
        t, F, dF, status, tc = kernels.dopri_blowup_general(params.kappa, a_hat0, *args[1:])
    reason = REASONS[int(status)]
    if status in (2, 3):
        raise RuntimeError(f"mean-value integration stopped by {reason} at t={t[-1]:.9g} (F={F[-1]:.6g})")
    return OdeTrajectory(t, F, dF, float(tc) if status == 1 else None, reason)


def omega(t, kappa: float):
    """``2 - exp(-2 kappa t)``; maps ``[0, inf)`` onto ``[1, 2)``."""
    if np.ndim(t):
        return 2.0 - np.exp(-2.0 * kappa * np.asarray(t, dtype=float))
    return 2.0 - math.exp(-2.0 * kappa * t)


def omega_inv(tau: float, kappa: float) -> float:
    """Inverse of :func:`omega`; ``inf`` for ``tau >= 2``."""
    if tau < 1.0:
        raise ValueError(f"tau must be at least 1, got {tau}")
    if tau >= 2.0:
        return math.inf
    return -math.log(2.0 - tau) / (2.0 * kappa)


def lifespan_bound(params: BlowupParams) -> tuple[float, float]:
    """``(tau_1, t_1)`` with ``t_1 = inf`` when ``tau_1 >= 2``.

    Raises
    ------
    InconclusiveBound
        When the discriminant vanishes or is negative.
    """
    if not params.discriminant > 0:
        raise InconclusiveBound(f"discriminant {params.discriminant:.6g} is not positive; bound degenerates")
    tau1 = params.tau1
    return tau1, omega_inv(tau1, params.kappa)


def check_blowup_conditions(params: BlowupParams, a_hat0: Callable[[float], float] | None = None,
                            t_check: float = 200.0, samples: int = 2001) -> list[ConditionReport]:
    """Data positivity, forcing floor, discriminant sign and finite lifespan.

    Strict inequalities ``x > 0`` are reported as ``-x <= -tiny`` with
    ``tiny`` the smallest positive double, so ``satisfied`` matches them
    exactly. The floor check samples ``a_hat0`` on ``[0, t_check]``.
    """
    pos = min(1.0 + params.f0, params.g0)
    reports = [ConditionReport.compare("blowup.data_positivity", -pos, -_TINY,
                                       one_plus_f0=1.0 + params.f0, g0=params.g0)]
    if a_hat0 is None:
        floor = params.a0
    else:
        ts = np.linspace(0.0, t_check, samples)
        floor = float(min(a_hat0(float(t)) for t in ts))
    reports.append(ConditionReport.compare("blowup.forcing_floor", params.a0, floor,
                                           a0_positive=params.a0 > 0))
    if not params.a0 > 0:
        reports[-1] = ConditionReport(reports[-1].name, params.a0, floor, False, floor - params.a0,
                                      {"a0_positive": False})
    reports.append(ConditionReport.compare("blowup.discriminant", params.g0**2,
                                           0.5 * params.a0 * (1.0 + params.f0) ** 4))
    ratio = params.lifespan_ratio
    inconclusive = not params.discriminant > 0
    reports.append(ConditionReport.compare("blowup.finite_lifespan", ratio, math.nextafter(1.0, 0.0),
                                           tau1=params.tau1, t1=params.t1, inconclusive=inconclusive))
    return reports


def G_lower_bound(params: BlowupParams, tau: float) -> float:
    """Lower bound on ``alpha (1 + G(tau))``: ``sqrt(lam) (beta E + 1) / (1 - beta E)``.

    ``E = exp(alpha sqrt(lam) (tau - 1) / kappa)``. Valid while ``beta E < 1``.
    """
    if tau < 1.0:
        raise ValueError(f"tau must be at least 1, got {tau}")
    lam, beta = params.lam, params.beta
    if not lam > 0:
        raise InconclusiveBound("discriminant is not positive")
    bE = beta * math.exp(params.alpha * math.sqrt(lam) * (tau - 1.0) / params.kappa)
    if bE >= 1.0:
        raise ValueError(f"tau={tau} is beyond the validity range (tau_1 = {params.tau1})")
    return math.sqrt(lam) * (bE + 1.0) / (1.0 - bE)


@dataclass(frozen=True)
class TransformedResiduals:
    """Slack of the three transformed inequalities along a trajectory.

    Each ``*_rel`` series divides the slack by the larger side, so roundoff
    shows up at the ``1e-16`` level regardless of how large ``G`` is.
    """

    tau: np.ndarray
    second_order: np.ndarray
    first_integral: np.ndarray
    gradient: np.ndarray
    second_order_rel: np.ndarray
    first_integral_rel: np.ndarray
    gradient_rel: np.ndarray

    def min_relative(self) -> float:
        return float(min(self.second_order_rel.min(), self.first_integral_rel.min(),
                         self.gradient_rel.min()))


def transformed_comparison(params: BlowupParams, trajectory: OdeTrajectory,
                           a_hat0: Callable[[float], float] | None = None) -> TransformedResiduals:
    """Check the transformed inequalities sample by sample.

    ``G' = F' / omega'`` and ``G''`` is taken from the equation itself,
    ``G'' = exp(-kappa t) a0_hat (1+F)^3 / omega'^2``, so no differencing is
    involved. The three residuals are

    * ``G'' - a0/(4 kappa^2) (1+G)^3``
    * ``G'^2 - a0/(8 kappa^2) (1+G)^4 - (g0^2 - (a0/2)(1+f0)^4) / (4 kappa^2)``
    * ``G' - (sqrt(a0/2) (1+G)^2 - lam) / (2 kappa)``
    """
    k, a0 = params.kappa, params.a0
    t, F, dF = trajectory.t, trajectory.F, trajectory.dF
    wp = 2.0 * k * np.exp(-2.0 * k * t)
    ahat = np.full_like(t, a0) if a_hat0 is None else np.array([a_hat0(float(s)) for s in t])
    one = 1.0 + F
    Gp = dF / wp
    Gpp = np.exp(-k * t) * ahat * one**3 / wp**2
    rhs2 = a0 / (4.0 * k * k) * one**3
    rhs1 = a0 / (8.0 * k * k) * one**4 + (params.g0**2 - 0.5 * a0 * (1.0 + params.f0) ** 4) / (4.0 * k * k)
    lam = params.lam if params.lam >= 0 else 0.0
    rhsg = (math.sqrt(a0 / 2.0) * one**2 - lam) / (2.0 * k)

    def rel(lhs, rhs):
        return (lhs - rhs) / np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)

    return TransformedResiduals(omega(t, k), Gpp - rhs2, Gp**2 - rhs1, Gp - rhsg,
                                rel(Gpp, rhs2), rel(Gp**2, rhs1), rel(Gp, rhsg))


def minimal_a0_for_lifespan(kappa: float, f0: float, g0: float, rtol: float = 1e-13) -> float:
    """Smallest ``a0`` (to ``rtol``) for which the lifespan bound is finite.

    The returned value is the upper end of the final bisection bracket, so it
    satisfies the condition.
    """
    def ok(a0):
        return BlowupParams(kappa, a0, f0, g0).lifespan_ratio < 1.0

    lo = 2.0 * g0**2 / (1.0 + f0) ** 4
    hi = max(2.0 * lo, 1.0)
    while not ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise RuntimeError("no a0 satisfies the lifespan condition")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def minimal_a0_observed(kappa: float, f0: float, g0: float, t_max: float = 200.0,
                        threshold: float = 1e8, rtol: float = 1e-6, a_max: float = 1e6) -> float:
    """Smallest ``a0`` (to ``rtol``) whose trajectory crosses ``threshold`` by ``t_max``."""
    def blows(a0):
        try:
            return integrate_F(BlowupParams(kappa, a0, f0, g0), t_max=t_max,
                               threshold=threshold).blowup_time is not None
        except RuntimeError:
            return True

    lo, hi = 0.0, 1e-6
    while not blows(hi):
        lo, hi = hi, 4.0 * hi
        if hi > a_max:
            raise RuntimeError(f"no blow-up by t_max={t_max} for a0 up to {a_max}")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if blows(mid):
            hi = mid
        else:
            lo = mid
    return hi
