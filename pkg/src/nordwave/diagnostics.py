"""Theorem-side quantities: smallness conditions, envelopes and bounds.

Everything here is a pure function of its inputs. Condition checks return
:class:`ConditionReport` objects that serialize to JSON.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as sint

from .spectral import SpectralField, _norm_sq, product, sobolev_norm

__all__ = [
    "ConditionReport",
    "DiagnosticsRecord",
    "NonDecayBound",
    "DecayFit",
    "P",
    "check_smallness_thm1",
    "check_smallness_thm51",
    "check_smallness_thm52",
    "default_beta_thm51",
    "default_beta_thm52",
    "envelope_thm1",
    "lower_bound_nonhom",
    "gronwall_bound",
    "fit_decay_rate",
    "verify_nonlinear_estimate",
]

E = math.e


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of an inequality check ``lhs <= rhs``."""

    name: str
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    details: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, name: str, lhs: float, rhs: float, **details) -> "ConditionReport":
        lhs, rhs = float(lhs), float(rhs)
        return cls(name, lhs, rhs, bool(lhs <= rhs), rhs - lhs, dict(details))

    @classmethod
    def less_than(cls, name: str, lhs: float, rhs: float, **details) -> "ConditionReport":
        """Strict version: satisfied iff ``lhs < rhs``."""
        lhs, rhs = float(lhs), float(rhs)
        return cls(name, lhs, rhs, bool(lhs < rhs), rhs - lhs, dict(details, strict=True))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return d


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One sampled row of a run."""

    t: float
    hnorm_u: float
    norm_u: float
    energy_E: float
    u0_mean: float
    envelope: float
    forcing_norm: float
    flags: str = ""

    COLUMNS = ("t", "hnorm_u", "norm_u", "energy_E", "u0_mean", "envelope", "forcing_norm", "flags")

    def as_row(self) -> tuple:
        return tuple(getattr(self, c) for c in self.COLUMNS)


# -- small-data global existence ------------------------------------------

def check_smallness_thm1(f: SpectralField, g: SpectralField, sup_a: float, kappa: float,
                         m: float, C_m: float) -> list[ConditionReport]:
    """Data budget, forcing budget and contraction condition for global existence.

    Returns three reports:

    * ``(1+kappa^2) ||f||^2_{m+1} + ||g||^2_m <= 1/32``
    * ``sup ||a||^2 <= 4 (e kappa)^2 / (125 C_m^6)``
    * ``sup ||a|| < e kappa / (C_m (6 C_m + 0.75 C_m^2))``
    """
    _require_theorem_m(m)
    _require_kappa(kappa)
    # squared norms summed directly so boundary data land exactly on the budget
    data = (1.0 + kappa**2) * _norm_sq(f.coeffs, m + 1) + _norm_sq(g.coeffs, m)
    ek = E * kappa
    return [
        ConditionReport.compare("thm1.data_budget", data, 1.0 / 32.0),
        ConditionReport.compare("thm1.forcing_budget", sup_a**2, 4.0 * ek**2 / (125.0 * C_m**6)),
        ConditionReport.compare("thm1.contraction", sup_a, ek / (C_m * (6.0 * C_m + 0.75 * C_m**2))),
    ]


def envelope_thm1(kappa: float, t):
    """Decay envelope ``e^{-kappa t} sqrt(1 + (e kappa t)^2) / 4`` for the solution norm."""
    t = np.asarray(t, dtype=float)
    out = 0.25 * np.exp(-kappa * t) * np.sqrt(1.0 + (E * kappa * t) ** 2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NonDecayBound:
    """Two readings of the asymptotic lower bound on the mean value."""

    printed: float
    ode_consistent: float

    def to_dict(self) -> dict:
        return asdict(self)


def lower_bound_nonhom(f0: float, g0: float, a0: float, kappa: float) -> NonDecayBound:
    """Lower bound for ``lim inf u_0(t)`` under a positive forcing floor.

    ``ode_consistent`` is ``f0 + g0/(2 kappa) + a0/(16 kappa^2)``: the limit
    of the mean-value equation driven by ``exp(-kappa t) a0 / 8``.
    ``printed`` is ``f0 + g0/(2 kappa) + a0/(8 kappa)``.
    """
    _require_kappa(kappa)
    if f0 < 0 or g0 < 0:
        raise ValueError("lower bound needs f0 >= 0 and g0 >= 0")
    if a0 < 0:
        raise ValueError("forcing floor a0 must be nonnegative")
    base = f0 + g0 / (2.0 * kappa)
    return NonDecayBound(base + a0 / (8.0 * kappa), base + a0 / (16.0 * kappa**2))


# -- energy method --------------------------------------------------------

def P(x: float, C_m: float) -> float:
    """Nonlinear growth factor ``C_m^3 (1 + x^2)^{3/2}``."""
    return C_m**3 * (1.0 + x * x) ** 1.5


def default_beta_thm51(kappa: float) -> float:
    return 0.5 * (1.0 + 1.0 / kappa)


def default_beta_thm52(kappa: float, gamma: float) -> float:
    return 0.5 * (1.0 + gamma / kappa**2)


def check_smallness_thm51(U0_norm: float, sup_a: float, kappa: float, beta: float | None,
                          C_m: float) -> ConditionReport:
    """Forcing smallness for energy monotonicity.

    ``sup ||a||_{H^m} <= kappa eps0 / P(alpha beta)`` with
    ``alpha = ||U0||``, ``eps0 = alpha (1 - kappa beta)`` and ``1 < beta < 1/kappa``.
    """
    _require_kappa(kappa)
    beta = default_beta_thm51(kappa) if beta is None else float(beta)
    if not 1.0 < beta < 1.0 / kappa:
        raise ValueError(f"beta must lie in (1, 1/kappa) = (1, {1.0 / kappa:.6g}), got {beta}")
    alpha = float(U0_norm)
    eps0 = alpha * (1.0 - kappa * beta)
    rhs = kappa * eps0 / P(alpha * beta, C_m)
    return ConditionReport.compare("thm51.forcing_smallness", sup_a, rhs,
                                   alpha=alpha, beta=beta, eps0=eps0, C_m=C_m)


def check_smallness_thm52(U0_norm: float, sup_a: float, kappa: float, params, beta: float | None,
                          C_m: float) -> ConditionReport:
    """Forcing smallness for the exponentially weighted energy.

    ``sup ||a|| <= gamma eps0 / P(alpha beta)`` with ``gamma = kappa + lam``,
    ``eps0 = alpha (1 - (kappa^2/gamma) beta)`` and ``1 < beta < gamma/kappa^2``.
    ``params`` needs ``lam`` and ``gamma`` attributes. The report's details
    carry the unweighted bound for comparison; the weighted one is smaller.
    """
    _require_kappa(kappa)
    lam = float(params.lam)
    gamma = kappa + lam
    if not (lam < 0 and gamma > 0 and kappa**2 / gamma < 1):
        raise ValueError(f"invalid decay parameters lam={lam} for kappa={kappa}")
    hi = gamma / kappa**2
    beta = default_beta_thm52(kappa, gamma) if beta is None else float(beta)
    if not 1.0 < beta < hi:
        raise ValueError(f"beta must lie in (1, gamma/kappa^2) = (1, {hi:.6g}), got {beta}")
    alpha = float(U0_norm)
    eps0 = alpha * (1.0 - (kappa**2 / gamma) * beta)
    rhs = gamma * eps0 / P(alpha * beta, C_m)
    b51 = default_beta_thm51(kappa)
    rhs51 = kappa * alpha * (1.0 - kappa * b51) / P(alpha * b51, C_m)
    return ConditionReport.compare("thm52.forcing_smallness", sup_a, rhs, alpha=alpha, beta=beta,
                                   gamma=gamma, eps0=eps0, C_m=C_m, unweighted_rhs=rhs51,
                                   weighted_below_unweighted=bool(rhs <= rhs51))


# -- generic tools --------------------------------------------------------

def gronwall_bound(g0: float, A: Callable[[float], float] | float, f: Callable[[float], float] | float,
                   t0: float, t: float, quad_tol: float = 1e-10) -> float:
    """Right-hand side of the integral Gronwall inequality.

    For ``(1/2) d/dt g^2 <= A g^2 + f g`` with ``f >= 0``,
    ``g(t) <= exp(int_{t0}^t A) g0 + int_{t0}^t exp(int_tau^t A) f(tau) dtau``.
    ``A`` and ``f`` may be callables or constants.

    Raises
    ------
    RuntimeError
        If the adaptive quadrature reports an error above ``quad_tol``.
    """
    if t < t0:
        raise ValueError("need t >= t0")
    if t == t0:
        return float(g0)
    const_A = not callable(A)
    fn = f if callable(f) else (lambda _s, c=float(f): c)

    if const_A:
        a = float(A)
        def expA(lo):
            return math.exp(a * (t - lo))
    else:
        def expA(lo):
            if lo >= t:
                return 1.0
            val, err = sint.quad(A, lo, t, epsabs=quad_tol, epsrel=quad_tol, limit=200)
            _check_quad(err, val, quad_tol)
            return math.exp(val)

    val, err = sint.quad(lambda s: expA(s) * fn(s), t0, t, epsabs=quad_tol, epsrel=quad_tol, limit=200)
    _check_quad(err, val, quad_tol)
    return float(expA(t0) * g0 + val)


def _check_quad(err, val, tol):
    if not math.isfinite(val) or err > 100 * tol * max(1.0, abs(val)):
        raise RuntimeError(f"quadrature failed: value {val}, error estimate {err}")


@dataclass(frozen=True)
class DecayFit:
    rate: float
    log_amplitude: float
    r_squared: float
    samples: int


def fit_decay_rate(times: Sequence[float], norms: Sequence[float],
                   window: tuple[float, float] = (10.0, 40.0)) -> DecayFit:
    """Least-squares fit of ``log norm = c - rate t`` over ``window``."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    sel = (t >= window[0]) & (t <= window[1])
    t, y = t[sel], y[sel]
    if t.size < 2:
        raise ValueError(f"need at least two samples in window {window}, got {t.size}")
    if np.any(~(y > 0)):
        raise ValueError("norms must be positive inside the fit window")
    ly = np.log(y)
    slope, intercept = np.polyfit(t, ly, 1)
    resid = ly - (slope * t + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), float(intercept), r2, int(t.size))


def verify_nonlinear_estimate(u: SpectralField, h: SpectralField, m: float, C_m: float,
                              mean_tol: float = 1e-12) -> ConditionReport:
    """Check ``||(1+u)^3 h||_{m} <= C_m^3 ||h||_{H^m} (1 + ||u||_m^2)^{3/2}``.

    ``u`` must have zero mean. The product is formed without truncation so
    the left side is the exact norm of the trigonometric polynomial.
    """
    scale = max(1.0, float(np.abs(u.coeffs).max()))
    if abs(u.coeffs[u.N, u.N, u.N]) > mean_tol * scale:
        raise ValueError("u must have zero mean")
    if u.N != h.N:
        raise ValueError("fields have different truncation radii")
    full = product([u, u, u, h], N_out=3 * u.radius + h.radius or 1, offsets=[1.0, 1.0, 1.0, 0.0])
    lhs = sobolev_norm(full, m)
    rhs = C_m**3 * sobolev_norm(h, m, homogeneous=False) * (1.0 + sobolev_norm(u, m) ** 2) ** 1.5
    return ConditionReport.compare("nonlinear_estimate", lhs, rhs, m=m, C_m=C_m)


def _require_kappa(kappa):
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"damping kappa must lie in (0, 1), got {kappa}")


def _require_theorem_m(m):
    if not m > 1.5:
        raise ValueError(f"theorem checks need m > 3/2, got {m}")
