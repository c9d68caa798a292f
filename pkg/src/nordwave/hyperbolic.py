"""First-order symmetric hyperbolic form of the damped cubic wave equation.

The unknown is ``U = (p, q) = (u_t + kappa u, grad u)``, and ``u`` itself is
carried as an extra variable so the ``kappa^2 u`` source stays local:

    p_t = div q - kappa p + kappa^2 u + exp(-kappa t) a (1 + u)^3
    q_t = grad p - kappa q
    u_t = p - kappa u

For the shifted unknown ``w = exp(-lam t) u`` (``lam < 0``) the damping
becomes ``gamma = kappa + lam`` and the source
``exp(-lam t) exp(-kappa t) a (1 + exp(lam t) w)^3``; the ``kappa^2 w`` term is
unchanged. Time stepping is classical RK4, independent of the exponential
integrator in :mod:`nordwave.wave`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diagnostics import DiagnosticsRecord, P, envelope_thm1
from .spectral import (SpectralField, _norm_sq, cubic_one_plus, gradient, lattice, product,
                       sobolev_norm, zeros)
from .wave import BlowupDetected, ForcingModel, ScenarioConfig
from .states import WaveState

__all__ = [
    "HyperbolicState",
    "ExpDecayParams",
    "HyperbolicRun",
    "assemble_state",
    "rhs",
    "integrate",
    "energy",
    "energy_inequality_residual",
    "gronwall_energy_bound",
    "transform_exp_decay",
    "to_wave_state",
    "constraint_defect",
    "modulus_ratio",
]


@dataclass(frozen=True)
class HyperbolicState:
    """``(t, u, p, q)`` with ``p = u_t + kappa u`` and ``q = grad u``."""

    t: float
    u: SpectralField
    p: SpectralField
    q: tuple[SpectralField, SpectralField, SpectralField]

    def __post_init__(self):
        q = tuple(self.q)
        if len(q) != 3:
            raise ValueError("q must have three components")
        if len({self.u.N, self.p.N, *(c.N for c in q)}) != 1:
            raise ValueError("state fields must share the truncation radius")
        object.__setattr__(self, "q", q)

    @property
    def N(self) -> int:
        return self.u.N

    def fields(self) -> tuple[SpectralField, ...]:
        return (self.u, self.p) + self.q

    def is_finite(self) -> bool:
        return all(f.is_finite() for f in self.fields())


@dataclass(frozen=True)
class ExpDecayParams:
    """Shift ``lam < 0`` for the unknown ``w = exp(-lam t) u``.

    Admissible when ``gamma = kappa + lam > 0`` and ``kappa^2 / gamma < 1``,
    i.e. ``-kappa (1 - kappa) < lam < 0``.
    """

    kappa: float
    lam: float

    def __post_init__(self):
        k, lam = self.kappa, self.lam
        if not 0.0 < k < 1.0:
            raise ValueError(f"damping kappa must lie in (0, 1), got {k}")
        if not lam < 0:
            raise ValueError(f"lam must be negative, got {lam}")
        if not k + lam > 0:
            raise ValueError(f"gamma = kappa + lam must be positive, got {k + lam}")
        if not k * k / (k + lam) < 1:
            raise ValueError(f"kappa^2/gamma = {k * k / (k + lam):.6g} must be below 1 "
                             f"(need lam > {-k * (1 - k):.6g})")

    @property
    def gamma(self) -> float:
        return self.kappa + self.lam

    @property
    def rate(self) -> float:
        """Decay rate ``-lam`` granted for ``u``."""
        return -self.lam

    @classmethod
    def default(cls, kappa: float) -> "ExpDecayParams":
        """Half the supremum admissible rate: ``lam = -kappa (1 - kappa) / 2``."""
        return cls(kappa, -0.5 * kappa * (1.0 - kappa))


def assemble_state(u: SpectralField, ut: SpectralField, kappa: float, t: float = 0.0) -> HyperbolicState:
    """``(u, u_t + kappa u, grad u)``."""
    if u.N != ut.N:
        raise ValueError("u and ut have different truncation radii")
    if not (u.real and ut.real):
        raise ValueError("fields must be real")
    return HyperbolicState(float(t), u, ut + u * kappa, gradient(u))


def to_wave_state(state: HyperbolicState, damping: float) -> WaveState:
    """``(t, u, p - damping u)``; ``damping`` is ``kappa`` (or ``gamma`` for shifted runs)."""
    return WaveState(state.t, state.u, state.p - state.u * damping)


def energy(state: HyperbolicState, m: float) -> float:
    """``||p||^2_m + sum_j ||q_j||^2_m`` in homogeneous norms."""
    return _norm_sq(state.p.coeffs, m) + sum(_norm_sq(c.coeffs, m) for c in state.q)


def constraint_defect(state: HyperbolicState, m: float) -> float:
    """``||q - grad u||`` in the homogeneous ``H^m`` norm."""
    g = gradient(state.u)
    return math.sqrt(sum(_norm_sq(a.coeffs - b.coeffs, m) for a, b in zip(state.q, g)))


# -- tendencies -------------------------------------------------------------

class _System:
    """Flat ``(5, M)`` right-hand side for one configuration."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.N = cfg.N
        lat = lattice(self.N)
        self.ik = 1j * np.stack([lat.k1.ravel(), lat.k2.ravel(), lat.k3.ravel()]).astype(complex)
        self.shape = cfg.f.coeffs.shape
        self.kappa = cfg.kappa
        self.lam = cfg.lam
        self.gamma = cfg.kappa + cfg.lam

    def source(self, t: float, u: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        fm = cfg.forcing
        scale = fm.theta(t) * (1.0 if cfg.drop_exp_factor else math.exp(-self.kappa * t))
        scale *= math.exp(-self.lam * t)
        prof = fm.profile
        if scale == 0.0 or not np.any(prof.coeffs):
            return np.zeros(u.shape, dtype=complex)
        if fm.coupling == "none":
            return prof.coeffs.ravel() * scale
        phys = SpectralField(u.reshape(self.shape) * math.exp(self.lam * t))
        if prof.radius == 0:
            out = cubic_one_plus(phys) * (scale * prof.coeffs[self.N, self.N, self.N].real)
        else:
            out = product([prof, phys, phys, phys], offsets=[0.0, 1.0, 1.0, 1.0]) * scale
        return out.coeffs.ravel()

    def __call__(self, t: float, Y: np.ndarray) -> np.ndarray:
        u, p, q = Y[0], Y[1], Y[2:]
        g, k2 = self.gamma, self.kappa**2
        dY = np.empty_like(Y)
        dY[0] = p - g * u
        dY[1] = np.sum(self.ik * q, axis=0) - g * p + k2 * u + self.source(t, u)
        dY[2:] = self.ik * p[None, :] - g * q
        return dY

    def pack(self, st: HyperbolicState) -> np.ndarray:
        return np.stack([f.coeffs.ravel() for f in st.fields()]).astype(complex)

    def unpack(self, t: float, Y: np.ndarray) -> HyperbolicState:
        fs = [SpectralField(Y[i].reshape(self.shape)) for i in range(5)]
        return HyperbolicState(t, fs[0], fs[1], tuple(fs[2:]))


def rhs(state: HyperbolicState, kappa: float, forcing: ForcingModel,
        drop_exp_factor: bool = False) -> HyperbolicState:
    """Tendency ``d/dt (u, p, q)`` returned as a state-shaped container (``t`` kept)."""
    N = state.N
    cfg = ScenarioConfig(kappa, zeros(N), zeros(N), forcing, drop_exp_factor=drop_exp_factor)
    sysm = _System(cfg)
    dY = sysm(state.t, sysm.pack(state))
    return sysm.unpack(state.t, dY)


# -- integration ------------------------------------------------------------

@dataclass
class HyperbolicRun:
    records: list[DiagnosticsRecord]
    states: list[HyperbolicState]
    final_state: HyperbolicState
    blowup: BlowupDetected | None = None
    params: ExpDecayParams | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def physical_u(self, state: HyperbolicState) -> SpectralField:
        """``u = exp(lam t) w`` for shifted runs; ``u`` itself otherwise."""
        lam = 0.0 if self.params is None else self.params.lam
        return state.u * math.exp(lam * state.t)


def _record(state: HyperbolicState, cfg: ScenarioConfig, flags: str = "") -> DiagnosticsRecord:
    m = cfg.m
    u = state.u * math.exp(cfg.lam * state.t) if cfg.lam else state.u
    h = sobolev_norm(u, m + 1)
    u0 = float(u.coeffs[u.N, u.N, u.N].real)
    E = energy(state, m) * math.exp(2.0 * cfg.lam * state.t) if cfg.lam else energy(state, m)
    return DiagnosticsRecord(float(state.t), h, math.sqrt(h * h + u0 * u0), E, u0,
                             envelope_thm1(cfg.kappa, state.t) if cfg.kappa > 0 else float("nan"),
                             cfg.forcing.norm(state.t, m), flags)


def integrate(cfg: ScenarioConfig, sample_every: int = 1, initial_state: HyperbolicState | None = None,
              keep_every: int | None = None) -> HyperbolicRun:
    """Classical RK4 on the spectral system from 0 (or ``initial_state``) to ``t_final``.

    Records hold quantities of the physical unknown ``u`` (shifted runs are
    mapped back). ``states`` keeps every ``keep_every``-th state
    (default: the sampled ones) in the evolved variables.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    keep_every = sample_every if keep_every is None else keep_every
    sysm = _System(cfg)
    if initial_state is None:
        initial_state = assemble_state(cfg.f, cfg.g, sysm.gamma)
    st = initial_state
    Y = sysm.pack(st)
    t0 = st.t
    n = max(0, int(math.ceil((cfg.t_final - t0) / cfg.dt - 1e-9)))
    times = [t0 + i * cfg.dt for i in range(n)] + [cfg.t_final] if n else [t0]
    records = [_record(st, cfg)]
    states = [st]
    params = ExpDecayParams(cfg.kappa, cfg.lam) if cfg.lam else None
    for i, (ta, tb) in enumerate(zip(times, times[1:]), start=1):
        h = tb - ta
        k1 = sysm(ta, Y)
        k2 = sysm(ta + 0.5 * h, Y + 0.5 * h * k1)
        k3 = sysm(ta + 0.5 * h, Y + 0.5 * h * k2)
        k4 = sysm(tb, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        new = sysm.unpack(tb, Y)
        flag = None
        if not new.is_finite():
            flag = "non-finite coefficients"
        else:
            uphys = new.u * math.exp(cfg.lam * tb) if cfg.lam else new.u
            nrm = sobolev_norm(uphys, cfg.m + 1, homogeneous=False)
            if nrm > cfg.blowup_threshold:
                flag = f"H^(m+1) norm {nrm:.6g} exceeds threshold {cfg.blowup_threshold:g}"
        if flag:
            exc = BlowupDetected(tb, flag)
            if new.is_finite():
                records.append(_record(new, cfg, "blowup"))
            return HyperbolicRun(records, states, st, exc, params)
        st = new
        last = i == len(times) - 1
        if i % sample_every == 0 or last:
            records.append(_record(st, cfg))
        if i % keep_every == 0 or last:
            states.append(st)
    return HyperbolicRun(records, states, st, None, params)


# -- energy inequalities ------------------------------------------------------

def energy_inequality_residual(run: HyperbolicRun | Sequence[HyperbolicState], cfg: ScenarioConfig,
                               C_m: float) -> tuple[np.ndarray, np.ndarray]:
    """Samples of ``(1/2) E' + kappa E - F(t) sqrt(E)``.

    ``F(t) = kappa^2 ||u||_m + e^{-kappa t} ||a(t)||_{H^m} P(||u||_m)``; the
    exponential is dropped with ``cfg.drop_exp_factor``. ``E'`` uses
    second-order finite differences on the (possibly nonuniform) sample
    times. Returns ``(t, r)``.
    """
    if cfg.lam:
        raise ValueError("residual is defined for the unshifted system")
    states = run.states if isinstance(run, HyperbolicRun) else list(run)
    t = np.array([s.t for s in states])
    if t.size < 3:
        raise ValueError("need at least three samples")
    m, k = cfg.m, cfg.kappa
    E = np.array([energy(s, m) for s in states])
    un = np.array([sobolev_norm(s.u, m) for s in states])
    an = np.array([cfg.forcing.norm(ti, m) for ti in t])
    ef = np.ones_like(t) if cfg.drop_exp_factor else np.exp(-k * t)
    F = k * k * un + ef * an * np.array([P(x, C_m) for x in un])
    dE = np.gradient(E, t, edge_order=2)
    return t, 0.5 * dE + k * E - F * np.sqrt(E)


def gronwall_energy_bound(E0: float, t0: float, t: float, sup_u: float, sup_aP: float,
                          kappa: float, drop_exp_factor: bool = False) -> float:
    """Bound on ``sqrt(E(t))`` from the energy inequality on ``[t0, t]``.

    ``e^{-kappa(t-t0)} sqrt(E0) + kappa (1 - e^{-kappa(t-t0)}) sup ||u||
    + e^{-kappa t} (t - t0) sup ||a|| P``. With ``drop_exp_factor`` the last
    term becomes ``(1 - e^{-kappa(t-t0)}) / kappa * sup ||a|| P``.
    """
    if min(E0, sup_u, sup_aP) < 0:
        raise ValueError("inputs must be nonnegative")
    if t < t0:
        raise ValueError("need t >= t0")
    d = t - t0
    decay = -math.expm1(-kappa * d)
    lin = math.exp(-kappa * d) * math.sqrt(E0) + kappa * decay * sup_u
    if drop_exp_factor:
        return lin + (decay / kappa if kappa > 0 else d) * sup_aP
    return lin + math.exp(-kappa * t) * d * sup_aP


def transform_exp_decay(cfg: ScenarioConfig, params: ExpDecayParams) -> ScenarioConfig:
    """Configuration for ``w = exp(-lam t) u``: ``w(0) = f``, ``w_t(0) = g - lam f``."""
    if abs(params.kappa - cfg.kappa) > 0:
        raise ValueError("params were built for a different kappa")
    if cfg.lam:
        raise ValueError("configuration is already shifted")
    return cfg.with_(g=cfg.g - cfg.f * params.lam, lam=params.lam)


def modulus_ratio(states: Sequence[HyperbolicState], m: float, t_max: float = 1.0) -> float:
    """``sup_{0 < t <= t_max} ||U(t) - U(0)||_{m-1} / t^{1/m}`` over the samples."""
    U0 = states[0]
    worst = 0.0
    for s in states[1:]:
        dt = s.t - U0.t
        if dt <= 0 or dt > t_max:
            continue
        d = _norm_sq(s.p.coeffs - U0.p.coeffs, m - 1)
        d += sum(_norm_sq(a.coeffs - b.coeffs, m - 1) for a, b in zip(s.q, U0.q))
        worst = max(worst, math.sqrt(d) / dt ** (1.0 / m))
    return worst
