"""Nonlinear time integration of the damped cubic wave equation.

The linear part is propagated exactly per mode (see :mod:`nordwave.linear`);
the source ``exp(-kappa t) a(t, x) (1 + u)^3`` enters through exponential
Runge-Kutta rules whose weights are moments of the mode impulse response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import kernels, quadrature
from .diagnostics import DiagnosticsRecord, envelope_thm1
from .linear import check_kappa, fundamental, propagate_modes
from .spectral import (SpectralField, _norm_sq, cubic_one_plus, lattice, product,
                       sobolev_norm, zeros)
from .states import WaveState

__all__ = [
    "WaveState",
    "ForcingModel",
    "ScenarioConfig",
    "BlowupDetected",
    "PicardNonConvergence",
    "RunResult",
    "PicardResult",
    "nonlinear_forcing",
    "step",
    "run",
    "picard_fixed_point",
    "wave_energy",
    "record_for",
]

SCHEMES = ("exprk2", "exprk4", "picard")


@dataclass(frozen=True)
class ForcingModel:
    """Forcing coefficient ``a(t, x) = theta(t) * profile(x)``.

    Parameters
    ----------
    profile : SpectralField
        Spatial part; must be real.
    kind : {"constant", "separable", "tabulated"}
        ``constant``: ``theta = 1``. ``separable``:
        ``theta = 1 + amplitude cos(frequency t)``. ``tabulated``: linear
        interpolation of ``table_values`` at ``table_times``, held constant
        beyond the last entry.
    coupling : {"cubic", "none"}
        ``none`` drops the ``(1 + u)^3`` factor, giving a linear problem.
    """

    profile: SpectralField
    kind: str = "constant"
    amplitude: float = 0.0
    frequency: float = 0.0
    table_times: tuple = ()
    table_values: tuple = ()
    coupling: str = "cubic"

    def __post_init__(self):
        if self.kind not in ("constant", "separable", "tabulated"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.coupling not in ("cubic", "none"):
            raise ValueError(f"unknown coupling {self.coupling!r}")
        if not self.profile.real or self.profile.hermitian_defect() > 1e-12:
            raise ValueError("forcing profile must be a real field")
        if self.kind == "tabulated":
            tt = np.asarray(self.table_times, dtype=float)
            tv = np.asarray(self.table_values, dtype=float)
            if tt.ndim != 1 or tt.size == 0 or tt.shape != tv.shape:
                raise ValueError("tabulated modulation needs equal-length nonempty time/value tables")
            if np.any(np.diff(tt) <= 0):
                raise ValueError("tabulated modulation times must increase strictly")
            object.__setattr__(self, "table_times", tuple(float(x) for x in tt))
            object.__setattr__(self, "table_values", tuple(float(x) for x in tv))

    @classmethod
    def zero(cls, N: int) -> "ForcingModel":
        return cls(zeros(N))

    def theta(self, t: float) -> float:
        if self.kind == "constant":
            return 1.0
        if self.kind == "separable":
            return 1.0 + self.amplitude * math.cos(self.frequency * t)
        return float(np.interp(t, self.table_times, self.table_values))

    def at(self, t: float) -> SpectralField:
        return self.profile * self.theta(t)

    def norm(self, t: float, m: float) -> float:
        """``||a(t)||_{H^m}``."""
        return abs(self.theta(t)) * sobolev_norm(self.profile, m, homogeneous=False)

    def sup_theta(self, t_final: float) -> float:
        """``sup |theta|`` over ``[0, t_final]``."""
        if self.kind == "constant":
            return 1.0
        if self.kind == "separable":
            if abs(self.frequency) * t_final >= math.pi:
                return max(abs(1.0 + self.amplitude), abs(1.0 - self.amplitude))
            # cos is monotone on [0, pi], so the extremes sit at the ends
            return max(abs(self.theta(0.0)), abs(self.theta(t_final)))
        tt = np.asarray(self.table_times)
        inside = [float(abs(v)) for t, v in zip(tt, self.table_values) if 0.0 <= t <= t_final]
        return max(inside + [abs(self.theta(0.0)), abs(self.theta(t_final))])

    def sup_norm(self, t_final: float, m: float) -> float:
        """``sup_t ||a(t)||_{H^m}`` over ``[0, t_final]``."""
        return self.sup_theta(t_final) * sobolev_norm(self.profile, m, homogeneous=False)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to run one trajectory.

    ``kappa = 0`` is accepted as an undamped control case; the theorem
    checks themselves require ``0 < kappa < 1``.
    """

    kappa: float
    f: SpectralField
    g: SpectralField
    forcing: ForcingModel
    m: float = 2.0
    t_final: float = 1.0
    dt: float | None = None
    scheme: str = "exprk2"
    substeps: int = 1
    drop_exp_factor: bool = False
    blowup_threshold: float = 1e6
    adaptive: bool = False
    rtol: float = 1e-8
    atol: float = 1e-12
    dt_min: float = 1e-12
    lam: float = 0.0

    def __post_init__(self):
        check_kappa(self.kappa, allow_zero=True)
        if self.lam > 0 or self.kappa + self.lam < 0:
            raise ValueError(f"exponential shift lam must satisfy -kappa <= lam <= 0, got {self.lam}")
        if self.f.N != self.g.N or self.forcing.profile.N != self.f.N:
            raise ValueError("f, g and forcing profile must share the truncation radius")
        if not (self.f.real and self.g.real):
            raise ValueError("initial data must be real fields")
        if self.m < 0:
            raise ValueError(f"Sobolev index must be nonnegative, got {self.m}")
        if self.dt is None:
            object.__setattr__(self, "dt", 1e-3 * min(1.0, 1.0 / self.N))
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be nonnegative, got {self.t_final}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        n0 = sobolev_norm(self.f, self.m + 1, homogeneous=False)
        if not self.blowup_threshold > n0:
            raise ValueError(f"blowup_threshold {self.blowup_threshold} must exceed the initial norm {n0}")

    @property
    def N(self) -> int:
        return self.f.N

    def initial_state(self) -> WaveState:
        return WaveState(0.0, self.f, self.g)

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


class BlowupDetected(RuntimeError):
    """Raised by :func:`step` when the solution leaves the trusted range."""

    def __init__(self, t: float, reason: str, state: WaveState | None = None):
        super().__init__(f"blow-up flag at t={t:.9g}: {reason}")
        self.t = t
        self.reason = reason
        self.state = state


class PicardNonConvergence(RuntimeError):
    def __init__(self, window_start: float, diffs: list[float]):
        super().__init__(f"Picard iteration did not converge on window starting at t={window_start}; "
                         f"last differences {diffs[-3:]}")
        self.window_start = window_start
        self.diffs = diffs


def nonlinear_forcing(state: WaveState, forcing: ForcingModel, drop_exp_factor: bool = False,
                      kappa: float = 0.0) -> SpectralField:
    """Dealiased ``exp(-kappa t) a(t, .) (1 + u)^3``.

    The exponential factor is omitted when ``drop_exp_factor`` is set; the
    cubic factor when the forcing coupling is ``none``.
    """
    t = state.t
    scale = forcing.theta(t) * (1.0 if drop_exp_factor else math.exp(-kappa * t))
    prof = forcing.profile
    if scale == 0.0 or not np.any(prof.coeffs):
        return zeros(state.N)
    if forcing.coupling == "none":
        return prof * scale
    if prof.radius == 0:
        return cubic_one_plus(state.u) * (scale * prof.coeffs[prof.N, prof.N, prof.N].real)
    u = state.u
    return product([prof, u, u, u], offsets=[0.0, 1.0, 1.0, 1.0]) * scale


# -- exponential Runge-Kutta ----------------------------------------------

@dataclass(frozen=True)
class _Tables:
    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray
    wu: np.ndarray   # (3, M) moments for the displacement
    wv: np.ndarray   # (3, M) moments for the velocity


@lru_cache(maxsize=64)
def _tables(N: int, kappa: float, h: float) -> _Tables:
    """Propagator and impulse moments ``W_j = int_0^h K(h-s) (s/h)^{j-1}/(j-1)! ds``."""
    ksq = lattice(N).ksq.ravel()
    a11, a12, a21, a22 = fundamental(ksq, kappa, h)
    fact = np.array([1.0, 1.0, 0.5])

    def integrand(s):
        _, k12, _, k22 = fundamental(ksq[None, :], kappa, (h - s)[:, None])
        x = (s / h)[:, None, None] ** np.arange(3)[None, :, None] * fact[None, :, None]
        return np.stack([x * k12[:, None, :], x * k22[:, None, :]], axis=1)

    nu_max = math.sqrt(float(ksq.max()) + 1.0)
    panels = max(1, int(math.ceil(nu_max * h)))
    W = quadrature.integrate(integrand, 0.0, h, tol=1e-15, order=16, min_panels=panels)
    arrs = [np.ascontiguousarray(x) for x in (a11, a12, a21, a22, W[0], W[1])]
    for x in arrs:
        x.flags.writeable = False
    return _Tables(*arrs)


def _affine(tab: _Tables, u, v, weights: Sequence[tuple[np.ndarray, np.ndarray]], sources):
    """``Phi (u, v) + sum_i weights_i * sources_i``."""
    M = u.shape[0]
    wu = np.ascontiguousarray(np.array([w[0] for w in weights], dtype=float).reshape(-1, M))
    wv = np.ascontiguousarray(np.array([w[1] for w in weights], dtype=float).reshape(-1, M))
    n = np.ascontiguousarray(np.array(sources, dtype=complex).reshape(-1, M))
    ou = np.empty(M, dtype=complex)
    ov = np.empty(M, dtype=complex)
    kernels.affine_modes(np.ascontiguousarray(u), np.ascontiguousarray(v), tab.a11, tab.a12,
                         tab.a21, tab.a22, wu, wv, n, ou, ov)
    return ou, ov


def _w(tab: _Tables, j: int):
    return tab.wu[j], tab.wv[j]


def _lin(*terms):
    """Linear combination of moment pairs: ``_lin((c, W), ...)``."""
    u = sum(c * w[0] for c, w in terms)
    v = sum(c * w[1] for c, w in terms)
    return u, v


class _Stepper:
    """Single exponential RK step on flat coefficient arrays."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.N = cfg.N
        self.shape = cfg.f.coeffs.shape

    def source(self, t: float, u: np.ndarray) -> np.ndarray:
        st = WaveState(t, SpectralField(u.reshape(self.shape)), zeros(self.N))
        G = nonlinear_forcing(st, self.cfg.forcing, self.cfg.drop_exp_factor, self.cfg.kappa)
        return G.coeffs.ravel()

    def __call__(self, t: float, u: np.ndarray, v: np.ndarray, h: float):
        kappa = self.cfg.kappa
        if self.cfg.scheme == "exprk4":
            return self._rk4(t, u, v, h, kappa)
        return self._rk2(t, u, v, h, kappa)

    def _rk2(self, t, u, v, h, kappa):
        tab = _tables(self.N, kappa, h)
        G0 = self.source(t, u)
        au, _ = _affine(tab, u, v, [_w(tab, 0)], [G0])
        Ga = self.source(t + h, au)
        W1, W2 = _w(tab, 0), _w(tab, 1)
        return _affine(tab, u, v, [_lin((1.0, W1), (-1.0, W2)), W2], [G0, Ga])

    def _rk4(self, t, u, v, h, kappa):
        half = _tables(self.N, kappa, 0.5 * h)
        full = _tables(self.N, kappa, h)
        H1 = _w(half, 0)
        G0 = self.source(t, u)
        au, av = _affine(half, u, v, [H1], [G0])
        Ga = self.source(t + 0.5 * h, au)
        bu, _ = _affine(half, u, v, [H1], [Ga])
        Gb = self.source(t + 0.5 * h, bu)
        cu, _ = _affine(half, au, av, [H1], [2.0 * Gb - G0])
        Gc = self.source(t + h, cu)
        W1, W2, W3 = _w(full, 0), _w(full, 1), _w(full, 2)
        f1 = _lin((1.0, W1), (-3.0, W2), (4.0, W3))
        f2 = _lin((2.0, W2), (-4.0, W3))
        f3 = _lin((-1.0, W2), (4.0, W3))
        return _affine(full, u, v, [f1, f2, f3], [G0, Ga + Gb, Gc])


def _order(cfg):
    return 4 if cfg.scheme == "exprk4" else 2


def _advance(stepper: _Stepper, t: float, u, v, h: float):
    cfg = stepper.cfg
    sub = h / cfg.substeps
    if not cfg.adaptive:
        for i in range(cfg.substeps):
            u, v = stepper(t + i * sub, u, v, sub)
        return u, v
    w_u = lattice(cfg.N).weights(cfg.m + 1).ravel()
    w_v = lattice(cfg.N).weights(cfg.m).ravel()
    N0 = (w_u.size - 1) // 2

    def size(x, y):
        # H^{m+1} for u plus H^m for v, both including the mean
        return math.sqrt(float(np.sum(w_u * np.abs(x) ** 2) + np.sum(w_v * np.abs(y) ** 2))
                         + abs(x[N0]) ** 2 + abs(y[N0]) ** 2)

    p = _order(cfg)
    t_end = t + h
    hh = sub
    while t < t_end:
        hh = min(hh, t_end - t)
        u1, v1 = stepper(t, u, v, hh)
        um, vm = stepper(t, u, v, 0.5 * hh)
        u2, v2 = stepper(t + 0.5 * hh, um, vm, 0.5 * hh)
        err_n = size(u2 - u1, v2 - v1) / (2**p - 1)
        err = err_n / (cfg.atol + cfg.rtol * size(u2, v2))
        if not math.isfinite(err):
            err = math.inf
        if err <= 1.0:
            t = t_end if t + hh >= t_end - 1e-15 * max(1.0, t_end) else t + hh
            u, v = u2, v2
            grow = 2.0 if err < 0.5 ** (p + 1) else 1.0
            hh = min(sub, hh * grow)
        else:
            hh *= max(0.2, 0.9 * err ** (-1.0 / (p + 1)))
            if hh < cfg.dt_min:
                raise BlowupDetected(t, f"step size collapsed below {cfg.dt_min:g}")
    return u, v


def _check(cfg: ScenarioConfig, st: WaveState) -> None:
    if not st.is_finite():
        raise BlowupDetected(st.t, "non-finite coefficients", st)
    n = sobolev_norm(st.u, cfg.m + 1, homogeneous=False)
    if n > cfg.blowup_threshold:
        raise BlowupDetected(st.t, f"H^(m+1) norm {n:.6g} exceeds threshold {cfg.blowup_threshold:g}", st)


def step(state: WaveState, cfg: ScenarioConfig, dt: float | None = None) -> WaveState:
    """Advance ``state`` by ``dt`` (default ``cfg.dt``).

    Raises
    ------
    BlowupDetected
        When the new state is non-finite, its ``H^{m+1}`` norm exceeds
        ``cfg.blowup_threshold``, or adaptive substepping collapses.
    """
    _require_unshifted(cfg)
    h = cfg.dt if dt is None else float(dt)
    if state.t + h > cfg.t_final + cfg.dt * (1 + 1e-9):
        raise ValueError(f"step would pass t_final ({state.t} + {h} > {cfg.t_final})")
    stepper = _Stepper(cfg)
    u, v = _advance(stepper, state.t, state.u.coeffs.ravel(), state.ut.coeffs.ravel(), h)
    new = WaveState(state.t + h, _field(u, state.u), _field(v, state.ut))
    _check(cfg, new)
    return new


def _require_unshifted(cfg):
    if cfg.lam != 0.0:
        raise ValueError("configs with an exponential shift are integrated by the first-order solver")


def _field(flat: np.ndarray, like: SpectralField) -> SpectralField:
    return SpectralField(flat.reshape(like.coeffs.shape), like.real)


# -- runs -----------------------------------------------------------------

def wave_energy(state: WaveState, kappa: float, m: float) -> float:
    """``||u_t + kappa u||^2_m + ||grad u||^2_m`` in homogeneous norms."""
    p = state.ut.coeffs + kappa * state.u.coeffs
    return _norm_sq(p, m) + _norm_sq(state.u.coeffs, m + 1)


def record_for(state: WaveState, cfg: ScenarioConfig, flags: str = "") -> DiagnosticsRecord:
    m = cfg.m
    h = sobolev_norm(state.u, m + 1)
    u0 = float(state.u.coeffs[state.N, state.N, state.N].real)
    full = math.sqrt(h * h + u0 * u0)
    return DiagnosticsRecord(
        t=float(state.t), hnorm_u=h, norm_u=full, energy_E=wave_energy(state, cfg.kappa, m),
        u0_mean=u0, envelope=envelope_thm1(cfg.kappa, state.t) if cfg.kappa > 0 else float("nan"),
        forcing_norm=cfg.forcing.norm(state.t, m), flags=flags)


@dataclass
class RunResult:
    records: list[DiagnosticsRecord]
    final_state: WaveState
    blowup: BlowupDetected | None = None
    states: list[WaveState] = field(default_factory=list)

    @property
    def blew_up(self) -> bool:
        return self.blowup is not None


def _time_grid(t0: float, t_final: float, dt: float) -> list[float]:
    """``t0, t0 + dt, ...`` ending exactly at ``t_final``."""
    n = max(0, int(math.ceil((t_final - t0) / dt - 1e-9)))
    ts = [t0 + i * dt for i in range(n)] + [t_final]
    return ts if n else [t0]


def run(cfg: ScenarioConfig, sample_every: int = 1, initial_state: WaveState | None = None,
        keep_states: bool = False, callback: Callable[[WaveState], None] | None = None) -> RunResult:
    """Integrate from ``initial_state`` (default: the configured data) to ``t_final``.

    A record is written at the start, every ``sample_every`` steps and at the
    final time. A blow-up flag ends the run early; the offending time is kept
    in ``RunResult.blowup`` and the last record carries the flag.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    _require_unshifted(cfg)
    if cfg.scheme == "picard":
        res = picard_fixed_point(cfg)
        recs = [record_for(s, cfg) for s in res.states]
        return RunResult(recs, res.states[-1], None, res.states if keep_states else [])
    state = cfg.initial_state() if initial_state is None else initial_state
    times = _time_grid(state.t, cfg.t_final, cfg.dt)
    stepper = _Stepper(cfg)
    records = [record_for(state, cfg)]
    states = [state] if keep_states else []
    if callback:
        callback(state)
    u = state.u.coeffs.ravel()
    v = state.ut.coeffs.ravel()
    for i, (t0, t1) in enumerate(zip(times, times[1:]), start=1):
        try:
            u, v = _advance(stepper, t0, u, v, t1 - t0)
            new = WaveState(t1, _field(u, cfg.f), _field(v, cfg.g))
            _check(cfg, new)
        except BlowupDetected as exc:
            bad = exc.state or WaveState(t1, _field(u, cfg.f), _field(v, cfg.g))
            exc.state = bad
            if bad.is_finite():
                records.append(record_for(bad, cfg, flags="blowup"))
            else:
                records.append(DiagnosticsRecord(float(exc.t), math.inf, math.inf, math.inf, math.nan,
                                                 envelope_thm1(cfg.kappa, exc.t) if cfg.kappa > 0 else math.nan,
                                                 cfg.forcing.norm(exc.t, cfg.m), "blowup"))
            return RunResult(records, state, exc, states)
        state = new
        if keep_states:
            states.append(state)
        if callback:
            callback(state)
        if i % sample_every == 0 or i == len(times) - 1:
            records.append(record_for(state, cfg))
    return RunResult(records, state, None, states)


# -- Picard iteration -----------------------------------------------------

@dataclass
class PicardResult:
    states: list[WaveState]
    iterations: list[int]
    contraction: list[float]
    diffs: list[list[float]]


def _lagrange_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rows of Lagrange basis values: ``L[i, j] = l_j(x_i)``."""
    L = np.ones((x.size, nodes.size))
    for j, xj in enumerate(nodes):
        for k, xk in enumerate(nodes):
            if k != j:
                L[:, j] *= (x - xk) / (xj - xk)
    return L


def picard_fixed_point(cfg: ScenarioConfig, window: float = 1.0, max_iter: int = 50,
                       tol: float = 1e-10, panel: float = 0.125, order: int = 8,
                       quad_tol: float = 1e-13) -> PicardResult:
    """Iterate ``u <- L(u)`` window by window.

    On each window the source ``exp(-kappa t) a (1 + u_n)^3`` is sampled at
    Gauss-Legendre nodes of short panels and interpolated in time; the next
    iterate solves the linear problem with that source exactly per mode.
    Convergence is declared when the sup over nodes of the ``H^{m+1}``
    difference of successive iterates falls below ``tol``; the next window
    starts from the end state.

    Returns
    -------
    PicardResult
        States at panel boundaries, iterations used per window, and the
        empirical contraction ratio per window.

    Raises
    ------
    PicardNonConvergence
        After ``max_iter`` iterations without meeting ``tol``.
    """
    _require_unshifted(cfg)
    if window <= 0 or panel <= 0:
        raise ValueError("window and panel must be positive")
    window = min(window, cfg.t_final) if cfg.t_final > 0 else window
    kappa = cfg.kappa
    N = cfg.N
    shape = cfg.f.coeffs.shape
    ksq = lattice(N).ksq.ravel()
    w_m1 = lattice(N).weights(cfg.m + 1).ravel()
    c0 = ksq.size // 2
    x, _ = quadrature.gauss_legendre(order)
    st = _Stepper(cfg)
    u0 = cfg.f.coeffs.ravel().copy()
    v0 = cfg.g.coeffs.ravel().copy()
    T0 = 0.0
    out_states = [WaveState(0.0, cfg.f, cfg.g)]
    iters, ratios, all_diffs = [], [], []
    while T0 < cfg.t_final - 1e-12:
        T1 = min(T0 + window, cfg.t_final)
        npan = max(1, int(math.ceil((T1 - T0) / panel - 1e-9)))
        edges = np.linspace(T0, T1, npan + 1)
        widths = np.diff(edges)
        node_t = (edges[:-1, None] + widths[:, None] * x[None, :])
        # evaluation times: every node and every panel edge, in order
        grid = np.concatenate([np.concatenate([[edges[p]], node_t[p]]) for p in range(npan)] + [[T1]])
        is_node = np.concatenate([np.concatenate([[False], np.ones(order, bool)]) for _ in range(npan)] + [[False]])
        U = np.repeat(u0[None, :], grid.size, axis=0)
        diffs = []
        for it in range(1, max_iter + 1):
            node_idx = np.nonzero(is_node)[0].reshape(npan, order)
            Gp = np.stack([np.stack([st.source(float(grid[i]), U[i]) for i in row]) for row in node_idx])

            def source(s, Gp=Gp):
                s = np.atleast_1d(np.asarray(s, dtype=float))
                p = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, npan - 1)
                out = np.empty((s.size, ksq.size), dtype=complex)
                for pi in np.unique(p):
                    sel = p == pi
                    xi = (s[sel] - edges[pi]) / widths[pi]
                    out[sel] = _lagrange_matrix(x, xi) @ Gp[pi]
                return out

            try:
                traj = propagate_modes(u0, v0, ksq, kappa, list(grid), source, quad_tol)
            except RuntimeError as exc:  # the quadrature gives up on a diverging iterate
                raise PicardNonConvergence(T0, diffs or [math.inf]) from exc
            Unew = np.array([a for a, _ in traj])
            D = Unew - U
            with np.errstate(over="ignore", invalid="ignore"):
                d = float(np.sqrt(np.max(np.sum(w_m1 * np.abs(D) ** 2, axis=1) + np.abs(D[:, c0]) ** 2)))
            diffs.append(d)
            if not math.isfinite(d):
                raise PicardNonConvergence(T0, diffs)
            U = Unew
            if d < tol:
                break
        else:
            raise PicardNonConvergence(T0, diffs)
        iters.append(it)
        rs = [b / a for a, b in zip(diffs, diffs[1:]) if a > 0]
        ratios.append(max(rs[-3:]) if rs else 0.0)
        all_diffs.append(diffs)
        edge_pos = np.nonzero(~is_node)[0]
        for i in edge_pos[1:]:
            out_states.append(WaveState(float(grid[i]), SpectralField(traj[i][0].reshape(shape)),
                                        SpectralField(traj[i][1].reshape(shape))))
        u0, v0 = traj[-1]
        T0 = T1
    return PicardResult(out_states, iters, ratios, all_diffs)
