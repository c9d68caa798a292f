"""Exact solution of the linear damped wave equation, mode by mode.

Each Fourier mode of ``u_tt + 2 kappa u_t - Delta u = exp(-kappa t) F`` obeys

    u_k'' + 2 kappa u_k' + |k|^2 u_k = exp(-kappa t) F_k(t),

which is solved by its fundamental matrix plus a Duhamel integral. The same
machinery handles the shifted unknown ``w = exp(-lam t) u`` through the
parameter ``lam``: damping becomes ``kappa + lam`` and stiffness
``|k|^2 + 2 kappa lam + lam^2`` while the frequency ``sqrt(|k|^2 - kappa^2)``
is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import quadrature
from .spectral import SpectralField, sobolev_norm
from .states import WaveState

__all__ = [
    "ModeState",
    "check_kappa",
    "fundamental",
    "propagate_mode",
    "propagate_zero_mode",
    "solve_linear",
    "propagate_modes",
    "linear_energy_bound",
]


@dataclass(frozen=True)
class ModeState:
    """Amplitude and velocity of a single Fourier mode."""

    k: tuple[int, int, int]
    u_hat: complex
    v_hat: complex

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(x) for x in self.k))
        if not (np.isfinite(self.u_hat) and np.isfinite(self.v_hat)):
            raise ValueError("mode state must be finite")


def check_kappa(kappa: float, allow_zero: bool = False) -> float:
    kappa = float(kappa)
    lo_ok = kappa >= 0.0 if allow_zero else kappa > 0.0
    if not (lo_ok and kappa < 1.0):
        bound = "[0, 1)" if allow_zero else "(0, 1)"
        raise ValueError(f"damping kappa must lie in {bound}, got {kappa}")
    return kappa


def fundamental(ksq, kappa: float, h, lam: float = 0.0):
    """Entries ``(a11, a12, a21, a22)`` of the mode propagator over time ``h``.

    ``ksq`` and ``h`` broadcast against each other. ``sin(nu h)/nu`` is
    evaluated in sinc form so it stays accurate as ``nu`` shrinks; modes with
    ``|k| < kappa`` (only ``k = 0``) use the hyperbolic branch.
    """
    ksq = np.asarray(ksq, dtype=float)
    h = np.asarray(h, dtype=float)
    delta = kappa + lam
    omega2 = ksq + 2.0 * kappa * lam + lam * lam
    nu2 = ksq - kappa * kappa
    nu2, h = np.broadcast_arrays(nu2, h)
    c = np.empty(nu2.shape)
    s = np.empty(nu2.shape)
    osc = nu2 >= 0.0
    nu = np.sqrt(nu2[osc])
    c[osc] = np.cos(nu * h[osc])
    s[osc] = h[osc] * np.sinc(nu * h[osc] / np.pi)
    mu = np.sqrt(-nu2[~osc])
    hm = h[~osc]
    c[~osc] = np.cosh(mu * hm)
    s[~osc] = hm * _sinhc(mu * hm)
    E = np.exp(-delta * h)
    return E * (c + delta * s), E * s, -E * omega2 * s, E * (c - delta * s)


def _sinhc(x):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.sinh(x[nz]) / x[nz]
    return out


def _impulse(ksq, kappa, tau, lam=0.0):
    """Response ``(a12, a22)`` at lags ``tau`` (leading axis) for each mode."""
    tau = np.asarray(tau, dtype=float).reshape((-1,) + (1,) * np.ndim(ksq))
    _, a12, _, a22 = fundamental(ksq, kappa, tau, lam)
    return a12, a22


def _duhamel(ksq, kappa, source, t0, h, tol, lam=0.0):
    """``int_0^h (a12, a22)(h - s) source(t0 + s) ds`` for every mode."""
    def integrand(s):
        a12, a22 = _impulse(ksq, kappa, h - s, lam)
        G = quadrature.sample(source, t0 + s)
        return np.stack([a12 * G, a22 * G], axis=1)
    out = quadrature.integrate(integrand, 0.0, h, tol=tol)
    return out[0], out[1]


def propagate_mode(k: Sequence[int], kappa: float, init: ModeState,
                   forcing: Callable | None = None, t: float = 0.0,
                   tol: float = quadrature.DEFAULT_TOL) -> ModeState:
    """Advance one nonzero mode from time 0 to ``t``.

    Parameters
    ----------
    k : sequence of 3 ints
        Wavenumber, ``|k| >= 1``.
    kappa : float
        Damping in (0, 1).
    init : ModeState
        Amplitude and velocity at time 0.
    forcing : callable, optional
        ``F_k(s)``; the equation is driven by ``exp(-kappa s) F_k(s)``.
    t : float
        Final time.
    tol : float
        Duhamel quadrature tolerance.

    Returns
    -------
    ModeState
        ``u_k(t)`` and its exact time derivative.
    """
    kappa = check_kappa(kappa)
    k = tuple(int(x) for x in k)
    ksq = float(sum(x * x for x in k))
    if ksq < 1:
        raise ValueError("propagate_mode needs k != 0; use propagate_zero_mode")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    a11, a12, a21, a22 = (float(x) for x in fundamental(ksq, kappa, t))
    u = a11 * init.u_hat + a12 * init.v_hat
    v = a21 * init.u_hat + a22 * init.v_hat
    if forcing is not None and t > 0:
        du, dv = _duhamel(ksq, kappa, lambda s: np.exp(-kappa * s) * quadrature.sample(forcing, s),
                          0.0, t, tol)
        u += complex(du)
        v += complex(dv)
    return ModeState(k, complex(u), complex(v))


def propagate_zero_mode(kappa: float, f0: float, g0: float, forcing: Callable | None = None,
                        t: float = 0.0, tol: float = quadrature.DEFAULT_TOL,
                        return_derivative: bool = False):
    """Mean value of the solution at time ``t``.

    ``u_0(t) = f0 + g0 (1 - e^{-2 kappa t}) / (2 kappa)
    + (1 / (2 kappa)) int_0^t (1 - e^{-2 kappa (t-s)}) e^{-kappa s} F_0(s) ds``.

    With ``return_derivative`` the pair ``(u_0, u_0')`` is returned.
    """
    kappa = check_kappa(kappa)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    decay = -np.expm1(-2.0 * kappa * t)
    u = f0 + g0 * decay / (2.0 * kappa)
    v = g0 * np.exp(-2.0 * kappa * t)
    if forcing is not None and t > 0:
        def integrand(s):
            F = np.exp(-kappa * s) * quadrature.sample(forcing, s)
            lag = t - s
            return np.stack([-np.expm1(-2.0 * kappa * lag) / (2.0 * kappa) * F,
                             np.exp(-2.0 * kappa * lag) * F], axis=1)
        du, dv = quadrature.integrate(integrand, 0.0, t, tol=tol)
        u += float(np.real(du))
        v += float(np.real(dv))
    u, v = float(u), float(v)
    return (u, v) if return_derivative else u


def _coeff_source(forcing, kappa, N, lam=0.0):
    """Wrap ``t -> F(t)`` as ``t -> exp(-(kappa + lam) t) F_hat(t)`` flattened."""
    def G(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty((s.size, (2 * N + 1) ** 3), dtype=complex)
        for i, si in enumerate(s):
            F = forcing(float(si))
            c = F.coeffs if isinstance(F, SpectralField) else np.asarray(F, dtype=complex)
            if c.shape != ((2 * N + 1),) * 3:
                raise ValueError(f"forcing has shape {c.shape}, expected radius {N}")
            out[i] = np.exp(-(kappa + lam) * si) * c.ravel()
        return out
    return G


def solve_linear(f: SpectralField, g: SpectralField,
                 forcing: Callable[[float], SpectralField] | None, kappa: float,
                 times: Sequence[float], tol: float = quadrature.DEFAULT_TOL) -> list[WaveState]:
    """Exact states of the linear problem at the requested times.

    Every mode is advanced interval by interval with its fundamental matrix,
    and the Duhamel integral over each output interval is evaluated by
    composite Gauss-Legendre quadrature to ``tol``.

    Parameters
    ----------
    f, g : SpectralField
        Initial displacement and velocity, same truncation radius.
    forcing : callable or None
        ``t -> F(t)`` returning a field (or coefficient cube) of the same
        radius. The equation is driven by ``exp(-kappa t) F(t)``.
    kappa : float
        Damping in (0, 1).
    times : sequence of float
        Sorted output times starting at 0.
    """
    kappa = check_kappa(kappa)
    if f.N != g.N:
        raise ValueError(f"initial data have different truncation radii ({f.N}, {g.N})")
    times = [float(t) for t in times]
    if not times or times[0] != 0.0:
        raise ValueError("times must start at 0")
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be sorted")
    N = f.N
    shape = f.coeffs.shape
    real = f.real and g.real
    source = None if forcing is None else _coeff_source(forcing, kappa, N)
    traj = propagate_modes(f.coeffs.ravel(), g.coeffs.ravel(), f.lattice.ksq.ravel(), kappa,
                           times, source, tol)
    return [WaveState(t, SpectralField(u.reshape(shape), real), SpectralField(v.reshape(shape), real))
            for t, (u, v) in zip(times, traj)]


def propagate_modes(u: np.ndarray, v: np.ndarray, ksq: np.ndarray, kappa: float,
                    times: Sequence[float], source: Callable | None = None,
                    tol: float = quadrature.DEFAULT_TOL, lam: float = 0.0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Flat-array core of :func:`solve_linear`.

    ``source(s)`` maps an array of times to the full right-hand side
    (damping factor included), one row per time. Returns ``(u, v)`` at each
    entry of ``times``; the first entry is taken as the initial time.
    """
    u = np.array(u, dtype=complex)
    v = np.array(v, dtype=complex)
    out = [(u.copy(), v.copy())]
    for t0, t1 in zip(times, times[1:]):
        h = t1 - t0
        if h > 0:
            a11, a12, a21, a22 = fundamental(ksq, kappa, h, lam)
            u, v = a11 * u + a12 * v, a21 * u + a22 * v
            if source is not None:
                du, dv = _duhamel(ksq, kappa, source, t0, h, tol, lam)
                u = u + du
                v = v + dv
        out.append((u.copy(), v.copy()))
    return out


def linear_energy_bound(f: SpectralField, g: SpectralField, forcing_norms: Sequence[float],
                        kappa: float, m: float, t: float,
                        sample_times: Sequence[float] | None = None) -> float:
    """Upper bound for ``||u(t)||^2`` in the homogeneous ``H^{m+1}`` norm.

    ``2 e^{-2 kappa t} (2 (1 + kappa^2) ||f||^2_{m+1} + 2 ||g||^2_m
    + t int_0^t ||F||^2_m)``, the time integral by the trapezoid rule over
    ``forcing_norms`` sampled at ``sample_times`` (uniform on ``[0, t]`` by
    default).
    """
    kappa = check_kappa(kappa)
    vals = np.asarray(forcing_norms, dtype=float)
    integral = 0.0
    if vals.size > 1:
        ts = np.linspace(0.0, t, vals.size) if sample_times is None else np.asarray(sample_times, float)
        if ts.shape != vals.shape:
            raise ValueError("sample_times and forcing_norms have different lengths")
        integral = float(np.trapezoid(vals**2, ts))
    elif vals.size == 1 and t > 0:
        integral = float(vals[0] ** 2 * t)
    fn = sobolev_norm(f, m + 1)
    gn = sobolev_norm(g, m)
    return float(2.0 * np.exp(-2.0 * kappa * t)
                 * (2.0 * (1.0 + kappa**2) * fn**2 + 2.0 * gn**2 + t * integral))
