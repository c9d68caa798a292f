"""Truncated Fourier fields on the 3-torus.

A field of truncation radius ``N`` stores the coefficients ``f_k`` for every
lattice point ``k`` with ``|k_i| <= N`` in a dense ``(2N+1, 2N+1, 2N+1)``
complex array. Index ``(i, j, l)`` holds ``k = (i - N, j - N, l - N)``, so
C order is lexicographic in ``k`` with ``k_1`` slowest. The physical field is

    f(x) = sum_k f_k exp(i x . k),    x in [0, 2 pi)^3.

Nonlinear products are evaluated pseudospectrally on a padded grid that is
large enough for the product to be alias-free before truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import integrate

__all__ = [
    "SpectralField",
    "Lattice",
    "lattice",
    "make_field",
    "zeros",
    "to_physical",
    "from_physical",
    "sobolev_norm",
    "sobolev_weights",
    "h_inner_product",
    "gradient",
    "divergence",
    "mean_part",
    "multiply",
    "product",
    "cubic_one_plus",
    "hermitian_symmetrize",
    "multiplication_constant",
    "MultiplicationConstant",
    "random_field",
    "grid_points",
    "synthesize",
    "analyze",
]

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class Lattice:
    """Cached wavenumber tables for one truncation radius."""

    N: int
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    ksq: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        n = 2 * self.N + 1
        return (n, n, n)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    def weights(self, m: float) -> np.ndarray:
        """|k|^{2m} with the k = 0 entry set to zero."""
        return sobolev_weights(self.N, float(m))


@lru_cache(maxsize=None)
def lattice(N: int) -> Lattice:
    if N < 0:
        raise ValueError(f"truncation radius must be nonnegative, got {N}")
    r = np.arange(-N, N + 1)
    k1, k2, k3 = np.meshgrid(r, r, r, indexing="ij")
    ksq = (k1 * k1 + k2 * k2 + k3 * k3).astype(float)
    for a in (k1, k2, k3, ksq):
        a.flags.writeable = False
    return Lattice(N, k1, k2, k3, ksq)


@lru_cache(maxsize=None)
def sobolev_weights(N: int, m: float) -> np.ndarray:
    ksq = lattice(N).ksq
    w = np.zeros_like(ksq)
    nz = ksq > 0
    w[nz] = ksq[nz] ** m
    w.flags.writeable = False
    return w


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable truncated Fourier series.

    Parameters
    ----------
    coeffs : ndarray
        Complex array of shape ``(2N+1,)*3``; see the module docstring for
        the index convention.
    real : bool
        Whether the field represents a real function. Real fields satisfy
        ``coeff(-k) == conj(coeff(k))``.
    """

    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or len(set(c.shape)) != 1 or c.shape[0] % 2 == 0:
            raise ValueError(f"coefficient array must be (2N+1)^3, got shape {c.shape}")
        if c is self.coeffs and c.flags.writeable:
            c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def lattice(self) -> Lattice:
        return lattice(self.N)

    def coeff(self, k: Sequence[int]) -> complex:
        N = self.N
        if any(abs(int(ki)) > N for ki in k):
            return 0j
        return complex(self.coeffs[k[0] + N, k[1] + N, k[2] + N])

    @cached_property
    def radius(self) -> int:
        """Smallest radius containing every nonzero coefficient."""
        nz = np.nonzero(self.coeffs)
        if len(nz[0]) == 0:
            return 0
        return int(max(np.abs(a - self.N).max() for a in nz))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def hermitian_defect(self) -> float:
        c = self.coeffs
        scale = max(np.abs(c).max(), 1e-300)
        return float(np.abs(c - np.conj(c[::-1, ::-1, ::-1])).max() / scale)

    def resized(self, N: int) -> "SpectralField":
        """Zero-pad or truncate to radius ``N``."""
        out = np.zeros((2 * N + 1,) * 3, dtype=complex)
        n = min(N, self.N)
        src = slice(self.N - n, self.N + n + 1)
        dst = slice(N - n, N + n + 1)
        out[dst, dst, dst] = self.coeffs[src, src, src]
        return SpectralField(out, self.real)

    def _binary(self, other, op):
        if isinstance(other, SpectralField):
            if other.N != self.N:
                raise ValueError("fields have different truncation radii")
            return SpectralField(op(self.coeffs, other.coeffs), self.real and other.real)
        return NotImplemented

    def __add__(self, other):
        if np.isscalar(other):
            c = self.coeffs.copy()
            c[self.N, self.N, self.N] += other
            return SpectralField(c, self.real and np.isrealobj(other))
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-other)
        return self._binary(other, np.subtract)

    def __neg__(self):
        return SpectralField(-self.coeffs, self.real)

    def __mul__(self, s):
        if np.isscalar(s):
            return SpectralField(self.coeffs * s, self.real and np.isrealobj(s))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / s)

    def __repr__(self):
        return f"SpectralField(N={self.N}, real={self.real}, radius={self.radius})"


def zeros(N: int) -> SpectralField:
    return SpectralField(np.zeros((2 * N + 1,) * 3, dtype=complex))


def make_field(N: int, assignment: Iterable[tuple[Sequence[int], complex]] = (),
               real: bool = True) -> SpectralField:
    """Build a field from ``(k, value)`` pairs; unassigned modes are zero.

    For real fields the mirror mode ``-k`` is filled with the conjugate when
    it was not given, so assigning a half-space is enough. Giving both
    members of a pair with inconsistent values raises ``ValueError``.
    """
    if N < 1:
        raise ValueError(f"truncation radius must be positive, got {N}")
    c = np.zeros((2 * N + 1,) * 3, dtype=complex)
    given = np.zeros(c.shape, dtype=bool)
    for k, value in assignment:
        k = tuple(int(x) for x in k)
        if len(k) != 3 or any(abs(x) > N for x in k):
            raise ValueError(f"wavenumber {k} outside truncation radius {N}")
        idx = (k[0] + N, k[1] + N, k[2] + N)
        c[idx] = value
        given[idx] = True
    if real:
        mirror = np.conj(c[::-1, ::-1, ::-1])
        mgiven = given[::-1, ::-1, ::-1]
        both = given & mgiven
        scale = max(np.abs(c).max(), 1.0)
        if np.any(np.abs(c[both] - mirror[both]) > HERMITIAN_RTOL * scale):
            raise ValueError("assignment violates Hermitian symmetry coeff(-k) = conj(coeff(k))")
        fill = mgiven & ~given
        c[fill] = mirror[fill]
        c[N, N, N] = c[N, N, N].real
    return SpectralField(c, real)


def hermitian_symmetrize(c: np.ndarray) -> np.ndarray:
    """Project a coefficient array onto the real-field subspace."""
    return 0.5 * (c + np.conj(c[::-1, ::-1, ::-1]))


# -- transforms -----------------------------------------------------------

def _check_grid(grid, N):
    if grid < 2 * N + 1:
        raise ValueError(f"grid of {grid} points per axis aliases radius {N}; need >= {2 * N + 1}")


def _spread_real(c: np.ndarray, M: int) -> np.ndarray:
    """Place a Hermitian coefficient cube into an rfftn half spectrum."""
    N = (c.shape[0] - 1) // 2
    idx = np.arange(-N, N + 1) % M
    half = np.zeros((M, M, M // 2 + 1), dtype=complex)
    half[np.ix_(idx, idx, np.arange(N + 1))] = c[:, :, N:]
    return half


def _spread_complex(c: np.ndarray, M: int) -> np.ndarray:
    N = (c.shape[0] - 1) // 2
    idx = np.arange(-N, N + 1) % M
    full = np.zeros((M, M, M), dtype=complex)
    full[np.ix_(idx, idx, idx)] = c
    return full


def _gather_real(half: np.ndarray, N: int) -> np.ndarray:
    M = half.shape[0]
    idx = np.arange(-N, N + 1) % M
    c = np.empty((2 * N + 1,) * 3, dtype=complex)
    c[:, :, N:] = half[np.ix_(idx, idx, np.arange(N + 1))]
    c[:, :, :N] = np.conj(c[::-1, ::-1, ::-1][:, :, :N])
    return c


def _gather_complex(full: np.ndarray, N: int) -> np.ndarray:
    M = full.shape[0]
    idx = np.arange(-N, N + 1) % M
    return full[np.ix_(idx, idx, idx)]


def synthesize(c: np.ndarray, M: int, real: bool = True) -> np.ndarray:
    """Raw-array version of :func:`to_physical`."""
    if real:
        return sfft.irfftn(_spread_real(c, M), s=(M, M, M)) * M**3
    return sfft.ifftn(_spread_complex(c, M)) * M**3


def analyze(samples: np.ndarray, N: int) -> np.ndarray:
    """Raw-array version of :func:`from_physical`."""
    M = samples.shape[0]
    if np.isrealobj(samples):
        return _gather_real(sfft.rfftn(samples), N) / M**3
    return _gather_complex(sfft.fftn(samples), N) / M**3


def to_physical(field: SpectralField, grid: int | None = None) -> np.ndarray:
    """Sample the field on the uniform ``grid^3`` mesh of ``[0, 2 pi)^3``.

    Real fields return a real array; complex fields a complex one.
    """
    N = field.N
    grid = 2 * N + 2 if grid is None else int(grid)
    _check_grid(grid, N)
    return synthesize(field.coeffs, grid, field.real)


def from_physical(samples: np.ndarray, N: int | None = None) -> SpectralField:
    """Discrete Fourier coefficients of uniform samples, truncated to ``N``."""
    samples = np.asarray(samples)
    if samples.ndim != 3 or len(set(samples.shape)) != 1:
        raise ValueError(f"samples must be a uniform cubic grid, got shape {samples.shape}")
    M = samples.shape[0]
    if N is None:
        N = (M - 1) // 2
    _check_grid(M, N)
    real = np.isrealobj(samples)
    return SpectralField(analyze(samples, N), real)


def grid_points(M: int) -> np.ndarray:
    return 2 * np.pi * np.arange(M) / M


# -- norms and linear operators ------------------------------------------

def sobolev_norm(field: SpectralField, m: float, homogeneous: bool = True) -> float:
    """Sobolev norm of order ``m``.

    ``homogeneous=True`` gives ``sqrt(sum_{k != 0} |k|^{2m} |f_k|^2)``; the
    inhomogeneous norm adds ``|f_0|^2`` under the root.
    """
    return float(np.sqrt(_norm_sq(field.coeffs, m, homogeneous)))


def _norm_sq(c: np.ndarray, m: float, homogeneous: bool = True) -> float:
    N = (c.shape[0] - 1) // 2
    s = float(np.sum(sobolev_weights(N, float(m)) * (c.real**2 + c.imag**2)))
    if not homogeneous:
        s += abs(c[N, N, N]) ** 2
    return s


def h_inner_product(A: Sequence[SpectralField] | SpectralField,
                    B: Sequence[SpectralField] | SpectralField, m: float) -> float:
    """Homogeneous inner product ``Re sum_{k != 0} |k|^{2m} A_k . conj(B_k)``."""
    if isinstance(A, SpectralField):
        A = [A]
    if isinstance(B, SpectralField):
        B = [B]
    if len(A) != len(B):
        raise ValueError(f"component counts differ: {len(A)} vs {len(B)}")
    total = 0.0
    for a, b in zip(A, B):
        if a.N != b.N:
            raise ValueError("fields have different truncation radii")
        w = sobolev_weights(a.N, float(m))
        total += float(np.sum(w * (a.coeffs * np.conj(b.coeffs)).real))
    return total


def gradient(field: SpectralField) -> tuple[SpectralField, SpectralField, SpectralField]:
    lat = field.lattice
    c = field.coeffs
    return tuple(SpectralField(1j * k * c, field.real) for k in (lat.k1, lat.k2, lat.k3))


def divergence(q: Sequence[SpectralField]) -> SpectralField:
    lat = q[0].lattice
    c = 1j * (lat.k1 * q[0].coeffs + lat.k2 * q[1].coeffs + lat.k3 * q[2].coeffs)
    return SpectralField(c, all(x.real for x in q))


def mean_part(field: SpectralField, tol: float = 1e-12) -> float:
    c0 = field.coeffs[field.N, field.N, field.N]
    if abs(c0.imag) > tol * max(1.0, abs(c0)):
        raise ValueError(f"zero mode {c0} is not real")
    return float(c0.real)


# -- products -------------------------------------------------------------

def product_grid(N_out: int, radii: Sequence[int]) -> int:
    """Padded grid size for an alias-free product truncated to ``N_out``.

    A product of factors with radii ``r_i`` has spectral radius ``sum r_i``;
    no aliased mode lands inside ``|k| <= N_out`` once the grid exceeds
    ``sum r_i + N_out``. The grid is never smaller than ``2(2 N_out + 1)``.
    """
    need = max(sum(radii) + N_out + 1, 2 * (2 * N_out + 1))
    return sfft.next_fast_len(need, real=True)


def product(fields: Sequence[SpectralField], N_out: int | None = None,
            offsets: Sequence[float] | None = None) -> SpectralField:
    """Dealiased product ``prod_i (offset_i + field_i)`` truncated to ``N_out``.

    The result equals the direct convolution of the factors restricted to
    radius ``N_out``. Real inputs give a Hermitian-symmetrized real output.
    """
    if not fields:
        raise ValueError("need at least one factor")
    N_out = fields[0].N if N_out is None else N_out
    offsets = [0.0] * len(fields) if offsets is None else list(offsets)
    real = all(f.real for f in fields) and all(np.isrealobj(o) for o in offsets)
    radii = [f.radius for f in fields]
    M = product_grid(N_out, radii)
    acc = None
    seen: dict[tuple[int, float], np.ndarray] = {}
    for f, off in zip(fields, offsets):
        key = (id(f), off)
        x = seen.get(key)
        if x is None:
            x = synthesize(f.coeffs, M, real)
            if off:
                x = x + off
            seen[key] = x
        acc = x if acc is None else acc * x
    c = analyze(acc, N_out)
    if real:
        c = hermitian_symmetrize(c)
        c[N_out, N_out, N_out] = c[N_out, N_out, N_out].real
    return SpectralField(c, real)


def multiply(f: SpectralField, g: SpectralField, N_out: int | None = None) -> SpectralField:
    """Dealiased pointwise product ``f g``."""
    if f.N != g.N:
        raise ValueError(f"truncation radii differ: {f.N} vs {g.N}")
    return product([f, g], N_out)


def cubic_one_plus(u: SpectralField, N_out: int | None = None) -> SpectralField:
    """Dealiased ``(1 + u)^3``."""
    return product([u, u, u], N_out, offsets=[1.0, 1.0, 1.0])


# -- multiplication constant ---------------------------------------------

@dataclass(frozen=True)
class MultiplicationConstant:
    m: float
    value: float
    lattice_sum: float
    tail_bound: float
    empirical_max: float
    trials: int


@lru_cache(maxsize=None)
def _bessel_sum(m: float, R: int) -> tuple[float, float]:
    """sum_{k in Z^3} (1+|k|^2)^{-m}: partial sum over |k| <= R and a tail bound.

    The tail bound compares each lattice point with its unit cell, whose
    points lie within sqrt(3)/2 of it, against a radially decreasing profile.
    """
    r = np.arange(-R, R + 1, dtype=float)
    ksq = r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2
    inside = ksq <= R * R
    partial = float(np.sum((1.0 + ksq[inside]) ** (-m)))
    s = np.sqrt(3.0) / 2.0
    tail, _ = integrate.quad(lambda x: 4 * np.pi * x * x * (1.0 + (x - s) ** 2) ** (-m),
                             R - s, np.inf, epsabs=0, epsrel=1e-10)
    return partial, float(tail)


def multiplication_constant(m: float, trials: int = 200, N: int = 6, seed: int = 0,
                            override: float | None = None, R: int = 40,
                            norm_equivalence: bool = True) -> MultiplicationConstant:
    """Admissible algebra constant for ``||f g||_{H^m} <= C ||f||_{H^m} ||g||_{H^m}``.

    The value is ``2^m sqrt(S_m)`` with ``S_m = sum (1+|k|^2)^{-m}``, which
    bounds products in the ``<k>^m``-weighted norm. The norm used here
    weighs ``k != 0`` by ``|k|^m`` and is within ``2^{m/2}`` of that one, so
    the default multiplies by a further ``2^m``. ``override`` replaces the
    formula. Either way ``trials`` random pairs are checked and a
    ``ValueError`` is raised if any ratio exceeds the constant.
    """
    if m <= 1.5:
        raise ValueError(f"algebra property needs m > 3/2, got {m}")
    partial, tail = _bessel_sum(float(m), R)
    if override is not None:
        value = float(override)
    else:
        value = 2.0**m * np.sqrt(partial + tail)
        if norm_equivalence:
            value *= 2.0**m
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = random_field(N, rng, decay=rng.uniform(0.0, m + 2.0))
        g = random_field(N, rng, decay=rng.uniform(0.0, m + 2.0))
        fg = product([f, g], N_out=2 * N)
        ratio = sobolev_norm(fg, m, False) / (sobolev_norm(f, m, False) * sobolev_norm(g, m, False))
        worst = max(worst, ratio)
    if worst > value:
        raise ValueError(f"empirical product ratio {worst:.6g} exceeds configured C_m = {value:.6g}")
    return MultiplicationConstant(float(m), float(value), partial, tail, float(worst), trials)


def random_field(N: int, rng: np.random.Generator, amplitude: float = 1.0,
                 decay: float = 0.0, mean: bool = True, radius: int | None = None) -> SpectralField:
    """Random real field with coefficients scaled by ``(1+|k|^2)^{-decay/2}``."""
    lat = lattice(N)
    c = rng.standard_normal(lat.shape) + 1j * rng.standard_normal(lat.shape)
    c *= amplitude * (1.0 + lat.ksq) ** (-decay / 2.0)
    if radius is not None:
        c[(np.abs(lat.k1) > radius) | (np.abs(lat.k2) > radius) | (np.abs(lat.k3) > radius)] = 0
    c = hermitian_symmetrize(c)
    c[N, N, N] = c[N, N, N].real if mean else 0.0
    return SpectralField(c, True)
