"""Solver state containers shared by the linear and nonlinear integrators."""

from __future__ import annotations

from dataclasses import dataclass

from .spectral import SpectralField


@dataclass(frozen=True)
class WaveState:
    """Second-order state ``(t, u, u_t)``."""

    t: float
    u: SpectralField
    ut: SpectralField

    def __post_init__(self):
        if self.u.N != self.ut.N:
            raise ValueError(f"u and ut have different truncation radii ({self.u.N}, {self.ut.N})")

    @property
    def N(self) -> int:
        return self.u.N

    def is_finite(self) -> bool:
        return self.u.is_finite() and self.ut.is_finite()
