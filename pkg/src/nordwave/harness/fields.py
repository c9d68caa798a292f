"""Small declarative language for initial data and forcing profiles.

A field is a list of terms that are summed. Accepted term forms::

    {cos: [1, 0, 0], amp: 0.1}        amp cos(k . x)
    {sin: [0, 1, 0], amp: 0.05}       amp sin(k . x)
    {mean: 0.3}                       constant
    {random: {amplitude: 0.01, decay: 3, radius: 2, mean: false}}

The string ``zero`` (or an empty list) is the zero field. Terms are
canonicalized to ``{type: ..., ...}`` dictionaries with every parameter
spelled out, which is the form echoed in materialized specs.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from ..spectral import SpectralField, make_field, random_field, zeros

__all__ = ["FieldError", "canonical_terms", "build_field", "scaled", "FIELD_STREAMS"]

# independent random streams per field slot
FIELD_STREAMS = {"f": 1, "g": 2, "forcing": 3}

RANDOM_DEFAULTS = {"amplitude": 1.0, "decay": 0.0, "radius": None, "mean": True}


class FieldError(ValueError):
    pass


def _wavenumber(v, where):
    if not (isinstance(v, (list, tuple)) and len(v) == 3 and all(isinstance(x, int) and not isinstance(x, bool)
                                                                  for x in v)):
        raise FieldError(f"{where}: wavenumber must be a list of three integers, got {v!r}")
    if not any(v):
        raise FieldError(f"{where}: use a 'mean' term for k = 0")
    return [int(x) for x in v]


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FieldError(f"{where}: expected a number, got {v!r}")
    if not np.isfinite(v):
        raise FieldError(f"{where}: must be finite")
    return float(v)


def canonical_terms(spec: Any, where: str) -> list[dict]:
    """Validate a field description and return its canonical term list."""
    if spec is None or spec == "zero":
        return []
    if isinstance(spec, dict):
        spec = [spec]
    if not isinstance(spec, list):
        raise FieldError(f"{where}: expected 'zero' or a list of terms, got {spec!r}")
    out = []
    for i, term in enumerate(spec):
        w = f"{where}[{i}]"
        if not isinstance(term, dict):
            raise FieldError(f"{w}: term must be a mapping, got {term!r}")
        term = dict(term)
        kind = term.pop("type", None)
        if kind is None:
            kinds = [k for k in ("cos", "sin", "mean", "random") if k in term]
            if len(kinds) != 1:
                raise FieldError(f"{w}: term needs exactly one of cos, sin, mean, random")
            kind = kinds[0]
            payload = term.pop(kind)
            if kind in ("cos", "sin"):
                term["k"] = payload
            elif kind == "mean":
                term["value"] = payload
            else:
                if not isinstance(payload, dict):
                    raise FieldError(f"{w}.random: expected a mapping of options")
                term.update(payload)
        if kind in ("cos", "sin"):
            c = {"type": kind, "k": _wavenumber(term.pop("k", None), f"{w}.k"),
                 "amp": _number(term.pop("amp", 1.0), f"{w}.amp")}
        elif kind == "mean":
            c = {"type": "mean", "value": _number(term.pop("value", None), f"{w}.value")}
        elif kind == "random":
            c = {"type": "random"}
            for key, default in RANDOM_DEFAULTS.items():
                v = term.pop(key, default)
                if key == "radius":
                    if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
                        raise FieldError(f"{w}.radius: expected a nonnegative integer or null")
                elif key == "mean":
                    if not isinstance(v, bool):
                        raise FieldError(f"{w}.mean: expected true or false")
                else:
                    v = _number(v, f"{w}.{key}")
                c[key] = v
        else:
            raise FieldError(f"{w}: unknown term type {kind!r}")
        if term:
            raise FieldError(f"{w}: unknown keys {sorted(term)}")
        out.append(c)
    return out


def build_field(terms: list[dict], N: int, seed: int = 0, stream: int = 0) -> SpectralField:
    """Sum the canonical ``terms`` on radius ``N``.

    Random terms draw from ``numpy.random.default_rng([seed, stream, index])``
    so each term of each field slot has its own reproducible stream.
    """
    total = zeros(N)
    for i, t in enumerate(terms):
        kind = t["type"]
        if kind in ("cos", "sin"):
            k = t["k"]
            if max(abs(x) for x in k) > N:
                raise FieldError(f"wavenumber {k} exceeds truncation radius {N}")
            val = t["amp"] / 2.0 if kind == "cos" else -0.5j * t["amp"]
            total = total + make_field(N, [(k, val)])
        elif kind == "mean":
            total = total + make_field(N, [((0, 0, 0), t["value"])])
        else:
            rng = np.random.default_rng([int(seed), int(stream), i])
            total = total + random_field(N, rng, amplitude=t["amplitude"], decay=t["decay"],
                                         mean=t["mean"], radius=t["radius"])
    return total


def scaled(terms: list[dict], factor: float) -> list[dict]:
    """Canonical terms multiplied by ``factor``."""
    out = []
    for t in terms:
        t = dict(t)
        key = {"cos": "amp", "sin": "amp", "mean": "value", "random": "amplitude"}[t["type"]]
        t[key] = t[key] * factor
        out.append(t)
    return out
