"""Scenario files: schema, defaults, validation and materialization.

A scenario file is YAML with ``schema: 1`` and a ``kind``. Physical
parameters sit at the top level; ``checks`` holds thresholds of the
verification kinds and ``grid`` the sweep axes. Loading fills in every
default (including ones that depend on other entries, such as data placed
at half of a smallness budget) so the materialized spec is a complete,
re-loadable record of what was run.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .. import blowup, scenarios
from ..hyperbolic import ExpDecayParams
from ..wave import SCHEMES, ForcingModel, ScenarioConfig
from .fields import FIELD_STREAMS, FieldError, build_field, canonical_terms, scaled

__all__ = [
    "SCHEMA_VERSION",
    "KINDS",
    "ConfigError",
    "ExperimentSpec",
    "load_scenario",
    "parse_spec",
    "dump_spec",
]

SCHEMA_VERSION = 1

KINDS = ("simulate", "blowup_ode", "verify_thm1", "verify_thm32", "verify_thm42", "verify_thm46",
         "verify_thm51_blowup", "sweep")

PDE_KINDS = ("simulate", "verify_thm1", "verify_thm32", "verify_thm42", "verify_thm46", "sweep")
ODE_KINDS = ("blowup_ode", "verify_thm51_blowup")

# The single table of physical defaults, per kind. ``None`` entries are
# resolved from other settings during materialization.
PDE_DEFAULTS = {
    "kappa": 0.5,
    "m": 2.0,
    "N": 8,
    "t_final": 1.0,
    "dt": 0.01,
    "scheme": "exprk2",
    "solver": "wave",
    "sample_every": 1,
    "drop_exp_factor": False,
    "blowup_threshold": 1e6,
    "adaptive": False,
    "rtol": 1e-8,
    "atol": 1e-12,
    "lam": 0.0,
    "C_m": None,
    "f": None,
    "g": None,
    "forcing": None,
}

KIND_DEFAULTS = {
    "simulate": {},
    "verify_thm1": {"t_final": 30.0, "scheme": "exprk2", "sample_every": 10},
    "verify_thm32": {"t_final": 100.0, "dt": 0.05, "scheme": "exprk4", "sample_every": 20},
    "verify_thm42": {"t_final": 50.0, "dt": 0.02, "solver": "hyperbolic", "sample_every": 5},
    "verify_thm46": {"t_final": 50.0, "dt": 0.02, "solver": "hyperbolic", "sample_every": 5},
    "sweep": {"N": 4, "t_final": 20.0, "dt": 0.02, "scheme": "exprk4"},
}

ODE_DEFAULTS = {
    "kappa": 0.25,
    "a0": None,
    "f0": 0.0,
    "g0": 0.1,
    "t_max": 200.0,
    "threshold": 1e8,
    "rtol": 1e-10,
    "atol": 1e-12,
}

CHECK_DEFAULTS = {
    "simulate": {},
    "verify_thm1": {},
    "verify_thm32": {"a0": 0.05, "data": 0.01, "ratio": 0.9, "decay_tol": 1e-4},
    "verify_thm42": {"alpha": 1.0, "budget_fraction": 0.5, "energy_rtol": 1e-8},
    "verify_thm46": {"alpha": 1.0, "budget_fraction": 0.5, "window": [10.0, 40.0], "rate": None},
    "blowup_ode": {},
    "verify_thm51_blowup": {"n_tau": 20, "pde_N": 1, "pde_dt": 0.01, "pde_rtol": 1e-12,
                            "pde_tol": 1e-8, "oracle_rtol": 1e-13},
    "sweep": {"decay_tol": 1e-3},
}

GRID_DEFAULTS = {"kappa": None, "a0": [0.0, 0.01, 0.1, 1.0, 10.0], "data_scale": [1.0]}

FORCING_DEFAULTS = {"profile": None, "kind": "constant", "amplitude": 0.0, "frequency": 0.0,
                    "table_times": [], "table_values": [], "coupling": "cubic"}

TOP_KEYS = ("schema", "kind", "seed", "outputs", "checks", "grid")


class ConfigError(ValueError):
    """Invalid scenario file; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully materialized experiment description."""

    kind: str
    scenario: dict
    checks: dict = field(default_factory=dict)
    sweep_grid: dict | None = None
    outputs: str = "nordwave_out"
    seed: int = 0

    def to_dict(self) -> dict:
        d = {"schema": SCHEMA_VERSION, "kind": self.kind, "seed": self.seed, "outputs": self.outputs}
        d.update(copy.deepcopy(self.scenario))
        d["checks"] = copy.deepcopy(self.checks)
        if self.sweep_grid is not None:
            d["grid"] = copy.deepcopy(self.sweep_grid)
        return d

    def config(self, **overrides) -> ScenarioConfig:
        """The solver configuration (PDE kinds)."""
        if self.kind not in PDE_KINDS:
            raise ConfigError(f"kind {self.kind!r} has no PDE scenario")
        return build_config(self.scenario, self.seed, **overrides)

    def blowup_params(self) -> blowup.BlowupParams:
        if self.kind not in ODE_KINDS:
            raise ConfigError(f"kind {self.kind!r} has no mean-value problem")
        s = self.scenario
        return blowup.BlowupParams(s["kappa"], s["a0"], s["f0"], s["g0"])


def build_config(s: dict, seed: int, **overrides) -> ScenarioConfig:
    """Turn a materialized scenario dictionary into a :class:`ScenarioConfig`."""
    s = dict(s, **overrides)
    N = s["N"]
    fr = s["forcing"]
    forcing = ForcingModel(build_field(fr["profile"], N, seed, FIELD_STREAMS["forcing"]), kind=fr["kind"],
                           amplitude=fr["amplitude"], frequency=fr["frequency"],
                           table_times=tuple(fr["table_times"]), table_values=tuple(fr["table_values"]),
                           coupling=fr["coupling"])
    return ScenarioConfig(
        kappa=s["kappa"], f=build_field(s["f"], N, seed, FIELD_STREAMS["f"]),
        g=build_field(s["g"], N, seed, FIELD_STREAMS["g"]), forcing=forcing, m=s["m"],
        t_final=s["t_final"], dt=s["dt"], scheme=s["scheme"], drop_exp_factor=s["drop_exp_factor"],
        blowup_threshold=s["blowup_threshold"], adaptive=s["adaptive"], rtol=s["rtol"],
        atol=s["atol"], lam=s["lam"])


# -- validation helpers ---------------------------------------------------

def _num(d, key, where=None, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    v = d[key]
    name = where or key
    if isinstance(v, str):
        # YAML 1.1 reads exponents without a dot (1e-8) as strings
        try:
            v = float(v)
        except ValueError:
            raise ConfigError(f"field '{name}': expected a number, got {d[key]!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"field '{name}': expected a finite number, got {v!r}")
    if integer:
        if float(v) != int(v):
            raise ConfigError(f"field '{name}': expected an integer, got {v!r}")
        v = int(v)
    else:
        v = float(v)
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"field '{name}': must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        raise ConfigError(f"field '{name}': must be {'<' if hi_open else '<='} {hi}, got {v}")
    d[key] = v
    return v


def _bool(d, key):
    if not isinstance(d[key], bool):
        raise ConfigError(f"field '{key}': expected true or false, got {d[key]!r}")
    return d[key]


def _choice(d, key, options):
    if d[key] not in options:
        raise ConfigError(f"field '{key}': must be one of {list(options)}, got {d[key]!r}")
    return d[key]


def _merge(defaults: dict, given: dict, where: str) -> dict:
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {unknown}")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(given))
    return out


def _kappa(d):
    # the theorems need 0 < kappa < 1; the undamped control case is library-only
    try:
        return _num(d, "kappa", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
    except ConfigError as exc:
        raise ConfigError(f"{exc} (invariant: damping kappa must lie in (0, 1))") from None


# -- materialization ------------------------------------------------------

def _materialize_pde(kind: str, raw: dict, checks: dict) -> dict:
    d = _merge(dict(PDE_DEFAULTS, **KIND_DEFAULTS.get(kind, {})), raw, "scenario")
    kappa = _kappa(d)
    m = _num(d, "m", lo=0.0)
    N = _num(d, "N", lo=1, integer=True)
    _num(d, "t_final", lo=0.0)
    _num(d, "dt", lo=0.0, lo_open=True)
    _choice(d, "scheme", SCHEMES)
    _choice(d, "solver", ("wave", "hyperbolic"))
    _num(d, "sample_every", lo=1, integer=True)
    _bool(d, "drop_exp_factor")
    _num(d, "blowup_threshold", lo=0.0, lo_open=True)
    _bool(d, "adaptive")
    _num(d, "rtol", lo=0.0, lo_open=True)
    _num(d, "atol", lo=0.0)
    lam = _num(d, "lam", hi=0.0)
    if kappa + lam < 0:
        raise ConfigError(f"field 'lam': must satisfy -kappa <= lam <= 0, got {lam}")
    if lam and d["solver"] != "hyperbolic":
        raise ConfigError("field 'lam': an exponential shift needs solver: hyperbolic")
    if d["solver"] == "hyperbolic" and d["scheme"] == "picard":
        raise ConfigError("field 'scheme': picard iteration applies to the wave solver only")
    if d["C_m"] is None:
        d["C_m"] = scenarios.default_C_m(m)
    C = _num(d, "C_m", lo=0.0, lo_open=True)

    defaults_f, defaults_g, defaults_a = [], [], []
    if kind == "verify_thm1":
        eps, a = scenarios.thm1_amplitudes(kappa, C)
        defaults_f = [{"cos": [1, 0, 0], "amp": eps}]
        defaults_a = [{"mean": a}]
    elif kind == "verify_thm32":
        defaults_f = [{"cos": [1, 0, 0], "amp": checks["data"]}]
        defaults_g = [{"sin": [0, 1, 0], "amp": checks["data"]}]
        defaults_a = [{"mean": checks["a0"]}]
    elif kind in ("verify_thm42", "verify_thm46"):
        A, c = scenarios.energy_amplitudes(kappa, checks["alpha"], m, C, checks["budget_fraction"])
        defaults_f = [{"cos": [1, 0, 0], "amp": A}]
        defaults_g = [{"sin": [1, 0, 0], "amp": A}]
        defaults_a = [{"mean": c}, {"cos": [0, 1, 0], "amp": 0.5 * c}]
    elif kind == "sweep":
        defaults_f = [{"cos": [1, 0, 0], "amp": 0.05}]
        defaults_a = [{"mean": 1.0}]

    try:
        d["f"] = canonical_terms(defaults_f if d["f"] is None else d["f"], "f")
        d["g"] = canonical_terms(defaults_g if d["g"] is None else d["g"], "g")
        fr = d["forcing"] if d["forcing"] is not None else {}
        if not isinstance(fr, dict):
            raise ConfigError(f"field 'forcing': expected a mapping, got {fr!r}")
        fr = _merge(FORCING_DEFAULTS, fr, "forcing")
        fr["profile"] = canonical_terms(defaults_a if fr["profile"] is None else fr["profile"],
                                        "forcing.profile")
    except FieldError as exc:
        raise ConfigError(f"field {exc}") from None
    _choice(fr, "kind", ("constant", "separable", "tabulated"))
    _choice(fr, "coupling", ("cubic", "none"))
    _num(fr, "amplitude", "forcing.amplitude")
    _num(fr, "frequency", "forcing.frequency")
    for key in ("table_times", "table_values"):
        if not isinstance(fr[key], list):
            raise ConfigError(f"field 'forcing.{key}': expected a list")
        fr[key] = [float(x) for x in fr[key]]
    d["forcing"] = fr
    for name in ("f", "g"):
        for t in d[name]:
            if t["type"] in ("cos", "sin") and max(abs(x) for x in t["k"]) > N:
                raise ConfigError(f"field '{name}': wavenumber {t['k']} exceeds truncation radius N={N}")
    return d


def _materialize_ode(raw: dict) -> dict:
    d = _merge(ODE_DEFAULTS, raw, "scenario")
    kappa = _kappa(d)
    f0 = _num(d, "f0")
    g0 = _num(d, "g0")
    for key in ("t_max", "threshold", "rtol"):
        _num(d, key, lo=0.0, lo_open=True)
    _num(d, "atol", lo=0.0)
    if d["a0"] is None:
        try:
            d["a0"] = blowup.minimal_a0_for_lifespan(kappa, f0, g0)
        except ValueError as exc:
            raise ConfigError(f"field 'a0': cannot bisect a default ({exc})") from None
    _num(d, "a0", lo=0.0, lo_open=True)
    return d


def _materialize_checks(kind: str, raw: Any, kappa: float | None) -> dict:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("field 'checks': expected a mapping")
    c = _merge(CHECK_DEFAULTS[kind], raw, "checks")
    for key, v in list(c.items()):
        where = f"checks.{key}"
        if key == "window":
            if not (isinstance(v, list) and len(v) == 2):
                raise ConfigError(f"field '{where}': expected [start, end]")
            c[key] = [float(x) for x in v]
            if not c[key][0] < c[key][1]:
                raise ConfigError(f"field '{where}': start must precede end")
        elif key == "rate" and v is None:
            c[key] = ExpDecayParams.default(kappa).rate if kappa else None
        elif key in ("n_tau", "pde_N"):
            _num(c, key, where, lo=1, integer=True)
        else:
            _num(c, key, where, lo=0.0, lo_open=key not in ("a0",))
    return c


def _materialize_grid(raw: Any, kappa: float) -> dict:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("field 'grid': expected a mapping of axes")
    g = _merge(GRID_DEFAULTS, raw, "grid")
    if g["kappa"] is None:
        g["kappa"] = [kappa]
    for axis, vals in g.items():
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"field 'grid.{axis}': axis must be a nonempty list")
        box = {str(i): v for i, v in enumerate(vals)}
        for i in box:
            if axis == "kappa":
                try:
                    _num(box, i, f"grid.kappa[{i}]", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
                except ConfigError as exc:
                    raise ConfigError(f"{exc} (invariant: damping kappa must lie in (0, 1))") from None
            else:
                _num(box, i, f"grid.{axis}[{i}]", lo=0.0)
        g[axis] = [box[str(i)] for i in range(len(vals))]
    return g


def parse_spec(raw: Any) -> ExperimentSpec:
    """Validate a parsed scenario mapping and materialize all defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must contain a mapping at the top level")
    raw = copy.deepcopy(raw)
    schema = raw.pop("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"field 'schema': unsupported version {schema!r} (expected {SCHEMA_VERSION})")
    kind = raw.pop("kind", None)
    if kind not in KINDS:
        raise ConfigError(f"field 'kind': must be one of {list(KINDS)}, got {kind!r}")
    seed = raw.pop("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"field 'seed': expected an unsigned 64-bit integer, got {seed!r}")
    outputs = raw.pop("outputs", "nordwave_out")
    if not isinstance(outputs, str) or not outputs:
        raise ConfigError("field 'outputs': expected a directory path")
    checks_raw = raw.pop("checks", None)
    blank_grid = "grid" in raw and not raw["grid"]
    grid_raw = raw.pop("grid", None)
    if blank_grid and kind == "sweep":
        raise ConfigError("field 'grid': blank grid; omit it for the default axes or list at least one axis")
    if grid_raw is not None and kind != "sweep":
        raise ConfigError("field 'grid': only sweep experiments take a grid")
    if kind in ODE_KINDS:
        scenario = _materialize_ode(raw)
        checks = _materialize_checks(kind, checks_raw, scenario["kappa"])
    else:
        kappa = _kappa(dict(kappa=raw.get("kappa", PDE_DEFAULTS["kappa"])))
        checks = _materialize_checks(kind, checks_raw, kappa)
        scenario = _materialize_pde(kind, raw, checks)
    grid = _materialize_grid(grid_raw, scenario["kappa"]) if kind == "sweep" else None
    spec = ExperimentSpec(kind, scenario, checks, grid, outputs, seed)
    if kind in PDE_KINDS:
        try:
            spec.config()
        except (ValueError, FieldError) as exc:
            raise ConfigError(f"scenario rejected: {exc}") from None
    return spec


def load_scenario(path: str | Path, overrides: dict | None = None) -> ExperimentSpec:
    """Read, validate and materialize a scenario file.

    ``overrides`` (for example from command-line flags) replace top-level
    entries before validation.

    Raises
    ------
    ConfigError
        On unreadable files, YAML syntax errors (with line and column) and
        invalid fields (named in the message).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{path}: YAML parse error{where}: {problem}") from None
    if raw is None:
        raw = {}
    if isinstance(raw, dict) and overrides:
        raw.update(overrides)
    return parse_spec(raw)


def dump_spec(spec: ExperimentSpec) -> str:
    """YAML text of the materialized spec; reloading it gives an equal spec."""
    return yaml.safe_dump(spec.to_dict(), sort_keys=False, default_flow_style=None)


def sweep_points(spec: ExperimentSpec) -> list[dict]:
    """Grid points ``{kappa, a0, data_scale}`` in sorted coordinate order."""
    g = spec.sweep_grid
    pts = [{"kappa": k, "a0": a, "data_scale": s}
           for k in sorted(set(g["kappa"])) for a in sorted(set(g["a0"])) for s in sorted(set(g["data_scale"]))]
    return pts


def point_scenario(spec: ExperimentSpec, point: dict) -> dict:
    """Materialized scenario of one sweep point."""
    s = copy.deepcopy(spec.scenario)
    s["kappa"] = point["kappa"]
    s["f"] = scaled(s["f"], point["data_scale"])
    s["g"] = scaled(s["g"], point["data_scale"])
    s["forcing"]["profile"] = scaled(s["forcing"]["profile"], point["a0"])
    return s
