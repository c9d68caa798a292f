"""Experiment execution and report emission.

Every experiment writes into its output directory:

``spec.yaml``
    the materialized spec that was run
``timeseries.csv`` / ``timeseries.plotspec``
    one row per sample with the fixed column set of
    :class:`~nordwave.diagnostics.DiagnosticsRecord`
``conditions.json``
    enforced checks and informational reports
``summary.json``
    pass/fail per check with margins and headline numbers
``timings.json``
    wall-clock durations, kept apart so the other files are reproducible

Mean-value experiments add ``ode.csv``; PDE experiments add ``final.nws``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import blowup, diagnostics, hyperbolic, wave
from ..diagnostics import ConditionReport, DiagnosticsRecord
from ..spectral import sobolev_norm, to_physical
from ..wave import ForcingModel, ScenarioConfig
from .config import ExperimentSpec, dump_spec
from .snapshot import save_snapshot

__all__ = ["Outcome", "run_experiment", "write_csv", "format_float", "EXIT_PASS", "EXIT_FAIL",
           "EXIT_USAGE"]

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


@dataclass
class Outcome:
    status: int
    summary: dict
    checks: list[ConditionReport]
    info: list[ConditionReport] = field(default_factory=list)
    out_dir: Path | None = None
    timings: dict = field(default_factory=dict)
    run: object = None

    @property
    def passed(self) -> bool:
        return self.status == EXIT_PASS


# -- serialization ----------------------------------------------------------

def format_float(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_float(v) for v in r])
    path.write_text(buf.getvalue())


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default) + "\n")


PLOTSPECS = {
    "timeseries": [
        ("x", "t", "time t", "linear"),
        ("y", "hnorm_u", "homogeneous H^(m+1) norm of u", "log"),
        ("y", "envelope", "decay envelope", "log"),
        ("y", "u0_mean", "mean value of u", "linear"),
        ("y", "energy_E", "energy E(t)", "log"),
    ],
    "ode": [
        ("x", "t", "time t", "linear"),
        ("y", "F", "mean value F(t)", "log"),
        ("y", "dF", "derivative F'(t)", "log"),
    ],
    "sweep": [
        ("x", "a0", "forcing floor a0", "log"),
        ("y", "terminal_norm", "terminal H^(m+1) norm", "log"),
        ("color", "outcome", "outcome", "categorical"),
    ],
}


def write_plotspec(path: Path, csv_name: str, title: str, spec_key: str) -> None:
    lines = ["plotspec 1", f"csv {csv_name}", f"title {title}"]
    for role, col, label, scale in PLOTSPECS[spec_key]:
        lines.append(f"{role} {col} label=\"{label}\" scale={scale}")
    path.write_text("\n".join(lines) + "\n")


def write_records(out: Path, records: list[DiagnosticsRecord], title: str) -> None:
    write_csv(out / "timeseries.csv", DiagnosticsRecord.COLUMNS, [r.as_row() for r in records])
    write_plotspec(out / "timeseries.plotspec", "timeseries.csv", title, "timeseries")


# -- helpers ------------------------------------------------------------------

def _no_blowup(run_blowup) -> ConditionReport:
    flagged = run_blowup is not None
    return ConditionReport.compare("solver.no_blowup", 1.0 if flagged else 0.0, 0.0,
                                   t=run_blowup.t if flagged else None,
                                   reason=run_blowup.reason if flagged else None)


def _run_pde(spec: ExperimentSpec, cfg: ScenarioConfig, keep_states: bool = False):
    """Dispatch to the configured solver; returns ``(records, final_state, blowup, states, run)``."""
    every = spec.scenario["sample_every"]
    if spec.scenario["solver"] == "hyperbolic":
        r = hyperbolic.integrate(cfg, sample_every=every, keep_every=every)
        return r.records, r.final_state, r.blowup, r.states, r
    r = wave.run(cfg, sample_every=every, keep_states=keep_states)
    return r.records, r.final_state, r.blowup, r.states, r


def _energy_norm(cfg: ScenarioConfig) -> float:
    st = hyperbolic.assemble_state(cfg.f, cfg.g, cfg.kappa)
    return math.sqrt(hyperbolic.energy(st, cfg.m))


def _info_smallness(cfg: ScenarioConfig, C_m: float) -> list[ConditionReport]:
    out = []
    sup_a = cfg.forcing.sup_norm(cfg.t_final, cfg.m)
    if cfg.m > 1.5:
        out += diagnostics.check_smallness_thm1(cfg.f, cfg.g, sup_a, cfg.kappa, cfg.m, C_m)
    U0 = _energy_norm(cfg)
    if U0 > 0:
        out.append(diagnostics.check_smallness_thm51(U0, sup_a, cfg.kappa, None, C_m))
    return out


def _forcing_floor(forcing: ForcingModel, t_final: float, samples: int = 1001) -> float:
    """``inf a`` over space (grid samples) and time (uniform samples)."""
    prof = forcing.profile
    if np.count_nonzero(prof.coeffs) <= 1 and prof.coeffs[prof.N, prof.N, prof.N] != 0:
        space_min = float(prof.coeffs[prof.N, prof.N, prof.N].real)
    else:
        space_min = float(to_physical(prof).min())
    theta = min(forcing.theta(float(t)) for t in np.linspace(0.0, t_final, samples))
    return space_min * theta if space_min >= 0 else space_min * max(theta, 0.0)


# -- experiment kinds -----------------------------------------------------------

def _simulate(spec, out):
    cfg = spec.config()
    records, final, bl, _, _ = _run_pde(spec, cfg)
    write_records(out, records, "simulation")
    save_snapshot(final, out / "final.nws", cfg.m)
    checks = [_no_blowup(bl)]
    info = _info_smallness(cfg, spec.scenario["C_m"])
    results = {"final_t": final.t, "final_hnorm_u": records[-1].hnorm_u, "final_u0_mean": records[-1].u0_mean,
               "blowup_time": bl.t if bl else None, "samples": len(records)}
    return checks, info, results


def _verify_thm1(spec, out):
    cfg = spec.config()
    C = spec.scenario["C_m"]
    records, final, bl, _, _ = _run_pde(spec, cfg)
    write_records(out, records, "global existence envelope")
    save_snapshot(final, out / "final.nws", cfg.m)
    sup_a = cfg.forcing.sup_norm(cfg.t_final, cfg.m)
    checks = diagnostics.check_smallness_thm1(cfg.f, cfg.g, sup_a, cfg.kappa, cfg.m, C)
    checks.append(_no_blowup(bl))
    h = np.array([r.hnorm_u for r in records])
    env = np.array([r.envelope for r in records])
    gap = env**2 - h**2
    i = int(np.argmin(gap))
    # strict: the squared norm must stay below the squared envelope at every row
    checks.append(ConditionReport.less_than("thm1.envelope", -float(gap.min()), 0.0, rows=len(records),
                                            worst_t=records[i].t, max_ratio=float(np.max(h / env))))
    results = {"rows": len(records), "min_envelope_gap": float(gap.min()), "max_norm_ratio": float(np.max(h / env)),
               "final_t": final.t}
    return checks, [], results


def _verify_thm32(spec, out):
    cfg = spec.config()
    c = spec.checks
    records, final, bl, _, _ = _run_pde(spec, cfg)
    write_records(out, records, "non-decay of the mean")
    save_snapshot(final, out / "final.nws", cfg.m)
    N = cfg.N
    f0 = float(cfg.f.coeffs[N, N, N].real)
    g0 = float(cfg.g.coeffs[N, N, N].real)
    a0 = _forcing_floor(cfg.forcing, cfg.t_final)
    checks = [_no_blowup(bl)]
    results = {"f0": f0, "g0": g0, "a0_floor": a0}
    if bl is not None:
        return checks, [], results
    bound = diagnostics.lower_bound_nonhom(f0, g0, a0, cfg.kappa)
    T = final.t
    tr = blowup.integrate_F(blowup.BlowupParams(cfg.kappa, a0, f0, g0), t_max=T, threshold=1e300,
                            rtol=1e-12, atol=1e-14, t_eval=[T])
    F_T = float(tr.at([T])[0])
    readings = {"printed": bound.printed, "ode_consistent": bound.ode_consistent}
    confirmed = {k: v for k, v in readings.items() if v <= F_T}
    if confirmed:
        name = max(confirmed, key=confirmed.get)
        value = confirmed[name]
    else:
        name, value = "none", max(readings.values())
    checks.append(ConditionReport.compare("thm32.oracle_confirms_bound", value, F_T, reading=name,
                                          **readings))
    last = records[-1]
    checks.append(ConditionReport.less_than("thm32.mean_exceeds_bound", c["ratio"] * value, last.u0_mean,
                                            t=last.t, reading=name))
    checks.append(ConditionReport.less_than("thm32.oscillation_decays", last.hnorm_u, c["decay_tol"], t=last.t))
    results.update({"u0_final": last.u0_mean, "hnorm_final": last.hnorm_u, "bound_used": value,
                    "bound_reading": name, "ode_F_final": F_T, **readings})
    return checks, [], results


def _energy_run(spec, out, title):
    cfg = spec.config()
    C = spec.scenario["C_m"]
    if spec.scenario["solver"] != "hyperbolic":
        raise ValueError("energy verification needs solver: hyperbolic")
    r = hyperbolic.integrate(cfg, sample_every=spec.scenario["sample_every"],
                             keep_every=spec.scenario["sample_every"])
    write_records(out, r.records, title)
    save_snapshot(r.final_state, out / "final.nws", cfg.m)
    U0 = _energy_norm(cfg)
    sup_a = cfg.forcing.sup_norm(cfg.t_final, cfg.m)
    return cfg, C, r, U0, sup_a


def _verify_thm42(spec, out):
    cfg, C, r, U0, sup_a = _energy_run(spec, out, "energy monotonicity")
    checks = [diagnostics.check_smallness_thm51(U0, sup_a, cfg.kappa, None, C), _no_blowup(r.blowup)]
    E = np.array([x.energy_E for x in r.records])
    ratio = float(E.max() / E[0]) if E[0] > 0 else 0.0
    checks.append(ConditionReport.compare("thm42.energy_monotone", ratio, 1.0 + spec.checks["energy_rtol"],
                                          t_max=float(r.records[int(np.argmax(E))].t)))
    # Gronwall bound with running suprema over [0, t]
    t = np.array([s.t for s in r.states])
    un = np.array([sobolev_norm(s.u, cfg.m) for s in r.states])
    run_sup = np.maximum.accumulate(un)
    aP = np.array([cfg.forcing.norm(ti, cfg.m) for ti in t]) * np.array([diagnostics.P(x, C) for x in un])
    run_aP = np.maximum.accumulate(aP)
    sqrtE = np.sqrt([hyperbolic.energy(s, cfg.m) for s in r.states])
    bound = np.array([hyperbolic.gronwall_energy_bound(E[0], 0.0, ti, su, sa, cfg.kappa, cfg.drop_exp_factor)
                      for ti, su, sa in zip(t, run_sup, run_aP)])
    slack = bound - sqrtE
    checks.append(ConditionReport.compare("thm42.gronwall_dominates", -float(slack.min()), 0.0,
                                          worst_t=float(t[int(np.argmin(slack))]), samples=int(t.size)))
    info = []
    params = hyperbolic.ExpDecayParams.default(cfg.kappa)
    info.append(diagnostics.check_smallness_thm52(U0, sup_a, cfg.kappa, params, None, C))
    if t.size >= 3:
        _, res = hyperbolic.energy_inequality_residual(r.states, cfg, C)
        info.append(ConditionReport.compare("thm42.energy_inequality_sampled", -float(res.min()), 0.0,
                                            note="finite-difference derivative on samples"))
    results = {"alpha": U0, "sup_a": sup_a, "max_energy_ratio": ratio, "min_gronwall_slack": float(slack.min()),
               "final_energy": float(E[-1])}
    return checks, info, results


def _verify_thm46(spec, out):
    cfg, C, r, U0, sup_a = _energy_run(spec, out, "exponential decay")
    params = hyperbolic.ExpDecayParams.default(cfg.kappa)
    checks = [diagnostics.check_smallness_thm52(U0, sup_a, cfg.kappa, params, None, C), _no_blowup(r.blowup)]
    times = [x.t for x in r.records]
    norms = [x.hnorm_u for x in r.records]
    w = spec.checks["window"]
    fit = diagnostics.fit_decay_rate(times, norms, (w[0], w[1]))
    target = spec.checks["rate"]
    checks.append(ConditionReport.compare("thm46.decay_rate", -fit.rate, -target, rate=fit.rate,
                                          r_squared=fit.r_squared, samples=fit.samples))
    results = {"alpha": U0, "fitted_rate": fit.rate, "target_rate": target, "r_squared": fit.r_squared,
               "lam": params.lam}
    return checks, [], results


def _ode_csv(out, tr):
    write_csv(out / "ode.csv", ("t", "F", "dF"), zip(tr.t, tr.F, tr.dF))
    write_plotspec(out / "ode.plotspec", "ode.csv", "mean-value equation", "ode")


def _blowup_ode(spec, out):
    p = spec.blowup_params()
    s = spec.scenario
    tr = blowup.integrate_F(p, t_max=s["t_max"], threshold=s["threshold"], rtol=s["rtol"], atol=s["atol"])
    _ode_csv(out, tr)
    info = blowup.check_blowup_conditions(p)
    checks = [ConditionReport.compare("ode.completed", 0.0, 0.0, terminal_reason=tr.terminal_reason)]
    results = {"params": p.to_dict(), "blowup_time": tr.blowup_time, "terminal_reason": tr.terminal_reason,
               "samples": int(tr.t.size), "F_final": float(tr.F[-1])}
    return checks, info, results


def _verify_thm51_blowup(spec, out):
    p = spec.blowup_params()
    s, c = spec.scenario, spec.checks
    checks = blowup.check_blowup_conditions(p)
    tr = blowup.integrate_F(p, t_max=s["t_max"], threshold=s["threshold"], rtol=s["rtol"], atol=s["atol"])
    _ode_csv(out, tr)
    t1 = p.t1
    tb = tr.blowup_time
    checks.append(ConditionReport.less_than("blowup.before_lifespan_bound",
                                            math.inf if tb is None else tb, t1,
                                            blowup_time=tb, t1=t1, tau1=p.tau1))
    results = {"params": p.to_dict(), "blowup_time": tb, "t1": t1, "tau1": p.tau1}
    info = []
    if tb is None or not math.isfinite(t1):
        return checks, info, results

    # pointwise lower bound on the transformed solution at n_tau times
    n = c["n_tau"]
    tau_end = min(float(blowup.omega(tb, p.kappa)), p.tau1)
    taus = [1.0 + (tau_end - 1.0) * j / n for j in range(n)]
    ts = [blowup.omega_inv(tau, p.kappa) for tau in taus]
    trg = blowup.integrate_F(p, t_max=tb, threshold=s["threshold"] * 10, rtol=s["rtol"], atol=s["atol"],
                             t_eval=ts)
    lhs = p.alpha * (1.0 + trg.at(ts))
    rhs = np.array([blowup.G_lower_bound(p, tau) for tau in taus])
    rel = (lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)
    checks.append(ConditionReport.compare("blowup.G_lower_bound", -float(rel.min()), 1e-12, samples=n,
                                          tau_max=taus[-1]))

    # the same problem as a PDE on spatially constant data
    N = c["pde_N"]
    from ..scenarios import mean_field
    cfg = ScenarioConfig(p.kappa, mean_field(N, p.f0), mean_field(N, p.g0), ForcingModel(mean_field(N, p.a0)),
                         t_final=min(2.0 * tb, t1), dt=c["pde_dt"], scheme="exprk4", adaptive=True,
                         rtol=c["pde_rtol"], atol=1e-14)
    pde = wave.run(cfg)
    ok = [r for r in pde.records if not r.flags]
    write_records(out, pde.records, "blow-up of the mean")
    pts = [r.t for r in ok]
    orc = blowup.integrate_F(p, t_max=pts[-1], threshold=s["threshold"], rtol=c["oracle_rtol"], atol=1e-14,
                             t_eval=pts)
    pts = [t for t in pts if t <= orc.t[-1]]
    Fo = orc.at(pts)
    Fp = np.array([r.u0_mean for r in ok[:len(pts)]])
    err = np.abs(Fp - Fo) / np.maximum(1.0, np.abs(Fo))
    checks.append(ConditionReport.compare("blowup.pde_matches_ode", float(err.max()), c["pde_tol"],
                                          samples=len(pts), F_max=float(np.abs(Fo).max())))
    checks.append(ConditionReport.compare("blowup.pde_flagged", 0.0 if pde.blew_up else 1.0, 0.0,
                                          pde_blowup_time=pde.blowup.t if pde.blew_up else None))
    tres = blowup.transformed_comparison(p, tr)
    info.append(ConditionReport.compare("blowup.transformed_inequalities", -tres.min_relative(), 1e-6))
    try:
        observed = blowup.minimal_a0_observed(p.kappa, p.f0, p.g0, t_max=s["t_max"], threshold=s["threshold"])
    except RuntimeError:
        observed = None
    results.update({"pde_blowup_time": pde.blowup.t if pde.blew_up else None, "pde_max_rel_error": float(err.max()),
                    "a0_theorem": p.a0, "a0_observed": observed})
    return checks, info, results


def _sweep(spec, out, workers=1):
    from .sweep import run_sweep
    return run_sweep(spec, out, workers)


DISPATCH = {
    "simulate": _simulate,
    "verify_thm1": _verify_thm1,
    "verify_thm32": _verify_thm32,
    "verify_thm42": _verify_thm42,
    "verify_thm46": _verify_thm46,
    "blowup_ode": _blowup_ode,
    "verify_thm51_blowup": _verify_thm51_blowup,
}


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None, workers: int = 1) -> Outcome:
    """Run ``spec`` and write its artifacts.

    Returns an :class:`Outcome` whose ``status`` is 0 when every enforced
    check holds and 1 otherwise.
    """
    out = Path(spec.outputs if out_dir is None else out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "spec.yaml").write_text(dump_spec(spec))
    start = time.perf_counter()
    if spec.kind == "sweep":
        checks, info, results = _sweep(spec, out, workers)
    else:
        checks, info, results = DISPATCH[spec.kind](spec, out)
    elapsed = time.perf_counter() - start
    passed = all(c.satisfied for c in checks)
    status = EXIT_PASS if passed else EXIT_FAIL
    write_json(out / "conditions.json", {"checks": [c.to_dict() for c in checks],
                                         "info": [c.to_dict() for c in info]})
    summary = {
        "kind": spec.kind,
        "status": "pass" if passed else "fail",
        "exit_status": status,
        "checks": {c.name: {"satisfied": c.satisfied, "margin": c.margin} for c in checks},
        "results": results,
    }
    write_json(out / "summary.json", summary)
    timings = {"wall_seconds": elapsed}
    write_json(out / "timings.json", timings)
    return Outcome(status, _clean(summary), checks, info, out, timings)
