"""Parameter sweeps over ``(kappa, a0, data_scale)``.

Each grid point runs the base scenario with ``kappa`` replaced, the data
scaled by ``data_scale`` and the forcing profile scaled by ``a0``. Points are
independent and may run in separate processes; the table is assembled after
sorting by grid coordinates, so it does not depend on completion order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .. import blowup, diagnostics, hyperbolic, wave
from ..diagnostics import ConditionReport
from .config import ExperimentSpec, build_config, point_scenario, sweep_points

__all__ = ["OUTCOMES", "SWEEP_COLUMNS", "run_point", "run_sweep", "classify"]

OUTCOMES = ("decayed", "bounded", "blowup")

SWEEP_COLUMNS = ("index", "kappa", "a0", "data_scale", "outcome", "blowup_time", "terminal_t",
                 "terminal_norm", "thm1_small", "energy_small", "blowup_conditions", "error")


def classify(blew_up: bool, terminal_norm: float, decay_tol: float) -> str:
    """``blowup`` if flagged, ``decayed`` if the full norm fell to ``decay_tol``, else ``bounded``."""
    if blew_up:
        return "blowup"
    return "decayed" if terminal_norm <= decay_tol else "bounded"


def _conditions(cfg, C_m, a_floor):
    sup_a = cfg.forcing.sup_norm(cfg.t_final, cfg.m)
    thm1 = all(r.satisfied for r in diagnostics.check_smallness_thm1(cfg.f, cfg.g, sup_a, cfg.kappa, cfg.m, C_m)) \
        if cfg.m > 1.5 else False
    st = hyperbolic.assemble_state(cfg.f, cfg.g, cfg.kappa)
    U0 = math.sqrt(hyperbolic.energy(st, cfg.m))
    energy = diagnostics.check_smallness_thm51(U0, sup_a, cfg.kappa, None, C_m).satisfied if U0 > 0 else False
    N = cfg.N
    f0 = float(cfg.f.coeffs[N, N, N].real)
    g0 = float(cfg.g.coeffs[N, N, N].real)
    if a_floor >= 0:
        p = blowup.BlowupParams(cfg.kappa, a_floor, f0, g0)
        bc = all(r.satisfied for r in blowup.check_blowup_conditions(p))
    else:
        bc = False
    return thm1, energy, bc


def run_point(job: tuple) -> dict:
    """Run one grid point; ``job = (index, point, scenario, seed, decay_tol, points_dir)``."""
    from .runner import _forcing_floor, write_records
    index, point, scenario, seed, decay_tol, points_dir = job
    row = {"index": index, **point, "outcome": "", "blowup_time": "", "terminal_t": "", "terminal_norm": "",
           "thm1_small": "", "energy_small": "", "blowup_conditions": "", "error": ""}
    try:
        cfg = build_config(scenario, seed)
        every = scenario["sample_every"]
        if scenario["solver"] == "hyperbolic":
            r = hyperbolic.integrate(cfg, sample_every=every)
            records, bl = r.records, r.blowup
        else:
            r = wave.run(cfg, sample_every=every)
            records, bl = r.records, r.blowup
        if points_dir is not None:
            d = Path(points_dir) / f"point_{index:04d}"
            d.mkdir(parents=True, exist_ok=True)
            write_records(d, records, f"sweep point {index}")
        last = records[-1]
        row["outcome"] = classify(bl is not None, last.norm_u, decay_tol)
        row["blowup_time"] = bl.t if bl is not None else ""
        row["terminal_t"] = last.t
        row["terminal_norm"] = last.norm_u
        thm1, energy, bc = _conditions(cfg, scenario["C_m"], _forcing_floor(cfg.forcing, cfg.t_final))
        row.update(thm1_small=thm1, energy_small=energy, blowup_conditions=bc)
    except Exception as exc:  # recorded per row; one bad point must not sink the sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def monotonicity_violations(rows: list[dict]) -> int:
    """Count decreases of the outcome rank along the ``a0`` axis."""
    lines: dict = {}
    for r in rows:
        if r["outcome"]:
            lines.setdefault((r["kappa"], r["data_scale"]), []).append((r["a0"], OUTCOMES.index(r["outcome"])))
    bad = 0
    for pts in lines.values():
        ranks = [k for _, k in sorted(pts)]
        bad += sum(1 for a, b in zip(ranks, ranks[1:]) if b < a)
    return bad


def run_sweep(spec: ExperimentSpec, out: Path, workers: int = 1):
    from .runner import write_csv, write_plotspec
    points = sweep_points(spec)
    pdir = out / "points"
    jobs = [(i, p, point_scenario(spec, p), spec.seed, spec.checks["decay_tol"], str(pdir))
            for i, p in enumerate(points)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run_point, jobs))
    else:
        rows = [run_point(j) for j in jobs]
    rows.sort(key=lambda r: (r["kappa"], r["a0"], r["data_scale"]))
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, [[_cell(r[c]) for c in SWEEP_COLUMNS] for r in rows])
    write_plotspec(out / "sweep.plotspec", "sweep.csv", "decay and blow-up regimes", "sweep")
    errors = sum(1 for r in rows if r["error"])
    viol = monotonicity_violations(rows)
    checks = [
        ConditionReport.compare("sweep.points_completed", float(errors), 0.0, points=len(rows)),
        ConditionReport.compare("sweep.monotone_in_a0", float(viol), 0.0),
    ]
    counts = {o: sum(1 for r in rows if r["outcome"] == o) for o in OUTCOMES}
    results = {"points": len(rows), "outcomes": counts,
               "table": [{"kappa": r["kappa"], "a0": r["a0"], "data_scale": r["data_scale"],
                          "outcome": r["outcome"] or "error"} for r in rows]}
    return checks, [], results


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return v
