"""Command-line entry point ``nordwave``.

Exit codes: 0 when every enforced check passes, 1 on a check failure,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ODE_KINDS, ConfigError, dump_spec, load_scenario, parse_spec
from .runner import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, run_experiment, write_records
from .snapshot import SnapshotError, load_snapshot, read_header, save_snapshot

THEOREMS = {
    "thm1": "verify_thm1",
    "thm32": "verify_thm32",
    "thm42": "verify_thm42",
    "thm46": "verify_thm46",
    "thm51": "verify_thm51_blowup",
    "thm51_blowup": "verify_thm51_blowup",
}


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _common(p: argparse.ArgumentParser, scenario_required: bool = False) -> None:
    p.add_argument("--scenario", type=Path, required=scenario_required, help="scenario YAML file")
    p.add_argument("--out", type=Path, help="output directory (overrides the spec)")
    p.add_argument("--seed", type=_u64, help="seed for random field terms")
    p.add_argument("--dt", type=float, help="time step override")
    p.add_argument("--t-final", type=float, dest="t_final", help="final time override")
    p.add_argument("--n", type=_positive_int, dest="n", help="truncation radius override")
    p.add_argument("--workers", type=_positive_int, default=1, help="parallel sweep workers")
    p.add_argument("--print-spec", action="store_true", help="echo the materialized spec and exit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nordwave", description="Damped cubic wave experiments on the 3-torus.")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("simulate", help="run a scenario and write its time series"))
    _common(sub.add_parser("blowup", help="integrate the mean-value equation"))
    v = sub.add_parser("verify", help="run a theorem verification")
    v.add_argument("theorem", choices=sorted(THEOREMS))
    _common(v)
    _common(sub.add_parser("sweep", help="classify outcomes over a parameter grid"))
    s = sub.add_parser("snapshot", help="inspect a snapshot or resume a run from one")
    s.add_argument("action", choices=["inspect", "resume"])
    s.add_argument("path", type=Path)
    _common(s)
    return ap


def _overrides(args, kind: str) -> dict:
    ov = {}
    if args.seed is not None:
        ov["seed"] = args.seed
    if kind in ODE_KINDS:
        if args.dt is not None or args.n is not None:
            raise ConfigError("--dt and --n do not apply to mean-value experiments")
        if args.t_final is not None:
            ov["t_max"] = args.t_final
    else:
        if args.dt is not None:
            ov["dt"] = args.dt
        if args.t_final is not None:
            ov["t_final"] = args.t_final
        if args.n is not None:
            ov["N"] = args.n
    return ov


def _spec_for(args, kind: str):
    ov = _overrides(args, kind)
    if args.scenario is None:
        return parse_spec(dict(kind=kind, **ov))
    spec = load_scenario(args.scenario, ov)
    if spec.kind != kind:
        raise ConfigError(f"field 'kind': scenario is {spec.kind!r} but the command runs {kind!r}")
    return spec


def _report(outcome, out=None) -> None:
    out = sys.stdout if out is None else out
    for c in outcome.checks:
        mark = "PASS" if c.satisfied else "FAIL"
        print(f"[{mark}] {c.name}: lhs={c.lhs:.6g} rhs={c.rhs:.6g} margin={c.margin:.3g}", file=out)
    for c in outcome.info:
        print(f"[info] {c.name}: satisfied={c.satisfied} margin={c.margin:.3g}", file=out)
    print(f"{outcome.summary['kind']}: {outcome.summary['status']} -> {outcome.out_dir}", file=out)


def _resume(args) -> int:
    from .. import hyperbolic, wave
    from ..states import WaveState
    state = load_snapshot(args.path)
    kind = "simulate"
    spec = _spec_for(args, kind)
    out = Path(args.out or spec.outputs)
    out.mkdir(parents=True, exist_ok=True)
    cfg = spec.config()
    every = spec.scenario["sample_every"]
    if isinstance(state, WaveState):
        if spec.scenario["solver"] != "wave":
            raise ConfigError("snapshot holds a wave state but the scenario selects the first-order solver")
        r = wave.run(cfg, sample_every=every, initial_state=state)
        records, final, bl = r.records, r.final_state, r.blowup
    else:
        if spec.scenario["solver"] != "hyperbolic":
            raise ConfigError("snapshot holds a first-order state but the scenario selects the wave solver")
        r = hyperbolic.integrate(cfg, sample_every=every, initial_state=state)
        records, final, bl = r.records, r.final_state, r.blowup
    (out / "spec.yaml").write_text(dump_spec(spec))
    write_records(out, records, "resumed run")
    save_snapshot(final, out / "final.nws", cfg.m)
    print(f"resumed from t={state.t:.17g} to t={final.t:.17g} -> {out}")
    if bl is not None:
        print(f"[FAIL] solver.no_blowup: {bl}")
        return EXIT_FAIL
    return EXIT_PASS


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "snapshot":
            if args.action == "inspect":
                head = read_header(Path(args.path).read_bytes())
                state = load_snapshot(args.path)
                print(f"kind={head['kind']} version={head['version']} t={head['t']!r} N={state.N}")
                return EXIT_PASS
            return _resume(args)
        kind = {"simulate": "simulate", "blowup": "blowup_ode", "sweep": "sweep"}.get(args.command)
        if args.command == "verify":
            kind = THEOREMS[args.theorem]
        spec = _spec_for(args, kind)
        if args.print_spec:
            sys.stdout.write(dump_spec(spec))
            return EXIT_PASS
        outcome = run_experiment(spec, args.out, workers=args.workers)
    except (ConfigError, SnapshotError) as exc:
        print(f"nordwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nordwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _report(outcome)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
