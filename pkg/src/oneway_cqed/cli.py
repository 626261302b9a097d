"""Command-line entry point.

Exit codes: 0 success, 2 a check failed (infeasible schedule, gate residual
breach, invalid cluster ...), 1 usage or configuration error.  Every file
written with ``--out`` gets a ``<name>.manifest.json`` companion recording
the resolved inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import cluster as cl
from . import dynamics as dyn
from . import gates
from . import grover as gv
from . import schedule as sch
from .config import ConfigError, load_params, parse_angle, resolve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK = 2
GATE_TOL = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "value"):
        return x.value
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def _emit(text: str, out: str | None, ctx: dict):
    """Write ``text`` to ``out`` (plus manifest) or to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    manifest = {
        "subcommand": ctx["subcommand"],
        "parameters": ctx.get("parameters", {}),
        "inputs": ctx.get("inputs", []),
        "output": str(path),
        "output_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "seed": ctx.get("seed"),
        "version": __version__,
        "timestamp": _timestamp(),
    }
    path.with_name(path.name + ".manifest.json").write_text(_json_text(manifest), encoding="utf-8")


def _ctx(args, **extra) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "report", "command", "command_path", "action")}
    ctx = {"subcommand": " ".join(args.command_path), "parameters": params, "seed": getattr(args, "seed", None)}
    ctx.update(extra)
    return ctx


# --- subcommands ----------------------------------------------------------------


def cmd_gate_check(args) -> int:
    gp = gates.gate_conditions(args.g, args.m, args.k)
    u = dyn.effective_unitary(gp.system_params(), gp.t_gate)
    gate = gates.composite_gate(u, args.convention)
    res = gates.truth_table_residuals(gate)
    worst = max(res.values())
    payload = {
        "g": gp.g,
        "m": gp.m,
        "k": gp.k,
        "convention": args.convention,
        "delta": gp.delta_required,
        "Omega": gp.Omega_required,
        "t_gate": gp.t_gate,
        "lambda": gp.lam,
        "strong_drive": gp.strong_drive,
        "truth_table_residuals": res,
        "max_residual": worst,
        "z_phase_correction": gates.z_phase_correction(gate),
        "passes": worst < GATE_TOL,
    }
    _emit(_json_text(payload), args.out, _ctx(args))
    return EXIT_OK if worst < GATE_TOL else EXIT_CHECK


def cmd_dynamics(args) -> int:
    path = resolve(args.params)
    params = load_params(path, "system")
    traj = dyn.fig3_trajectory(params, args.periods, args.samples, args.convention, args.refine)
    inputs = [str(path)]
    _emit(traj.to_csv(), args.out, _ctx(args, inputs=inputs))
    if args.report:
        rep = dyn.ripple_report(params, traj)
        payload = dict(rep.__dict__)
        payload["params"] = {
            "g": params.g,
            "delta": params.delta,
            "Omega": params.Omega,
            "Gamma": params.Gamma,
            "n_th": params.n_th,
            "fock_dim": params.fock_dim,
        }
        _emit(_json_text(payload), args.report, _ctx(args, inputs=inputs))
    return EXIT_OK


def _bounds(args):
    if args.bounds is None:
        return sch.PhysicalBounds(), []
    path = resolve(args.bounds)
    return load_params(path, "bounds"), [str(path)]


def cmd_schedule_solve(args) -> int:
    bounds, inputs = _bounds(args)
    out = sch.solve_schedule(
        args.n, bounds, seed=args.seed, starts=args.starts, orientation=args.orientation, workers=args.workers
    )
    ctx = _ctx(args, inputs=inputs)
    ctx["parameters"]["bounds"] = bounds.to_dict()
    if isinstance(out, sch.Infeasible):
        payload = {"feasible": False, "n": out.n, "starts": out.starts, "best_residual_s": out.best_residual, "reason": out.reason}
        _emit(_json_text(payload), args.out, ctx)
        return EXIT_CHECK
    _emit(out.to_json() + "\n", args.out, ctx)
    return EXIT_OK


def cmd_schedule_validate(args) -> int:
    path = resolve(args.config)
    config = load_params(path, "schedule")
    bounds, inputs = _bounds(args)
    report = sch.validate_schedule(config, bounds)
    payload = report.as_dict()
    payload["residuals_s"] = sch.residuals(config).tolist()
    payload["collision_distances_m"] = {
        f"{i},{j}": sch.collision_distance(i, j, config) for i, j in sch.pairs(config.n)
    }
    payload["events"] = [
        {"pair": list(e.pair), "cavity": e.cavity, "time_s": e.time, "position_m": e.position}
        for e in sch.collision_events(config, tolerance=math.inf)
    ]
    payload["detector_order"] = sch.detector_order(config, bounds.detector_position)
    _emit(_json_text(payload), args.out, _ctx(args, inputs=[str(path)] + inputs))
    return EXIT_OK if report.ok else EXIT_CHECK


def cmd_schedule_scan(args) -> int:
    if args.n_min < 2 or args.n_max < args.n_min:
        raise UsageError("need 2 <= n-min <= n-max")
    bounds, inputs = _bounds(args)
    rows = sch.feasibility_scan(
        range(args.n_min, args.n_max + 1), bounds, trials=args.trials, seed=args.seed, starts=args.starts
    )
    _emit(sch.scan_csv(rows), args.out, _ctx(args, inputs=inputs))
    return EXIT_OK


def cmd_cluster_verify(args) -> int:
    graph = cl.ClusterGraph.box4() if args.graph == "box4" else cl.ClusterGraph.linear(args.size)
    ideal = cl.build_cluster_ideal(graph)
    if args.source == "ideal":
        psi, kappa = ideal.state, ideal.kappa
    elif args.source == "collision":
        cs = cl.build_cluster_collision(graph, gates.controlled_phase())
        psi, kappa = cs.state, cs.kappa
    else:
        if args.graph != "box4":
            raise UsageError("the explicit-expression source exists only for box4")
        psi, kappa = cl.box4_paper_state(), None
    result = cl.verify_cluster(psi, graph)
    payload = {"graph": args.graph, "n": graph.n, "source": args.source, "verification": result.as_dict()}
    payload["recorded_kappa"] = list(kappa) if kappa is not None else None
    if graph.n <= 4:
        eq = cl.local_equivalence(psi, ideal.state)
        payload["local_correction_to_ideal"] = (
            None if eq is None else {"gates": list(eq.gates), "overlap": eq.overlap}
        )
    _emit(_json_text(payload), args.out, _ctx(args))
    return EXIT_OK if result.ok else EXIT_CHECK


def _grover_inputs(args):
    inputs = []
    if args.preset:
        path = resolve(args.preset)
        setting, source = load_params(path, "grover")
        inputs.append(str(path))
    else:
        setting = gv.OracleSetting(parse_angle(args.alpha), parse_angle(args.beta))
        source = gv.Source.COLLISION_GENERATED
    if args.source:
        source = {"paper": gv.Source.PAPER_EXPLICIT, "collision": gv.Source.COLLISION_GENERATED, "ideal": gv.Source.IDEAL}[args.source]
    return setting, source, inputs


def cmd_grover_enumerate(args) -> int:
    setting, source, inputs = _grover_inputs(args)
    records = gv.enumerate_branches(setting, source, args.assignment)
    _emit(gv.branches_csv(records), args.out, _ctx(args, inputs=inputs))
    truth = gv.oracle_truth(setting, strict=False)
    total = sum(r.branch_probability for r in records)
    bad = truth is not None and any(
        r.valid and r.branch_probability >= gv.ZERO_PROB_TOL and r.decoded != truth for r in records
    )
    return EXIT_CHECK if bad or abs(total - 1) > 1e-9 else EXIT_OK


def cmd_grover_sample(args) -> int:
    if args.shots < 1:
        raise UsageError("--shots must be >= 1")
    setting, source, inputs = _grover_inputs(args)
    shots = gv.sample_shots(setting, args.seed, args.shots, source, args.assignment)
    payload = {
        "alpha": setting.alpha,
        "beta": setting.beta,
        "source": source.value,
        "seed": args.seed,
        "shots": [
            {"r4": r.r4, "r3": r.r3, "r2": r.r2, "r1": r.r1, "decoded": f"{r.decoded[0]}{r.decoded[1]}", "valid": r.valid}
            for r in shots
        ],
        "histogram": gv.histogram(shots),
    }
    _emit(_json_text(payload), args.out, _ctx(args, inputs=inputs))
    return EXIT_OK


def cmd_budget(args) -> int:
    path = resolve(args.config)
    config = load_params(path, "schedule")
    gp = gates.gate_conditions(args.g, m=args.m)
    budget = sch.experiment_budget(config, gate=gp, detector_position=args.detector)
    _emit(_json_text(budget.as_dict()), args.out, _ctx(args, inputs=[str(path)]))
    return EXIT_OK if budget.passes else EXIT_CHECK


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="oneway-cqed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_opt(q):
        q.add_argument("--out", help="output file (default: stdout)")

    q = sub.add_parser("gate-check", help="composite-gate truth table")
    q.add_argument("--g", type=float, default=1.0)
    q.add_argument("--m", type=int, default=1)
    q.add_argument("--k", type=int, default=10)
    q.add_argument("--convention", choices=("atomic", "computational"), default="atomic")
    out_opt(q)
    q.set_defaults(func=cmd_gate_check, command_path=["gate-check"])

    q = sub.add_parser("dynamics", help="master-equation trajectory from |gg> with a thermal field")
    q.add_argument("--params", default="fig3", help="system JSON file or preset name")
    q.add_argument("--periods", type=int, default=1)
    q.add_argument("--samples", type=int, default=200, help="samples per detuning period")
    q.add_argument("--refine", type=int, default=2, help="time-step refinement below the stability limit")
    q.add_argument("--convention", choices=[c.value for c in dyn.Convention], default="paper_literal")
    q.add_argument("--report", help="also write the ripple/purity report JSON here")
    out_opt(q)
    q.set_defaults(func=cmd_dynamics, command_path=["dynamics"])

    q = sub.add_parser("schedule", help="atom-collision scheduling")
    ssub = q.add_subparsers(dest="action", required=True, parser_class=_Parser)
    s = ssub.add_parser("solve")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--starts", type=int, default=200)
    s.add_argument("--bounds")
    s.add_argument("--orientation", choices=[o.value for o in sch.Orientation], default="table1_reversed")
    s.add_argument("--workers", type=int, default=None)
    out_opt(s)
    s.set_defaults(func=cmd_schedule_solve, command_path=["schedule", "solve"])
    s = ssub.add_parser("validate")
    s.add_argument("--config", required=True)
    s.add_argument("--bounds")
    out_opt(s)
    s.set_defaults(func=cmd_schedule_validate, command_path=["schedule", "validate"])
    s = ssub.add_parser("scan")
    s.add_argument("--n-min", type=int, default=2)
    s.add_argument("--n-max", type=int, default=8)
    s.add_argument("--trials", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--starts", type=int, default=200)
    s.add_argument("--bounds")
    out_opt(s)
    s.set_defaults(func=cmd_schedule_scan, command_path=["schedule", "scan"])

    q = sub.add_parser("cluster", help="cluster-state checks")
    csub = q.add_subparsers(dest="action", required=True, parser_class=_Parser)
    s = csub.add_parser("verify")
    s.add_argument("--graph", choices=("box4", "linear"), default="box4")
    s.add_argument("--size", type=int, default=4, help="vertex count for linear graphs")
    s.add_argument("--source", choices=("ideal", "collision", "paper"), default="collision")
    out_opt(s)
    s.set_defaults(func=cmd_cluster_verify, command_path=["cluster", "verify"])

    q = sub.add_parser("grover", help="four-element search on Box(4)")
    gsub = q.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name, func in (("enumerate", cmd_grover_enumerate), ("sample", cmd_grover_sample)):
        s = gsub.add_parser(name)
        s.add_argument("--alpha", default="pi")
        s.add_argument("--beta", default="pi")
        s.add_argument("--preset", help="grover JSON file or preset name, overrides --alpha/--beta")
        s.add_argument("--source", choices=("paper", "collision", "ideal"))
        s.add_argument("--assignment", choices=[a.value for a in gv.Assignment], default=gv.DEFAULT_ASSIGNMENT.value)
        if name == "sample":
            s.add_argument("--seed", type=int, default=0)
            s.add_argument("--shots", type=int, default=1)
        out_opt(s)
        s.set_defaults(func=func, command_path=["grover", name])

    q = sub.add_parser("budget", help="flight time and gate time against coherence times")
    q.add_argument("--config", default="table1")
    q.add_argument("--g", type=float, default=2 * math.pi * 25e3)
    q.add_argument("--m", type=int, default=1)
    q.add_argument("--detector", type=float, default=0.25, help="detector distance from the source (m)")
    out_opt(q)
    q.set_defaults(func=cmd_budget, command_path=["budget"])
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
