"""Command-line front end: ``qtransport <command> --config run.json``.

Exit codes: 0 pass, 1 numeric failure, 2 configuration or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .cost import ball_grid, c_transform, classify_a3, hemisphere_psi
from .errors import ConfigError, QuotientTransportError
from .estimates import bounds_report
from .solver.continuation import continuation_run, exact_error
from .solver.grid import GridField, PolarGrid
from .verification import SUITES, run_suites

log = logging.getLogger("quotient_transport")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
FIELD_COLUMNS = ("r_index", "theta_index", "x", "y", "u", "u_x", "u_y", "lambda_min_w", "residual")


class Run:
    """Output directory bookkeeping: every written file lands in the manifest."""

    def __init__(self, out: Path):
        self.out = out
        self.manifest = []

    def path(self, name):
        self.manifest.append(name)
        return self.out / name

    def write_json(self, name, obj):
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    def write_csv(self, name, header, rows):
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _prepare_out(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _fmt(v):
    return repr(float(v))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_verify(cfg, args, run: Run) -> int:
    v = cfg.get("verify", {})
    only = v.get("suites")
    if only:
        unknown = sorted(set(only) - set(SUITES))
        if unknown:
            raise ConfigError(f"unknown suites {unknown}")
    unknown = sorted(set(v.get("samples", {})) - set(SUITES))
    if unknown:
        raise ConfigError(f"sample counts given for unknown suites {unknown}")
    dims = v.get("dims", list(range(2, 9)))
    results = run_suites(args.seed, v.get("samples"), only, inject=args.inject_bug, dims=dims)
    suites = [r.to_json() for r in results]
    timing = {r.suite: r.seconds for r in results}
    for s in suites:
        s.pop("seconds")
    failed = [s["suite"] for s in suites if not s["pass"]]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.suite}: worst {r.worst_value:.3e} (tol {r.tolerance:g}, "
              f"{r.samples} samples)")
    run.write_json("verify_timing.json", timing)
    summary = {"command": "verify", "seed": args.seed, "suites": suites, "failed": failed,
               "pass": not failed}
    _finish(run, "verify_summary.json", summary)
    return EXIT_OK if not failed else EXIT_FAIL


def cmd_classify(cfg, args, run: Run) -> int:
    model = cfgmod.cost(cfg)
    src, tgt = cfgmod.domains(cfg)
    c = cfg.get("classify", {})
    rep = classify_a3(model, c.get("samples", 2000), src, tgt, seed=args.seed, tol=c.get("tolerance"))
    out = {"command": "classify", "seed": args.seed, "cost": model.describe(), **rep.to_json()}
    print(f"classification: {rep.classification} (min {rep.min_value:.3e})")
    _finish(run, "classify.json", out)
    return EXIT_OK


def _field_rows(grid, u, lam_min, residual):
    du = grid.gradient(u)
    for i in range(grid.size):
        yield (int(grid.r_index[i]), int(grid.theta_index[i]), _fmt(grid.x[i, 0]), _fmt(grid.x[i, 1]),
               _fmt(u[i]), _fmt(du[i, 0]), _fmt(du[i, 1]), _fmt(lam_min[i]), _fmt(residual[i]))


def cmd_solve(cfg, args, run: Run) -> int:
    grid = cfgmod.parse_grid(args.grid) if args.grid else None
    spec = cfgmod.problem(cfg, grid)
    check = cfg.get("solver", {}).get("check_jacobian", True)
    t0 = time.perf_counter()
    summary = {"command": "solve", "seed": args.seed, "grid": {"nr": spec.nr, "nt": spec.nt},
               "quotient": {"n": spec.params.n, "l": spec.params.l}}
    try:
        state = continuation_run(spec, check_jacobian=check, seed=args.seed)
    except QuotientTransportError as exc:
        stage = getattr(exc, "stage", "newton")
        summary.update({"status": "failed", "stage": stage, "error": type(exc).__name__, "message": str(exc)})
        print(f"solve failed at stage {stage}: {exc}")
        _finish(run, "summary.json", summary)
        return EXIT_FAIL
    seconds = time.perf_counter() - t0
    disc = state.disc
    u = state.field.u
    ev = disc.evaluate(u, 1.0)
    run.write_csv("fields.csv", FIELD_COLUMNS, _field_rows(disc.grid, u, ev.lam_min, ev.residual))
    report = bounds_report(state.field, spec, cfg.get("diagnostics"))
    run.write_json("diagnostics.json", report.to_json(tables=True))
    summary.update({
        "status": state.status,
        "t_history": state.t_history,
        "steps": state.history,
        "newton_iterations": [h.get("iterations") for h in state.history if h["accepted"]],
        "final_residual_inf": float(np.max(np.abs(ev.residual))),
        "lambda_min_w": float(np.min(ev.lam_min)),
        "jacobian_check": state.jacobian_check,
        "diagnostics": report.to_json(),
    })
    if spec.exact is not None:
        summary["exact_error_sup"] = exact_error(state, spec.exact)
    run.write_json("timing.json", {"solve_seconds": seconds})
    problems = []
    if not report.hard_pass:
        problems.append("diagnostics")
    if state.jacobian_check and not state.jacobian_check["rel_error"] <= 1e-4:
        problems.append("jacobian_check")
    if report.checks and not all(report.checks.values()):
        problems.append("thresholds")
    if problems:
        summary["stage"] = problems[0]
    summary["pass"] = not problems
    print(f"solve {'converged' if not problems else 'failed: ' + ', '.join(problems)}; "
          f"residual {summary['final_residual_inf']:.2e}, obliqueness_min {report.obliqueness_min:.4f}")
    _finish(run, "summary.json", summary)
    return EXIT_OK if not problems else EXIT_FAIL


def cmd_transform(cfg, args, run: Run) -> int:
    model = cfgmod.cost(cfg)
    src, tgt = cfgmod.domains(cfg)
    tr = cfg.get("transform", {})
    center = np.asarray(tr.get("center", tgt.center), dtype=float)
    radius = tr.get("radius", 0.5 * tgt.rho_min)
    nr, nt = cfgmod.parse_grid(args.grid) if args.grid else (33, 64)
    grid = PolarGrid(src, nr, nt)
    samples = ball_grid(center, radius, tr.get("n_rad", 64), tr.get("n_ang", 64))
    u0, ystar = c_transform(model, hemisphere_psi(center, radius), grid.x, samples)
    inside = np.linalg.norm(ystar - center, axis=1) <= radius * (1 + 1e-12)
    rows = ((int(grid.r_index[i]), int(grid.theta_index[i]), _fmt(grid.x[i, 0]), _fmt(grid.x[i, 1]),
             _fmt(u0[i]), _fmt(ystar[i, 0]), _fmt(ystar[i, 1])) for i in range(grid.size))
    run.write_csv("transform.csv", ("r_index", "theta_index", "x", "y", "u0", "y_x", "y_y"), rows)
    summary = {"command": "transform", "grid": {"nr": nr, "nt": nt}, "center": center.tolist(),
               "radius": radius, "argmax_in_ball": bool(np.all(inside)),
               "u0_min": float(np.min(u0)), "u0_max": float(np.max(u0))}
    print(f"c-transform on {grid.size} nodes; argmax inside ball: {bool(np.all(inside))}")
    _finish(run, "transform_summary.json", summary)
    return EXIT_OK if np.all(inside) else EXIT_FAIL


def _read_field(path, grid: PolarGrid):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc
    if len(rows) != grid.size:
        raise ConfigError(f"field has {len(rows)} nodes, grid expects {grid.size}")
    u = np.empty(grid.size)
    for row in rows:
        k, j = int(row["r_index"]), int(row["theta_index"])
        u[int(grid.idx(k, j))] = float(row["u"])
    return GridField(grid, u, {"source": str(path)})


def cmd_diagnose(cfg, args, run: Run) -> int:
    if not args.field:
        raise ConfigError("diagnose needs --field <fields.csv>")
    grid = cfgmod.parse_grid(args.grid) if args.grid else None
    spec = cfgmod.problem(cfg, grid)
    field = _read_field(args.field, PolarGrid(spec.source, spec.nr, spec.nt))
    report = bounds_report(field, spec, cfg.get("diagnostics"))
    g = field.grid
    bnd = np.flatnonzero(g.boundary)
    obl = report.tables["obliqueness"]
    run.write_csv("boundary_table.csv", ("node", "r_index", "theta_index", "beta_dot_gamma"),
                  ((int(n), int(g.r_index[n]), int(g.theta_index[n]), _fmt(v))
                   for n, v in zip(bnd, obl["values"])))
    out = {"command": "diagnose", "field": str(args.field), **report.to_json()}
    ok = report.hard_pass and (not report.checks or all(report.checks.values()))
    out["pass"] = ok
    print(f"obliqueness_min {report.obliqueness_min:.4f}, urbas {report.urbas_residual_max}, "
          f"hausdorff {report.image_hausdorff:.3e}")
    _finish(run, "diagnostics.json", out)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "verify": cmd_verify,
    "classify": cmd_classify,
    "solve": cmd_solve,
    "transform": cmd_transform,
    "diagnose": cmd_diagnose,
}


def _finish(run: Run, name, summary):
    run.manifest.append(name)
    summary["manifest"] = sorted(run.manifest)
    summary["version"] = __version__
    with open(run.out / name, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def build_parser():
    p = argparse.ArgumentParser(prog="qtransport", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="run-config JSON file")
        s.add_argument("--out", help="output directory (default: config 'out' or ./qt-out)")
        s.add_argument("--seed", type=int, help="random seed (overrides the config)")
        s.add_argument("--grid", help="grid size NRxNT, e.g. 33x64")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "diagnose":
            s.add_argument("--field", help="fields.csv written by 'solve'")
        if name == "verify":
            # harness self-test only: negate one identity term
            s.add_argument("--inject-bug", dest="inject_bug", default=None, help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load(args.config) if args.config else {}
        if args.seed is None:
            args.seed = int(cfg.get("seed", 0))
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        out = _prepare_out(args.out or cfg.get("out", "qt-out"))
        return COMMANDS[args.command](cfg, args, Run(out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuotientTransportError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
