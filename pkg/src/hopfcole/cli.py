"""Command line front end: solve, transform, verify and sweep.

Exit codes: 0 success, 1 configuration or input error, 2 solver failure,
3 alignment check failed in a forward transform, 4 verification failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .core import integrate
from .errors import AlignmentError, ConfigError, HopfColeError, SolverError
from .oracle import solve_coupled
from .rlaplace import solve_rlaplace
from .transform import (DEFAULT_ALIGNMENT_TOL, MFGSolution, PhiSolution, check_gradient_alignment,
                        forward_transform, inverse_transform)
from .verify import cross_validate, fitted_order, residual_reports, tolerance

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ALIGNMENT, EXIT_VERIFY = 0, 1, 2, 3, 4

log = logging.getLogger("hopfcole")


def _err(msg):
    print(f"hopfcole: {msg}", file=sys.stderr)


def _norms(reports, params, h):
    out = {}
    for kind, rep in reports.items():
        tol = tolerance(kind, params, h)
        out[kind] = {**rep.as_dict(), "tolerance": tol, "passed": bool(rep.measure <= tol)}
    return out


def _solution_pair(which, sol_or_phi, params):
    """Both views of one solve: (MFGSolution, PhiSolution)."""
    if which == "coupled":
        sol = sol_or_phi
        return sol, PhiSolution(sol.m.with_values(sol.m.values ** (1.0 / params.r)), sol.lam)
    phi_sol = sol_or_phi
    return inverse_transform(phi_sol, params), phi_sol


def cmd_solve(config_path, which, out_dir=None) -> int:
    inst = io.load_config(config_path)
    out = Path(out_dir) if out_dir else inst.out_dir
    solver = solve_coupled if which == "coupled" else solve_rlaplace
    try:
        result, trace = solver(inst.domain, inst.params, inst.coupling, inst.solver)
    except SolverError as exc:
        _err(f"{which} solve failed: {exc}")
        return EXIT_SOLVER
    sol, phi_sol = _solution_pair(which, result, inst.params)
    h = inst.domain.spacing(sol.n)
    reports = residual_reports(sol, phi_sol, inst.params, inst.coupling)
    summary = {
        "command": "solve", "which": which, "instance": inst.summary_block(),
        "n": sol.n, "h": h, "lambda": sol.lam, "mass": integrate(sol.m),
        "trace": trace.as_dict(), "norms": _norms(reports, inst.params, h),
    }
    if trace.energies:
        summary["final_energy"] = trace.energies[-1]
    csv = out / f"{which}.csv"
    io.write_solution(csv, sol.u.nodes, sol.u.values, sol.m.values, phi_sol.phi.values)
    io.write_summary(io.summary_path(csv), summary)
    print(f"{which}: n={sol.n} lambda={sol.lam:.15g} iterations={trace.iterations} -> {csv}")
    return EXIT_OK


def _load_solution(path, config_path=None):
    path = Path(path)
    summary = io.read_summary(io.summary_path(path))
    if "lambda" not in summary:
        raise ConfigError(f"{io.summary_path(path)} has no lambda entry")
    if config_path is not None:
        inst = io.load_config(config_path)
    else:
        try:
            inst = io.config_from_raw(summary["instance"]["raw"])
        except KeyError:
            raise ConfigError(f"{io.summary_path(path)} does not record its instance; "
                              "pass --config") from None
    gfs = io.grid_functions(inst.domain, io.read_solution(path))
    return inst, gfs, float(summary["lambda"])


def cmd_transform(solution_path, direction, out_dir=None, tol=DEFAULT_ALIGNMENT_TOL,
                  config_path=None) -> int:
    inst, g, lam = _load_solution(solution_path, config_path)
    params = inst.params
    src = Path(solution_path)
    out = Path(out_dir) if out_dir else src.parent
    stem = f"{src.stem}_{direction}"
    summary = {"command": "transform", "direction": direction, "source": src.name,
               "instance": inst.summary_block(), "lambda": lam, "n": g["u"].n}
    if direction == "forward":
        sol = MFGSolution(g["u"], g["m"], lam)
        try:
            phi_sol = forward_transform(sol, params, tol)
        except AlignmentError as exc:
            rep = exc.report
            flux_csv = out / f"{stem}_flux.csv"
            flux_csv.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(flux_csv, np.column_stack([rep.midpoints, rep.flux]), fmt="%.17g",
                       delimiter=",", header="x_mid,flux", comments="")
            summary["alignment"] = rep.as_dict()
            summary["alignment"]["tolerance"] = tol
            io.write_summary(out / f"{stem}_flux.json", summary)
            _err(f"{exc}; flux report in {flux_csv}")
            return EXIT_ALIGNMENT
        summary["alignment"] = {**check_gradient_alignment(sol, params).as_dict(), "tolerance": tol}
        u, m, phi = sol.u.values, sol.m.values, phi_sol.phi.values
    else:
        phi_sol = PhiSolution(g["phi"], lam)
        sol = inverse_transform(phi_sol, params)
        rep = check_gradient_alignment(sol, params)
        summary["reconstruction"] = {**rep.as_dict(), "power_map_error": float(
            np.max(np.abs(sol.m.values - phi_sol.phi.values ** params.r)))}
        u, m, phi = sol.u.values, sol.m.values, phi_sol.phi.values
    csv = out / f"{stem}.csv"
    io.write_solution(csv, g["u"].nodes, u, m, phi)
    io.write_summary(io.summary_path(csv), summary)
    print(f"{direction} transform -> {csv}")
    return EXIT_OK


def cmd_verify(solution_paths, config_path=None, out_dir=None) -> int:
    failed = False
    for path in solution_paths:
        inst, g, lam = _load_solution(path, config_path)
        sol = MFGSolution(g["u"], g["m"], lam)
        phi_sol = PhiSolution(g["phi"], lam)
        h = inst.domain.spacing(sol.n)
        norms = _norms(residual_reports(sol, phi_sol, inst.params, inst.coupling), inst.params, h)
        print(f"{path}: n={sol.n} h={h:.4g}")
        for kind, rec in norms.items():
            status = "ok" if rec["passed"] else "FAIL"
            value = rec.get("rel_sup_norm", rec["sup_norm"])
            print(f"  {kind:15s} {value:.3e}  (tol {rec['tolerance']:.3e})  {status}")
            failed |= not rec["passed"]
        src = Path(path)
        out = Path(out_dir) if out_dir else src.parent
        io.write_summary(out / f"{src.stem}_verify.json",
                         {"command": "verify", "source": src.name, "lambda": lam,
                          "n": sol.n, "h": h, "norms": norms})
    return EXIT_VERIFY if failed else EXIT_OK


def sweep_table(inst, grids, jobs=1):
    """cross_validate on each grid; returns (rows, orders)."""
    def run(n):
        return cross_validate(inst.domain, inst.params, inst.coupling, inst.solver.with_n(n))

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(run, grids))
    rows = [{"n": cv.n, "h": cv.h, **cv.errors(), "lambda_oracle": cv.lambda_oracle,
             "lambda_rlaplace": cv.lambda_rlaplace} for cv in results]
    hs = [row["h"] for row in rows]
    orders = {key: fitted_order(hs, [row[key] for row in rows])
              for key in ("m_sup", "lambda", "du_sup")}
    return rows, orders


def cmd_sweep(config_path, grids, out_dir=None, jobs=1) -> int:
    inst = io.load_config(config_path)
    if len(grids) < 2:
        raise ConfigError("a sweep needs at least two grid sizes")
    out = Path(out_dir) if out_dir else inst.out_dir
    try:
        rows, orders = sweep_table(inst, grids, jobs)
    except SolverError as exc:
        _err(f"sweep failed: {exc}")
        return EXIT_SOLVER
    print(f"{'n':>6} {'h':>11} {'m_sup':>11} {'lambda':>11} {'du_sup':>11}")
    for row in rows:
        print(f"{row['n']:6d} {row['h']:11.4e} {row['m_sup']:11.4e} "
              f"{row['lambda']:11.4e} {row['du_sup']:11.4e}")
    fmt = lambda o: o if isinstance(o, str) else f"{o:.3f}"
    print("order  " + "  ".join(f"{k}={fmt(v)}" for k, v in orders.items()))
    cols = ["n", "h", "m_sup", "lambda", "du_sup", "lambda_oracle", "lambda_rlaplace"]
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "sweep.csv", np.array([[row[c] for c in cols] for row in rows]),
               fmt="%.17g", delimiter=",", header=",".join(cols), comments="")
    io.write_summary(out / "sweep.json", {"command": "sweep", "instance": inst.summary_block(),
                                          "rows": rows, "orders": orders})
    return EXIT_OK


def _grids(text):
    try:
        grids = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid list must be integers, got {text!r}") from None
    if not grids:
        raise argparse.ArgumentTypeError("empty grid list")
    return grids


def build_parser():
    p = argparse.ArgumentParser(prog="hopfcole", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("solve", help="solve one instance with either solver")
    s.add_argument("--config", required=True)
    s.add_argument("--which", choices=("coupled", "rlaplace"), default="coupled")
    s.add_argument("--out")

    t = sub.add_parser("transform", help="map a solution table forward (m -> phi) or inverse")
    t.add_argument("solution")
    t.add_argument("--direction", choices=("forward", "inverse"), required=True)
    t.add_argument("--tol", type=float, default=DEFAULT_ALIGNMENT_TOL,
                   help="relative alignment tolerance for the forward map")
    t.add_argument("--config", help="override the instance recorded next to the table")
    t.add_argument("--out")

    v = sub.add_parser("verify", help="residual reports against the tolerance classes")
    v.add_argument("solution", nargs="+")
    v.add_argument("--config", help="evaluate under this instance instead of the recorded one")
    v.add_argument("--out")

    w = sub.add_parser("sweep", help="dual-path errors over several grids")
    w.add_argument("--config", required=True)
    w.add_argument("--grids", type=_grids, default=[65, 129, 257])
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "solve":
            return cmd_solve(args.config, args.which, args.out)
        if args.verb == "transform":
            return cmd_transform(args.solution, args.direction, args.out, args.tol, args.config)
        if args.verb == "verify":
            return cmd_verify(args.solution, args.config, args.out)
        return cmd_sweep(args.config, args.grids, args.out, args.jobs)
    except SolverError as exc:
        _err(str(exc))
        return EXIT_SOLVER
    except HopfColeError as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
