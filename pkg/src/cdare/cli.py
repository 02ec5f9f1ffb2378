"""Command-line front end.

Subcommands: ``solve`` a problem file, ``verify`` a candidate solution,
``bench`` the random-ensemble / scalar-family experiments, ``stein`` the
conjugate Stein oracle, and ``diag`` for solvability and spectral
diagnostics.  All machine-readable output is JSON (complex entries as
[re, im] pairs, matrices row-major) or CSV with 17-significant-digit
floats.

Exit codes: 0 success or converged, 1 usage or data error, 2 the solver
did not converge (or a benchmark trial errored).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .bench import (
    EnsembleSpec,
    records_to_csv,
    run_ensemble,
    scalar_family_table,
    stats_to_row,
)
from .errors import CdareError
from .matcore import UNIT_ROUNDOFF, frob, hermitian_verdict, stein_solve_conjugate
from .model import (
    CdareProblem,
    matrix_from_pairs,
    matrix_to_pairs,
    problem_from_dict,
    problem_to_dict,
    residuals,
)
from .solvers import SolverConfig, SolveReport, accelerated_solve, solve

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

METHOD_CHOICES = "fp, sda, accel:<r>, or all (bench only)"


def _configure_logging() -> None:
    level = os.environ.get("CDARE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _order_from_method(method: str) -> int:
    if method == "fp":
        return 1
    if method == "sda":
        return 2
    if method.startswith("accel:"):
        try:
            r = int(method.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad method {method!r}; expected {METHOD_CHOICES}")
        if r < 2:
            raise ValueError("accel order must be >= 2")
        return r
    raise ValueError(f"unknown method {method!r}; expected {METHOD_CHOICES}")


def _solver_config(args) -> SolverConfig:
    order = args.order
    if args.method is not None:
        order = _order_from_method(args.method)
    return SolverConfig(
        order_r=order,
        tol_res=args.tol,
        max_iter=args.max_iter,
    )


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_json(obj, path: str | None) -> None:
    _emit(json.dumps(obj, indent=2, allow_nan=True), path)


def _complex_list(values) -> list:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def _diagnostics_to_dict(diag) -> dict | None:
    if diag is None:
        return None
    return {
        "rho_conj_a_a": diag.rho_conj_a_a,
        "rho_a_conj_a": diag.rho_a_conj_a,
        "rho_t1": diag.rho_t1,
        "n1_predicted": diag.n1_predicted,
        "nr_predicted": {str(k): v for k, v in diag.nr_predicted.items()},
        "sigma_t1": _complex_list(diag.sigma_t1),
        "sigma_s1h": _complex_list(diag.sigma_s1h),
    }


def report_to_dict(p: CdareProblem, report: SolveReport) -> dict:
    """Serialize a solve report (problem echoed for round-tripping)."""
    return {
        "problem": problem_to_dict(p),
        "converged": report.converged,
        "verdict": report.verdict,
        "iterations": report.iterations,
        "res": report.res,
        "nres": report.nres,
        "x_pos": matrix_to_pairs(report.x_pos),
        "x_neg": None if report.x_neg is None else matrix_to_pairs(report.x_neg),
        "x_neg_status": report.x_neg_status,
        "trace": {
            "k": report.trace.k,
            "res": report.trace.res,
            "nres": report.trace.nres,
            "wall_time": report.trace.wall_time,
            "min_eig_h": report.trace.min_eig_h,
            "min_eig_g": report.trace.min_eig_g,
        },
        "diagnostics": _diagnostics_to_dict(report.diagnostics),
    }


def cmd_solve(args) -> int:
    p = problem_from_dict(_load_json(args.input))
    cfg = _solver_config(args)
    report = solve(p, cfg)
    _emit_json(report_to_dict(p, report), args.output)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_verify(args) -> int:
    data = _load_json(args.input)
    if not isinstance(data, dict) or "problem" not in data:
        raise ValueError("verify input must contain a 'problem' object")
    p = problem_from_dict(data["problem"])
    if "x" in data:
        x = matrix_from_pairs(data["x"], "x")
    elif "x_pos" in data:
        x = matrix_from_pairs(data["x_pos"], "x_pos")
    else:
        raise ValueError("verify input must contain 'x' or 'x_pos'")
    rp = residuals(p, x)
    verdict = hermitian_verdict(x)
    tol = args.tol if args.tol is not None else p.n * UNIT_ROUNDOFF
    passed = rp.res <= tol * max(1.0, frob(p.h)) or rp.nres <= tol
    _emit_json(
        {
            "res": rp.res,
            "nres": rp.nres,
            "is_hermitian": verdict.is_hermitian,
            "min_eigenvalue": verdict.min_eigenvalue,
            "is_positive_definite": verdict.is_positive_definite,
            "tolerance": tol,
            "passed": bool(passed),
        },
        args.output,
    )
    return EXIT_OK if passed else EXIT_NOT_CONVERGED


def _table_to_csv(rows: list[dict]) -> str:
    if not rows:
        return "\n"
    cols = list(rows[0].keys())

    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return f"{v:.17g}"
        return str(v)

    lines = [",".join(cols)]
    lines.extend(",".join(fmt(row[c]) for c in cols) for row in rows)
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    cfg_overrides = {}
    if args.max_iter is not None:
        cfg_overrides["max_iter"] = args.max_iter
    if args.tol is not None:
        cfg_overrides["tol_res"] = args.tol

    if args.scalar_family:
        rows = scalar_family_table(sign=args.sign)
        if not args.with_times:
            rows = [{**row, "time_s": 0.0} for row in rows]
        if args.format == "csv":
            _emit(_table_to_csv(rows), args.output)
        else:
            _emit_json(rows, args.output)
        return EXIT_OK

    spec_fields = {}
    if args.input:
        spec_fields.update(_load_json(args.input))
    for key, value in (("n", args.n), ("trials", args.trials),
                       ("seed", args.seed), ("sign", args.sign),
                       ("diag_scale", args.diag_scale)):
        if value is not None:
            spec_fields[key] = value
    spec_fields.setdefault("sign", "plus")
    missing = [k for k in ("n", "trials", "seed") if k not in spec_fields]
    if missing:
        raise ValueError(f"bench needs {missing} (flags or --input file)")
    spec = EnsembleSpec(**spec_fields)

    method = args.method or "all"
    methods = ["fp", "accel:2", "accel:3", "accel:4", "accel:5"] \
        if method == "all" else [method]
    stats_rows, record_blocks, errored = [], {}, False
    for m in methods:
        cfg = SolverConfig(order_r=_order_from_method(m),
                           **{k: v for k, v in cfg_overrides.items()})
        stats = run_ensemble(spec, cfg)
        stats_rows.append(stats_to_row(m, stats, with_times=args.with_times))
        record_blocks[m] = stats.records
        errored = errored or any(r.error for r in stats.records)

    if args.format == "csv":
        if len(methods) == 1:
            _emit(records_to_csv(record_blocks[methods[0]],
                                 with_times=args.with_times), args.output)
        else:
            _emit(_table_to_csv(stats_rows), args.output)
    else:
        _emit_json(
            {
                "spec": dataclasses.asdict(spec),
                "stats": stats_rows,
                "records": {
                    m: [
                        {**dataclasses.asdict(r),
                         "time_s": r.time_s if args.with_times else 0.0}
                        for r in recs
                    ]
                    for m, recs in record_blocks.items()
                },
            },
            args.output,
        )
    return EXIT_NOT_CONVERGED if errored else EXIT_OK


def cmd_stein(args) -> int:
    data = _load_json(args.input)
    if not isinstance(data, dict) or "A" not in data or "Q" not in data:
        raise ValueError("stein input must contain 'A' and 'Q'")
    a = matrix_from_pairs(data["A"], "A")
    q = matrix_from_pairs(data["Q"], "Q")
    x = stein_solve_conjugate(a, q)
    resid = frob(x - (q + a.conj().T @ np.conj(x) @ a))
    _emit_json({"X": matrix_to_pairs(x), "residual": resid}, args.output)
    return EXIT_OK


def cmd_diag(args) -> int:
    from .analysis import check_solvability, compute_diagnostics

    p = problem_from_dict(_load_json(args.input))
    verdict = check_solvability(p)
    x_pos = g_inf = None
    solve_error = None
    if not args.no_solve:
        try:
            report = accelerated_solve(p, SolverConfig(order_r=2))
            if report.converged:
                x_pos, g_inf = report.x_pos, report.g_inf
            else:
                solve_error = f"solver verdict: {report.verdict}"
        except CdareError as exc:
            solve_error = f"{type(exc).__name__}: {exc}"
    diag = compute_diagnostics(p, x_pos=x_pos, g_inf=g_inf)
    _emit_json(
        {
            "solvability": {
                "plus_ok": verdict.plus_ok,
                "minus_ok": verdict.minus_ok,
                "details": verdict.details,
            },
            "diagnostics": _diagnostics_to_dict(diag),
            "solve_error": solve_error,
        },
        args.output,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdare",
        description="Solve and benchmark conjugate discrete-time "
        "algebraic Riccati equations.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, output=True):
        sp.add_argument("--input", required=False, help="input JSON path")
        if output:
            sp.add_argument("--output", help="output path (default stdout)")

    sp = sub.add_parser("solve", help="solve a problem file")
    common(sp)
    sp.add_argument("--method", help=f"solver method: {METHOD_CHOICES}")
    sp.add_argument("--order", type=int, default=2,
                    help="acceleration order r (1 = fixed point)")
    sp.add_argument("--tol", type=float, help="residual tolerance (default n*u)")
    sp.add_argument("--max-iter", type=int, default=10000)
    sp.set_defaults(func=cmd_solve, needs_input=True)

    sp = sub.add_parser("verify", help="check a candidate solution")
    common(sp)
    sp.add_argument("--tol", type=float, help="acceptance tolerance (default n*u)")
    sp.set_defaults(func=cmd_verify, needs_input=True)

    sp = sub.add_parser("bench", help="run benchmark ensembles")
    common(sp)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--scalar-family", action="store_true",
                    help="run the canonical 1x1 family instead of an ensemble")
    sp.add_argument("--sign", choices=("plus", "minus"), default=None)
    sp.add_argument("--method", help=f"{METHOD_CHOICES} (default all)")
    sp.add_argument("--n", type=int, help="matrix dimension")
    sp.add_argument("--trials", type=int, help="number of trials")
    sp.add_argument("--seed", type=int, help="ensemble seed")
    sp.add_argument("--diag-scale", type=float, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--max-iter", type=int, default=None)
    sp.add_argument("--with-times", action="store_true",
                    help="include wall-clock times (breaks byte-for-byte "
                    "reproducibility)")
    sp.set_defaults(func=cmd_bench, needs_input=False)

    sp = sub.add_parser("stein", help="solve the conjugate Stein equation")
    common(sp)
    sp.set_defaults(func=cmd_stein, needs_input=True)

    sp = sub.add_parser("diag", help="solvability and spectral diagnostics")
    common(sp)
    sp.add_argument("--no-solve", action="store_true",
                    help="skip the solve that enables post-hoc diagnostics")
    sp.set_defaults(func=cmd_diag, needs_input=True)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.needs_input and not args.input:
        parser.error(f"{args.command} requires --input")
    if getattr(args, "sign", None) is None and args.command == "bench":
        args.sign = "plus"
    try:
        return args.func(args)
    except (CdareError, ValueError, TypeError, OSError,
            json.JSONDecodeError) as exc:
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
