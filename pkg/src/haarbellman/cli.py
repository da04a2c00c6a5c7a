"""Command-line front end.

Exit status: 0 success, 1 usage or input error, 2 domain error,
3 verification failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from .bellman import BellmanPoint, Branch, eval_bellman
from .dyadic_oracle import maximize
from .martingale_lab.chains import ChainParams, extremal_chain, simulate_chain_mc
from .special_functions import DomainError, ExponentPair, ScalarParams
from .system_solver import SolverError, solve_system
from .verify import SUITES, run_suites

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2, 3
BATCH_HEADER = ["p", "zeta", "eta", "Z", "H"]
BATCH_EXTRA = ["value", "branch", "gamma", "Y", "residual", "error"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """17 significant digits; empty for None."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def parse_vector(text: str, sep: str = ",") -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(sep)], dtype=float)
    except ValueError as exc:
        raise UsageError(f"cannot parse vector {text!r}") from exc


def _dump(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, allow_nan=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _point(args) -> BellmanPoint:
    return BellmanPoint(parse_vector(args.zeta), parse_vector(args.eta), args.Z, args.H)


def cmd_eval(args) -> int:
    e = ExponentPair.from_p(args.p)
    res = eval_bellman(_point(args), e)
    _dump(res.as_dict(), args.output)
    return EXIT_OK


def _batch_row(row: dict) -> list[str]:
    p = float(row["p"])
    e = ExponentPair.from_p(p)
    pt = BellmanPoint(parse_vector(row["zeta"], ";"), parse_vector(row["eta"], ";"), float(row["Z"]), float(row["H"]))
    res = eval_bellman(pt, e)
    resid = max(res.residuals) if res.residuals is not None else None
    return [fmt(res.value), res.branch.value, fmt(res.gamma), fmt(res.Y), fmt(resid), ""]


def cmd_batch(args) -> int:
    src = open(args.input, newline="") if args.input != "-" else sys.stdin
    try:
        reader = csv.reader(src)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != BATCH_HEADER:
            raise UsageError(f"expected header {','.join(BATCH_HEADER)}, got {header}")
        rows_out = []
        for lineno, cells in enumerate(reader, start=2):
            if len(cells) != len(BATCH_HEADER):
                raise UsageError(f"row {lineno}: expected {len(BATCH_HEADER)} fields, got {len(cells)}")
            row = dict(zip(BATCH_HEADER, (c.strip() for c in cells)))
            try:
                for key in ("p", "Z", "H"):
                    float(row[key])
                parse_vector(row["zeta"], ";")
                parse_vector(row["eta"], ";")
            except (ValueError, UsageError) as exc:
                raise UsageError(f"row {lineno}: malformed value ({exc})") from exc
            try:
                extra = _batch_row(row)
            except (DomainError, SolverError) as exc:
                extra = ["nan", "", "", "", "", str(exc).replace("\n", " ")]
            rows_out.append(cells + extra)
    finally:
        if src is not sys.stdin:
            src.close()
    dst = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(dst, lineterminator="\n")
        w.writerow(BATCH_HEADER + BATCH_EXTRA)
        w.writerows(rows_out)
    finally:
        if dst is not sys.stdout:
            dst.close()
    return EXIT_OK


def cmd_solve(args) -> int:
    e = ExponentPair.from_p(args.p)
    s = ScalarParams(args.zeta_norm, args.eta_norm, args.Z, args.H)
    _dump(solve_system(s, e).as_dict(), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    reports = run_suites(names, seed=args.seed, quick=args.quick)
    _dump([r.as_dict() for r in reports], args.output)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.suite}: {r.samples} samples, {r.failures} failures, worst slack {r.worst_slack:.3e}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def cmd_simulate(args) -> int:
    cp = ChainParams(args.p, args.gamma, args.Y, args.delta, args.eps)
    out = {"params": {"p": cp.p, "gamma": cp.gamma, "Y": cp.Y, "delta": cp.delta, "eps": cp.eps}}
    out["exact"] = extremal_chain(cp, materialize=args.atoms > 0).as_dict(max_atoms=args.atoms)
    if args.paths:
        out["monte_carlo"] = simulate_chain_mc(cp, args.paths, args.seed).as_dict()
    _dump(out, args.output)
    return EXIT_OK


def cmd_oracle(args) -> int:
    e = ExponentPair.from_p(args.p)
    pt = _point(args)
    res = maximize(pt, e, args.depth, args.restarts, args.seed)
    B = eval_bellman(pt, e).value
    out = {"value": res["value"], "bellman": B, "gap": B - res["value"], "depth": args.depth}
    if args.leaves:
        dp = res["pair"]
        d = dp.phi_leaves.shape[1]
        with open(args.leaves, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["leaf"] + [f"phi{i}" for i in range(d)] + [f"psi{i}" for i in range(d)])
            for k in range(dp.phi_leaves.shape[0]):
                w.writerow([k] + [fmt(v) for v in dp.phi_leaves[k]] + [fmt(v) for v in dp.psi_leaves[k]])
        out["leaves"] = args.leaves
    _dump(out, args.output)
    return EXIT_OK


_COORD = re.compile(r"^(Z|H|zeta|eta)(?:\[(\d+)\])?$")


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"range must be lo:hi:n, got {text!r}") from exc
    if n < 1:
        raise UsageError("range needs n >= 1")
    return np.linspace(lo, hi, n)


def _set_coord(base: dict, name: str, value: float) -> None:
    m = _COORD.match(name)
    if m is None:
        raise UsageError(f"unknown coordinate {name!r}; use Z, H, zeta[i] or eta[i]")
    key, idx = m.group(1), int(m.group(2) or 0)
    if key in ("Z", "H"):
        base[key] = value
    else:
        if idx >= base[key].size:
            raise UsageError(f"coordinate {name!r} out of range for dimension {base[key].size}")
        base[key][idx] = value


def cmd_grid(args) -> int:
    e = ExponentPair.from_p(args.p)
    xs, ys = _parse_range(args.x_range), _parse_range(args.y_range)
    for name in (args.x, args.y):
        if _COORD.match(name) is None:
            raise UsageError(f"unknown coordinate {name!r}; use Z, H, zeta[i] or eta[i]")
    dst = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(dst, lineterminator="\n")
        w.writerow([args.x, args.y, "value", "branch"])
        for x in xs:
            for y in ys:
                base = {"zeta": parse_vector(args.zeta), "eta": parse_vector(args.eta), "Z": args.Z, "H": args.H}
                _set_coord(base, args.x, x)
                _set_coord(base, args.y, y)
                try:
                    res = eval_bellman(BellmanPoint(base["zeta"], base["eta"], base["Z"], base["H"]), e)
                    w.writerow([fmt(x), fmt(y), fmt(res.value), res.branch.value])
                except DomainError:
                    w.writerow([fmt(x), fmt(y), "nan", "OutsideDomain"])
    finally:
        if dst is not sys.stdout:
            dst.close()
    return EXIT_OK


def _add_point_args(sp) -> None:
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--zeta", required=True, help="comma-separated vector")
    sp.add_argument("--eta", required=True, help="comma-separated vector")
    sp.add_argument("--Z", type=float, required=True)
    sp.add_argument("--H", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="haarbellman", description="Evaluate and check the explicit Bellman function B_p.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("eval", help="evaluate B_p at one point (JSON)")
    _add_point_args(sp)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("batch", help="evaluate a CSV of points")
    sp.add_argument("--input", required=True, help="CSV with header p,zeta,eta,Z,H ('-' for stdin)")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_batch)

    sp = sub.add_parser("solve", help="solve for (gamma, Y) at scalar inputs")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--zeta-norm", type=float, required=True)
    sp.add_argument("--eta-norm", type=float, required=True)
    sp.add_argument("--Z", type=float, required=True)
    sp.add_argument("--H", type=float, required=True)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="run property suites (JSON report)")
    sp.add_argument("--suite", default="all", choices=["all", *SUITES])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--quick", action="store_true", help="small sample counts")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="exact chain statistics, optionally with Monte Carlo")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--Y", type=float, required=True)
    sp.add_argument("--delta", type=float, default=1e-2)
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--paths", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--atoms", type=int, default=20, help="number of atoms to list (0 skips them)")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("oracle", help="dyadic maximisation lower bound")
    _add_point_args(sp)
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--restarts", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--leaves", help="write the optimal leaf values to this CSV")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("grid", help="CSV of B_p over two coordinates")
    _add_point_args(sp)
    sp.add_argument("--x", required=True, help="Z, H, zeta[i] or eta[i]")
    sp.add_argument("--y", required=True)
    sp.add_argument("--x-range", required=True, help="lo:hi:n")
    sp.add_argument("--y-range", required=True, help="lo:hi:n")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_grid)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, SolverError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
