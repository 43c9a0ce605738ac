"""Command-line front end.

Emits plot-ready CSV (or JSON) for the region-size sweeps, collective
tables and decoherence grids, and runs the verification suites.  Exit
codes: 0 success, 1 verification failure (or a degeneracy under
``--strict``), 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import verify
from .collective import (
    DegenerateGaussianError,
    EXACT_CAP,
    degree_of_decoherence,
    exact_df_table,
    gaussian_coefficients,
    smeared_coefficients,
)
from .component import (
    SWEEP_COLUMNS,
    component_df_spin_chain,
    fixed_pair,
    m1_sweep,
    odd_centered_pair,
)
from .conservation import DEFAULT_STEPS
from .spectral import ChainConfig

OUTPUT_DIR_ENV = "SPINHIST_OUTPUT_DIR"
# |Im d| below this is treated as rounding noise on a symmetry zero
IM_D_NOISE = 1e-12
COMMANDS = ("figure1", "figure2", "figure3", "sweep", "collective", "epsilon", "verify")
FIGURE_COLUMNS = {
    "figure1": ("M1", "p_yy", "p_ny", "p_yn", "p_nn"),
    "figure2": ("M1", "ratio"),
    "figure3": ("M1", "gamma", "fig3_quantity"),
    "sweep": SWEEP_COLUMNS,
}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Decimal text with 17 significant digits; integers stay integers."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json_value(x):
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def to_json(obj) -> str:
    return json.dumps(_json_value(obj), indent=2, sort_keys=True) + "\n"


def table_text(columns, rows, fmt_name: str) -> str:
    if fmt_name == "csv":
        return to_csv(columns, rows)
    return to_json({"columns": list(columns), "rows": [list(r) for r in rows]})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinhist", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--m", type=int, default=verify.FIGURE_M, help="number of spins M")
    parser.add_argument("--m1", type=int, default=None, help="region-1 size M1")
    parser.add_argument("--t", type=float, default=verify.FIGURE_T, help="evolution time")
    parser.add_argument("--chi", type=float, default=verify.FIGURE_CHI, help="coupling strength")
    parser.add_argument("--k1", type=int, default=None, help="site of the region-1 branch")
    parser.add_argument("--k2", type=int, default=None, help="site of the region-2 branch")
    parser.add_argument("--n", type=int, nargs="+", default=None, help="number of components N (epsilon accepts a list)")
    parser.add_argument("--f", type=float, nargs="+", default=None, help="coarse-graining fractions for epsilon")
    parser.add_argument("--sigma", type=float, default=None, help="smearing width for the Gaussian route")
    parser.add_argument("--method", choices=("exact", "gaussian"), default="exact", help="collective route")
    parser.add_argument("--output", "-o", default=None, help="output file ('-' for stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--oracle-cap", type=int, default=256, help="largest M checked against the dense oracle")
    parser.add_argument("--steps", type=int, default=DEFAULT_STEPS, help="midpoint quadrature steps")
    parser.add_argument("--strict", action="store_true", help="treat degeneracy warnings as failures")
    return parser


def _pair_rule(args):
    if (args.k1 is None) != (args.k2 is None):
        raise UsageError("--k1 and --k2 must be given together")
    if args.k1 is None:
        return odd_centered_pair
    return fixed_pair(args.k1, args.k2)


def _check_chain(args) -> None:
    if args.m < 2:
        raise UsageError(f"--m must be >= 2, got {args.m}")
    if not (math.isfinite(args.t) and math.isfinite(args.chi)):
        raise UsageError("--t and --chi must be finite")
    if args.m1 is not None and not 1 <= args.m1 <= args.m - 1:
        raise UsageError(f"--m1 must lie in 1..{args.m - 1}")


def _sweep_m1_values(args):
    if args.m1 is not None:
        values = np.array([args.m1])
    else:
        values = np.arange(1, args.m)
    if args.k1 is not None:
        # a fixed pair only makes sense where k1 is in region 1 and k2 in region 2
        values = values[(values >= args.k1) & (values < args.k2)]
        if values.size == 0 or args.k1 < 1 or args.k2 > args.m:
            raise UsageError(f"no M1 places k1={args.k1} in region 1 and k2={args.k2} in region 2")
    return values


def run_figure(args, warnings: list[str]) -> str:
    _check_chain(args)
    table = m1_sweep(args.m, args.chi, args.t, pair_rule=_pair_rule(args), m1_values=_sweep_m1_values(args))
    columns = FIGURE_COLUMNS[args.command]
    if "gamma" in columns or "fig3_quantity" in columns:
        gamma = table.column("gamma")
        bad = table.M1[gamma <= 0]
        if bad.size:
            warnings.append(f"Gamma <= 0 at {bad.size} M1 values (first M1={int(bad[0])})")
        if np.all(np.abs(table.column("im_d")) <= IM_D_NOISE):
            warnings.append("Im d = 0 on every row: this placement is degenerate for the Gaussian channel")
    return table_text(columns, table.rows(columns), args.format)


def _single_df(args):
    _check_chain(args)
    M1 = args.m1 if args.m1 is not None else args.m // 2
    cfg = ChainConfig(M=args.m, M1=M1, chi=args.chi, t=args.t)
    pair = _pair_rule(args)(args.m, M1)
    try:
        pair.validate(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return cfg, pair, component_df_spin_chain(cfg, pair)


def _warn_im_d(df, warnings: list[str]) -> None:
    if 0.0 < abs(df.d.imag) <= IM_D_NOISE:
        warnings.append(f"|Im d| = {abs(df.d.imag):.1e} is at rounding level; Gaussian quantities are unreliable")


def run_collective(args, warnings: list[str]) -> str:
    cfg, pair, df = _single_df(args)
    _warn_im_d(df, warnings)
    if args.n is None or len(args.n) != 1:
        raise UsageError("collective needs exactly one --n")
    N = args.n[0]
    if N < 1:
        raise UsageError("--n must be >= 1")
    if args.method == "exact":
        if args.sigma is not None:
            raise UsageError("--sigma applies to --method gaussian only")
        if N > EXACT_CAP:
            raise UsageError(f"exact tables are limited to N <= {EXACT_CAP}")
        table = exact_df_table(df, N)
        return table_text(("n1", "n2", "n1p", "re", "im"), table.rows(), args.format)
    try:
        gc = gaussian_coefficients(df, N)
    except DegenerateGaussianError as exc:
        warnings.append(str(exc))
        return to_json({"degenerate": True, "reason": str(exc), "k1": pair.k1, "k2": pair.k2})
    record = {"k1": pair.k1, "k2": pair.k2, "M1": cfg.M1, "gaussian": gc.to_json()}
    if args.sigma is not None:
        record["smeared"] = smeared_coefficients(gc, args.sigma).to_json()
    if args.format == "json":
        return to_json(record)
    flat = [("k1", pair.k1), ("k2", pair.k2), ("M1", cfg.M1)]
    for group in ("gaussian", "smeared"):
        for key, value in sorted(record.get(group, {}).items()):
            if isinstance(value, dict):
                flat += [(f"{group}.{key}.re", value["re"]), (f"{group}.{key}.im", value["im"])]
            else:
                flat.append((f"{group}.{key}", value))
    return "name,value\n" + "".join(f"{k},{fmt(v)}\n" for k, v in flat)


def run_epsilon(args, warnings: list[str]) -> str:
    _, _, df = _single_df(args)
    _warn_im_d(df, warnings)
    n_values = args.n or [10, 100, 1000, 10000]
    f_values = args.f or [1e-3, 1e-2, 1e-1]
    if any(n < 1 for n in n_values) or any(not f > 0 for f in f_values):
        raise UsageError("--n values must be >= 1 and --f values > 0")
    rows = []
    for N in n_values:
        for f in f_values:
            dd = degree_of_decoherence(df, N, f)
            exact = dd.exact_epsilon if dd.exact_epsilon is not None else math.nan
            rows.append((N, f, dd.epsilon, dd.log_epsilon, exact, dd.gamma, int(dd.degenerate)))
    if any(r[-1] for r in rows):
        warnings.append("Im d = 0: epsilon reported as 0 (degenerate)")
    if rows and rows[0][5] <= 0:
        warnings.append(f"Gamma = {rows[0][5]:.3e} <= 0")
    columns = ("N", "f", "epsilon", "log_epsilon", "exact_epsilon", "gamma", "degenerate")
    return table_text(columns, rows, args.format)


def run_verify(args, out) -> int:
    results = verify.acceptance_checks(oracle_cap=args.oracle_cap, steps=args.steps) + verify.invariant_checks()
    failed = [r.name for r in results if not r.passed]
    if args.format == "json":
        report = [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]
        out.write(to_json({"checks": report, "failed": failed}))
    else:
        for r in results:
            print(r.line(), file=out)
        print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=out)
    return 1 if failed else 0


def _open_output(args):
    if args.output == "-":
        return None
    if args.output is not None:
        return Path(args.output)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        suffix = "txt" if args.command == "verify" and args.format == "csv" else args.format
        return Path(env) / f"{args.command}.{suffix}"
    return None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    warnings: list[str] = []
    try:
        if args.steps < 1:
            raise UsageError("--steps must be >= 1")
        if args.oracle_cap < 4:
            raise UsageError("--oracle-cap must be >= 4")
        if args.sigma is not None and not args.sigma > 0:
            raise UsageError("--sigma must be positive")
        path = _open_output(args)
        if args.command == "verify":
            buf = io.StringIO()
            status = run_verify(args, buf)
            text = buf.getvalue()
        else:
            status = 0
            if args.command in FIGURE_COLUMNS:
                text = run_figure(args, warnings)
            elif args.command == "collective":
                text = run_collective(args, warnings)
            else:
                text = run_epsilon(args, warnings)
    except UsageError as exc:
        print(f"spinhist: error: {exc}", file=sys.stderr)
        return 2

    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    for w in warnings:
        print(f"spinhist: warning: {w}", file=sys.stderr)
    if warnings and args.strict and status == 0:
        status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
