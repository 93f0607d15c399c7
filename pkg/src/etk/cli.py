"""``etk`` command line: rate/thermodynamics sweeps, verification, trajectories.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import acceptance, heom
from .core import EtSystem, make_system
from .errors import EtkError, ParameterError
from .rates import rate_at
from .thermo import entropy_enthalpy, gibbs_from_rates, kappa

HEADER = ["axis_name", "tau_l_ps", "e0_kjmol", "lambda_kjmol", "v_kjmol", "temp_k",
          "s_psinv", "k_fwd_psinv", "k_bwd_psinv", "dg_kjmol", "ds_kjmol_per_k",
          "dh_kjmol", "kappa", "n_used", "validity"]
AXES = ("tau_l", "e0", "lambda", "v", "temperature", "s")
OUTPUTS = ("k", "k_bwd", "dg", "ds", "dh", "kappa", "n_used", "validity")
RATE_OUTPUTS = ("k", "k_bwd", "kappa", "n_used", "validity")
THERMO_OUTPUTS = OUTPUTS
# strong-coupling reference system
DEFAULTS = {"e0": -3.0, "lambda": 3.0, "v": 1.0, "temperature": 298.0, "tau_l": 1.0,
            "s": 0.0, "rel_tol": 1e-10, "delta_t": 1.0}
CONFIG_KEYS = {"e0": "e0", "lambda": "lam", "lam": "lam", "v": "v", "temp": "temperature",
               "temperature": "temperature", "tau_l": "tau_l", "tau-l": "tau_l", "s": "s",
               "rel_tol": "rel_tol", "rel-tol": "rel_tol", "delta_t": "delta_t",
               "delta-t": "delta_t"}


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    count: int
    spacing: str

    def values(self):
        if self.spacing == "log":
            return np.logspace(np.log10(self.lo), np.log10(self.hi), self.count)
        return np.linspace(self.lo, self.hi, self.count)


def parse_grid(text, spacing):
    try:
        lo, hi, count = text.split(":")
        grid = Grid(float(lo), float(hi), int(count), spacing)
    except ValueError:
        raise UsageError(f"grid must be MIN:MAX:COUNT, got {text!r}")
    if grid.count < 2:
        raise UsageError("grid needs at least 2 points")
    if spacing == "log" and grid.lo <= 0:
        raise UsageError("log spacing requires MIN > 0")
    return grid


def fmt(x):
    return f"{x:.16e}"


def read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[CONFIG_KEYS[key]] = float(value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: {key} is not a number")
    return values


def resolve_fixed(args):
    """Merge defaults < config file < command-line flags."""
    merged = {"e0": DEFAULTS["e0"], "lam": DEFAULTS["lambda"], "v": DEFAULTS["v"],
              "temperature": DEFAULTS["temperature"], "tau_l": DEFAULTS["tau_l"],
              "s": DEFAULTS["s"], "rel_tol": DEFAULTS["rel_tol"],
              "delta_t": DEFAULTS["delta_t"]}
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


# --- evaluation ------------------------------------------------------------

def _point_system(fixed, axis, value, axis2=None, value2=None):
    params = dict(e0=fixed["e0"], lam=fixed["lam"], v=fixed["v"],
                  temperature=fixed["temperature"], tau_l=fixed["tau_l"])
    s = fixed["s"]
    for ax, val in ((axis, value), (axis2, value2)):
        if ax is None:
            continue
        if ax == "s":
            s = float(val)
        else:
            params[{"lambda": "lam"}.get(ax, ax)] = float(val)
    return make_system(**params), s


def evaluate_point(task):
    """One CSV row (as a dict of formatted strings) for a grid point."""
    fixed, axis, value, axis2, value2, outputs, thermo = task
    label = axis if axis2 is None else f"{axis}:{axis2}"
    try:
        sys_, s = _point_system(fixed, axis, value, axis2, value2)
    except ParameterError as exc:
        raise NumericalFailure(f"invalid grid point {label}={value}: {exc}")
    row = dict.fromkeys(HEADER, "")
    row.update(axis_name=label, tau_l_ps=fmt(sys_.tau_l), e0_kjmol=fmt(sys_.e0),
               lambda_kjmol=fmt(sys_.lam), v_kjmol=fmt(sys_.v),
               temp_k=fmt(sys_.temperature), s_psinv=fmt(s))
    point = f"{label}={value}" + ("" if axis2 is None else f",{value2}")
    try:
        pair = rate_at(s, sys_, fixed["rel_tol"])
        if "k" in outputs:
            row["k_fwd_psinv"] = fmt(pair.forward)
        if "k_bwd" in outputs:
            row["k_bwd_psinv"] = fmt(pair.backward)
        if "n_used" in outputs:
            row["n_used"] = str(pair.n_used)
        if "kappa" in outputs:
            row["kappa"] = fmt(kappa(sys_))
        if "validity" in outputs:
            row["validity"] = "ok" if pair.validity_flag else "semiclassical_warning"
        if thermo and s == 0.0:
            if {"ds", "dh"} & set(outputs):
                res = entropy_enthalpy(sys_, fixed["delta_t"], fixed["rel_tol"])
                row["dg_kjmol"] = fmt(res.dg) if "dg" in outputs else ""
                row["ds_kjmol_per_k"] = fmt(res.ds) if "ds" in outputs else ""
                row["dh_kjmol"] = fmt(res.dh) if "dh" in outputs else ""
            elif "dg" in outputs:
                row["dg_kjmol"] = fmt(gibbs_from_rates(pair.forward, pair.backward,
                                                       sys_.temperature))
    except (EtkError, ArithmeticError) as exc:
        raise NumericalFailure(f"grid point {point}: {exc}")
    return row


def worker_count():
    n = os.cpu_count() or 1
    cap = os.environ.get("ETK_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"ETK_THREADS must be an integer, got {cap!r}")
    return n


def run_tasks(tasks):
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [evaluate_point(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so output order is deterministic
        return list(pool.map(evaluate_point, tasks))


def build_tasks(args, thermo):
    fixed = resolve_fixed(args)
    if (args.lin is None) == (args.log is None):
        raise UsageError("give exactly one of --lin or --log for the sweep axis")
    grid = parse_grid(args.lin or args.log, "lin" if args.lin else "log")
    if args.axis == "s" and grid.lo < 0:
        raise UsageError("the s axis must be >= 0")
    outputs = THERMO_OUTPUTS if thermo else RATE_OUTPUTS
    if args.outputs:
        outputs = tuple(o.strip() for o in args.outputs.split(",") if o.strip())
        unknown = set(outputs) - set(OUTPUTS)
        if unknown:
            raise UsageError(f"unknown outputs: {', '.join(sorted(unknown))}")
    axis2 = getattr(args, "axis2", None)
    values2 = [None]
    if axis2 is not None:
        spec2 = getattr(args, "lin2", None) or getattr(args, "log2", None)
        if spec2 is None:
            raise UsageError("--axis2 needs --lin2 or --log2")
        values2 = parse_grid(spec2, "lin" if args.lin2 else "log").values()
    tasks = []
    for value in grid.values():
        for value2 in values2:
            tasks.append((fixed, args.axis, float(value), axis2,
                          None if value2 is None else float(value2), outputs, thermo))
    return tasks


def write_csv(rows, fh):
    w = csv.DictWriter(fh, fieldnames=HEADER, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)


GNUPLOT_TEMPLATE = """\
# generated by etk; columns follow the etk CSV header
set datafile separator ','
set key autotitle columnhead
set xlabel '{xlabel}'
{logscale}plot '{csv}' using {xcol}:{ycol} with linespoints{extra}
"""


def gnuplot_script(csv_path, axis, thermo):
    col = {"tau_l": 2, "e0": 3, "lambda": 4, "v": 5, "temperature": 6, "s": 7}[axis]
    logscale = "set logscale x\n" if axis in ("tau_l", "s") else ""
    if thermo:
        return GNUPLOT_TEMPLATE.format(xlabel=axis, logscale=logscale, csv=csv_path,
                                       xcol=col, ycol=10,
                                       extra=f", '' using {col}:12 with linespoints")
    return GNUPLOT_TEMPLATE.format(xlabel=axis, logscale="set logscale y\n" + logscale,
                                   csv=csv_path, xcol=col, ycol=8,
                                   extra=f", '' using {col}:9 with linespoints")


def cmd_sweep(args, thermo, stdout):
    tasks = build_tasks(args, thermo)
    rows = run_tasks(tasks)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, stdout)
    if args.gnuplot:
        if not args.output:
            raise UsageError("--gnuplot needs --output so the script can reference the CSV")
        with open(args.gnuplot, "w") as fh:
            fh.write(gnuplot_script(args.output, args.axis, thermo))
    return 0


def cmd_verify(args, stdout):
    if args.only and args.only not in acceptance.CHECKS:
        raise UsageError(f"unknown criterion {args.only!r}; choose from "
                         + ", ".join(acceptance.CHECKS))
    results = acceptance.run(args.only, args.oracle)
    for res in results:
        print(res.line(), file=stdout)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed", file=stdout)
    return 0 if not failed else 3


def cmd_propagate(args, stdout):
    fixed = resolve_fixed(args)
    sys_ = make_system(fixed["e0"], fixed["lam"], fixed["v"], fixed["temperature"],
                       fixed["tau_l"])
    trace = heom.propagate(sys_, args.depth, t_end=args.t_end, dt=args.dt,
                           n_samples=args.samples)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            heom.write_trajectory_csv(trace, fh)
    else:
        heom.write_trajectory_csv(trace, stdout)
    if args.fit:
        fit = heom.fit_rates(trace)
        print(f"k_fit={fit.k_fit:.10g} k_bwd_fit={fit.k_bwd_fit:.10g} "
              f"p_a_inf={fit.p_a_inf:.10g} r2={fit.r_squared:.6f}", file=sys.stderr)
    return 0


def _add_system_flags(p):
    p.add_argument("--e0", type=float, help="endothermicity E0, kJ/mol")
    p.add_argument("--lambda", dest="lam", type=float, help="reorganization energy, kJ/mol")
    p.add_argument("--v", type=float, help="transfer coupling, kJ/mol")
    p.add_argument("--temp", dest="temperature", type=float, help="temperature, K")
    p.add_argument("--tau-l", dest="tau_l", type=float, help="longitudinal relaxation time, ps")
    p.add_argument("--config", help="key=value file; flags override its values")


def _add_sweep_flags(p, thermo):
    _add_system_flags(p)
    p.add_argument("--axis", required=True, choices=AXES)
    p.add_argument("--lin", metavar="MIN:MAX:COUNT")
    p.add_argument("--log", metavar="MIN:MAX:COUNT")
    p.add_argument("--s", type=float, help="Laplace argument (1/ps, >= 0) when not swept")
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--outputs", help="comma list from " + ",".join(OUTPUTS))
    p.add_argument("-o", "--output", help="CSV file (default: stdout)")
    p.add_argument("--gnuplot", metavar="PATH", help="also write a gnuplot script")
    if thermo:
        p.add_argument("--delta-t", dest="delta_t", type=float,
                       help="temperature step for the entropy, K")
        p.add_argument("--axis2", choices=[a for a in AXES if a != "s"])
        p.add_argument("--lin2", metavar="MIN:MAX:COUNT")
        p.add_argument("--log2", metavar="MIN:MAX:COUNT")


def build_parser():
    parser = argparse.ArgumentParser(prog="etk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_sweep_flags(sub.add_parser("rates", help="rate constants / resolutions"), False)
    _add_sweep_flags(sub.add_parser("thermo", help="dG, dS, dH along 1-D or 2-D grids"), True)
    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("--only", help="run a single criterion by name")
    v.add_argument("--oracle", action="store_true",
                   help="include the slow time-domain hierarchy cross-check")
    p = sub.add_parser("propagate", help="dump a hierarchy population trajectory")
    _add_system_flags(p)
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--fit", action="store_true", help="print fitted rates to stderr")
    p.add_argument("-o", "--output")
    return parser


GRID_FLAGS = ("--lin", "--log", "--lin2", "--log2")
_NEGATIVE_VALUE = re.compile(r"^-[0-9.]")


def _glue_negative_values(argv):
    """Turn ``--lin -6:0:3`` into ``--lin=-6:0:3`` so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (i + 1 < len(argv) and _NEGATIVE_VALUE.match(argv[i + 1])
                and (tok in GRID_FLAGS or tok in VALUE_FLAGS)):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


VALUE_FLAGS = ("--e0", "--lambda", "--v", "--temp", "--tau-l", "--s")


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        if args.command == "rates":
            return cmd_sweep(args, False, stdout)
        if args.command == "thermo":
            return cmd_sweep(args, True, stdout)
        if args.command == "verify":
            return cmd_verify(args, stdout)
        return cmd_propagate(args, stdout)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"etk: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, EtkError, ArithmeticError) as exc:
        print(f"etk: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
