"""Command-line interface.

Subcommands
-----------
discord
    Correlation measures of one X state.
sweep
    Quantities over a tuning grid at several temperatures.
cp
    Critical-point estimates versus temperature, or the exact
    zero-temperature critical fields.
oracle
    Infinite-chain values next to exact diagonalization of a ring.

Exit codes are 0 on success, 1 on numerical failure and 2 on invalid
input.
"""

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

from . import ed
from . import xxz as xxz_mod
from . import xy as xy_mod
from .config import ConfigError, load_config, with_overrides
from .cp import CPEstimate, Quantity, SweepCurve, cp_vs_temperature, curves_from_points
from .errors import DomainError, ModelPointError, ThermalQCPError
from .xstate import Branch, XState, correlation_report

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2
SWEEP_COLUMNS = ("tuning", "kT", "quantity", "value", "branch")
CP_COLUMNS = ("kT", "estimator", "method", "location", "uncertainty")
ORACLE_COLUMNS = ("quantity", "thermodynamic_limit", "ed", "abs_diff")
NO_ESTIMATE = "no-estimate"


def fmt_float(x):
    """Shortest round-trip text of a float, ``NaN`` for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NaN"
    return repr(float(x))


class _Writer:
    """Rows to CSV or JSON lines, NaN written as ``NaN`` or null."""

    def __init__(self, stream, columns, fmt):
        self.stream = stream
        self.columns = columns
        self.fmt = fmt
        if fmt == "csv":
            self._csv = csv.writer(stream, lineterminator="\n")
            self._csv.writerow(columns)

    def row(self, values):
        if self.fmt == "csv":
            self._csv.writerow([fmt_float(v) if isinstance(v, float) else ("" if v is None else v)
                                for v in values])
        else:
            rec = {}
            for k, v in zip(self.columns, values):
                if isinstance(v, float) and math.isnan(v):
                    v = None
                rec[k] = v
            self.stream.write(json.dumps(rec) + "\n")
        self.stream.flush()


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _safe_point(model, t):
    try:
        return model(float(t)), None
    except ThermalQCPError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _evaluate_all(model, grid, threads):
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_safe_point, [model] * len(grid), list(grid)))
    return [_safe_point(model, t) for t in grid]


def cmd_discord(args, cfg):
    if args.elements:
        if len(args.elements) != 5:
            raise ConfigError("discord takes five numbers: rho11 rho22 rho44 rho23 rho14")
        elems = [float(x) for x in args.elements]
    elif cfg.state is not None:
        elems = cfg.state
    else:
        raise ConfigError("no state given; pass five numbers or a [state] section")
    report = correlation_report(XState(*elems))
    fields = {
        "discord": report.discord,
        "eof": report.eof,
        "concurrence": report.concurrence,
        "conditional_entropy": report.conditional_entropy,
        "branch": report.minimizer_branch.value,
        "numerical": report.numerical,
    }
    stream, close = _open_out(cfg.out)
    try:
        if cfg.fmt == "jsonl":
            stream.write(json.dumps(fields) + "\n")
        else:
            for k, v in fields.items():
                stream.write(f"{k} = {fmt_float(v) if isinstance(v, float) else v}\n")
    finally:
        if close:
            stream.close()
    return EXIT_OK


def cmd_sweep(args, cfg):
    if cfg.grid is None or len(cfg.grid) == 0:
        raise ConfigError("sweep needs start, stop and step")
    if not cfg.quantities:
        raise ConfigError("sweep needs a non-empty quantity list")
    if not cfg.kts:
        raise ConfigError("sweep needs at least one temperature")
    quantities = sorted(cfg.quantities, key=lambda q: q.value)
    # table[(i_grid, i_kT)] = {quantity: (value, branch)}
    table = {}
    failed = []
    for j, kt in enumerate(cfg.kts):
        model = cfg.sweep_model(1.0 / kt)
        results = _evaluate_all(model, cfg.grid, args.threads)
        for i, (point, err) in enumerate(results):
            if point is None:
                failed.append((cfg.grid[i], kt, err))
                table[i, j] = {q: (math.nan, None) for q in quantities}
                continue
            curve_vals = {}
            for c in curves_from_points([cfg.grid[i]], [point], quantities, model.fixed):
                branch = c.branch[0].value if c.branch is not None else None
                curve_vals[c.quantity] = (float(c.values[0]), branch)
            table[i, j] = curve_vals
    stream, close = _open_out(cfg.out)
    try:
        w = _Writer(stream, SWEEP_COLUMNS, cfg.fmt)
        for i, t in enumerate(cfg.grid):
            for j, kt in enumerate(cfg.kts):
                for q in quantities:
                    val, branch = table[i, j][q]
                    w.row([float(t), float(kt), q.value, val, branch])
    finally:
        if close:
            stream.close()
    for t, kt, err in failed:
        print(f"point tuning={t!r} kT={kt!r} failed: {err}", file=sys.stderr)
    return EXIT_NUMERICAL if failed else EXIT_OK


def read_sweep(stream):
    """Rebuild sweep curves from CSV written by the ``sweep`` subcommand.

    Parameters
    ----------
    stream : file-like
        Open text stream positioned at the header line.

    Returns
    -------
    list of SweepCurve
        One curve per (kT, quantity) pair, ordered by kT then quantity
        name. ``fixed`` holds only ``beta``.
    """
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
        raise ConfigError(f"expected columns {SWEEP_COLUMNS}, got {reader.fieldnames}")
    groups = {}
    for row in reader:
        key = (float(row["kT"]), row["quantity"])
        t, v, b = groups.setdefault(key, ([], [], []))
        t.append(float(row["tuning"]))
        v.append(float(row["value"]))
        b.append(Branch(row["branch"]) if row["branch"] else None)
    curves = []
    for (kt, name), (t, v, b) in sorted(groups.items()):
        branch = tuple(b) if all(x is not None for x in b) else None
        curves.append(SweepCurve(t, v, Quantity(name), {"beta": 1.0 / kt}, branch))
    return curves


def _estimate_row(kt, quantity, est, label=None):
    if est is None:
        return [float(kt), quantity.value, NO_ESTIMATE, math.nan, math.nan]
    method = est.method.value if label is None else label
    return [float(kt), quantity.value, method, float(est.location), float(est.uncertainty)]


def cmd_cp(args, cfg):
    opts = cfg.cp
    stream, close = _open_out(cfg.out)
    status = EXIT_OK
    try:
        w = _Writer(stream, CP_COLUMNS, cfg.fmt)
        if opts.get("mode") == "table":
            if cfg.model != "xxz":
                raise ConfigError("table mode is available for the xxz model only")
            j = cfg.params.get("j", 1.0)
            for h in opts.get("fields", (cfg.params.get("h", 0.0),)):
                first = xxz_mod.critical_point_first_order(h, j)
                inf = xxz_mod.critical_point_infinite_order(h, j)
                w.row([0.0, f"FirstOrder(h={fmt_float(h)})", "ExactFormula", first, 0.0])
                w.row([0.0, f"InfiniteOrder(h={fmt_float(h)})", "ExactFormula", inf, 0.0])
            return EXIT_OK
        if cfg.grid is None or not cfg.kts:
            raise ConfigError("cp needs a sweep grid and temperatures")
        quantities = opts.get("quantities") or cfg.quantities
        if not quantities:
            raise ConfigError("cp needs a non-empty quantity list")
        quantities = sorted(quantities, key=lambda q: q.value)
        order = opts.get("order", 1)
        window = opts.get("window")
        found = {q: [] for q in quantities}
        for kt in cfg.kts:
            model = cfg.sweep_model(1.0 / kt)
            try:
                table = cp_vs_temperature(model, quantities, [1.0 / kt], cfg.grid, order, window,
                                          workers=args.threads)
            except (ModelPointError, ThermalQCPError) as exc:
                print(f"kT={kt!r} failed: {exc}", file=sys.stderr)
                status = EXIT_NUMERICAL
                for q in quantities:
                    w.row([float(kt), q.value, "error", math.nan, math.nan])
                continue
            for r in table.rows:
                w.row(_estimate_row(kt, r.quantity, r.estimate))
                if r.estimate is not None:
                    found[r.quantity].append((kt, r.estimate))
        for q in quantities:
            pts = sorted(found[q])[:2]
            if len(pts) == 2:
                (t1, e1), (t2, e2) = pts
                slope = (e2.location - e1.location) / (t2 - t1)
                est = CPEstimate(e1.location - slope * t1, e1.method,
                                 e1.uncertainty + e2.uncertainty, math.inf)
                w.row(_estimate_row(0.0, q, est, label="Extrapolation"))
    finally:
        if close:
            stream.close()
    return status


def _oracle_rows(cfg, length, beta):
    rows = []
    if cfg.model == "xxz":
        p = cfg.point_params(beta)
        obs = xxz_mod.observables(p, cfg.solver, second_order=False)
        spectrum = ed.diagonalize(ed.RingSpec(length, p))
        ring = ed.pair_correlators(ed.thermal_pair_state(spectrum, beta, (0, 1)))
        rows.append(("f", obs.free_energy, ed.free_energy_per_site(spectrum, beta)))
        rows.append(("sz", obs.sz, ring["sz"]))
        rows.append(("szsz_1", obs.szsz, ring["szsz"]))
        rows.append(("sxsx_1", obs.sxsx, ring["sxsx"]))
        return rows
    p = cfg.point_params(beta)
    spec = ed.RingSpec(length, p)  # validates the length before any work
    for k in (1, 2):
        if k >= spec.length:
            continue
        inf_state = xy_mod.pair_state(k, p)
        ring_state = ed.xy_formula_convention_state(length, p, k)
        a, b = ed.pair_correlators(inf_state), ed.pair_correlators(ring_state)
        for key in ("sz", "sxsx", "sysy", "szsz"):
            if key == "sz" and k > 1:
                continue
            name = key if key == "sz" else f"{key}_{k}"
            rows.append((name, a[key], b[key]))
        for el in ("rho11", "rho22", "rho44", "rho23", "rho14"):
            rows.append((f"{el}_{k}", getattr(inf_state, el), getattr(ring_state, el)))
    return rows


def cmd_oracle(args, cfg):
    opts = cfg.oracle
    length = opts.get("length", 10)
    ed.RingSpec(length, cfg.point_params(1.0))  # length check, exit 2 on overflow
    kts = opts.get("kts") or cfg.kts
    if not kts:
        raise ConfigError("oracle needs a temperature")
    bound = opts.get("bound", 1e-2)
    worst = 0.0
    stream, close = _open_out(cfg.out)
    try:
        cols = ("kT",) + ORACLE_COLUMNS
        w = _Writer(stream, cols, cfg.fmt)
        for kt in kts:
            for name, a, b in _oracle_rows(cfg, length, 1.0 / kt):
                diff = abs(a - b)
                worst = max(worst, diff)
                w.row([float(kt), name, float(a), float(b), float(diff)])
    finally:
        if close:
            stream.close()
    if worst > bound:
        print(f"largest difference {worst:.3e} exceeds bound {bound:.1e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="thermal-qcp",
        description="Thermal discord, entanglement and critical points of spin chains.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "jsonl"), help="output format")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--tol", type=float, help="NLIE convergence tolerance")
    sub = parser.add_subparsers(dest="command", required=True)
    d = sub.add_parser("discord", parents=[common], help="correlations of one X state")
    d.add_argument("elements", nargs="*", metavar="RHO",
                   help="rho11 rho22 rho44 rho23 rho14")
    sub.add_parser("sweep", parents=[common], help="sweep quantities over a grid")
    sub.add_parser("cp", parents=[common], help="critical-point estimates")
    sub.add_parser("oracle", parents=[common], help="compare with exact diagonalization")
    return parser


_COMMANDS = {"discord": cmd_discord, "sweep": cmd_sweep, "cp": cmd_cp, "oracle": cmd_oracle}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config) if args.config else load_config(text="")
        cfg = with_overrides(cfg, out=args.out, fmt=args.format, tol=args.tol)
        return _COMMANDS[args.command](args, cfg)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ThermalQCPError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
