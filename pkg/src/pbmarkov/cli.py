"""Command-line entry point: ``pbmarkov analyze|simulate|sweep|table1``.

Exit codes: 0 success, 1 acceptance failure (table1), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager

from . import golden
from .analytic import build_model
from .config import dbm_to_watt, load_config, table1_config
from .errors import PBMarkovError
from .metrics import compute_metrics
from .reporting import (
    METRICS_COLUMNS_DOC,
    SIMULATION_HEADER,
    matrix_header,
    matrix_rows,
    metadata_lines,
    metrics_header,
    metrics_row,
    pi_rows,
    report_table,
    simulation_rows,
    write_csv,
)
from .simulation import DEFAULT_BURN_IN, run_simulation
from .stationary import solve_stationary
from .sweep import HEADER as SWEEP_HEADER
from .sweep import PARAMETERS, load_sweep, run_sweep


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def cmd_analyze(args) -> int:
    config = load_config(args.config)
    model = build_model(config)
    st = solve_stationary(model)
    report = compute_metrics(model, st)
    print(report_table(model, report))
    print(f"Stationary residual    {st.residual:.2e} ({st.method})")
    if args.matrix_csv:
        with _open_out(args.matrix_csv) as fh:
            write_csv(matrix_rows(model.matrix), matrix_header(model.size), fh)
    if args.pi_csv:
        with _open_out(args.pi_csv) as fh:
            write_csv(pi_rows(model, report.pi), ["state", "levels", "pi"], fh)
    if args.csv:
        with _open_out(args.csv) as fh:
            write_csv([metrics_row(report)], metrics_header(config.num_sources), fh)
    return 0


def cmd_simulate(args) -> int:
    if args.slots < 1:
        raise UsageError("--slots must be >= 1")
    config = load_config(args.config)
    sim = run_simulation(config, args.slots, args.seed, args.burn_in)
    report = None if args.no_analytic else compute_metrics(build_model(config))
    comments = metadata_lines(config, seed=args.seed, slots=args.slots, burn_in=args.burn_in)
    with _open_out(args.output) as fh:
        write_csv(simulation_rows(sim, report), SIMULATION_HEADER, fh, comments)
    return 0


def cmd_sweep(args) -> int:
    spec = load_sweep(args.sweep)
    rows = run_sweep(spec, jobs=args.jobs)
    comments = metadata_lines(spec.base, parameter=spec.parameter, seed=spec.seed,
                              slots=spec.slots or 0, seeds=spec.seeds)
    with _open_out(args.output) as fh:
        write_csv(rows, SWEEP_HEADER, fh, comments)
    return 0


def cmd_table1(args) -> int:
    overrides = {}
    if args.efficiency is not None:
        overrides["efficiency"] = args.efficiency
    if args.beacon_power_dbm is not None:
        overrides["beacon_power"] = dbm_to_watt(args.beacon_power_dbm)
    model = build_model(table1_config(**overrides))
    report = compute_metrics(model)
    cells = golden.matrix_cells(model) + golden.table_cells(model, report)
    print(report_table(model, report))
    print()
    print(f"{'cell':<16}{'computed':>12}{'expected':>12}{'|error|':>12}{'tol':>9}  ok")
    for c in cells:
        if args.all or not c.ok:
            print(f"{c.name:<16}{c.computed:>12.4f}{c.expected:>12.4f}{c.error:>12.2e}{c.tol:>9.0e}  "
                  f"{'yes' if c.ok else 'NO'}")
    failed = [c for c in cells if not c.ok]
    print(f"\n{len(cells) - len(failed)}/{len(cells)} cells within tolerance")
    if failed:
        w = golden.worst(failed)
        print(f"worst offender: {w.name} computed {w.computed:.4f}, expected {w.expected:.4f}")
        return 1
    return 0


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbmarkov", description="Energy-state Markov chain of a power-beacon network.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analytic report for a config file",
                       description=f"Metrics CSV columns: {METRICS_COLUMNS_DOC}.")
    a.add_argument("config")
    a.add_argument("--matrix-csv", metavar="FILE", help="write the transition matrix")
    a.add_argument("--pi-csv", metavar="FILE", help="write the stationary distribution")
    a.add_argument("--csv", metavar="FILE", help="write the metrics as one CSV row")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="Monte Carlo run with deviations from the analytic values")
    s.add_argument("config")
    s.add_argument("--slots", type=int, default=10**6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    s.add_argument("--no-analytic", action="store_true", help="skip the analytic comparison columns")
    s.add_argument("-o", "--output", help="CSV file (default stdout)")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="one-parameter sweep to long-format CSV",
                       description=f"Sweepable parameters: {', '.join(PARAMETERS)}.")
    w.add_argument("sweep")
    w.add_argument("-o", "--output", help="CSV file (default stdout)")
    w.add_argument("-j", "--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("table1", help="reproduce the K=2, L=2 worked example and compare")
    t.add_argument("--efficiency", type=float)
    t.add_argument("--beacon-power-dbm", type=float)
    t.add_argument("--all", action="store_true", help="list every cell, not only failures")
    t.set_defaults(func=cmd_table1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (PBMarkovError, OSError) as exc:
        print(f"pbmarkov: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
