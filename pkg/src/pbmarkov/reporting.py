"""CSV serialization and the human-readable report table.

CSV conventions: UTF-8, header row, floats written with ``repr`` so a
parse recovers them exactly, ``inf`` for infinite delays, empty cells for
missing values. Lines starting with ``#`` carry run metadata (seed and
config echo) and are skipped by :func:`read_csv`.

Source and state indices are 1-based in every CSV and table.
"""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .analytic import TransitionModel
from .config import NetworkConfig, format_config
from .metrics import MetricsReport


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return repr(float(v))
    return str(v)


def metadata_lines(config: NetworkConfig, **extra) -> list[str]:
    lines = [f"# {k} = {v}" for k, v in extra.items()]
    lines += [f"# config: {line}" for line in format_config(config).splitlines()]
    return lines


def write_csv(rows: Iterable[Sequence], header: Sequence[str], out, comments: Sequence[str] = ()) -> None:
    for c in comments:
        out.write(c + "\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def read_csv(source) -> list[dict]:
    """Parse a CSV written by this package, skipping ``#`` comment lines."""
    text = source.read() if hasattr(source, "read") else open(source, encoding="utf-8").read()
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


METRICS_COLUMNS_DOC = (
    "eop, cop_overall, cop_conditional, pt_1..pt_K, atd_slots_1..atd_slots_K, "
    "snr_threshold, source_power_w"
)


def metrics_header(K: int) -> list[str]:
    return (["eop", "cop_overall", "cop_conditional"]
            + [f"pt_{i + 1}" for i in range(K)]
            + [f"atd_slots_{i + 1}" for i in range(K)]
            + ["snr_threshold", "source_power_w"])


def metrics_row(r: MetricsReport) -> list:
    return ([r.eop, r.cop_overall, r.cop_conditional]
            + [float(p) for p in r.transmission_prob]
            + [float(a) for a in r.atd_slots]
            + [r.snr_threshold, r.source_power])


def matrix_rows(A: np.ndarray):
    for n, row in enumerate(A):
        yield [f"s{n + 1}", *[float(v) for v in row]]


def matrix_header(N: int) -> list[str]:
    return ["from"] + [f"s{n + 1}" for n in range(N)]


def pi_rows(model: TransitionModel, pi: np.ndarray):
    space = model.state_space
    for n in range(space.size):
        yield [f"s{n + 1}", "[" + ",".join(str(int(v)) for v in space.levels[n]) + "]", float(pi[n])]


def report_table(model: TransitionModel, r: MetricsReport, digits: int = 4) -> str:
    """Per-state table followed by the derived network metrics."""
    space = model.state_space
    K = space.num_sources
    f = f"{{:.{digits}f}}"
    head = ["State", "Levels", "pi_n", "[p_1..p_K]", "State COP"]
    rows = []
    for n in range(space.size):
        lv = "[" + ",".join(str(int(v)) for v in space.levels[n]) + "]"
        sel = model.selection[n]
        sel_s = "[" + ",".join(f.format(p) if 0 < p < 1 else str(int(round(p))) for p in sel) + "]"
        cop = r.cop_per_state.get(n, 0.0)
        rows.append([f"s{n + 1}", lv, f.format(r.pi[n]), sel_s, f.format(cop) if cop else "0"])
    widths = [max(len(h), *(len(row[c]) for row in rows)) for c, h in enumerate(head)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths))
    out = [line(head), line(["-" * w for w in widths])]
    out += [line(row) for row in rows]
    vec = lambda v: "[" + ", ".join(f.format(x) for x in v) + "]"
    out += [
        "",
        f"EOP                    {f.format(r.eop)}",
        f"Overall COP            {f.format(r.cop_overall)}",
        f"COP given IT slot      {f.format(r.cop_conditional)}",
        f"[p_T,1..p_T,K]         {vec(r.transmission_prob)}",
        f"[ATD_1..ATD_K] (slots) {vec(r.atd_slots)}",
        f"SNR threshold          {r.snr_threshold:g}",
        f"Source power (W)       {r.source_power:g}",
    ]
    if K > 6:
        out.append(f"({K} sources)")
    return "\n".join(out)


def simulation_rows(sim, report: Optional[MetricsReport]):
    """(metric, source_index, empirical, stderr, analytic, deviation, z) rows."""
    se = sim.binomial_errors()
    K = sim.config.num_sources

    def row(name, idx, emp, err, ana):
        if ana is None:
            return [name, idx, emp, err, None, None, None]
        dev = emp - ana
        z = dev / err if err and err > 0 else (0.0 if dev == 0 else math.inf)
        return [name, idx, emp, err, ana, dev, z]

    yield row("eop", None, sim.eop, se["eop"], report.eop if report else None)
    yield row("cop", None, sim.cop, se["cop"], report.cop_overall if report else None)
    for i in range(K):
        yield row("transmission_prob", i + 1, float(sim.transmission_prob[i]), float(se["transmission_prob"][i]),
                  float(report.transmission_prob[i]) if report else None)
    for i in range(K):
        cnt = sim.gap_count[i]
        err = math.sqrt(sim.gap_var[i] / cnt) if cnt > 1 else math.nan
        yield row("atd_slots", i + 1, float(sim.gap_mean[i]), err,
                  float(report.atd_slots[i]) if report else None)
    for n in range(sim.state_occupancy.size):
        yield row(f"occupancy_s{n + 1}", None, float(sim.occupancy[n]), float(se["occupancy"][n]),
                  float(report.pi[n]) if report else None)


SIMULATION_HEADER = ["metric", "source_index", "empirical", "stderr", "analytic", "deviation", "z"]
