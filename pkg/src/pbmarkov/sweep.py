"""One-parameter sweeps emitting long-format (tidy) CSV rows."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .analytic import build_model
from .config import (
    NetworkConfig,
    auto_source_positions,
    config_from_entries,
    parse_energy,
    parse_float,
    parse_int,
    parse_power,
    read_flat_file,
)
from .errors import ConfigError
from .metrics import compute_metrics
from .simulation import DEFAULT_BURN_IN, replication_seeds, run_simulation

PARAMETERS = (
    "beacon_power", "capacity", "levels", "num_sources", "destination_x",
    "beacon_x", "source_radius", "transmit_level", "efficiency",
)
OUTPUTS = ("eop", "cop", "atd", "all")
HEADER = ["param_name", "param_value", "metric_name", "source_index",
          "analytic_value", "empirical_value", "empirical_stderr"]

_PARSERS = {
    "beacon_power": parse_power,
    "capacity": parse_energy,
    "levels": parse_int,
    "num_sources": parse_int,
    "transmit_level": parse_int,
}


@dataclass(frozen=True)
class SweepSpec:
    """A grid over one parameter of ``base``.

    ``hold`` applies to ``capacity`` and ``levels`` sweeps: ``"levels"``
    keeps L fixed (capacity sweep) / ``"capacity"`` keeps the capacity fixed
    (levels sweep), while ``"unit"`` keeps the energy unit fixed and moves
    the other of the two.
    """

    base: NetworkConfig
    parameter: str
    values: tuple
    outputs: tuple = ("all",)
    hold: Optional[str] = None
    slots: Optional[int] = None
    seeds: int = 1
    seed: int = 0
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ConfigError(f"unknown sweep parameter; valid: {', '.join(PARAMETERS)}", key="sweep.parameter")
        if not self.values:
            raise ConfigError("empty grid", key="sweep.values")
        diffs = np.diff(np.asarray(self.values, dtype=float))
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("grid must be strictly monotone", key="sweep.values")
        for o in self.outputs:
            if o not in OUTPUTS:
                raise ConfigError(f"unknown output {o!r}; valid: {', '.join(OUTPUTS)}", key="sweep.outputs")
        if self.hold not in (None, "levels", "capacity", "unit"):
            raise ConfigError("hold must be levels, capacity or unit", key="sweep.hold")
        if self.slots is not None and self.slots < 1:
            raise ConfigError("slots must be >= 1", key="sweep.slots")

    def wants(self, metric: str) -> bool:
        return "all" in self.outputs or metric in self.outputs


def apply_parameter(base: NetworkConfig, name: str, value, hold: Optional[str] = None) -> NetworkConfig:
    """Return ``base`` with the swept parameter set to ``value``."""
    if name == "beacon_power":
        return base.replace(beacon_power=float(value))
    if name == "efficiency":
        return base.replace(efficiency=float(value))
    if name == "transmit_level":
        return base.replace(transmit_level=int(value))
    if name == "capacity":
        if hold == "unit":
            L = value / base.unit_energy
            if not math.isclose(L, round(L), rel_tol=1e-9) or round(L) < 1:
                raise ConfigError(f"capacity {value} is not a multiple of the energy unit", key="sweep.values")
            return base.replace(capacity=float(value), levels=int(round(L)))
        return base.replace(capacity=float(value))
    if name == "levels":
        if hold == "unit":
            return base.replace(levels=int(value), capacity=int(value) * base.unit_energy)
        return base.replace(levels=int(value))
    if name == "beacon_x":
        return base.replace(beacon_position=(float(value), base.beacon_position[1]))
    if name == "destination_x":
        return base.replace(destination_position=(float(value), base.destination_position[1]))
    if name in ("num_sources", "source_radius"):
        if base.source_radius is None:
            raise ConfigError(f"sweeping {name} needs auto-placed sources (source_radius)", key="source_radius")
        k = int(value) if name == "num_sources" else base.num_sources
        r = float(value) if name == "source_radius" else base.source_radius
        return base.replace(num_sources=k, source_positions=auto_source_positions(k, r), source_radius=r)
    raise ConfigError(f"unknown sweep parameter; valid: {', '.join(PARAMETERS)}", key="sweep.parameter")


def _point(args):
    spec, value = args
    config = apply_parameter(spec.base, spec.parameter, value, spec.hold)
    report = compute_metrics(build_model(config))
    sims = []
    if spec.slots:
        sims = [run_simulation(config, spec.slots, s, spec.burn_in)
                for s in replication_seeds(spec.seed, spec.seeds)]
    rows = []
    name = spec.parameter

    def emit(metric, idx, analytic, emp=None, err=None):
        rows.append([name, float(value), metric, idx, analytic, emp, err])

    total = sum(s.slots_run for s in sims)
    if spec.wants("eop"):
        emp = err = None
        if sims:
            emp = sum(s.energy_outage_slots for s in sims) / total
            err = math.sqrt(emp * (1 - emp) / total)
        emit("eop", None, report.eop, emp, err)
    if spec.wants("cop"):
        emp = err = None
        if sims:
            emp = sum(s.connection_outages for s in sims) / total
            err = math.sqrt(emp * (1 - emp) / total)
        emit("cop", None, report.cop_overall, emp, err)
        emit("cop_conditional", None, report.cop_conditional)
    if spec.wants("atd"):
        for i in range(config.num_sources):
            emp = err = None
            if sims:
                emp = sum(int(s.transmissions[i]) for s in sims) / total
                err = math.sqrt(emp * (1 - emp) / total)
            emit("transmission_prob", i + 1, float(report.transmission_prob[i]), emp, err)
        for i in range(config.num_sources):
            emp = err = None
            cnt = sum(int(s.gap_count[i]) for s in sims)
            if cnt > 1:
                gaps_mean = sum(s.gap_mean[i] * s.gap_count[i] for s in sims if s.gap_count[i]) / cnt
                var = np.mean([s.gap_var[i] for s in sims if s.gap_count[i] > 1])
                emp, err = float(gaps_mean), float(math.sqrt(var / cnt))
            emit("atd_slots", i + 1, float(report.atd_slots[i]), emp, err)
    return rows


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[list]:
    """Evaluate every grid point; rows come back in grid order."""
    work = [(spec, v) for v in spec.values]
    if jobs <= 1:
        results = [_point(w) for w in work]
    else:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_point, work))
    return [row for rows in results for row in rows]


SWEEP_KEYS = ("base", "sweep.parameter", "sweep.values", "sweep.outputs", "sweep.hold",
              "sweep.slots", "sweep.seeds", "sweep.seed", "sweep.burn_in")


def _parse_grid(parameter: str, raw: str, lineno: int) -> tuple:
    parse = _PARSERS.get(parameter, parse_float)
    try:
        return tuple(parse(v) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(str(exc), key="sweep.values", line=lineno) from None


def load_sweep(path) -> SweepSpec:
    """Read a sweep file: config keys (or ``base = other.cfg``) plus ``sweep.*`` keys.

    Keys given in the sweep file override those of the base file.
    """
    path = Path(path)
    entries = read_flat_file(path)
    base_entry = [e for e in entries if e[1] == "base"]
    merged = []
    if base_entry:
        lineno, _, raw = base_entry[0]
        base_path = (path.parent / raw).resolve()
        if not base_path.exists():
            raise ConfigError(f"base config {raw!r} not found", key="base", line=lineno)
        own = {e[1] for e in entries if e[1] not in SWEEP_KEYS}
        conflicts = {"beacon_x": "beacon_position", "destination_x": "destination_position",
                     "source_radius": "source_positions"}
        drop = set(own)
        for a, b in conflicts.items():
            if a in own:
                drop.add(b)
            if b in own:
                drop.add(a)
        merged = [e for e in read_flat_file(base_path) if e[1] not in drop]
    merged += [e for e in entries if e[1] != "base"]
    base, extras = config_from_entries(merged, extra_keys=SWEEP_KEYS)
    if "sweep.parameter" not in extras:
        raise ConfigError("missing sweep.parameter", key="sweep.parameter")
    if "sweep.values" not in extras:
        raise ConfigError("missing sweep.values", key="sweep.values")
    parameter = extras["sweep.parameter"][1]
    if parameter not in PARAMETERS:
        raise ConfigError(f"unknown sweep parameter; valid: {', '.join(PARAMETERS)}",
                          key="sweep.parameter", line=extras["sweep.parameter"][0])
    lineno, raw = extras["sweep.values"]
    kwargs = dict(base=base, parameter=parameter, values=_parse_grid(parameter, raw, lineno))
    if "sweep.outputs" in extras:
        kwargs["outputs"] = tuple(s.strip() for s in extras["sweep.outputs"][1].split(",") if s.strip())
    if "sweep.hold" in extras:
        kwargs["hold"] = extras["sweep.hold"][1]
    for key, field_name in (("sweep.slots", "slots"), ("sweep.seeds", "seeds"), ("sweep.seed", "seed"),
                            ("sweep.burn_in", "burn_in")):
        if key in extras:
            try:
                kwargs[field_name] = parse_int(extras[key][1])
            except ValueError as exc:
                raise ConfigError(str(exc), key=key, line=extras[key][0]) from None
    return SweepSpec(**kwargs)


def series(rows: Sequence[Sequence], metric: str, source_index=None) -> np.ndarray:
    """Analytic values of one metric across the grid, in grid order."""
    return np.array([r[4] for r in rows if r[2] == metric and r[3] == source_index], dtype=float)
