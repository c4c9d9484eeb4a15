"""Network configuration, unit handling and the flat ``key = value`` file format.

All quantities are stored in SI units (watts, joules, seconds, meters).
Config files may give powers in ``dBm``/``W``/``mW`` and energies in
``J``/``mJ``; bare numbers are taken as SI.
"""

from __future__ import annotations

import dataclasses
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigError

Point = tuple[float, float]


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    if watt <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(watt) + 30.0


def auto_source_positions(num_sources: int, radius: float) -> tuple[Point, ...]:
    """Place the first ``num_sources`` sources on the standard ring of radius ``radius``.

    Order: (-r,0), (0,r), (r,0), (0,-r), (r/sqrt2, r/sqrt2), (-r/sqrt2, -r/sqrt2).
    """
    c = math.sqrt(2.0) / 2.0 * radius
    ring = [(-radius, 0.0), (0.0, radius), (radius, 0.0), (0.0, -radius), (c, c), (-c, -c)]
    if num_sources > len(ring):
        raise ConfigError(
            f"auto placement supports at most {len(ring)} sources; give source_positions explicitly",
            key="num_sources",
        )
    return tuple(ring[:num_sources])


@dataclass(frozen=True)
class NetworkConfig:
    """Full parameterization of the beacon-assisted multi-source network.

    ``transmit_level`` defaults to the threshold level derived from
    ``threshold_energy``. ``source_radius`` is only metadata recording that
    the sources were auto-placed (sweeps over ``num_sources`` or
    ``source_radius`` re-place them).
    """

    num_sources: int
    levels: int
    capacity: float
    threshold_energy: float
    efficiency: float
    beacon_power: float
    beacon_antennas: int
    noise_power: float
    path_loss_exponent: float
    rate_threshold: float
    beacon_position: Point
    destination_position: Point
    source_positions: tuple[Point, ...]
    transmit_level: Optional[int] = None
    slot_duration: float = 1.0
    source_radius: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beacon_position", _as_point(self.beacon_position, "beacon_position"))
        object.__setattr__(
            self, "destination_position", _as_point(self.destination_position, "destination_position")
        )
        object.__setattr__(
            self,
            "source_positions",
            tuple(_as_point(p, "source_positions") for p in self.source_positions),
        )
        self._validate()

    def _validate(self):
        def need(ok, key, msg):
            if not ok:
                raise ConfigError(msg, key=key)

        need(isinstance(self.num_sources, int) and self.num_sources >= 1, "num_sources", "must be an integer >= 1")
        need(isinstance(self.levels, int) and self.levels >= 1, "levels", "must be an integer >= 1")
        need(self.capacity > 0, "capacity", "must be positive")
        need(self.threshold_energy > 0, "threshold_energy", "must be positive")
        need(
            self.threshold_energy <= self.capacity,
            "threshold_energy",
            "threshold unreachable: exceeds the storage capacity",
        )
        need(0 < self.efficiency <= 1, "efficiency", "must lie in (0, 1]")
        need(self.slot_duration > 0, "slot_duration", "must be positive")
        need(self.beacon_power > 0, "beacon_power", "must be positive")
        need(
            isinstance(self.beacon_antennas, int) and self.beacon_antennas >= 1,
            "beacon_antennas",
            "must be an integer >= 1",
        )
        need(self.noise_power > 0, "noise_power", "must be positive")
        need(self.path_loss_exponent > 0, "path_loss_exponent", "must be positive")
        need(self.rate_threshold > 0, "rate_threshold", "must be positive")
        need(
            len(self.source_positions) == self.num_sources,
            "source_positions",
            f"expected {self.num_sources} positions, got {len(self.source_positions)}",
        )
        if self.transmit_level is not None:
            need(
                isinstance(self.transmit_level, int) and 1 <= self.transmit_level <= self.levels,
                "transmit_level",
                f"must be an integer in [1, {self.levels}]",
            )
            if self.transmit_level < self.threshold_level:
                raise ConfigError(
                    f"transmit level {self.transmit_level} is below the threshold level {self.threshold_level}",
                    key="transmit_level",
                )
            if self.transmit_level > self.threshold_level:
                warnings.warn(
                    "transmit_level exceeds the threshold level; eligibility, the transmit "
                    "decrement and the source power all use transmit_level",
                    stacklevel=3,
                )
        names = ["B", "D"] + [f"S{k + 1}" for k in range(self.num_sources)]
        points = [self.beacon_position, self.destination_position, *self.source_positions]
        for a in range(len(points)):
            for b in range(a + 1, len(points)):
                if math.dist(points[a], points[b]) == 0.0:
                    raise ConfigError(
                        f"nodes {names[a]} and {names[b]} coincide at {points[a]}", key="positions"
                    )

    @property
    def unit_energy(self) -> float:
        return self.capacity / self.levels

    @property
    def threshold_level(self) -> int:
        from .model import threshold_level

        return threshold_level(self.threshold_energy, self.unit_energy, self.levels)

    @property
    def tx_level(self) -> int:
        """Transmit level actually used (``transmit_level`` or the threshold level)."""
        return self.threshold_level if self.transmit_level is None else self.transmit_level

    @property
    def source_power(self) -> float:
        return self.tx_level * self.unit_energy / self.slot_duration

    @property
    def snr_threshold(self) -> float:
        return 2.0 ** self.rate_threshold - 1.0

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_layout(
        cls,
        *,
        num_sources: int,
        beacon_x: float,
        destination_x: float,
        source_radius: float,
        **kwargs,
    ) -> "NetworkConfig":
        """Build a config with B=(x_B,0), D=(x_D,0) and ring-placed sources."""
        return cls(
            num_sources=num_sources,
            beacon_position=(beacon_x, 0.0),
            destination_position=(destination_x, 0.0),
            source_positions=auto_source_positions(num_sources, source_radius),
            source_radius=source_radius,
            **kwargs,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _as_point(p, key) -> Point:
    try:
        x, y = p
        return (float(x), float(y))
    except (TypeError, ValueError):
        raise ConfigError(f"expected a 2-D coordinate, got {p!r}", key=key) from None


def table1_config(**overrides) -> NetworkConfig:
    """The K=2, L=2 worked-example configuration."""
    params = dict(
        num_sources=2,
        levels=2,
        capacity=20e-3,
        threshold_energy=10e-3,
        efficiency=0.8,
        beacon_power=dbm_to_watt(30.0),
        beacon_antennas=5,
        noise_power=dbm_to_watt(-80.0),
        path_loss_exponent=3.0,
        rate_threshold=3.0,
        beacon_x=-3.0,
        destination_x=200.0,
        source_radius=1.0,
        slot_duration=1.0,
    )
    params.update(overrides)
    # explicit coordinates override the layout shorthand
    if "beacon_position" in params:
        params.pop("beacon_x")
    if "destination_position" in params:
        params.pop("destination_x")
    if "source_positions" in params:
        params.pop("source_radius")
    else:
        params["source_positions"] = auto_source_positions(params["num_sources"], params["source_radius"])
    if "beacon_x" in params:
        params["beacon_position"] = (params.pop("beacon_x"), 0.0)
    if "destination_x" in params:
        params["destination_position"] = (params.pop("destination_x"), 0.0)
    return NetworkConfig(**params)


# --- flat key = value config files -------------------------------------------------

POWER_KEYS = {"beacon_power", "noise_power"}
ENERGY_KEYS = {"capacity", "threshold_energy"}
INT_KEYS = {"num_sources", "levels", "transmit_level", "beacon_antennas"}
FLOAT_KEYS = {"efficiency", "slot_duration", "path_loss_exponent", "rate_threshold"}
POINT_KEYS = {"beacon_position", "destination_position"}
LAYOUT_KEYS = {"beacon_x", "destination_x", "source_radius"}
CONFIG_KEYS = POWER_KEYS | ENERGY_KEYS | INT_KEYS | FLOAT_KEYS | POINT_KEYS | LAYOUT_KEYS | {"source_positions"}

_NUM_UNIT = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")
_POWER_UNITS = {"": 1.0, "w": 1.0, "mw": 1e-3, "uw": 1e-6, "kw": 1e3}
_ENERGY_UNITS = {"": 1.0, "j": 1.0, "mj": 1e-3, "uj": 1e-6}


def parse_power(text: str) -> float:
    """``'30 dBm'`` -> 1.0, ``'10 mW'`` -> 0.01, ``'2'`` -> 2.0 (watts)."""
    m = _NUM_UNIT.match(text)
    if not m:
        raise ValueError(f"cannot parse power {text!r}")
    value, unit = float(m.group(1)), m.group(2).lower()
    if unit == "dbm":
        return dbm_to_watt(value)
    if unit == "dbw":
        return 10.0 ** (value / 10.0)
    if unit not in _POWER_UNITS:
        raise ValueError(f"unknown power unit {m.group(2)!r} (use dBm, W or mW)")
    return value * _POWER_UNITS[unit]


def parse_energy(text: str) -> float:
    """``'20 mJ'`` -> 0.02 (joules)."""
    m = _NUM_UNIT.match(text)
    if not m:
        raise ValueError(f"cannot parse energy {text!r}")
    value, unit = float(m.group(1)), m.group(2).lower()
    if unit not in _ENERGY_UNITS:
        raise ValueError(f"unknown energy unit {m.group(2)!r} (use J or mJ)")
    return value * _ENERGY_UNITS[unit]


def parse_float(text: str) -> float:
    m = _NUM_UNIT.match(text)
    if not m or m.group(2) not in ("", "m"):
        raise ValueError(f"expected a number, got {text!r}")
    return float(m.group(1))


def parse_int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def parse_point(text: str) -> Point:
    parts = [p for p in text.strip().strip("()").split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'x, y', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def parse_points(text: str) -> tuple[Point, ...]:
    return tuple(parse_point(p) for p in text.split(";") if p.strip())


def parse_value(key: str, text: str):
    """Convert the raw string for ``key`` into its typed SI value."""
    if key in POWER_KEYS:
        return parse_power(text)
    if key in ENERGY_KEYS:
        return parse_energy(text)
    if key in INT_KEYS:
        return parse_int(text)
    if key in FLOAT_KEYS or key in LAYOUT_KEYS:
        return parse_float(text)
    if key in POINT_KEYS:
        return parse_point(text)
    if key == "source_positions":
        return parse_points(text)
    raise KeyError(key)


def read_flat_file(path) -> list[tuple[int, str, str]]:
    """Return ``(line_number, key, raw_value)`` triples from a ``key = value`` file."""
    entries = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=lineno)
        entries.append((lineno, key, value))
    return entries


def config_from_entries(entries: Sequence[tuple[int, str, str]], extra_keys=()) -> tuple[NetworkConfig, dict]:
    """Build a :class:`NetworkConfig` from parsed entries.

    Keys listed in ``extra_keys`` are passed back untouched in the second
    return value; any other unknown key is an error.
    """
    values: dict = {}
    lines: dict = {}
    extras: dict = {}
    for lineno, key, raw in entries:
        if key in extra_keys:
            extras[key] = (lineno, raw)
            continue
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key; valid keys: {', '.join(sorted(CONFIG_KEYS))}", key=key, line=lineno)
        if key in values:
            raise ConfigError("duplicate key", key=key, line=lineno)
        try:
            values[key] = parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key, line=lineno) from None
        lines[key] = lineno
    return build_config(values, lines), extras


def build_config(values: dict, lines: Optional[dict] = None) -> NetworkConfig:
    """Assemble a config from typed values, resolving the layout shorthand keys."""
    lines = lines or {}
    values = dict(values)
    required = [
        "num_sources", "levels", "capacity", "threshold_energy", "efficiency", "beacon_power",
        "beacon_antennas", "noise_power", "path_loss_exponent", "rate_threshold",
    ]
    for key in required:
        if key not in values:
            raise ConfigError("missing required key", key=key)
    bx = values.pop("beacon_x", None)
    dx = values.pop("destination_x", None)
    radius = values.pop("source_radius", None)
    if bx is not None:
        if "beacon_position" in values:
            raise ConfigError("give beacon_x or beacon_position, not both", key="beacon_x", line=lines.get("beacon_x"))
        values["beacon_position"] = (bx, 0.0)
    if dx is not None:
        if "destination_position" in values:
            raise ConfigError(
                "give destination_x or destination_position, not both",
                key="destination_x",
                line=lines.get("destination_x"),
            )
        values["destination_position"] = (dx, 0.0)
    if "source_positions" not in values:
        if radius is None:
            raise ConfigError("missing source_positions (or source_radius for auto placement)", key="source_positions")
        values["source_positions"] = auto_source_positions(values["num_sources"], radius)
        values["source_radius"] = radius
    elif radius is not None:
        raise ConfigError(
            "give source_radius or source_positions, not both", key="source_radius", line=lines.get("source_radius")
        )
    for key in ("beacon_position", "destination_position"):
        if key not in values:
            raise ConfigError("missing required key", key=key)
    try:
        return NetworkConfig(**values)
    except ConfigError as exc:
        if exc.line is None and exc.key in lines:
            raise ConfigError(str(exc).rsplit(" (", 1)[0], key=exc.key, line=lines[exc.key]) from None
        raise


def load_config(path) -> NetworkConfig:
    config, _ = config_from_entries(read_flat_file(path))
    return config


def format_config(config: NetworkConfig) -> str:
    """Serialize ``config`` in the flat file format (SI units, exact floats)."""
    out = [
        f"num_sources = {config.num_sources}",
        f"levels = {config.levels}",
        f"capacity = {config.capacity!r} J",
        f"threshold_energy = {config.threshold_energy!r} J",
    ]
    if config.transmit_level is not None:
        out.append(f"transmit_level = {config.transmit_level}")
    out += [
        f"efficiency = {config.efficiency!r}",
        f"slot_duration = {config.slot_duration!r}",
        f"beacon_power = {config.beacon_power!r} W",
        f"beacon_antennas = {config.beacon_antennas}",
        f"noise_power = {config.noise_power!r} W",
        f"path_loss_exponent = {config.path_loss_exponent!r}",
        f"rate_threshold = {config.rate_threshold!r}",
        "beacon_position = {!r}, {!r}".format(*config.beacon_position),
        "destination_position = {!r}, {!r}".format(*config.destination_position),
        "source_positions = " + "; ".join("{!r}, {!r}".format(*p) for p in config.source_positions),
    ]
    return "\n".join(out) + "\n"
