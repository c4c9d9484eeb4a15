"""Channel statistics, energy quantization and the energy state space.

Indexing is 0-based throughout the Python API: source ``k`` is
``S_{k+1}`` and flat state index ``n`` is ``s_{n+1}``. States are ordered
mixed-radix with source 0 most significant and levels ascending, so for
K=2, L=2 the order is [0,0], [0,1], [0,2], [1,0], ..., [2,2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .config import NetworkConfig
from .errors import CapacityError, ConfigError, DomainError

DEFAULT_MAX_STATES = 10**6


@dataclass(frozen=True)
class ChannelStats:
    """Mean channel power gains d^-alpha for every node pair.

    ``source_source`` has NaN on its diagonal (no self link).
    """

    beacon_source: np.ndarray
    source_dest: np.ndarray
    source_source: np.ndarray
    beacon_dest: float


def _gain(a, b, alpha, names):
    d = math.dist(a, b)
    if d == 0.0:
        raise ConfigError(f"nodes {names[0]} and {names[1]} coincide", key="positions")
    return d ** (-alpha)


def build_channel_stats(config: NetworkConfig) -> ChannelStats:
    alpha = config.path_loss_exponent
    B, D, S = config.beacon_position, config.destination_position, config.source_positions
    K = config.num_sources
    bs = np.array([_gain(B, S[k], alpha, ("B", f"S{k + 1}")) for k in range(K)])
    sd = np.array([_gain(S[k], D, alpha, (f"S{k + 1}", "D")) for k in range(K)])
    ss = np.full((K, K), np.nan)
    for i in range(K):
        for k in range(i + 1, K):
            ss[i, k] = ss[k, i] = _gain(S[i], S[k], alpha, (f"S{i + 1}", f"S{k + 1}"))
    for arr in (bs, sd, ss):
        arr.setflags(write=False)
    return ChannelStats(bs, sd, ss, _gain(B, D, alpha, ("B", "D")))


@dataclass(frozen=True)
class EnergyQuantizer:
    unit: float
    levels: int
    threshold_level: int

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "EnergyQuantizer":
        return cls(config.unit_energy, config.levels, config.threshold_level)

    def energy(self, level: int) -> float:
        return level * self.unit

    @cached_property
    def level_energies(self) -> np.ndarray:
        e = np.arange(self.levels + 1) * self.unit
        e.setflags(write=False)
        return e


def discretize(energy, q: EnergyQuantizer):
    """Largest level whose energy does not exceed ``energy``, clamped at L.

    Accepts scalars or arrays.
    """
    e = np.asarray(energy, dtype=float)
    if np.any(e < 0) or np.any(np.isnan(e)):
        raise DomainError("harvested energy must be non-negative")
    lev = np.searchsorted(q.level_energies, e, side="right") - 1
    if lev.ndim == 0:
        return int(lev)
    return lev


def threshold_level(threshold_energy: float, unit: float, levels: int) -> int:
    """Smallest l in 1..L with l*unit >= threshold_energy."""
    if threshold_energy <= 0:
        raise ConfigError("threshold energy must be positive", key="threshold_energy")
    for l in range(1, levels + 1):
        if l * unit >= threshold_energy:
            return l
    # tolerate round-off at the capacity itself (e.g. capacity/L*L != capacity)
    if math.isclose(levels * unit, threshold_energy, rel_tol=1e-12):
        return levels
    raise ConfigError("threshold unreachable: exceeds the storage capacity", key="threshold_energy")


def state_index(levels: Sequence[int], num_levels: int) -> int:
    """Flat 0-based index of a level vector (source 0 most significant)."""
    n = 0
    base = num_levels + 1
    for l in levels:
        if not (0 <= l <= num_levels):
            raise DomainError(f"level {l} outside 0..{num_levels}")
        n = n * base + int(l)
    return n


def state_levels(n: int, num_sources: int, num_levels: int) -> tuple[int, ...]:
    base = num_levels + 1
    if not (0 <= n < base**num_sources):
        raise DomainError(f"state index {n} outside 0..{base**num_sources - 1}")
    out = []
    for _ in range(num_sources):
        n, r = divmod(n, base)
        out.append(r)
    return tuple(reversed(out))


@dataclass(frozen=True)
class EnergyState:
    levels: tuple[int, ...]
    index: int

    @property
    def label(self) -> str:
        return f"s{self.index + 1}"


@dataclass(frozen=True)
class StateSpace:
    """All ``(L+1)^K`` states plus the non-IT / IT partition.

    ``eligible[n]`` lists sources holding at least the transmit level;
    ``full[n]`` lists sources at level L. Θ1 (``non_it``) is the set of
    states with no eligible source.
    """

    num_sources: int
    num_levels: int
    tx_level: int
    levels: np.ndarray  # (N, K) int
    eligible: tuple[tuple[int, ...], ...]
    full: tuple[tuple[int, ...], ...]
    non_it: tuple[int, ...]
    it: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.levels.shape[0]

    def state(self, n: int) -> EnergyState:
        return EnergyState(tuple(int(v) for v in self.levels[n]), n)

    def index(self, levels: Sequence[int]) -> int:
        if len(levels) != self.num_sources:
            raise DomainError(f"expected {self.num_sources} levels, got {len(levels)}")
        return state_index(levels, self.num_levels)

    def is_non_it(self, n: int) -> bool:
        return not self.eligible[n]

    def labels(self) -> list[str]:
        return [f"s{n + 1}" for n in range(self.size)]


def enumerate_states(config: NetworkConfig, max_states: int = DEFAULT_MAX_STATES) -> StateSpace:
    K, L = config.num_sources, config.levels
    N = (L + 1) ** K
    if N > max_states:
        raise CapacityError(
            f"{N} states exceed the limit of {max_states}; reduce num_sources or levels"
        )
    lvl = np.array(np.unravel_index(np.arange(N), (L + 1,) * K)).T.astype(int).reshape(N, K)
    lvl.setflags(write=False)
    tx = config.tx_level
    eligible = tuple(tuple(int(k) for k in np.flatnonzero(row >= tx)) for row in lvl)
    full = tuple(tuple(int(k) for k in np.flatnonzero(row == L)) for row in lvl)
    non_it = tuple(n for n in range(N) if not eligible[n])
    it = tuple(n for n in range(N) if eligible[n])
    return StateSpace(K, L, tx, lvl, eligible, full, non_it, it)
