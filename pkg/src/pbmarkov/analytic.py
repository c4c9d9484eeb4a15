"""Closed-form harvest distributions, source selection and the transition matrix."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import NetworkConfig
from .errors import CapacityError, DomainError, NumericalConsistencyError
from .model import ChannelStats, EnergyQuantizer, StateSpace

ERLANG_SWITCH = 1e-9
ROW_SUM_TOL = 1e-9
MAX_ELIGIBLE = 16


# --- harvested-energy distributions -------------------------------------------------

def nonit_mean(k: int, stats: ChannelStats, config: NetworkConfig) -> float:
    """Mean energy harvested by source ``k`` from the equal-weight beacon (joules)."""
    return config.efficiency * config.slot_duration * config.beacon_power * stats.beacon_source[k]


def it_means(k: int, i: int, stats: ChannelStats, config: NetworkConfig) -> tuple[float, float]:
    """Means of the beacon and source-``i`` contributions to source ``k``'s IT-slot harvest."""
    if k == i:
        raise DomainError("the transmitting source does not harvest")
    scale = config.efficiency * config.slot_duration
    beacon = scale * config.beacon_power * stats.beacon_source[k]
    source = scale * config.source_power * stats.source_source[i, k]
    return beacon, source


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("harvest energy argument must be non-negative")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def survival_nonit(x, k, stats, config):
    x = _check_x(x)
    return _out(np.exp(-x / nonit_mean(k, stats, config)))


def cdf_harvest_nonit(x, k: int, stats: ChannelStats, config: NetworkConfig):
    """CDF of the non-IT harvest at source ``k``: exponential with mean eta*T0*P_B*g_BSk.

    Independent of the antenna count: the equal-weight beam leaves the
    effective gain exponential with the single-antenna mean.
    """
    x = _check_x(x)
    return _out(-np.expm1(-x / nonit_mean(k, stats, config)))


def _hypoexp_survival(x, a, b):
    """P(X > x) for X = Exp(mean a) + Exp(mean b)."""
    hi, lo = max(a, b), min(a, b)
    if (hi - lo) / hi < ERLANG_SWITCH:
        m = a
        return np.exp(-x / m) * (1.0 + x / m)
    delta = (hi - lo) / (hi * lo)  # 1/lo - 1/hi
    return np.exp(-x / hi) * (1.0 - lo * np.expm1(-x * delta) / (hi - lo))


def survival_it(x, k, i, stats, config):
    x = _check_x(x)
    a, b = it_means(k, i, stats, config)
    return _out(_hypoexp_survival(x, a, b))


def cdf_harvest_it(x, k: int, i: int, stats: ChannelStats, config: NetworkConfig):
    """CDF of source ``k``'s harvest while source ``i`` transmits.

    The harvest is eta*T0*(P_S|h_ik|^2 + P_B|h_Bk^T w_ZF|^2), a sum of two
    exponentials. Evaluated as 1 - [a e^{-x/a} - b e^{-x/b}]/(a-b) in an
    expm1 form that stays finite for any ratio of the means; when the means
    agree to within 1e-9 (relative) the Erlang-2 limit is used instead.
    """
    x = _check_x(x)
    a, b = it_means(k, i, stats, config)
    return _out(1.0 - _hypoexp_survival(x, a, b))


# --- source selection ---------------------------------------------------------------

def selection_probability(eligible: Sequence[int], i: int, stats: ChannelStats) -> float:
    """Probability that eligible source ``i`` has the strongest link to the destination.

    Inclusion-exclusion over subsets of the competing eligible sources:
    sum over subsets C of (-1)^|C| / (g_iD * sum_{k in C} 1/g_kD + 1).
    """
    eligible = list(eligible)
    if i not in eligible:
        raise DomainError(f"source {i} is not eligible")
    if len(eligible) > MAX_ELIGIBLE:
        raise CapacityError(f"selection sum over {len(eligible)} eligible sources exceeds {MAX_ELIGIBLE}")
    gi = stats.source_dest[i]
    inv = [1.0 / stats.source_dest[k] for k in eligible if k != i]
    total = 0.0
    for mask in itertools.product((0, 1), repeat=len(inv)):
        s = sum(v for bit, v in zip(mask, inv) if bit)
        total += (-1) ** sum(mask) / (gi * s + 1.0)
    return total


# --- per-source transitions ---------------------------------------------------------

def _band(survival, dl, reaches_full, q: EnergyQuantizer):
    if dl < 0:
        return 0.0
    lo = survival(q.energy(dl))
    if reaches_full:
        return float(lo)
    p = float(lo - survival(q.energy(dl + 1)))
    return max(p, 0.0)


def per_source_transition_nonit(k, dl, reaches_full, stats, config, q) -> float:
    """Probability that source ``k`` gains ``dl`` levels in a non-IT slot.

    Not full: F(e_{dl+1}) - F(e_dl); landing at level L: 1 - F(e_dl).
    """
    return _band(lambda x: survival_nonit(x, k, stats, config), dl, reaches_full, q)


def per_source_transition_it(k, i, dl, reaches_full, stats, config, q) -> float:
    if k == i:
        raise DomainError("the transmitting source does not harvest")
    return _band(lambda x: survival_it(x, k, i, stats, config), dl, reaches_full, q)


def _marginal(survival_at_levels: np.ndarray, level: int, L: int) -> np.ndarray:
    """Distribution of the next level of one source, given its survival at e_0..e_L."""
    v = np.zeros(L + 1)
    span = L - level
    s = survival_at_levels[: span + 1]
    v[level:L] = np.maximum(s[:-1] - s[1:], 0.0)
    v[L] = s[span]
    return v


# --- composite transitions ----------------------------------------------------------

def state_transition_probability(n, n2, space: StateSpace, stats, config, q) -> float:
    """One-step transition probability from state ``n`` to ``n2`` (scalar route)."""
    cur, nxt = space.levels[n], space.levels[n2]
    L = space.num_levels
    dl = [int(b - a) for a, b in zip(cur, nxt)]
    K = space.num_sources
    if not space.eligible[n]:
        if any(d < 0 for d in dl):
            return 0.0
        return math.prod(
            per_source_transition_nonit(k, dl[k], nxt[k] == L, stats, config, q) for k in range(K)
        )
    explaining = [
        i for i in space.eligible[n]
        if dl[i] == -space.tx_level and all(dl[k] >= 0 for k in range(K) if k != i)
    ]
    assert len(explaining) <= 1, "two transmitters explain the same transition"
    total = 0.0
    for i in explaining:
        p = selection_probability(space.eligible[n], i, stats)
        for k in range(K):
            if k != i:
                p *= per_source_transition_it(k, i, dl[k], nxt[k] == L, stats, config, q)
        total += p
    return total


@dataclass(frozen=True)
class TransitionModel:
    """Row-stochastic transition matrix with cached selection probabilities.

    ``selection[n, i]`` is the probability that source ``i`` transmits in
    state ``n`` (zero for non-eligible sources and for non-IT states).
    """

    matrix: np.ndarray
    state_space: StateSpace
    selection: np.ndarray
    stats: ChannelStats
    config: NetworkConfig

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def build_transition_model(space: StateSpace, stats: ChannelStats, config: NetworkConfig,
                           q: EnergyQuantizer) -> TransitionModel:
    """Assemble A row by row as Kronecker products of per-source marginals."""
    K, L, N = space.num_sources, space.num_levels, space.size
    energies = q.level_energies
    s_nonit = np.array([survival_nonit(energies, k, stats, config) for k in range(K)])
    s_it = np.full((K, K, L + 1), np.nan)
    for i in range(K):
        for k in range(K):
            if k != i:
                s_it[i, k] = survival_it(energies, k, i, stats, config)

    A = np.zeros((N, N))
    sel = np.zeros((N, K))
    for n in range(N):
        lv = space.levels[n]
        elig = space.eligible[n]
        if not elig:
            row = np.ones(1)
            for k in range(K):
                row = np.kron(row, _marginal(s_nonit[k], lv[k], L))
            A[n] = row
            continue
        for i in elig:
            p = selection_probability(elig, i, stats)
            sel[n, i] = p
            row = np.ones(1)
            for k in range(K):
                if k == i:
                    v = np.zeros(L + 1)
                    v[lv[i] - space.tx_level] = 1.0
                else:
                    v = _marginal(s_it[i, k], lv[k], L)
                row = np.kron(row, v)
            A[n] += p * row

    dev = np.abs(A.sum(axis=1) - 1.0)
    worst = int(np.argmax(dev))
    if dev[worst] > ROW_SUM_TOL:
        raise NumericalConsistencyError(
            f"row s{worst + 1} of the transition matrix sums to {A[worst].sum():.12g}"
        )
    if A.min() < 0.0 or A.max() > 1.0 + ROW_SUM_TOL:
        raise NumericalConsistencyError("transition probability outside [0, 1]")
    A.setflags(write=False)
    sel.setflags(write=False)
    return TransitionModel(A, space, sel, stats, config)


def build_model(config: NetworkConfig, max_states: int | None = None) -> TransitionModel:
    """Convenience: channel stats, quantizer, states and matrix from a config."""
    from .model import DEFAULT_MAX_STATES, build_channel_stats, enumerate_states

    stats = build_channel_stats(config)
    q = EnergyQuantizer.from_config(config)
    space = enumerate_states(config, max_states or DEFAULT_MAX_STATES)
    return build_transition_model(space, stats, config, q)
