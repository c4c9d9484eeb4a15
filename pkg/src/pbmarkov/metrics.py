"""Energy outage, connection outage, transmission probability and delay."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import TransitionModel
from .config import NetworkConfig
from .errors import DomainError
from .model import ChannelStats, StateSpace
from .stationary import StationaryDistribution, solve_stationary


def _pi(pi):
    return np.asarray(getattr(pi, "pi", pi), dtype=float)


def energy_outage_probability(pi, space: StateSpace) -> float:
    p = _pi(pi)
    return float(sum(p[n] for n in space.non_it))


def connection_outage_state(n: int, space: StateSpace, stats: ChannelStats, config: NetworkConfig) -> float:
    """P(best eligible link is below the SNR threshold) in IT state ``n``.

    Does not depend on the selection probabilities: the selected source's
    gain is the maximum over the eligible set.
    """
    elig = space.eligible[n]
    if not elig:
        raise DomainError(f"state s{n + 1} is a non-IT state; no transmission occurs")
    x = config.noise_power * config.snr_threshold / config.source_power
    return math.prod(-math.expm1(-x / stats.source_dest[k]) for k in elig)


def connection_outage_overall(pi, space, stats, config) -> float:
    """Sum over IT states of pi_n * P_CO,n (weighted over all slots, not renormalized)."""
    p = _pi(pi)
    return float(sum(p[n] * connection_outage_state(n, space, stats, config) for n in space.it))


def transmission_probability(i: int, pi, model: TransitionModel) -> float:
    p = _pi(pi)
    return float(p @ model.selection[:, i])


def average_transmission_delay(i: int, pi, model: TransitionModel) -> float:
    """Mean time between selections of source ``i`` in seconds (inf if it never transmits)."""
    pt = transmission_probability(i, pi, model)
    if pt <= 0.0:
        return math.inf
    return model.config.slot_duration / pt


@dataclass(frozen=True)
class MetricsReport:
    eop: float
    cop_overall: float
    cop_conditional: float  # overall COP divided by the IT-slot probability 1 - EOP
    cop_per_state: dict  # state index -> COP, IT states only
    transmission_prob: np.ndarray
    atd_seconds: np.ndarray
    atd_slots: np.ndarray
    snr_threshold: float
    source_power: float
    pi: np.ndarray


def compute_metrics(model: TransitionModel, stationary: StationaryDistribution | None = None) -> MetricsReport:
    st = stationary if stationary is not None else solve_stationary(model)
    pi = st.pi
    space, stats, config = model.state_space, model.stats, model.config
    eop = energy_outage_probability(pi, space)
    cop_states = {n: connection_outage_state(n, space, stats, config) for n in space.it}
    cop = float(sum(pi[n] * c for n, c in cop_states.items()))
    pt = np.array([transmission_probability(i, pi, model) for i in range(space.num_sources)])
    atd = np.array([average_transmission_delay(i, pi, model) for i in range(space.num_sources)])
    it_mass = 1.0 - eop
    return MetricsReport(
        eop=eop,
        cop_overall=cop,
        cop_conditional=cop / it_mass if it_mass > 0 else math.nan,
        cop_per_state=cop_states,
        transmission_prob=pt,
        atd_seconds=atd,
        atd_slots=atd / config.slot_duration,
        snr_threshold=config.snr_threshold,
        source_power=config.source_power,
        pi=pi,
    )
