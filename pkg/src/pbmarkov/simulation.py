"""Seeded slot-level Monte Carlo simulation of the physical process.

Each slot: draw Rayleigh gains, read the eligible set off the battery
levels, either let every source harvest from the equal-weight beacon
(no eligible source) or select the eligible source with the strongest
destination link, let it transmit (consuming the transmit level) while the
others harvest from the ZF beacon plus the transmitter. Every slot's harvest
is discretized on its own and added in whole levels, clamped at L.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .analytic import cdf_harvest_it, cdf_harvest_nonit
from .config import NetworkConfig
from .errors import DomainError
from .model import EnergyQuantizer, build_channel_stats, discretize

DEFAULT_BURN_IN = 1000
BLOCK = 1 << 15


@dataclass
class SimulationStats:
    """Counts gathered over the recorded (post burn-in) slots.

    ``selected[t]`` is the transmitting source in recorded slot ``t`` or -1
    for a non-IT slot; kept so that batch-means standard errors and gap
    statistics can be derived after the fact.
    """

    config: NetworkConfig
    rng_seed: int
    burn_in: int
    slots_run: int
    energy_outage_slots: int
    transmissions: np.ndarray
    connection_outages: int
    state_occupancy: np.ndarray
    transition_counts: sparse.csr_matrix
    gap_count: np.ndarray
    gap_mean: np.ndarray
    gap_var: np.ndarray
    states: np.ndarray = field(repr=False)
    selected: np.ndarray = field(repr=False)
    outage: np.ndarray = field(repr=False)

    @property
    def eop(self) -> float:
        return self.energy_outage_slots / self.slots_run

    @property
    def cop(self) -> float:
        return self.connection_outages / self.slots_run

    @property
    def transmission_prob(self) -> np.ndarray:
        return self.transmissions / self.slots_run

    @property
    def occupancy(self) -> np.ndarray:
        return self.state_occupancy / self.slots_run

    def _batch_se(self, indicator: np.ndarray, batches: int) -> np.ndarray:
        """Batch-means standard error of the mean of ``indicator`` (rows = slots)."""
        n = indicator.shape[0] // batches * batches
        means = indicator[:n].reshape(batches, -1, *indicator.shape[1:]).mean(axis=1)
        return means.std(axis=0, ddof=1) / math.sqrt(batches)

    def standard_errors(self, batches: int = 50) -> dict:
        """Batch-means standard errors (accounting for slot-to-slot correlation)."""
        K = self.config.num_sources
        N = self.state_occupancy.size
        sel = self.selected
        out = {
            "eop": float(self._batch_se((sel < 0).astype(float), batches)),
            "cop": float(self._batch_se(self.outage.astype(float), batches)),
            "transmission_prob": self._batch_se(
                (sel[:, None] == np.arange(K)[None, :]).astype(float), batches
            ),
        }
        n = self.slots_run // batches * batches
        counts = np.stack([
            np.bincount(chunk, minlength=N)
            for chunk in self.states[:n].reshape(batches, -1)
        ]) / (n // batches)
        out["occupancy"] = counts.std(axis=0, ddof=1) / math.sqrt(batches)
        return out

    def binomial_errors(self) -> dict:
        n = self.slots_run
        se = lambda p: np.sqrt(p * (1 - p) / n)
        return {
            "eop": float(se(self.eop)),
            "cop": float(se(self.cop)),
            "transmission_prob": se(self.transmission_prob),
            "occupancy": se(self.occupancy),
        }


def _derive_seed(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def run_simulation(config: NetworkConfig, slots: int, seed: int = 0, burn_in: int = DEFAULT_BURN_IN,
                   initial_levels: Optional[Sequence[int]] = None) -> SimulationStats:
    """Simulate ``burn_in + slots`` slots; statistics cover the last ``slots``."""
    if slots < 1:
        raise DomainError("slots must be >= 1")
    if burn_in < 0:
        raise DomainError("burn_in must be >= 0")
    K, L = config.num_sources, config.levels
    N = (L + 1) ** K
    tx = config.tx_level
    stats = build_channel_stats(config)
    q = EnergyQuantizer.from_config(config)
    eta_t = config.efficiency * config.slot_duration
    pb, ps = config.beacon_power, config.source_power
    snr_scale = ps / config.noise_power
    gth = config.snr_threshold
    g_ss = np.nan_to_num(stats.source_source, nan=0.0)
    weights = [(L + 1) ** (K - 1 - k) for k in range(K)]

    levels = [0] * K if initial_levels is None else [int(v) for v in initial_levels]
    if len(levels) != K or any(not 0 <= v <= L for v in levels):
        raise DomainError(f"initial levels must be {K} integers in 0..{L}")

    total = burn_in + slots
    states = np.empty(total + 1, dtype=np.int64)
    selected = np.empty(total, dtype=np.int8 if K < 127 else np.int32)
    outage = np.zeros(total, dtype=bool)
    rng = _derive_seed(seed)

    t = 0
    states[0] = sum(l * w for l, w in zip(levels, weights))
    while t < total:
        b = min(BLOCK, total - t)
        sd = rng.exponential(size=(b, K)) * stats.source_dest
        bs = rng.exponential(size=(b, K)) * stats.beacon_source
        ss = rng.exponential(size=(b, K, K)) * g_ss
        nonit_lv = discretize(eta_t * pb * bs, q).tolist()
        it_lv = discretize(eta_t * (ps * ss + pb * bs[:, None, :]), q).tolist()
        fail = (snr_scale * sd < gth).tolist()
        sd = sd.tolist()
        for j in range(b):
            elig = [k for k in range(K) if levels[k] >= tx]
            if not elig:
                gain = nonit_lv[j]
                for k in range(K):
                    levels[k] = min(L, levels[k] + gain[k])
                selected[t] = -1
            else:
                row = sd[j]
                i = max(elig, key=row.__getitem__)
                gain = it_lv[j][i]
                for k in range(K):
                    if k == i:
                        levels[k] -= tx
                    else:
                        levels[k] = min(L, levels[k] + gain[k])
                selected[t] = i
                outage[t] = fail[j][i]
            t += 1
            states[t] = sum(l * w for l, w in zip(levels, weights))

    rec_states = states[burn_in:total]
    rec_next = states[burn_in + 1: total]
    rec_sel = selected[burn_in:]
    rec_out = outage[burn_in:]
    occupancy = np.bincount(rec_states, minlength=N)
    trans = sparse.coo_matrix(
        (np.ones(rec_next.size, dtype=np.int64), (rec_states[:-1], rec_next)), shape=(N, N)
    ).tocsr()
    transmissions = np.bincount(rec_sel[rec_sel >= 0].astype(np.int64), minlength=K)
    gap_count = np.zeros(K, dtype=np.int64)
    gap_mean = np.full(K, np.nan)
    gap_var = np.full(K, np.nan)
    for k in range(K):
        times = np.flatnonzero(rec_sel == k)
        if times.size >= 2:
            gaps = np.diff(times)
            gap_count[k] = gaps.size
            gap_mean[k] = gaps.mean()
            gap_var[k] = gaps.var(ddof=1) if gaps.size > 1 else 0.0
    return SimulationStats(
        config=config,
        rng_seed=int(seed),
        burn_in=burn_in,
        slots_run=slots,
        energy_outage_slots=int(np.count_nonzero(rec_sel < 0)),
        transmissions=transmissions,
        connection_outages=int(np.count_nonzero(rec_out)),
        state_occupancy=occupancy,
        transition_counts=trans,
        gap_count=gap_count,
        gap_mean=gap_mean,
        gap_var=gap_var,
        states=rec_states.copy(),
        selected=rec_sel.copy(),
        outage=rec_out.copy(),
    )


def replication_seeds(seed: int, replications: int) -> list[int]:
    """Independent child seeds derived from ``seed`` (stable across runs)."""
    children = np.random.SeedSequence(seed).spawn(replications)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def run_replications(config, slots, seed, replications, burn_in=DEFAULT_BURN_IN, jobs=1):
    """Run independent replications; results are ordered by replication index."""
    seeds = replication_seeds(seed, replications)
    if jobs <= 1:
        return [run_simulation(config, slots, s, burn_in) for s in seeds]
    with ThreadPoolExecutor(jobs) as pool:
        return list(pool.map(lambda s: run_simulation(config, slots, s, burn_in), seeds))


def empirical_transition_matrix(stats: SimulationStats, min_visits: int = 100):
    """Row-normalized transition counts.

    Returns ``(matrix, low_confidence)``. Rows with no outgoing transitions
    are NaN; rows with fewer than ``min_visits`` are flagged in
    ``low_confidence`` and should be excluded from comparisons.
    """
    counts = stats.transition_counts.toarray().astype(float)
    row = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        P = counts / row[:, None]
    P[row == 0] = np.nan
    return P, row < min_visits


# --- explicit-antenna CDF oracle ----------------------------------------------------

def _cn(rng, size, var=1.0):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * math.sqrt(var / 2.0)


def _zf_weights(rng, h_bd):
    """Unit vectors w with h_bd^T w = 0, random within the null space."""
    c = np.conj(h_bd)
    v = _cn(rng, h_bd.shape)
    proj = np.sum(np.conj(c) * v, axis=1, keepdims=True) / np.sum(np.abs(c) ** 2, axis=1, keepdims=True)
    w = v - proj * c
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def sample_harvest(config: NetworkConfig, samples: int, seed: int, k: int, i: Optional[int] = None,
                   beamformer: Optional[str] = None) -> np.ndarray:
    """Draw harvested energies from explicit N_B-antenna Gaussian channels.

    ``i is None`` samples the non-IT harvest (default equal-weight beam);
    otherwise the harvest at ``k`` while ``i`` transmits (default ZF beam).
    """
    stats = build_channel_stats(config)
    rng = _derive_seed(seed)
    nb = config.beacon_antennas
    if beamformer is None:
        beamformer = "equal" if i is None else "zf"
    if beamformer not in ("equal", "zf"):
        raise DomainError(f"unknown beamformer {beamformer!r}")
    eta_t = config.efficiency * config.slot_duration
    out = np.empty(samples)
    done = 0
    while done < samples:
        b = min(1 << 17, samples - done)
        h = _cn(rng, (b, nb), stats.beacon_source[k])
        if beamformer == "equal":
            w = np.full((b, nb), 1.0 / math.sqrt(nb))
        else:
            if nb < 2:
                raise DomainError("ZF beamforming needs at least two beacon antennas")
            w = _zf_weights(rng, _cn(rng, (b, nb), stats.beacon_dest))
        x3 = config.beacon_power * np.abs(np.sum(h * w, axis=1)) ** 2
        if i is None:
            e = eta_t * x3
        else:
            if i == k:
                raise DomainError("the transmitting source does not harvest")
            hss = _cn(rng, b, stats.source_source[i, k])
            e = eta_t * (config.source_power * np.abs(hss) ** 2 + x3)
        out[done:done + b] = e
        done += b
    return out


def empirical_cdf_check(config: NetworkConfig, k: int, i: Optional[int] = None, samples: int = 10**6,
                        seed: int = 0, grid=None, beamformer=None) -> float:
    """Max |ECDF - analytic CDF| over ``grid`` for the chosen harvest distribution."""
    if samples < 10**4:
        raise DomainError("use at least 1e4 samples")
    stats = build_channel_stats(config)
    x = np.sort(sample_harvest(config, samples, seed, k, i, beamformer))
    if grid is None:
        grid = np.linspace(0.0, x[int(0.999 * samples)], 400)
    grid = np.asarray(grid, dtype=float)
    ecdf = np.searchsorted(x, grid, side="right") / samples
    if i is None:
        F = cdf_harvest_nonit(grid, k, stats, config)
    else:
        F = cdf_harvest_it(grid, k, i, stats, config)
    return float(np.max(np.abs(ecdf - F)))
