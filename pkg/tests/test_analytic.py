import math

import numpy as np
import pytest
from scipy import integrate

from pbmarkov.analytic import (
    build_model,
    cdf_harvest_it,
    cdf_harvest_nonit,
    it_means,
    nonit_mean,
    per_source_transition_it,
    per_source_transition_nonit,
    selection_probability,
    state_transition_probability,
)
from pbmarkov.config import dbm_to_watt, table1_config
from pbmarkov.errors import CapacityError, DomainError
from pbmarkov.model import EnergyQuantizer, build_channel_stats, enumerate_states


@pytest.fixture(scope="module")
def setup():
    cfg = table1_config()
    return cfg, build_channel_stats(cfg), EnergyQuantizer.from_config(cfg)


def conv_cdf(x, a, b):
    """Oracle: integrate the convolution of two exponential densities."""
    dens = lambda t: integrate.quad(lambda u: math.exp(-u / a) / a * math.exp(-(t - u) / b) / b, 0, t)[0]
    return integrate.quad(dens, 0, x, limit=200)[0]


def test_nonit_cdf_examples(setup):
    cfg, stats, _ = setup
    m = nonit_mean(0, stats, cfg)
    assert m == pytest.approx(0.8 * 0.125)
    assert cdf_harvest_nonit(0.0, 0, stats, cfg) == 0.0
    assert cdf_harvest_nonit(m * math.log(2), 0, stats, cfg) == pytest.approx(0.5)
    assert cdf_harvest_nonit(0.01, 0, stats, cfg) == pytest.approx(1 - math.exp(-0.1), abs=1e-12)
    assert cdf_harvest_nonit(0.01, 0, stats, cfg) == pytest.approx(0.09516, abs=1e-5)


def test_nonit_cdf_independent_of_antennas(setup):
    cfg, stats, _ = setup
    v = cdf_harvest_nonit(0.02, 1, stats, cfg)
    cfg2 = cfg.replace(beacon_antennas=1)
    assert cdf_harvest_nonit(0.02, 1, build_channel_stats(cfg2), cfg2) == v


def test_it_cdf_at_zero(setup):
    cfg, stats, _ = setup
    assert cdf_harvest_it(0.0, 0, 1, stats, cfg) == 0.0


def test_it_cdf_literal_and_convolution(setup):
    cfg, stats, _ = setup
    a, b = it_means(0, 1, stats, cfg)
    for x in (0.001, 0.01, 0.05, 0.2):
        literal = 1 - (a * math.exp(-x / a) - b * math.exp(-x / b)) / (a - b)
        got = cdf_harvest_it(x, 0, 1, stats, cfg)
        assert got == pytest.approx(literal, abs=1e-13)
        assert got == pytest.approx(conv_cdf(x, a, b), abs=1e-8)


def test_erlang_limit():
    # equal means m: choose P_B so that P_B*g_BS1 equals P_S*g_S2S1
    cfg = table1_config()
    stats = build_channel_stats(cfg)
    pb = cfg.source_power * stats.source_source[1, 0] / stats.beacon_source[0]
    cfg = cfg.replace(beacon_power=pb)
    stats = build_channel_stats(cfg)
    a, b = it_means(0, 1, stats, cfg)
    assert a == pytest.approx(b, rel=1e-12)
    assert cdf_harvest_it(a, 0, 1, stats, cfg) == pytest.approx(1 - 2 / math.e, abs=1e-12)
    assert cdf_harvest_it(a, 0, 1, stats, cfg) == pytest.approx(0.26424, abs=1e-5)


@pytest.mark.parametrize("rel", [1e-12, 1e-10, 5e-10, 2e-9, 1e-8, 1e-6, 1e-4])
def test_it_cdf_continuous_across_singularity(rel):
    cfg = table1_config()
    stats = build_channel_stats(cfg)
    pb = cfg.source_power * stats.source_source[1, 0] / stats.beacon_source[0] * (1 + rel)
    cfg = cfg.replace(beacon_power=pb)
    stats = build_channel_stats(cfg)
    a, b = it_means(0, 1, stats, cfg)
    for x in (0.1 * a, a, 3 * a):
        erl = 1 - math.exp(-x / a) * (1 + x / a)
        assert cdf_harvest_it(x, 0, 1, stats, cfg) == pytest.approx(erl, abs=max(1e-9, 2 * rel))


def test_cdf_domain(setup):
    cfg, stats, _ = setup
    with pytest.raises(DomainError):
        cdf_harvest_it(0.01, 1, 1, stats, cfg)
    with pytest.raises(DomainError):
        cdf_harvest_nonit(-0.1, 0, stats, cfg)


def test_cdf_vectorised_monotone(setup):
    cfg, stats, _ = setup
    x = np.linspace(0, 1, 500)
    for F in (cdf_harvest_nonit(x, 0, stats, cfg), cdf_harvest_it(x, 1, 0, stats, cfg)):
        assert np.all(np.diff(F) >= 0) and F[0] == 0 and F[-1] > 0.99


def test_selection_examples(setup):
    cfg, stats, _ = setup
    assert selection_probability([1], 1, stats) == 1.0
    assert selection_probability([0, 1], 0, stats) == pytest.approx(0.4963, abs=5e-5)
    assert selection_probability([0, 1], 1, stats) == pytest.approx(0.5037, abs=5e-5)
    with pytest.raises(DomainError):
        selection_probability([1], 0, stats)


def test_selection_symmetric():
    cfg = table1_config(num_sources=3, source_positions=((0.0, 1.0), (0.0, -1.0), (0.0, 5.0)),
                        destination_position=(200.0, 0.0))
    stats = build_channel_stats(cfg)
    assert selection_probability([0, 1], 0, stats) == pytest.approx(0.5, abs=1e-12)


def test_selection_matches_argmax_mc():
    cfg = table1_config(num_sources=4, source_radius=20.0, destination_x=60.0)
    stats = build_channel_stats(cfg)
    rng = np.random.default_rng(5)
    g = rng.exponential(stats.source_dest, size=(400_000, 4))
    freq = np.bincount(np.argmax(g, axis=1), minlength=4) / g.shape[0]
    p = [selection_probability(range(4), i, stats) for i in range(4)]
    assert sum(p) == pytest.approx(1.0, abs=1e-12)
    se = np.sqrt(freq * (1 - freq) / g.shape[0])
    assert np.all(np.abs(freq - p) < 4 * se)


def test_selection_capacity():
    from pbmarkov.model import ChannelStats
    K = 17
    stats = ChannelStats(np.ones(K), np.ones(K), np.ones((K, K)), 1.0)
    with pytest.raises(CapacityError):
        selection_probability(range(K), 0, stats)


def test_per_source_branches(setup):
    cfg, stats, q = setup
    F1 = cdf_harvest_nonit(0.01, 0, stats, cfg)
    assert per_source_transition_nonit(0, 0, False, stats, cfg, q) == pytest.approx(F1)
    assert per_source_transition_nonit(0, 0, True, stats, cfg, q) == pytest.approx(1.0)
    assert per_source_transition_nonit(0, -1, False, stats, cfg, q) == 0.0
    G1 = cdf_harvest_it(0.01, 0, 1, stats, cfg)
    assert per_source_transition_it(0, 1, 0, False, stats, cfg, q) == pytest.approx(G1)
    with pytest.raises(DomainError):
        per_source_transition_it(1, 1, 0, False, stats, cfg, q)


@pytest.mark.parametrize("start", [0, 1, 2])
def test_per_source_telescopes(setup, start):
    cfg, stats, q = setup
    L = cfg.levels
    for fn in (lambda dl, f: per_source_transition_nonit(0, dl, f, stats, cfg, q),
               lambda dl, f: per_source_transition_it(0, 1, dl, f, stats, cfg, q)):
        total = sum(fn(dl, start + dl == L) for dl in range(L - start + 1))
        assert total == pytest.approx(1.0, abs=1e-14)


def test_routes_agree():
    for cfg in (table1_config(), table1_config(levels=4, capacity=0.04),
                table1_config(num_sources=3, levels=3, capacity=0.03, beacon_power=dbm_to_watt(35)),
                table1_config(levels=6, capacity=0.03, threshold_energy=0.01)):
        model = build_model(cfg)
        space, stats = model.state_space, model.stats
        q = EnergyQuantizer.from_config(cfg)
        for n in range(space.size):
            row = [state_transition_probability(n, m, space, stats, cfg, q) for m in range(space.size)]
            np.testing.assert_allclose(model.matrix[n], row, atol=1e-14)


def test_table1_cells_reproducible_from_stated_parameters(t1_model):
    # cells that do not depend on the harvest-mean discrepancy noted in the README
    A = t1_model.matrix
    assert A[0].sum() == pytest.approx(1.0)
    assert A[3, 3:].sum() == 0.0            # [1,0]: source 1 must transmit
    assert A[1, 1] == 0.0 and A[1, 2] == 0.0  # [0,1] -> source 2 drops to 0


def test_k1_rows_decrement_only():
    cfg = table1_config(num_sources=1, source_positions=((-1.0, 0.0),))
    model = build_model(cfg)
    A = model.matrix
    assert A[1].tolist() == [1.0, 0.0, 0.0]
    assert A[2].tolist() == [0.0, 1.0, 0.0]
    assert A[0].sum() == pytest.approx(1.0)


def test_nonit_rows_never_decrease(t1_model):
    A = t1_model.matrix
    lv = t1_model.state_space.levels
    for n in t1_model.state_space.non_it:
        for m in np.flatnonzero(A[n]):
            assert np.all(lv[m] >= lv[n])


@pytest.mark.parametrize("cfg", [
    table1_config(),
    table1_config(num_sources=3, levels=4, capacity=0.04, beacon_power=dbm_to_watt(40)),
    table1_config(num_sources=4, levels=3, capacity=0.03, source_radius=2.5),
    table1_config(levels=10, capacity=0.05, threshold_energy=0.012, beacon_power=dbm_to_watt(20)),
])
def test_row_stochastic(cfg):
    A = build_model(cfg).matrix
    assert np.max(np.abs(A.sum(axis=1) - 1)) <= 1e-9
    assert A.min() >= 0
    with pytest.raises(ValueError):
        A[0, 0] = 0.5


def test_transmit_level_above_threshold():
    with pytest.warns(UserWarning):
        cfg = table1_config(levels=4, capacity=0.04, transmit_level=2)
    model = build_model(cfg)
    sp = model.state_space
    assert sp.eligible[sp.index([1, 1])] == ()
    assert model.matrix[sp.index([2, 1])][sp.index([0, 1])] > 0
