import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbmarkov.errors import CapacityError, ConfigError, DomainError
from pbmarkov.model import (
    EnergyQuantizer,
    build_channel_stats,
    discretize,
    enumerate_states,
    state_index,
    state_levels,
    threshold_level,
)
from pbmarkov.config import table1_config


def test_channel_stats_examples(t1_config):
    s = build_channel_stats(t1_config)
    assert s.beacon_source[0] == pytest.approx(0.125)
    assert s.source_source[0, 1] == pytest.approx(2 ** -1.5, rel=1e-12)
    assert s.source_source[1, 0] == s.source_source[0, 1]
    assert np.isnan(s.source_source[0, 0])
    assert s.source_dest[0] == pytest.approx(201.0 ** -3)


def test_unit_distance_gives_unit_gain():
    cfg = table1_config(beacon_position=(-2.0, 0.0))
    assert build_channel_stats(cfg).beacon_source[0] == pytest.approx(1.0)


def test_stats_read_only(t1_config):
    s = build_channel_stats(t1_config)
    with pytest.raises(ValueError):
        s.beacon_source[0] = 1.0


Q = EnergyQuantizer(unit=0.01, levels=2, threshold_level=1)


@pytest.mark.parametrize("e,level", [(0.025, 2), (0.00999, 0), (0.01, 1), (0.0, 0), (0.02, 2), (1e3, 2)])
def test_discretize_examples(e, level):
    assert discretize(e, Q) == level


def test_discretize_vectorised():
    np.testing.assert_array_equal(discretize(np.array([0.0, 0.015, 0.5]), Q), [0, 1, 2])


@pytest.mark.parametrize("bad", [-1e-9, float("nan")])
def test_discretize_domain(bad):
    with pytest.raises(DomainError):
        discretize(bad, Q)


@settings(max_examples=200, deadline=None)
@given(e1=st.floats(0, 1), e2=st.floats(0, 1), L=st.integers(1, 12), unit=st.floats(1e-4, 0.2))
def test_discretize_properties(e1, e2, L, unit):
    q = EnergyQuantizer(unit=unit, levels=L, threshold_level=1)
    l1, l2 = discretize(e1, q), discretize(e2, q)
    assert 0 <= l1 <= L
    if e1 <= e2:
        assert l1 <= l2
    assert q.energy(l1) <= e1 or l1 == 0
    if l1 < L:
        assert e1 < q.energy(l1 + 1) * (1 + 1e-12)


@pytest.mark.parametrize("th,unit,L,expected", [(0.01, 0.01, 2, 1), (0.004, 0.004, 5, 1), (0.01, 0.004, 5, 3)])
def test_threshold_level_examples(th, unit, L, expected):
    assert threshold_level(th, unit, L) == expected


def test_threshold_level_unreachable():
    with pytest.raises(ConfigError):
        threshold_level(0.03, 0.01, 2)


def test_state_index_examples():
    assert state_index([0, 1], 2) + 1 == 2
    assert state_index([0, 0], 2) + 1 == 1
    assert state_index([2, 2], 2) + 1 == 9
    assert state_levels(1, 2, 2) == (0, 1)


@pytest.mark.parametrize("K,L", [(1, 1), (1, 5), (2, 2), (3, 3), (4, 2), (2, 7)])
def test_state_index_bijection(K, L):
    N = (L + 1) ** K
    seen = set()
    for n in range(N):
        lv = state_levels(n, K, L)
        assert state_index(lv, L) == n
        seen.add(lv)
    assert seen == set(itertools.product(range(L + 1), repeat=K))


def test_state_index_domain():
    with pytest.raises(DomainError):
        state_index([0, 3], 2)
    with pytest.raises(DomainError):
        state_levels(9, 2, 2)
    with pytest.raises(DomainError):
        state_levels(-1, 2, 2)


def test_enumerate_table1(t1_config):
    sp = enumerate_states(t1_config)
    assert sp.size == 9
    assert sp.non_it == (0,)
    assert len(sp.it) == 8
    assert sp.labels()[4] == "s5"
    assert sp.state(4).levels == (1, 1)
    assert sp.eligible[1] == (1,)


def test_enumerate_small_and_k3():
    sp = enumerate_states(table1_config(num_sources=1, levels=1, capacity=0.01, source_positions=((-1.0, 0.0),)))
    assert [tuple(r) for r in sp.levels] == [(0,), (1,)]
    sp3 = enumerate_states(table1_config(num_sources=3, source_positions=((-1.0, 0.0), (0.0, 1.0), (1.0, 0.0))))
    assert sp3.size == 27 and len(sp3.non_it) == 1


def test_enumerate_capacity():
    with pytest.raises(CapacityError, match="reduce"):
        enumerate_states(table1_config(), max_states=8)
