import numpy as np
import pytest

from pbmarkov.config import dbm_to_watt, table1_config
from pbmarkov.errors import ConfigError
from pbmarkov.sweep import HEADER, PARAMETERS, SweepSpec, apply_parameter, load_sweep, run_sweep, series

BASE = table1_config()


def test_unknown_parameter_lists_valid_names():
    with pytest.raises(ConfigError) as exc:
        SweepSpec(BASE, "antenna_gain", (1.0, 2.0))
    for name in PARAMETERS:
        assert name in str(exc.value)


@pytest.mark.parametrize("values", [(), (1.0, 1.0), (1.0, 3.0, 2.0)])
def test_grid_must_be_monotone(values):
    with pytest.raises(ConfigError):
        SweepSpec(BASE, "beacon_power", values)


def test_decreasing_grid_allowed():
    SweepSpec(BASE, "beacon_power", (2.0, 1.0))


def test_apply_parameter():
    assert apply_parameter(BASE, "beacon_x", -5.0).beacon_position == (-5.0, 0.0)
    c = apply_parameter(BASE, "num_sources", 3)
    assert c.num_sources == 3 and len(c.source_positions) == 3
    c = apply_parameter(BASE, "capacity", 0.05, hold="unit")
    assert c.levels == 5 and c.unit_energy == pytest.approx(0.01)
    c = apply_parameter(BASE, "capacity", 0.05)
    assert c.levels == 2 and c.unit_energy == pytest.approx(0.025)
    c = apply_parameter(BASE, "levels", 4, hold="unit")
    assert c.capacity == pytest.approx(0.04)
    with pytest.raises(ConfigError):
        apply_parameter(BASE, "capacity", 0.055, hold="unit")


def test_rows_and_order():
    values = tuple(dbm_to_watt(v) for v in (10, 20, 30))
    spec = SweepSpec(BASE, "beacon_power", values, outputs=("eop", "atd"))
    rows = run_sweep(spec)
    assert all(len(r) == len(HEADER) for r in rows)
    assert [r[1] for r in rows if r[2] == "eop"] == list(values)
    eop = series(rows, "eop")
    assert np.all(np.diff(eop) <= 0)
    assert len(series(rows, "atd_slots", 2)) == 3
    assert rows == run_sweep(spec, jobs=3)


def test_sweep_with_simulation():
    spec = SweepSpec(BASE, "efficiency", (0.6, 0.8), outputs=("eop",), slots=20_000, seed=4)
    rows = run_sweep(spec)
    for r in rows:
        assert r[5] is not None and r[6] > 0
        assert abs(r[5] - r[4]) < 5 * r[6]
    assert rows == run_sweep(spec, jobs=2)


def test_load_sweep_file(tmp_path):
    (tmp_path / "base.cfg").write_text("""
num_sources = 2
levels = 2
capacity = 20 mJ
threshold_energy = 10 mJ
efficiency = 0.8
beacon_power = 30 dBm
beacon_antennas = 5
noise_power = -80 dBm
path_loss_exponent = 3
rate_threshold = 3
beacon_x = -3
destination_x = 200
source_radius = 1
""")
    (tmp_path / "sw.cfg").write_text("""
base = base.cfg
efficiency = 0.7
sweep.parameter = beacon_power
sweep.values = 0 dBm, 10 dBm, 1 W
sweep.outputs = eop, cop
sweep.slots = 1000
""")
    spec = load_sweep(tmp_path / "sw.cfg")
    assert spec.base.efficiency == 0.7
    assert spec.values == pytest.approx((1e-3, 1e-2, 1.0))
    assert spec.outputs == ("eop", "cop") and spec.slots == 1000


def test_load_sweep_errors(tmp_path):
    p = tmp_path / "sw.cfg"
    p.write_text("base = nope.cfg\nsweep.parameter = beacon_power\nsweep.values = 1, 2\n")
    with pytest.raises(ConfigError, match="not found"):
        load_sweep(p)
