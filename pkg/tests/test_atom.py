import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deitsim import atom
from deitsim.atom import (DEFAULT_ALPHA, CellConditions, FieldSet, LevelScheme,
                          RelaxationModel, calibrate_od, density_from_temperature,
                          doppler_width, rabi_from_power, top_rate_from_density)
from deitsim.errors import InvalidParameter


def test_rabi_from_power_example():
    assert rabi_from_power(10.0, 0.5, 0.1) == pytest.approx(7.34, abs=0.005)


@pytest.mark.parametrize("beam,power,radius,expected", [
    ("coupling", 30.0, 1.0, 23.0),
    ("signal", 10.0, 0.5, 7.0),
    ("probe", 0.020, 0.5, 1.0),
])
def test_default_alpha_reproduces_quoted_rabi(beam, power, radius, expected):
    assert rabi_from_power(power, radius, DEFAULT_ALPHA[beam]) == pytest.approx(expected,
                                                                               rel=1e-12)


def test_coupling_5mw_rabi_matches_quoted_value():
    # 5 mW of coupling is quoted as roughly 8 MHz
    assert rabi_from_power(5.0, 1.0, DEFAULT_ALPHA["coupling"]) == pytest.approx(9.4, abs=1.5)


@given(st.one_of(st.just(0.0), st.floats(1e-9, 100)), st.floats(0.05, 5), st.floats(0.01, 1))
def test_rabi_scales_as_sqrt_power(power, radius, alpha):
    r1 = rabi_from_power(power, radius, alpha)
    r4 = rabi_from_power(4 * power, radius, alpha)
    assert r4 == pytest.approx(2 * r1, rel=1e-12, abs=1e-300)


def test_rabi_rejects_bad_radius():
    with pytest.raises(InvalidParameter):
        rabi_from_power(1.0, 0.0, 0.1)


@pytest.mark.parametrize("temp,density", [(25.0, 5e10), (80.0, 1e12)])
def test_density_anchors(temp, density):
    assert density_from_temperature(temp) == pytest.approx(density, rel=2e-3)


def test_density_in_quoted_band_for_60_to_80():
    # quoted band 4-10 x 10^11 cm^-3 across the heated range
    assert 3e11 < density_from_temperature(60.0) < 5e11
    assert density_from_temperature(80.0) == pytest.approx(1e12, rel=2e-3)


def test_density_warns_outside_range():
    with pytest.warns(RuntimeWarning):
        density_from_temperature(120.0)


@given(st.floats(15, 90), st.floats(0.1, 10))
def test_density_monotone(t, dt):
    assert density_from_temperature(min(t + dt, 90)) >= density_from_temperature(t)


def test_top_rate_linear_in_density():
    assert top_rate_from_density(5e11) == pytest.approx(300.0)
    assert top_rate_from_density(0.0) == 0.0


def test_doppler_width_at_65c():
    assert doppler_width(65.0) == pytest.approx(230.0, rel=0.01)
    assert doppler_width(-273.15) == 0.0


@pytest.mark.parametrize("density,length,od", [
    (5e10, 0.075, 1.5), (12 * 5e10, 0.075, 18.0), (5e10, 0.15, 3.0)])
def test_calibrate_od(density, length, od):
    assert calibrate_od(density, length) == pytest.approx(od, rel=1e-12)


def test_relaxation_totals():
    r = RelaxationModel(300.0)
    assert r.top_ba == pytest.approx(9 / 7 * 300.0)
    assert r.total_a == pytest.approx(9 * 300 + 6 * 20)
    assert r.total_b == pytest.approx(7 * r.top_ba + 8 * 20)
    assert r.total_b == pytest.approx(9 * 300 + 160)


@pytest.mark.parametrize("top,gamma_hz", [(20.0, 340.0), (300.0, 2860.0)])
def test_ground_coherence_decay_matches_quoted(top, gamma_hz):
    assert RelaxationModel(top).gamma_gg == pytest.approx(gamma_hz * 1e-6, rel=1e-12)


def test_unit_conversion_boundary():
    r = RelaxationModel(300.0, relative_linewidth=0.5)
    assert r.top_ab_mhz == pytest.approx(3e-4)
    assert r.gamma_raman == pytest.approx(r.gamma_gg + 0.5)
    assert r.gamma_oc == pytest.approx((4.6 + 9 * 3e-4) / 2)


def test_relaxation_rejects_negative():
    with pytest.raises(InvalidParameter):
        RelaxationModel(-1.0)


def test_scheme_counts():
    s = LevelScheme()
    assert len(s.levels) == 25
    assert len(s.ground_levels) == 16
    assert sum(s.thermal_populations.values()) == pytest.approx(1.0)


@pytest.mark.parametrize("m", range(-4, 5))
def test_pi_weights(m):
    s = LevelScheme()
    assert s.pi_weight("b", m) == pytest.approx(m / math.sqrt(20))
    if abs(m) <= 3:
        assert s.pi_weight("a", m) == pytest.approx(math.sqrt((16 - m * m) / 28))


@pytest.mark.parametrize("m", range(-4, 5))
def test_branching_normalized(m):
    br = LevelScheme().branching(m)
    assert sum(br.values()) == pytest.approx(1.0, abs=1e-14)
    assert all(v > 0 for v in br.values())
    assert all(abs(k[1] - m) <= 1 for k in br)


def test_hyperfine_split():
    assert atom.hyperfine_factor(3, 4) == pytest.approx(7 / 12)
    assert atom.hyperfine_factor(4, 4) == pytest.approx(5 / 12)


def test_branching_total_into_f3_is_constant():
    s = LevelScheme()
    for m in range(-4, 5):
        into_a = sum(v for k, v in s.branching(m).items() if k[0] == "a")
        assert into_a == pytest.approx(7 / 12, abs=1e-12)


def test_field_set_weak_probe_flag():
    assert FieldSet(20, 8, 1).weak_probe
    assert not FieldSet(20, 8, 5).weak_probe
    with pytest.raises(InvalidParameter):
        FieldSet(-1, 8, 1)


def test_cell_stationary_width():
    assert CellConditions(None, 5e10, 1.5).doppler_width == 0.0
    assert CellConditions(65.0, 5e11, 15).doppler_width == pytest.approx(doppler_width(65.0))


def test_thermal_vector():
    v = atom.thermal_vector()
    assert v.sum() == pytest.approx(1.0)
    assert np.all(v[16:] == 0)
