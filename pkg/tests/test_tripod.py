import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deitsim.atom import FieldSet, LevelScheme, RelaxationModel
from deitsim.errors import InvalidParameter, SolverError
from deitsim.populations import assemble_rate_system, solve_steady_populations
from deitsim.tripod import (STRONG_INEQUALITY, TripodParams, check_conditions,
                            closed_form_complex, closed_form_im_chi, coherence_gap,
                            coherence_residual, srs_ablation, steady_state_coherences)


def fig_params(top_hz, delta_p=10.0, omega_p=1.0):
    relax = RelaxationModel(top_hz)
    pops = solve_steady_populations(assemble_rate_system(
        LevelScheme(), FieldSet(20, 8, 0, 0, 10), relax))
    return TripodParams(20.0, 8.0, omega_p, 0.0, 10.0, delta_p, relax.gamma_gg,
                        relax.gamma_oc, pops[("b", 0)], pops[("b", 1)], pops[("a", 1)],
                        pops[("c", 1)])


FIG2A = fig_params(20.0)
FIG2B = fig_params(300.0)

rabi = st.floats(0.1, 30)
det = st.floats(-50, 50)


@st.composite
def params_st(draw, omega_p=rabi):
    w = np.array([draw(st.floats(0.01, 1)) for _ in range(5)])
    w = w / w.sum()
    return TripodParams(draw(rabi), draw(rabi), draw(omega_p), draw(det), draw(det),
                        draw(det), draw(st.floats(1e-4, 1e-1)), draw(st.floats(0.5, 5)),
                        *w[:4])


def test_two_level_limit():
    p = TripodParams(0.0, 0.0, 1e-4, 0.0, 10.0, 0.0, 3e-4, 2.3, 0.9, 0.05, 0.0, 0.01)
    b = closed_form_im_chi(p)
    assert b.total_im_chi == pytest.approx((0.9 - 0.01) / 2.3, rel=1e-7)
    assert b.coefficients["A"] == pytest.approx(2.3)
    assert b.coefficients["B"] == pytest.approx(0.0)


def test_fig2b_gain_at_second_window():
    assert closed_form_im_chi(FIG2B).total_im_chi < 0


def test_fig2b_ablation_removes_gain():
    assert srs_ablation(FIG2B).total_im_chi >= 0


def test_fig2a_no_gain_on_window():
    grid = np.linspace(-20, 30, 5001)
    assert np.all(closed_form_im_chi(FIG2A.with_detuning(grid)).total_im_chi > 0)


def test_fig2a_ablation_difference_small():
    grid = np.linspace(-20, 30, 5001)
    full = closed_form_im_chi(FIG2A.with_detuning(grid)).total_im_chi
    abl = srs_ablation(FIG2A.with_detuning(grid)).total_im_chi
    # relative to the spectrum scale; SRS is weak at low ToP
    assert np.max(np.abs(full - abl)) < 0.01 * np.max(np.abs(full))


@settings(max_examples=200, deadline=None)
@given(params_st())
def test_decomposition_identity(p):
    b = closed_form_im_chi(p)
    assert b.total_im_chi == pytest.approx(b.linear_term + b.nonlinear_term + b.srs_term,
                                           rel=1e-12, abs=1e-15)
    a = srs_ablation(p)
    assert a.total_im_chi + a.srs_term == pytest.approx(b.total_im_chi, rel=1e-12,
                                                        abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(params_st())
def test_closed_form_complex_identity(p):
    b = closed_form_im_chi(p)
    assert closed_form_complex(p).real == pytest.approx(b.total_im_chi, rel=1e-9, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(params_st())
def test_coherence_residual(p):
    sol = steady_state_coherences(p)
    assert coherence_residual(p, sol) <= 1e-10


@pytest.mark.parametrize("omega_p", [1e-1, 1e-2, 1e-3])
def test_closed_form_matches_reduced_system(omega_p):
    # the closed form is the coherence system without the rho_c1a1 sources,
    # up to O(Omega_p^2)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        w = rng.dirichlet(np.ones(5))
        p = TripodParams(*rng.uniform(0.1, 30, 2), omega_p, *rng.uniform(-50, 50, 3),
                         10 ** rng.uniform(-4, -1), 2.3, *w[:4])
        gap = coherence_gap(p)
        worst = max(worst, float(gap.vs_reduced))
    assert worst < 50 * omega_p**2


def test_gap_to_full_system_is_structural():
    # the dropped rho_c1a1 sources survive the weak-probe limit
    p = fig_params(300.0, delta_p=3.0, omega_p=1e-3)
    assert coherence_gap(p).vs_full > 1e-2


def test_zero_probe_no_b0_coherences():
    p = TripodParams(20, 8, 0.0, 0.0, 10.0, 3.0, 3e-3, 2.3, 0.8, 0.05, 0.01, 0.001)
    sol = steady_state_coherences(p)
    for name in ("b0c1", "b0a1", "b0b1"):
        assert abs(getattr(sol, name)) < 1e-15
    with pytest.raises(InvalidParameter):
        sol.im_chi


def test_fig2a_first_window_transparent():
    p = FIG2A.with_detuning(0.0)
    two_level = (p.rho_b0 - p.rho_c1) / p.gamma_oc
    assert abs(steady_state_coherences(p).im_chi) < 0.01 * two_level
    assert abs(closed_form_im_chi(p).total_im_chi) < 0.01 * two_level


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 30), st.floats(0.5, 30), det, det, det, st.floats(20, 600),
       st.floats(0.01, 1.0))
def test_coherence_magnitudes_bounded(oc, os_, dc, ds, dp, top, frac):
    # weak probe with populations from the population solver
    relax = RelaxationModel(top)
    pops = solve_steady_populations(assemble_rate_system(
        LevelScheme(), FieldSet(oc, os_, 0, dc, ds), relax))
    op = 0.2 * frac * min(oc, os_)
    p = TripodParams(oc, os_, op, dc, ds, dp, relax.gamma_gg, relax.gamma_oc,
                     pops[("b", 0)], pops[("b", 1)], pops[("a", 1)], pops[("c", 1)])
    for value in steady_state_coherences(p).as_tuple():
        assert abs(value) <= 1.0


@pytest.mark.parametrize("p", [FIG2B.with_detuning(d) for d in (9.5, 10.0, 10.5)])
def test_srs_sign_structure(p):
    b = closed_form_im_chi(p.with_detuning(p.delta_s))
    pref = b.coefficients["prefactor"]
    if p.rho_b1 > p.rho_c1 and pref > 0:
        assert b.srs_term <= 0


def test_srs_sign_structure_sampled():
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(500):
        w = rng.dirichlet(np.ones(5))
        ds = rng.uniform(-50, 50)
        p = TripodParams(*rng.uniform(0.1, 30, 3), rng.uniform(-50, 50), ds, ds,
                         10 ** rng.uniform(-4, -1), 2.3, *w[:4])
        b = closed_form_im_chi(p)
        if p.rho_b1 > p.rho_c1 and b.coefficients["prefactor"] > 0:
            assert b.srs_term <= 0
            checked += 1
    assert checked > 50


def test_two_photon_extremum_near_resonance():
    grid = np.linspace(7.0, 13.0, 6001)
    chi = closed_form_im_chi(FIG2B.with_detuning(grid)).total_im_chi
    assert abs(grid[np.argmin(chi)] - 10.0) <= 0.5
    chi_a = closed_form_im_chi(FIG2A.with_detuning(grid)).total_im_chi
    assert abs(grid[np.argmin(chi_a)] - 10.0) <= 0.5


def test_conditions_fig2_regimes():
    assert check_conditions(FIG2B).srs_dominates
    assert not check_conditions(FIG2A).srs_dominates
    assert check_conditions(FIG2B).eit


def test_conditions_symmetric_boundary():
    p = TripodParams(20, 5.0, 5.0, 0, 10, 10, 3e-3, 2.3, 0.4, 0.4, 0.1, 0.0)
    assert check_conditions(p).r5 == 1.0
    assert not check_conditions(p).srs_dominates


def test_conditions_zero_probe():
    p = TripodParams(20, 8, 0.0, 0, 10, 10, 3e-3, 2.3, 0.8, 0.05, 0.01, 0.001)
    rep = check_conditions(p)
    assert rep.r5 == float("inf") and rep.srs_dominates


def test_doppler_condition_weaker():
    rep = check_conditions(FIG2B, doppler_width=230.0)
    assert rep.r6 < rep.r4
    assert rep.threshold == STRONG_INEQUALITY


def test_invalid_params():
    with pytest.raises(InvalidParameter):
        TripodParams(20, 8, 1, 0, 10, 10, 0.0, 2.3, 0.8, 0.05, 0.01, 0.001)
    with pytest.raises(InvalidParameter):
        TripodParams(20, 8, 1, 0, 10, 10, 1e-3, 2.3, 1.2, 0.05, 0.01, 0.001)


def test_singular_denominator_guard():
    p = TripodParams(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1e-300, 1e-300, 0.5, 0.1, 0.1, 0.1)
    with pytest.raises(SolverError):
        closed_form_im_chi(p)


def test_relative_linewidth_only_in_raman_coherence():
    p = FIG2B
    q = TripodParams(**{**p.__dict__, "relative_linewidth": 0.5})
    a, b = closed_form_im_chi(p), closed_form_im_chi(q)
    assert b.total_im_chi > a.total_im_chi
    assert b.coefficients["C"] - a.coefficients["C"] == pytest.approx(
        p.omega_p**2 / (0.5 + p.gamma_gg) - p.omega_p**2 / p.gamma_gg, rel=1e-9)
    # the coupling terms of A and C do not see the linewidth
    assert b.coefficients["A"] - a.coefficients["A"] == pytest.approx(
        p.omega_s**2 / (0.5 + p.gamma_gg) - p.omega_s**2 / p.gamma_gg, rel=1e-9)
