import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import chain_block_literal, time_march
from deitsim.atom import FieldSet, LevelScheme, RelaxationModel
from deitsim.errors import InvalidParameter
from deitsim.populations import (assemble_rate_system, detailed_balance_state,
                                 population_vs_top_sweep, populations_to_csv,
                                 solve_steady_populations)

SCHEME = LevelScheme()
FIG1 = FieldSet(20.0, 8.0, 0.0, 0.0, 10.0)


def solve(fields, relax, mode="trace-conserving"):
    return solve_steady_populations(assemble_rate_system(SCHEME, fields, relax, mode))


def slowest_rate(system):
    ev = np.linalg.eigvals(system.matrix)
    rates = np.abs(ev.real)
    rates = rates[rates > 1e-12 * rates.max()]
    return rates.min()


fields_st = st.builds(FieldSet, st.floats(0, 40), st.floats(0, 40), st.just(0.0),
                      st.floats(-30, 30), st.floats(-30, 30))
relax_st = st.builds(RelaxationModel, st.floats(1, 1000), st.floats(1, 100),
                     st.floats(1, 100))


@settings(max_examples=60, deadline=None)
@given(fields_st, relax_st)
def test_trace_and_positivity(fields, relax):
    p = solve(fields, relax)
    assert p.trace == pytest.approx(1.0, abs=1e-10)
    assert p.values.min() >= -1e-12


@settings(max_examples=30, deadline=None)
@given(fields_st, relax_st)
def test_steady_state_is_stationary(fields, relax):
    system = assemble_rate_system(SCHEME, fields, relax)
    p = solve_steady_populations(system)
    x = np.concatenate([p.values, p.coherence_parts])
    assert np.max(np.abs(system.matrix @ x)) < 1e-12


def test_time_march_oracle_50_draws():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(50):
        fields = FieldSet(rng.uniform(0, 30), rng.uniform(0, 30), 0.0,
                          rng.uniform(-20, 20), rng.uniform(-20, 20))
        relax = RelaxationModel(rng.uniform(20, 600), rng.uniform(5, 50), rng.uniform(5, 50))
        system = assemble_rate_system(SCHEME, fields, relax)
        steady = solve_steady_populations(system).values
        marched = time_march(system, slowest_rate(system))
        worst = max(worst, np.max(np.abs(marched - steady)))
    assert worst < 1e-6


def test_detailed_balance_fields_off():
    p = solve(FieldSet(0, 0, 0), RelaxationModel(300.0))
    for lvl in SCHEME.sublevels("a"):
        assert p[lvl] == pytest.approx(1 / 14, abs=1e-12)
    for lvl in SCHEME.sublevels("b"):
        assert p[lvl] == pytest.approx(1 / 18, abs=1e-12)
    for lvl in SCHEME.sublevels("c"):
        assert p[lvl] == pytest.approx(0.0, abs=1e-15)


def test_degenerate_input_returns_detailed_balance():
    p = solve(FieldSet(0, 0, 0), RelaxationModel(0.0, 0.0, 0.0))
    np.testing.assert_allclose(p.values, detailed_balance_state().values)


def test_literal_and_conserving_agree_with_fields_off():
    relax = RelaxationModel(150.0)
    a = solve(FieldSet(0, 0, 0), relax)
    b = solve(FieldSet(0, 0, 0), relax, "literal")
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_literal_mode_renormalizes():
    p = solve(FIG1, RelaxationModel(300.0), "literal")
    assert p.trace == pytest.approx(1.0)
    assert p.values.min() >= 0


def test_unknown_mode_rejected():
    with pytest.raises(InvalidParameter):
        assemble_rate_system(SCHEME, FIG1, RelaxationModel(300.0), "bogus")


@pytest.mark.parametrize("m", range(-4, 5))
def test_chain_blocks_without_transfer(m):
    relax = RelaxationModel(0.0, 0.0, 0.0)
    system = assemble_rate_system(SCHEME, FIG1, relax, "literal")
    pops, coh, block = chain_block_literal(m, FIG1, relax)
    npop = system.n_populations
    rows = [system.index(l) for l in pops]
    for g in coh:
        k = system.coherences.index(g)
        rows += [npop + 2 * k, npop + 2 * k + 1]
    np.testing.assert_allclose(system.matrix[np.ix_(rows, rows)], block, atol=1e-15)
    others = np.setdiff1d(np.arange(system.size), rows)
    assert np.all(system.matrix[np.ix_(rows, others)] == 0)
    assert np.all(system.matrix[np.ix_(others, rows)] == 0)


def test_only_emission_couples_chains_when_conserving():
    relax = RelaxationModel(0.0, 0.0, 0.0)
    mat = assemble_rate_system(SCHEME, FIG1, relax).matrix
    lv = SCHEME.levels
    for i, li in enumerate(lv):
        for j, lj in enumerate(lv):
            if li[1] != lj[1] and mat[i, j] != 0:
                assert lj[0] == "c" and li[0] != "c" and abs(li[1] - lj[1]) == 1


def test_fig1_condition_number_finite():
    system = assemble_rate_system(SCHEME, FIG1, RelaxationModel(300.0))
    a, _ = system.constrained()
    assert np.isfinite(np.linalg.cond(a))


def test_fig1_values_at_300hz():
    p = solve(FIG1, RelaxationModel(300.0))
    assert p[("b", 1)] == pytest.approx(0.051, rel=0.2)
    assert p[("b", 1)] / p[("c", 1)] == pytest.approx(50, rel=0.3)
    assert p[("b", 0)] > 0.8


def test_fig1_trends():
    sweep = population_vs_top_sweep(FIG1, RelaxationModel(20.0), np.linspace(20, 600, 30))
    b0, b1 = sweep.column(("b", 0)), sweep.column(("b", 1))
    assert np.all(np.diff(b0) < 0)
    assert np.all(np.diff(b1) > 0)
    assert np.all(np.diff(sweep.column(("c", 1))) > 0)


def test_dark_state_b0():
    # the signal cannot drive b0 (zero pi Clebsch-Gordan), so it collects population
    p = solve(FIG1, RelaxationModel(20.0))
    assert p[("b", 0)] > 0.95
    assert p.manifold_total("c") < 0.01


def test_mirror_symmetry():
    p = solve(FIG1, RelaxationModel(300.0))
    for manifold in "abc":
        for lvl in SCHEME.sublevels(manifold):
            assert p[lvl] == pytest.approx(p[(manifold, -lvl[1])], abs=1e-12)


def test_csv_outputs():
    sweep = population_vs_top_sweep(FIG1, RelaxationModel(0.0), [0.0, 300.0])
    text = sweep.to_csv().splitlines()
    assert text[0].startswith("top_rate_Hz,rho_a-3,")
    assert len(text) == 3 and len(text[1].split(",")) == 26
    row = populations_to_csv(solve(FIG1, RelaxationModel(300.0))).splitlines()
    assert row[0].split(",")[7] == "rho_b-4"


def test_sweep_rejects_negative_rates():
    with pytest.raises(InvalidParameter):
        population_vs_top_sweep(FIG1, RelaxationModel(0.0), [-1.0])
