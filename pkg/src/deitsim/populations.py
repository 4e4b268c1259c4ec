"""Steady-state sublevel populations of the full Zeeman-resolved system.

The state vector holds the 25 populations (ordered as
:attr:`LevelScheme.levels`) followed by the real and imaginary parts of the
pi optical coherences ``rho_{g c}`` for every ground sublevel ``g`` that
has an excited partner with the same m. The coupling field drives a-c
coherences, the signal field drives b-c coherences.

Sublevel Rabi frequencies follow the half-Rabi convention: a field of Rabi
frequency ``Omega`` couples ``(g, m)`` to ``(c, m)`` with strength
``SUBLEVEL_RABI_FACTOR * Omega * CG(F_g m; 1 0 | F_c m)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .atom import FieldSet, LevelScheme, RelaxationModel
from .errors import InvalidParameter, SolverError

SUBLEVEL_RABI_FACTOR = 0.5

TRACE_CONSERVING = "trace-conserving"
LITERAL = "literal"
DECAY_MODES = (TRACE_CONSERVING, LITERAL)

# Condition number above which the constrained system is treated as singular.
SINGULAR_COND = 1e13


def level_label(level):
    """Printable label such as ``b+1`` for ``("b", 1)``."""
    manifold, m = level
    return f"{manifold}{m:+d}"


@dataclass(frozen=True)
class RateSystem:
    """Linear system ``d x / dt = matrix @ x``.

    Attributes
    ----------
    matrix : ndarray, shape (n, n)
        Generator in MHz.
    scheme : LevelScheme
    coherences : tuple
        Ground sublevels whose pi coherence is included, in state order.
    decay_mode : str
    fields_off : bool
        True when every field Rabi frequency is zero.
    rates_off : bool
        True when every ground transfer rate is zero.
    """

    matrix: np.ndarray
    scheme: LevelScheme
    coherences: tuple
    decay_mode: str
    fields_off: bool
    rates_off: bool

    @property
    def n_populations(self):
        return len(self.scheme.levels)

    @property
    def size(self):
        return self.matrix.shape[0]

    def index(self, level):
        return self.scheme.levels.index(level)

    def constrained(self):
        """Matrix and rhs with the first population row replaced by the trace."""
        a = self.matrix.copy()
        a[0, :] = 0.0
        a[0, : self.n_populations] = 1.0
        b = np.zeros(self.size)
        b[0] = 1.0
        return a, b


@dataclass(frozen=True)
class PopulationState:
    """Sublevel occupations plus the optical coherences they came with."""

    values: np.ndarray
    scheme: LevelScheme
    coherence_parts: np.ndarray = None

    def __getitem__(self, level):
        return float(self.values[self.scheme.levels.index(tuple(level))])

    def as_dict(self):
        return {lvl: float(v) for lvl, v in zip(self.scheme.levels, self.values)}

    @property
    def trace(self):
        return float(self.values.sum())

    def manifold_total(self, manifold):
        return float(sum(self[lvl] for lvl in self.scheme.sublevels(manifold)))


def _field_couplings(scheme, fields, relax):
    """Yield (ground level, sublevel Rabi, detuning, coherence decay)."""
    for manifold, omega, delta, gamma in (
            ("a", fields.omega_c, fields.delta_c, relax.gamma_ca),
            ("b", fields.omega_s, fields.delta_s, relax.gamma_cb)):
        for level in scheme.sublevels(manifold):
            m = level[1]
            if abs(m) > scheme.f_c:
                continue
            rabi = SUBLEVEL_RABI_FACTOR * omega * scheme.pi_weight(manifold, m)
            yield level, rabi, delta, gamma


def assemble_rate_system(levels: LevelScheme, fields: FieldSet,
                         relax: RelaxationModel, decay_mode=TRACE_CONSERVING):
    """Build the population and coherence generator.

    Parameters
    ----------
    levels : LevelScheme
    fields : FieldSet
        Only coupling and signal enter; the probe is treated as a
        perturbation that does not redistribute population.
    relax : RelaxationModel
    decay_mode : {"trace-conserving", "literal"}
        ``"trace-conserving"`` returns the excited-state decay to the
        ground sublevels with standard branching ratios. ``"literal"``
        drops that return flow, so population leaving ``c`` is lost.

    Returns
    -------
    RateSystem
    """
    if decay_mode not in DECAY_MODES:
        raise InvalidParameter(f"unknown decay mode {decay_mode!r}")
    scheme = levels
    lv = scheme.levels
    idx = {lvl: i for i, lvl in enumerate(lv)}
    a_levels = scheme.sublevels("a")
    b_levels = scheme.sublevels("b")
    c_levels = scheme.sublevels("c")
    couplings = list(_field_couplings(scheme, fields, relax))
    npop = len(lv)
    n = npop + 2 * len(couplings)
    mat = np.zeros((n, n))

    g_ab, g_ba = relax.top_ab_mhz, relax.top_ba_mhz
    z_aa, z_bb = relax.zeeman_aa_mhz, relax.zeeman_bb_mhz
    for src in a_levels:
        j = idx[src]
        mat[j, j] -= relax.total_a_mhz
        for dst in b_levels:
            mat[idx[dst], j] += g_ab
        for dst in a_levels:
            if dst != src:
                mat[idx[dst], j] += z_aa
    for src in b_levels:
        j = idx[src]
        mat[j, j] -= relax.total_b_mhz
        for dst in a_levels:
            mat[idx[dst], j] += g_ba
        for dst in b_levels:
            if dst != src:
                mat[idx[dst], j] += z_bb

    for src in c_levels:
        j = idx[src]
        mat[j, j] -= relax.gamma_c
        if decay_mode == TRACE_CONSERVING:
            for dst, frac in scheme.branching(src[1]).items():
                mat[idx[dst], j] += relax.gamma_c * frac

    # rho_gc' = i W (rho_gg - rho_cc) - (i delta + gamma) rho_gc
    for k, (g, rabi, delta, gamma) in enumerate(couplings):
        re, im = npop + 2 * k, npop + 2 * k + 1
        ig, ic = idx[g], idx[("c", g[1])]
        mat[re, re] -= gamma
        mat[re, im] += delta
        mat[im, im] -= gamma
        mat[im, re] -= delta
        mat[im, ig] += rabi
        mat[im, ic] -= rabi
        mat[ic, im] += 2.0 * rabi
        mat[ig, im] -= 2.0 * rabi

    fields_off = fields.omega_c == 0 and fields.omega_s == 0
    rates_off = relax.top_ab == 0 and relax.zeeman_aa == 0 and relax.zeeman_bb == 0
    return RateSystem(mat, scheme, tuple(c[0] for c in couplings), decay_mode,
                      fields_off, rates_off)


def detailed_balance_state(scheme=None, ratio_ba_over_ab=9.0 / 7.0):
    """Field-free steady state of the ToP exchange.

    Each a sublevel holds ``x`` and each b sublevel ``y`` with
    ``x gamma'_ab = y gamma'_ba``. The default ratio gives 1/14 and 1/18.
    """
    scheme = scheme or LevelScheme()
    na, nb = len(scheme.sublevels("a")), len(scheme.sublevels("b"))
    x = 1.0 / (na + nb / ratio_ba_over_ab)
    y = x / ratio_ba_over_ab
    vals = np.array([x if l[0] == "a" else y if l[0] == "b" else 0.0
                     for l in scheme.levels])
    return PopulationState(vals, scheme)


def solve_steady_populations(system: RateSystem):
    """Steady state of a :class:`RateSystem` with unit trace.

    In trace-conserving mode one population equation is replaced by the
    trace constraint and the square system is solved directly. In literal
    mode the generator has no null vector in general, so the printed
    equations plus the trace row are solved in the least-squares sense and
    the populations are clipped at zero and renormalized.

    Returns
    -------
    PopulationState

    Raises
    ------
    SolverError
        If the system is singular for a reason other than all fields and
        rates being zero.
    """
    npop = system.n_populations
    if system.decay_mode == LITERAL:
        mat = np.vstack([system.matrix, np.r_[np.ones(npop),
                                              np.zeros(system.size - npop)]])
        rhs = np.zeros(system.size + 1)
        rhs[-1] = 1.0
        x, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
        pops = np.clip(x[:npop], 0.0, None)
        total = pops.sum()
        if not np.isfinite(total) or total <= 0:
            raise SolverError("literal-decay solve produced no population")
        return PopulationState(pops / total, system.scheme, x[npop:] / total)

    a, b = system.constrained()
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        if system.fields_off:
            return detailed_balance_state(system.scheme)
        raise SolverError(
            "rate system is singular (condition number "
            f"{cond:.3g}); ground transfer rates are too small to connect "
            "all sublevels for the given fields")
    x = np.linalg.solve(a, b)
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite populations")
    return PopulationState(x[:npop], system.scheme, x[npop:])


@dataclass(frozen=True)
class PopulationSweep:
    """Populations on a grid of ToP rates (Hz)."""

    top_rates_hz: np.ndarray
    table: np.ndarray
    scheme: LevelScheme

    def column(self, level):
        return self.table[:, self.scheme.levels.index(tuple(level))]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["top_rate_Hz"] + [f"rho_{level_label(l)}"
                                           for l in self.scheme.levels])
        for g, row in zip(self.top_rates_hz, self.table):
            writer.writerow([f"{g:.9g}"] + [f"{v:.9g}" for v in row])
        return buf.getvalue()


def population_vs_top_sweep(fields: FieldSet, relax: RelaxationModel, top_grid,
                            decay_mode=TRACE_CONSERVING, scheme=None):
    """Steady populations for each ToP rate in ``top_grid`` (Hz).

    Other relaxation parameters are taken from ``relax``.
    """
    scheme = scheme or LevelScheme()
    grid = np.asarray(top_grid, dtype=float)
    if grid.ndim != 1 or np.any(grid < 0):
        raise InvalidParameter("ToP grid must be a 1-D array of rates >= 0")
    rows = []
    for g in grid:
        system = assemble_rate_system(scheme, fields, replace(relax, top_ab=float(g)),
                                      decay_mode)
        rows.append(solve_steady_populations(system).values)
    return PopulationSweep(grid, np.array(rows).reshape(len(grid), -1), scheme)


def populations_to_csv(state: PopulationState):
    """Single-row CSV with one column per sublevel."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"rho_{level_label(l)}" for l in state.scheme.levels])
    writer.writerow([f"{v:.9g}" for v in state.values])
    return buf.getvalue()
