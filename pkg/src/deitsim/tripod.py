"""Probe susceptibility of the b0-c1-a1-b1 tripod.

Two routes are provided:

* :func:`closed_form_im_chi` evaluates the analytic steady-state expression
  for ``Im rho_{b0 c1} / Omega_p`` with coefficients ``A`` to ``F`` and
  splits it into a linear term, a nonlinear (probe-saturation) term and a
  stimulated Raman (SRS) term.
* :func:`steady_state_coherences` solves the six coupled coherence
  equations (and their conjugates) as a dense linear system with the
  populations held fixed.

All inputs broadcast, so ``delta_p`` may be a grid. Rates and detunings
are in MHz. A positive ``total_im_chi`` means absorption.

The two routes are not identical. The closed form is what the coherence
system reduces to when the probe-driven source terms ``-i Omega_p rho_{c1 a1}``
in the b0-a1 equation and ``-i Omega_s rho_{c1 a1}`` in the b1-a1 equation
are dropped and terms of order ``Omega_p^2`` are neglected. The first of
these is small in the weak-probe limit, the second is not: the a1-c1
coherence driven by the coupling field feeds the b1-a1 coherence at zeroth
order in the probe. :func:`coherence_gap` quantifies the difference.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameter, SolverError

# Factor used to read "much greater than" in the EIT conditions.
STRONG_INEQUALITY = 10.0

_TINY = np.finfo(float).tiny * 1e3


@dataclass(frozen=True)
class TripodParams:
    """Inputs of the tripod model.

    Attributes
    ----------
    omega_c, omega_s, omega_p : float
        Rabi frequencies of coupling (a1-c1), signal (b1-c1) and probe
        (b0-c1), MHz.
    delta_c, delta_s, delta_p : float or ndarray
        One-photon detunings, MHz.
    gamma_gg : float
        Ground-state coherence decay, MHz.
    gamma_oc : float
        Optical coherence decay, MHz.
    rho_b0, rho_b1, rho_a1, rho_c1 : float
        Populations held fixed.
    relative_linewidth : float
        Extra decay of the b0-b1 coherence from the probe/signal laser
        linewidth, MHz.
    """

    omega_c: float
    omega_s: float
    omega_p: float
    delta_c: float
    delta_s: float
    delta_p: object
    gamma_gg: float
    gamma_oc: float
    rho_b0: float
    rho_b1: float
    rho_a1: float
    rho_c1: float
    relative_linewidth: float = 0.0

    def __post_init__(self):
        if self.gamma_gg <= 0 or self.gamma_oc <= 0:
            raise InvalidParameter("gamma_gg and gamma_oc must be > 0")
        if self.relative_linewidth < 0:
            raise InvalidParameter("relative_linewidth must be >= 0")
        for name in ("rho_b0", "rho_b1", "rho_a1", "rho_c1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParameter(f"{name}={v} outside [0, 1]")

    @property
    def delta_pc(self):
        return np.asarray(self.delta_p) - self.delta_c

    @property
    def delta_ps(self):
        return np.asarray(self.delta_p) - self.delta_s

    @property
    def delta_sc(self):
        return self.delta_s - self.delta_c

    @property
    def gamma_raman(self):
        """Decay of the b0-b1 coherence."""
        return self.gamma_gg + self.relative_linewidth

    def with_detuning(self, delta_p):
        return replace(self, delta_p=delta_p)


@dataclass(frozen=True)
class SusceptibilityBreakdown:
    """Terms of the closed-form ``Im rho_{b0c1} / Omega_p``."""

    linear_term: np.ndarray
    nonlinear_term: np.ndarray
    srs_term: np.ndarray
    total_im_chi: np.ndarray
    coefficients: dict


def _check(name, value):
    if np.any(np.abs(value) < _TINY):
        raise SolverError(f"singular denominator {name}")


def coefficients(params: TripodParams, doppler_shift=0.0):
    """Coefficients ``A`` to ``D`` of the closed form.

    ``doppler_shift`` (MHz) is subtracted from all three one-photon
    detunings; only ``B`` and ``D`` depend on it.
    """
    p = params
    g, gr = p.gamma_gg, p.gamma_raman
    dpc, dps, dsc = p.delta_pc, p.delta_ps, p.delta_sc
    l_pc = g**2 + dpc**2
    l_ps = gr**2 + dps**2
    l_sc = g**2 + dsc**2
    _check("gamma^2 + delta_pc^2", l_pc)
    _check("gamma^2 + delta_ps^2", l_ps)
    _check("gamma^2 + delta_sc^2", l_sc)
    oc2, os2, op2 = p.omega_c**2, p.omega_s**2, p.omega_p**2
    a = p.gamma_oc + oc2 * g / l_pc + os2 * gr / l_ps
    b = np.asarray(p.delta_p) - oc2 * dpc / l_pc - os2 * dps / l_ps - doppler_shift
    c = p.gamma_oc + oc2 * g / l_sc + op2 * gr / l_ps
    d = -p.delta_s + oc2 * dsc / l_sc - op2 * dps / l_ps + doppler_shift
    return a, b, c, d


def closed_form_im_chi(params: TripodParams, doppler_shift=0.0, ablate_srs=False):
    """Closed-form ``Im rho_{b0c1} / Omega_p`` and its decomposition.

    Parameters
    ----------
    params : TripodParams
    doppler_shift : float or ndarray, optional
        Velocity shift ``k v`` in MHz applied to every one-photon detuning.
    ablate_srs : bool, optional
        Exclude the SRS term from ``total_im_chi``.

    Returns
    -------
    SusceptibilityBreakdown
    """
    p = params
    a, b, c, d = coefficients(p, doppler_shift)
    e = c * a - d * b
    f = c * b + d * a
    gr, dps = p.gamma_raman, p.delta_ps
    l_ps = gr**2 + dps**2
    ab2 = a**2 + b**2
    ef2 = e**2 + f**2
    _check("A^2 + B^2", ab2)
    _check("E^2 + F^2", ef2)
    _check("gamma^2 + delta_ps^2", l_ps)
    pop0 = p.rho_b0 - p.rho_c1
    pop1 = p.rho_b1 - p.rho_c1
    linear = a / ab2 * pop0
    pref = (gr * e - dps * f) / (ef2 * l_ps)
    nonlinear = pref * p.omega_p**2 * pop0
    srs = -pref * p.omega_s**2 * pop1
    total = linear + nonlinear + (0.0 if ablate_srs else srs)
    coeffs = {"A": a, "B": b, "C": c, "D": d, "E": e, "F": f, "prefactor": pref}
    return SusceptibilityBreakdown(linear, nonlinear, srs, total, coeffs)


def srs_ablation(params: TripodParams, doppler_shift=0.0):
    """Closed form with the SRS term excluded from the total."""
    return closed_form_im_chi(params, doppler_shift, ablate_srs=True)


def closed_form_complex(params: TripodParams, doppler_shift=0.0, ablate_srs=False):
    """Complex response ``R`` with ``Re R`` equal to the closed-form total.

    ``R = dn0 / (A + iB) + G K / ((A + iB)(C + iD))`` with
    ``G = 1 / (gamma + i delta_ps)`` and
    ``K = Omega_p^2 dn0 - Omega_s^2 dn1``.
    """
    p = params
    a, b, c, d = coefficients(p, doppler_shift)
    dn0 = p.rho_b0 - p.rho_c1
    dn1 = 0.0 if ablate_srs else p.rho_b1 - p.rho_c1
    g = 1.0 / (p.gamma_raman + 1j * p.delta_ps)
    k = p.omega_p**2 * dn0 - p.omega_s**2 * dn1
    z1 = a + 1j * b
    return dn0 / z1 + g * k / (z1 * (c + 1j * d))


# Unknown ordering of the coherence system.
COHERENCES = ("b0c1", "b1c1", "a1c1", "b0a1", "b0b1", "b1a1")


@dataclass(frozen=True)
class CoherenceSolution:
    """Steady-state coherences, each broadcast over the detuning grid."""

    b0c1: np.ndarray
    b1c1: np.ndarray
    a1c1: np.ndarray
    b0a1: np.ndarray
    b0b1: np.ndarray
    b1a1: np.ndarray
    omega_p: float

    def as_tuple(self):
        return tuple(getattr(self, k) for k in COHERENCES)

    @property
    def im_chi(self):
        """``Im rho_{b0c1} / Omega_p``."""
        if self.omega_p == 0:
            raise InvalidParameter("probe Rabi frequency is zero")
        return self.b0c1.imag / self.omega_p


def coherence_matrix(params: TripodParams, doppler_shift=0.0,
                     include_ca_sources=True):
    """Generator and source of the coherence equations.

    Returns ``(M, r)`` with ``d x/dt = M x + r`` and ``x`` the six
    coherences followed by their complex conjugates. Leading dimensions of
    ``M`` follow the broadcast shape of the detunings.
    """
    p = params
    dp = np.asarray(p.delta_p, dtype=float) - doppler_shift
    dc = p.delta_c - doppler_shift
    ds = p.delta_s - doppler_shift
    dp, dc, ds = np.broadcast_arrays(dp, dc, ds)
    shape = dp.shape
    oc, os_, op = p.omega_c, p.omega_s, p.omega_p
    g, gr, go = p.gamma_gg, p.gamma_raman, p.gamma_oc
    m = np.zeros(shape + (12, 12), dtype=complex)
    r = np.zeros(shape + (12,), dtype=complex)

    def cj(k):
        return (k + 6) % 12

    # 0 b0c1, 1 b1c1, 2 a1c1, 3 b0a1, 4 b0b1, 5 b1a1
    m[..., 0, 0] = -(1j * dp + go)
    m[..., 0, 3] += 1j * oc
    m[..., 0, 4] += 1j * os_
    r[..., 0] = 1j * op * (p.rho_b0 - p.rho_c1)
    m[..., 1, 1] = -(1j * ds + go)
    m[..., 1, 5] += 1j * oc
    m[..., 1, cj(4)] += 1j * op
    r[..., 1] = 1j * os_ * (p.rho_b1 - p.rho_c1)
    m[..., 2, 2] = -(1j * dc + go)
    m[..., 2, cj(5)] += 1j * os_
    m[..., 2, cj(3)] += 1j * op
    r[..., 2] = 1j * oc * (p.rho_a1 - p.rho_c1)
    m[..., 3, 3] = -(1j * (dp - dc) + g)
    m[..., 3, 0] += 1j * oc
    m[..., 4, 4] = -(1j * (dp - ds) + gr)
    m[..., 4, 0] += 1j * os_
    m[..., 4, cj(1)] += -1j * op
    m[..., 5, 5] = -(1j * (ds - dc) + g)
    m[..., 5, 1] += 1j * oc
    if include_ca_sources:
        m[..., 3, cj(2)] += -1j * op
        m[..., 5, cj(2)] += -1j * os_
    # conjugate block: row k+6 is the conjugate of row k
    for k in range(6):
        m[..., k + 6, :] = np.conj(m[..., k, [cj(j) for j in range(12)]])
        r[..., k + 6] = np.conj(r[..., k])
    return m, r


def steady_state_coherences(params: TripodParams, doppler_shift=0.0,
                            include_ca_sources=True):
    """Solve the coherence equations for their steady state.

    Parameters
    ----------
    params : TripodParams
    doppler_shift : float, optional
        Velocity shift in MHz.
    include_ca_sources : bool, optional
        Keep the ``rho_{c1 a1}`` source terms of the b0-a1 and b1-a1
        equations. Setting False gives the reduced system behind the closed
        form.

    Returns
    -------
    CoherenceSolution
    """
    m, r = coherence_matrix(params, doppler_shift, include_ca_sources)
    try:
        x = np.linalg.solve(m, -r[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SolverError(
            "coherence system singular for delta_c="
            f"{params.delta_c}, delta_s={params.delta_s}, "
            f"gamma_gg={params.gamma_gg}, gamma_oc={params.gamma_oc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite coherences")
    return CoherenceSolution(*(x[..., k] for k in range(6)), omega_p=params.omega_p)


def coherence_residual(params: TripodParams, solution: CoherenceSolution,
                       include_ca_sources=True):
    """Max-norm residual of the coherence equations at ``solution``."""
    m, r = coherence_matrix(params, include_ca_sources=include_ca_sources)
    x6 = np.stack(solution.as_tuple(), axis=-1)
    x = np.concatenate([x6, np.conj(x6)], axis=-1)
    res = np.einsum("...ij,...j->...i", m, x) + r
    return float(np.max(np.abs(res)))


@dataclass(frozen=True)
class ConditionReport:
    """Ratios behind the EIT and gain conditions."""

    r4: float
    r5: float
    r6: float
    threshold: float = STRONG_INEQUALITY

    @property
    def eit(self):
        return self.r4 >= self.threshold

    @property
    def srs_dominates(self):
        return self.r5 > 1.0

    @property
    def doppler_eit(self):
        return self.r6 >= self.threshold

    def as_dict(self):
        return {"r4": self.r4, "r5": self.r5, "r6": self.r6,
                "threshold": self.threshold, "eit": self.eit,
                "srs_dominates": self.srs_dominates,
                "doppler_eit": self.doppler_eit}


def check_conditions(params: TripodParams, doppler_width=0.0,
                     threshold=STRONG_INEQUALITY):
    """Evaluate the EIT, gain and Doppler-EIT ratios.

    ``r4 = Omega_s^2 / (gamma_gg gamma_oc)``,
    ``r5 = rho_b1 Omega_s^2 / (rho_b0 Omega_p^2)`` and
    ``r6 = Omega_s^2 / (gamma_gg (gamma_oc + W_D))``. The b0-b1 coherence
    decay (including any laser linewidth) is used for ``gamma_gg``.
    """
    p = params
    os2 = p.omega_s**2
    g = p.gamma_raman
    r4 = os2 / (g * p.gamma_oc)
    r6 = os2 / (g * (p.gamma_oc + doppler_width))
    denom = p.rho_b0 * p.omega_p**2
    if denom == 0:
        r5 = float("inf")
    else:
        r5 = p.rho_b1 * os2 / denom
    return ConditionReport(float(r4), float(r5), float(r6), threshold)


@dataclass(frozen=True)
class GapReport:
    """Relative differences between the closed form and the linear solves."""

    closed: np.ndarray
    full_solve: np.ndarray
    reduced_solve: np.ndarray

    @property
    def vs_full(self):
        return np.abs(self.closed - self.full_solve) / np.abs(self.full_solve)

    @property
    def vs_reduced(self):
        return np.abs(self.closed - self.reduced_solve) / np.abs(self.reduced_solve)


def coherence_gap(params: TripodParams):
    """Compare the closed form with the full and reduced coherence solves."""
    closed = closed_form_im_chi(params).total_im_chi
    full = steady_state_coherences(params).im_chi
    reduced = steady_state_coherences(params, include_ca_sources=False).im_chi
    return GapReport(np.asarray(closed), np.asarray(full), np.asarray(reduced))
