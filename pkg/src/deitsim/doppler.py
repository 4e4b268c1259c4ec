"""Maxwell velocity averaging, transmission spectra and gain extraction.

Velocity averaging
------------------
All beams share one wavenumber, so a velocity class shifts every
one-photon detuning by the same ``kappa = k v / 2 pi`` (MHz) and leaves the
two-photon detunings untouched. The Doppler shift is Gaussian distributed,
``exp(-kappa^2 / W^2) / (W sqrt(pi))``, with ``W`` the Doppler width.

The susceptibility is a rational function of ``kappa`` whose poles sit
about one optical linewidth (a few MHz) off the real axis, while ``W`` is
a few hundred MHz. Plain Gauss-Hermite quadrature cannot resolve such
narrow features at any practical order. The default route therefore
subtracts the poles: each simple pole ``r / (kappa - p)`` is averaged
exactly with the Faddeeva function and the remaining smooth part is
integrated with Gauss-Hermite nodes. For the closed form the poles are
known analytically; for the coherence solve they are generalized
eigenvalues of the linear system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from numpy.polynomial.hermite import hermgauss
from scipy.special import wofz

from . import atom
from .errors import InvalidParameter, SolverError
from .tripod import (TripodParams, closed_form_im_chi, coherence_matrix,
                     steady_state_coherences)

CLOSED_FORM = "closed-form"
COHERENCE_SOLVE = "coherence-solve"
MODELS = (CLOSED_FORM, COHERENCE_SOLVE)

POLE_SUBTRACTED = "pole-subtracted"
GAUSS_HERMITE = "gauss-hermite"
METHODS = (POLE_SUBTRACTED, GAUSS_HERMITE)

DEFAULT_ORDER = 64
MIN_ORDER = 8
GAIN_EPSILON = 1e-3
WINDOW_SEARCH_MHZ = 2.0
WINDOW_SPAN_MHZ = 5.0

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class VelocityQuadrature:
    """Gauss-Hermite nodes for the 1-D Maxwell distribution.

    Attributes
    ----------
    nodes : ndarray
        Velocities in m/s.
    weights : ndarray
        Normalized weights (sum to 1).
    most_probable_u : float
        Most probable speed in m/s.
    """

    nodes: np.ndarray
    weights: np.ndarray
    most_probable_u: float

    @classmethod
    def gauss_hermite(cls, order, most_probable_u):
        if order < MIN_ORDER:
            raise InvalidParameter(f"quadrature order must be >= {MIN_ORDER}")
        t, w = hermgauss(order)
        return cls(t * most_probable_u, w / _SQRT_PI, most_probable_u)

    @classmethod
    def for_temperature(cls, order, temperature_c):
        return cls.gauss_hermite(order, atom.most_probable_speed(temperature_c))

    def doppler_shifts(self, wavelength_m=atom.WAVELENGTH_M):
        """Node Doppler shifts ``v / lambda`` in MHz."""
        return self.nodes / wavelength_m * atom.HZ_TO_MHZ


def _scaled_plasma(z):
    """``(1/sqrt(pi)) * integral exp(-t^2) / (t - z) dt`` for non-real ``z``."""
    z = np.asarray(z, dtype=complex)
    upper = z.imag > 0
    zu = np.where(upper, z, np.conj(z))
    w = wofz(zu)
    return np.where(upper, 1j * _SQRT_PI * w, -1j * _SQRT_PI * np.conj(w))


def lorentz_mean(pole, width):
    """Gaussian average of ``1 / (kappa - pole)``.

    Parameters
    ----------
    pole : complex or ndarray
        Pole location in MHz, not on the real axis.
    width : float
        Doppler width ``W`` in MHz; 0 returns ``-1 / pole``.
    """
    pole = np.asarray(pole, dtype=complex)
    if np.any(pole.imag == 0):
        raise SolverError("pole on the real velocity axis")
    if width == 0:
        return -1.0 / pole
    return _scaled_plasma(pole / width) / width


def _closed_form_terms(params, shift, ablate_srs):
    b = closed_form_im_chi(params, doppler_shift=shift, ablate_srs=ablate_srs)
    return b.linear_term, b.nonlinear_term, b.srs_term


def _closed_form_poles(params, ablate_srs):
    """Poles and residues of the linear, nonlinear and SRS terms.

    Each term is the real part of a complex rational function of the
    Doppler shift; the return value lists ``(poles, residues)`` per term.
    """
    p = params
    bd = closed_form_im_chi(p)
    a, b, c, d = (bd.coefficients[k] for k in "ABCD")
    p1 = b - 1j * a
    p2 = -d + 1j * c
    dn0 = p.rho_b0 - p.rho_c1
    dn1 = p.rho_b1 - p.rho_c1
    g = 1.0 / (p.gamma_raman + 1j * p.delta_ps)
    split = g / (p1 - p2)
    k_nl = p.omega_p**2 * dn0
    k_srs = -p.omega_s**2 * dn1
    zero = np.zeros_like(p1)
    linear = ((p1, p2), (1j * dn0 + zero, zero))
    nonlinear = ((p1, p2), (split * k_nl, -split * k_nl))
    srs = ((p1, p2), (split * k_srs, -split * k_srs))
    return linear, nonlinear, srs


def _pole_sum(poles, residues, shift):
    return sum(r / (shift - q) for q, r in zip(poles, residues))


def _pole_mean(poles, residues, width):
    return sum(r * lorentz_mean(q, width) for q, r in zip(poles, residues))


def _coherence_poles(params):
    """Poles and residues of ``rho_{b0c1}`` in the Doppler shift.

    ``M(kappa) = M0 + kappa S`` with ``S`` diagonal; poles are the finite
    generalized eigenvalues of ``(M0, -S)``.
    """
    m0, r = coherence_matrix(params)
    grid_shape = m0.shape[:-2]
    s = np.diag([1j, 1j, 1j, 0, 0, 0, -1j, -1j, -1j, 0, 0, 0])
    flat_m = m0.reshape(-1, 12, 12)
    flat_r = r.reshape(-1, 12)
    poles = np.full((flat_m.shape[0], 6), np.nan + 0j)
    res = np.zeros((flat_m.shape[0], 6), dtype=complex)
    for i, (mi, ri) in enumerate(zip(flat_m, flat_r)):
        lam, vl, vr = scipy.linalg.eig(mi, -s, left=True, right=True)
        finite = np.isfinite(lam)
        lam, vl, vr = lam[finite], vl[:, finite], vr[:, finite]
        if lam.size != 6:
            raise SolverError("unexpected number of velocity poles")
        norm = np.einsum("ij,jk,ki->i", vl.conj().T, -s, vr)
        poles[i] = lam
        res[i] = vr[0] * (vl.conj().T @ ri) / norm
    poles = poles.reshape(grid_shape + (6,))
    res = res.reshape(grid_shape + (6,))
    return np.moveaxis(poles, -1, 0), np.moveaxis(res, -1, 0)


def _coherence_response(params, shift):
    """``Im rho_{b0c1}/Omega_p`` evaluated with Doppler shift ``shift``."""
    return steady_state_coherences(params, doppler_shift=shift).im_chi


def doppler_average(params: TripodParams, temperature_c, quadrature_order=DEFAULT_ORDER,
                    model=CLOSED_FORM, ablate_srs=False, method=POLE_SUBTRACTED,
                    breakdown=False):
    """Velocity-averaged ``Im chi`` over the probe detuning(s) in ``params``.

    Parameters
    ----------
    params : TripodParams
        ``delta_p`` may be an array.
    temperature_c : float or None
        Vapor temperature; None or a zero Doppler width gives the
        stationary value.
    quadrature_order : int
        Gauss-Hermite order for the smooth remainder (or for the whole
        integrand with ``method="gauss-hermite"``).
    model : {"closed-form", "coherence-solve"}
    ablate_srs : bool
        Drop the SRS term (closed form only).
    method : {"pole-subtracted", "gauss-hermite"}
    breakdown : bool
        Closed form only: return ``(linear, nonlinear, srs)`` averages
        instead of the total.

    Returns
    -------
    ndarray or tuple of ndarray
    """
    if model not in MODELS:
        raise InvalidParameter(f"unknown model {model!r}")
    if method not in METHODS:
        raise InvalidParameter(f"unknown averaging method {method!r}")
    if model == COHERENCE_SOLVE and (ablate_srs or breakdown):
        raise InvalidParameter("SRS ablation and term breakdown need the closed form")
    if quadrature_order < MIN_ORDER:
        raise InvalidParameter(f"quadrature order must be >= {MIN_ORDER}")
    width = 0.0 if temperature_c is None else atom.doppler_width(temperature_c)

    if width == 0.0:
        if model == CLOSED_FORM:
            terms = _closed_form_terms(params, 0.0, ablate_srs)
            return _finish(terms, ablate_srs, breakdown)
        return _coherence_response(params, 0.0)

    quad = VelocityQuadrature.for_temperature(quadrature_order, temperature_c)
    shifts = quad.doppler_shifts()
    dp = np.asarray(params.delta_p, dtype=float)
    kappa = shifts.reshape((-1,) + (1,) * dp.ndim)

    if model == CLOSED_FORM:
        node_terms = _closed_form_terms(params, kappa, ablate_srs)
        if method == GAUSS_HERMITE:
            terms = tuple(np.tensordot(quad.weights, t, axes=1) for t in node_terms)
            return _finish(terms, ablate_srs, breakdown)
        out = []
        for nodes_val, (poles, residues) in zip(node_terms,
                                                _closed_form_poles(params, ablate_srs)):
            exact = _pole_mean(poles, residues, width).real
            remainder = nodes_val - _pole_sum(poles, residues, kappa).real
            out.append(exact + np.tensordot(quad.weights, remainder, axes=1))
        return _finish(tuple(out), ablate_srs, breakdown)

    node_vals = np.stack([_coherence_response(params, k) for k in shifts])
    if method == GAUSS_HERMITE:
        return np.tensordot(quad.weights, node_vals, axes=1)
    poles, residues = _coherence_poles(params)
    # Im(rho)/Omega_p = Re(-i rho / Omega_p)
    scale = -1j / params.omega_p
    exact = (scale * _pole_mean(poles, residues, width)).real
    remainder = node_vals - (scale * _pole_sum(poles, residues, kappa)).real
    return exact + np.tensordot(quad.weights, remainder, axes=1)


def _finish(terms, ablate_srs, breakdown):
    if breakdown:
        return terms
    lin, nl, srs = terms
    return lin + nl + (0.0 if ablate_srs else srs)


def two_level_reference(params: TripodParams, temperature_c):
    """Line-center absorption of the bare probe transition.

    Linear two-level response ``(rho_b0 - rho_c1) / gamma_oc`` with the
    same populations and velocity treatment as the full calculation.
    """
    dn0 = params.rho_b0 - params.rho_c1
    if dn0 <= 0:
        raise SolverError("probe transition not absorbing (rho_b0 <= rho_c1)")
    width = 0.0 if temperature_c is None else atom.doppler_width(temperature_c)
    pole = -1j * params.gamma_oc
    return float((1j * dn0 * lorentz_mean(pole, width)).real)


@dataclass(frozen=True)
class SpectrumSetup:
    """Everything needed to compute one probe spectrum.

    Attributes
    ----------
    params : TripodParams
        ``delta_p`` is ignored and replaced by the grid.
    optical_depth : float
        Resonant optical depth of the bare probe transition.
    temperature_c : float or None
        None for stationary atoms.
    quadrature_order : int
    model : str
    ablate_srs : bool
    """

    params: TripodParams
    optical_depth: float
    temperature_c: float | None
    quadrature_order: int = DEFAULT_ORDER
    model: str = CLOSED_FORM
    ablate_srs: bool = False


@dataclass(frozen=True)
class GainResult:
    gain: float
    center: float
    fwhm: float


@dataclass(frozen=True)
class Spectrum:
    """Probe spectrum on a detuning grid.

    ``im_chi`` is normalized to the bare two-level line-center value, so
    ``transmission = exp(-optical_depth * im_chi)``.
    """

    probe_detunings: np.ndarray
    transmission: np.ndarray
    im_chi: np.ndarray
    optical_depth: float
    annotations: dict = field(default_factory=dict)

    def to_csv(self):
        lines = ["delta_p_MHz,im_chi_au,transmission"]
        for d, x, t in zip(self.probe_detunings, self.im_chi, self.transmission):
            lines.append(f"{d:.9g},{x:.9g},{t:.9g}")
        return "\n".join(lines) + "\n"


def transmission_spectrum(setup: SpectrumSetup, grid):
    """Transmission ``exp(-OD Im chi / Im chi_ref)`` on ``grid`` (MHz).

    Returns
    -------
    Spectrum
        With window and gain annotations.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidParameter("probe detuning grid must be a non-empty 1-D array")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise InvalidParameter("probe detuning grid must be strictly increasing")
    if setup.optical_depth < 0:
        raise InvalidParameter("optical depth must be >= 0")
    params = setup.params.with_detuning(grid)
    raw = doppler_average(params, setup.temperature_c, setup.quadrature_order,
                          setup.model, setup.ablate_srs)
    ref = two_level_reference(setup.params, setup.temperature_c)
    im_chi = np.asarray(raw) / ref
    trans = np.exp(-setup.optical_depth * im_chi)
    spec = Spectrum(grid, trans, im_chi, setup.optical_depth)
    ann = annotate(spec, setup.params.delta_c, setup.params.delta_s)
    ann["reference_im_chi"] = ref
    return replace(spec, annotations=ann)


def _parabolic_peak(x, y, i):
    """Vertex of the parabola through points ``i-1, i, i+1``."""
    if i <= 0 or i >= len(x) - 1:
        return x[i], y[i]
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a >= 0:
        return x1, y1
    xv = -b / (2 * a)
    if not x0 <= xv <= x2:
        return x1, y1
    c = y1 - a * x1**2 - b * x1
    return xv, a * xv**2 + b * xv + c


def _crossings(x, y, i, level, limit_lo=None, limit_hi=None):
    """Interpolated positions where ``y`` falls below ``level`` either side of ``i``."""
    lo = 0 if limit_lo is None else limit_lo
    hi = len(x) - 1 if limit_hi is None else limit_hi
    left = right = np.nan
    j = i
    while j > lo and y[j - 1] >= level:
        j -= 1
    if j > lo:
        left = np.interp(level, [y[j - 1], y[j]], [x[j - 1], x[j]])
    j = i
    while j < hi and y[j + 1] >= level:
        j += 1
    if j < hi:
        right = np.interp(level, [y[j + 1], y[j]], [x[j + 1], x[j]])
    return left, right


def peak_fwhm(x, y, i, level):
    left, right = _crossings(x, y, i, level)
    return float(right - left)


def extract_gain(spectrum: Spectrum, epsilon=GAIN_EPSILON):
    """Gain peak of a spectrum, or None when ``max T <= 1 + epsilon``.

    The apex is refined with a parabola through the three highest-lying
    grid points; the width is the full width at half of the peak
    transmission, with linear interpolation between grid points.
    """
    t = spectrum.transmission
    x = spectrum.probe_detunings
    if t.size == 0:
        return None
    i = int(np.argmax(t))
    if t[i] <= 1.0 + epsilon:
        return None
    center, g = _parabolic_peak(x, t, i)
    fwhm = peak_fwhm(x, t, i, 0.5 * g)
    return GainResult(float(g), float(center), fwhm)


def find_window(spectrum: Spectrum, expected, search=WINDOW_SEARCH_MHZ,
                span=WINDOW_SPAN_MHZ):
    """Locate a transparency window near ``expected``.

    A window is a local minimum of the absorbance ``OD * Im chi`` inside
    ``expected +/- search``. Its width is the full width at the level
    halfway between that minimum and the smaller of the highest absorbance
    found within ``span`` on each side.

    Returns
    -------
    dict or None
        ``center``, ``transmission`` and ``fwhm`` (MHz, may be NaN).
    """
    x = spectrum.probe_detunings
    a = spectrum.optical_depth * spectrum.im_chi
    if spectrum.optical_depth == 0:
        a = spectrum.im_chi
    sel = np.flatnonzero(np.abs(x - expected) <= search)
    if sel.size < 3:
        return None
    i = int(sel[np.argmin(a[sel])])
    if i == 0 or i == len(x) - 1 or i in (sel[0], sel[-1]):
        return None
    if not (a[i] < a[i - 1] and a[i] <= a[i + 1]):
        return None
    center, neg_min = _parabolic_peak(x, -a, i)
    left = np.flatnonzero((x >= x[i] - span) & (x < x[i]))
    right = np.flatnonzero((x > x[i]) & (x <= x[i] + span))
    if left.size == 0 or right.size == 0:
        return None
    top = min(a[left].max(), a[right].max())
    level = 0.5 * (top + a[i])
    lo, hi = _crossings(x, -a, i, -level, left[0], right[-1])
    return {"center": float(center),
            "transmission": float(np.exp(neg_min) if spectrum.optical_depth else
                                  spectrum.transmission[i]),
            "fwhm": float(hi - lo),
            "contrast": float(top - a[i])}


def annotate(spectrum: Spectrum, delta_c, delta_s):
    """Window and gain annotations for a spectrum."""
    gain = extract_gain(spectrum)
    return {
        "first_window": find_window(spectrum, delta_c),
        "second_window": find_window(spectrum, delta_s),
        "max_transmission": float(spectrum.transmission.max()),
        "gain": None if gain is None else {"gain": gain.gain, "center": gain.center,
                                           "fwhm": gain.fwhm},
    }
