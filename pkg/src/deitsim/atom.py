"""Level scheme, field and relaxation parameters for the Cs D1 tripod.

Unit convention
---------------
Every rate and detuning handled by the solvers is an ordinary frequency
in MHz (no factor of 2 pi). Ground-state transfer rates (spin-exchange
"ToP" collisions and Zeeman mixing) are specified in Hz because that is
their natural scale; they are converted to MHz exactly once, by the
``*_mhz`` accessors of :class:`RelaxationModel`.

Level labels
------------
``a`` is the 6S1/2 F=3 manifold, ``b`` is 6S1/2 F=4 and ``c`` is the
excited 6P1/2 F'=4 manifold. A sublevel is identified by a tuple such as
``("b", 1)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import constants as sc
from sympy import Rational
from sympy.physics.wigner import clebsch_gordan, wigner_6j

from .errors import InvalidParameter

HZ_TO_MHZ = 1e-6

# Cs D1 line
WAVELENGTH_M = 894.59e-9
CS_MASS_KG = 132.905451931 * sc.atomic_mass
EXCITED_DECAY_MHZ = 4.6
SATURATION_INTENSITY_MW_CM2 = 2.5
NUCLEAR_SPIN = Rational(7, 2)

# Spin-exchange rate constant: ToP rate = kappa * N
TOP_RATE_CONSTANT_CM3_S = 6e-10

# Vapor density model, log10(N / cm^-3) = A - B / T. The two coefficients
# place N at 5e10 cm^-3 at 25 C and 1e12 cm^-3 at 80 C.
DENSITY_LOG_A = 19.0527
DENSITY_LOG_B_K = 2490.6

# Optical depth reference: OD 1.5 at 5e10 cm^-3 in a 7.5 cm cell.
OD_REFERENCE = 1.5
OD_REFERENCE_DENSITY_CM3 = 5e10
OD_REFERENCE_LENGTH_M = 0.075

VALID_TEMPERATURE_C = (15.0, 90.0)

# Rabi frequencies (MHz) quoted for the experimental beams, used to back-solve
# the default effective coupling-strength factors.
_QUOTED_RABI = {
    "coupling": (30.0, 1.0, 23.0),   # power mW, radius mm, Rabi MHz
    "signal": (10.0, 0.5, 7.0),
    "probe": (0.020, 0.5, 1.0),
}


def _intensity_mw_cm2(power_mw, radius_mm):
    radius_cm = radius_mm / 10.0
    return power_mw / (math.pi * radius_cm**2)


def rabi_from_power(power_mw, radius_mm, alpha, gamma_mhz=EXCITED_DECAY_MHZ,
                    isat_mw_cm2=SATURATION_INTENSITY_MW_CM2):
    """Rabi frequency of a beam from its power and waist.

    Uses ``Omega = alpha * Gamma * sqrt(I / (2 I_sat))`` with
    ``I = P / (pi r^2)``.

    Parameters
    ----------
    power_mw : float
        Beam power in mW.
    radius_mm : float
        Beam radius in mm.
    alpha : float
        Effective transition-strength factor (Clebsch-Gordan weight).
    gamma_mhz : float, optional
        Excited-state decay rate in MHz.
    isat_mw_cm2 : float, optional
        Saturation intensity.

    Returns
    -------
    float
        Rabi frequency in MHz.

    Examples
    --------
    >>> round(rabi_from_power(10.0, 0.5, 0.1), 2)
    7.34
    """
    if power_mw < 0 or radius_mm <= 0 or alpha < 0:
        raise InvalidParameter("power and alpha must be >= 0 and radius > 0")
    intensity = _intensity_mw_cm2(power_mw, radius_mm)
    return alpha * gamma_mhz * math.sqrt(intensity / (2.0 * isat_mw_cm2))


def _default_alpha(beam):
    power, radius, rabi = _QUOTED_RABI[beam]
    return rabi / rabi_from_power(power, radius, 1.0)


DEFAULT_ALPHA = {beam: _default_alpha(beam) for beam in _QUOTED_RABI}


def density_from_temperature(temperature_c):
    """Cs vapor number density in cm^-3.

    Two-parameter vapor-pressure fit ``log10 N = A - B / T`` anchored at
    5e10 cm^-3 (25 C) and 1e12 cm^-3 (80 C). For comparison, the
    tabulated liquid-phase Cs vapor pressure,
    ``log10(P / torr) = 8.22127 - 4006.048 / T - 0.00060194 T - 0.19623 log10 T``,
    gives about 4.3e10 cm^-3 at 25 C and 4e12 cm^-3 at 80 C; the fit is
    used because the optical-depth and ToP calibrations are tied to it.
    """
    t_k = temperature_c + 273.15
    if t_k <= 0:
        raise InvalidParameter("temperature below absolute zero")
    if not VALID_TEMPERATURE_C[0] <= temperature_c <= VALID_TEMPERATURE_C[1]:
        warnings.warn(
            f"temperature {temperature_c} C outside the calibrated range "
            f"{VALID_TEMPERATURE_C}", RuntimeWarning, stacklevel=2)
    return 10.0 ** (DENSITY_LOG_A - DENSITY_LOG_B_K / t_k)


def top_rate_from_density(density_cm3, kappa_cm3_s=TOP_RATE_CONSTANT_CM3_S):
    """ToP transfer rate gamma'_ab in Hz, linear in density."""
    if density_cm3 < 0:
        raise InvalidParameter("density must be >= 0")
    return kappa_cm3_s * density_cm3


def doppler_width(temperature_c, wavelength_m=WAVELENGTH_M, mass_kg=CS_MASS_KG):
    """1/e half-width of the Doppler profile, ``u / lambda``, in MHz.

    ``u = sqrt(2 kB T / M)`` is the most probable speed.
    """
    t_k = temperature_c + 273.15
    if t_k < 0:
        raise InvalidParameter("temperature below absolute zero")
    u = math.sqrt(2.0 * sc.k * t_k / mass_kg)
    return u / wavelength_m * HZ_TO_MHZ


def most_probable_speed(temperature_c, mass_kg=CS_MASS_KG):
    """Most probable thermal speed in m/s."""
    return math.sqrt(2.0 * sc.k * (temperature_c + 273.15) / mass_kg)


def calibrate_od(density_cm3, length_m=OD_REFERENCE_LENGTH_M):
    """Optical depth scaled linearly from the room-temperature reference.

    >>> round(calibrate_od(12 * 5e10), 6)
    18.0
    """
    if density_cm3 < 0 or length_m <= 0:
        raise InvalidParameter("density must be >= 0 and length > 0")
    return (OD_REFERENCE * density_cm3 / OD_REFERENCE_DENSITY_CM3
            * length_m / OD_REFERENCE_LENGTH_M)


@lru_cache(maxsize=None)
def clebsch(j1, m1, j2, m2, j, m):
    """Clebsch-Gordan coefficient as a float (integer momenta)."""
    return float(clebsch_gordan(j1, j2, j, m1, m2, m))


@lru_cache(maxsize=None)
def hyperfine_factor(f_ground, f_excited, j_ground=Rational(1, 2),
                     j_excited=Rational(1, 2), nuclear=NUCLEAR_SPIN):
    """Relative strength of the F' -> F hyperfine decay channel."""
    six_j = wigner_6j(j_ground, j_excited, 1, f_excited, f_ground, nuclear)
    return float((2 * f_ground + 1) * (2 * j_excited + 1) * six_j**2)


@dataclass(frozen=True)
class LevelScheme:
    """Magnetic sublevels of the a, b and c manifolds.

    Attributes
    ----------
    f_a, f_b, f_c : int
        Total angular momenta of the three manifolds.
    """

    f_a: int = 3
    f_b: int = 4
    f_c: int = 4

    def f_of(self, manifold):
        return {"a": self.f_a, "b": self.f_b, "c": self.f_c}[manifold]

    def sublevels(self, manifold):
        f = self.f_of(manifold)
        return [(manifold, m) for m in range(-f, f + 1)]

    @property
    def levels(self):
        """All sublevels, ordered a(-3..3), b(-4..4), c(-4..4)."""
        return self.sublevels("a") + self.sublevels("b") + self.sublevels("c")

    @property
    def ground_levels(self):
        return self.sublevels("a") + self.sublevels("b")

    def pi_weight(self, manifold, m):
        """Clebsch-Gordan weight of the pi transition ``(manifold, m) -> (c, m)``.

        Returns 0 when the excited sublevel does not exist.
        """
        f = self.f_of(manifold)
        if abs(m) > self.f_c or abs(m) > f:
            return 0.0
        return clebsch(f, m, 1, 0, self.f_c, m)

    def sigma_weight(self, m_ground, m_excited, manifold="b"):
        """Clebsch-Gordan weight of ``(manifold, m_ground) -> (c, m_excited)``."""
        q = m_excited - m_ground
        if abs(q) > 1:
            return 0.0
        return clebsch(self.f_of(manifold), m_ground, 1, q, self.f_c, m_excited)

    def branching(self, m_excited):
        """Spontaneous-emission branching ratios out of ``(c, m_excited)``.

        Returns
        -------
        dict
            ``{(manifold, m): fraction}``; fractions sum to 1.
        """
        weights = {}
        for manifold in ("a", "b"):
            f = self.f_of(manifold)
            hf = hyperfine_factor(f, self.f_c)
            for m in range(-f, f + 1):
                q = m_excited - m
                if abs(q) <= 1:
                    w = hf * clebsch(f, m, 1, q, self.f_c, m_excited) ** 2
                    if w > 0:
                        weights[(manifold, m)] = w
        total = sum(weights.values())
        return {k: v / total for k, v in weights.items()}

    @property
    def thermal_populations(self):
        """Equal occupation of the 16 ground sublevels."""
        n = len(self.ground_levels)
        return {lvl: (1.0 / n if lvl[0] != "c" else 0.0) for lvl in self.levels}


@dataclass(frozen=True)
class FieldSet:
    """Rabi frequencies and one-photon detunings of the three beams, in MHz.

    ``delta_p`` is kept here for completeness; spectra override it with a
    grid.
    """

    omega_c: float
    omega_s: float
    omega_p: float
    delta_c: float = 0.0
    delta_s: float = 10.0
    delta_p: float = 0.0

    def __post_init__(self):
        for name in ("omega_c", "omega_s", "omega_p"):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be >= 0")

    @property
    def weak_probe(self):
        """True when the probe is at most a fifth of the weaker pump field."""
        return self.omega_p <= 0.2 * min(self.omega_c, self.omega_s)


@dataclass(frozen=True)
class RelaxationModel:
    """Excited-state decay and ground-state transfer rates.

    Parameters
    ----------
    top_ab : float
        ToP rate gamma'_ab from each a sublevel into each b sublevel, Hz.
    zeeman_aa, zeeman_bb : float
        Zeeman mixing rates within a and within b, Hz.
    gamma_c : float
        Excited-state decay rate, MHz.
    relative_linewidth : float
        Relative linewidth of the probe and signal lasers, MHz. Added to the
        decay of the b0-b1 Raman coherence only.
    """

    top_ab: float
    zeeman_aa: float = 20.0
    zeeman_bb: float = 20.0
    gamma_c: float = EXCITED_DECAY_MHZ
    relative_linewidth: float = 0.0

    def __post_init__(self):
        for name in ("top_ab", "zeeman_aa", "zeeman_bb", "gamma_c",
                     "relative_linewidth"):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be >= 0")

    # Hz quantities
    @property
    def top_ba(self):
        """Reverse ToP rate from each b into each a sublevel, Hz."""
        return 9.0 / 7.0 * self.top_ab

    @property
    def total_a(self):
        """Total outflow rate Gamma_a of an a sublevel, Hz."""
        return 9.0 * self.top_ab + 6.0 * self.zeeman_aa

    @property
    def total_b(self):
        """Total outflow rate Gamma_b of a b sublevel, Hz."""
        return 7.0 * self.top_ba + 8.0 * self.zeeman_bb

    # MHz quantities
    @property
    def top_ab_mhz(self):
        return self.top_ab * HZ_TO_MHZ

    @property
    def top_ba_mhz(self):
        return self.top_ba * HZ_TO_MHZ

    @property
    def zeeman_aa_mhz(self):
        return self.zeeman_aa * HZ_TO_MHZ

    @property
    def zeeman_bb_mhz(self):
        return self.zeeman_bb * HZ_TO_MHZ

    @property
    def total_a_mhz(self):
        return self.total_a * HZ_TO_MHZ

    @property
    def total_b_mhz(self):
        return self.total_b * HZ_TO_MHZ

    @property
    def gamma_gg(self):
        """Ground-state coherence decay in MHz, equal to Gamma_b."""
        return self.total_b_mhz

    @property
    def gamma_raman(self):
        """Decay of the b0-b1 coherence, including laser linewidth, MHz."""
        return self.gamma_gg + self.relative_linewidth

    @property
    def gamma_oc(self):
        """Optical coherence decay ``(Gamma_c + 9 gamma'_ab) / 2`` in MHz."""
        return 0.5 * (self.gamma_c + 9.0 * self.top_ab_mhz)

    @property
    def gamma_ca(self):
        """Decay of a c-a optical coherence in the rate model, MHz."""
        return 0.5 * (self.gamma_c + self.total_a_mhz)

    @property
    def gamma_cb(self):
        """Decay of a c-b optical coherence in the rate model, MHz."""
        return 0.5 * (self.gamma_c + self.total_b_mhz)


@dataclass(frozen=True)
class CellConditions:
    """Vapor cell state.

    Attributes
    ----------
    temperature_c : float or None
        Temperature used for the Doppler width; None for stationary atoms.
    density_cm3 : float
        Number density.
    optical_depth : float
        Resonant optical depth of the probe transition.
    length_m : float
        Cell length.
    """

    temperature_c: float | None
    density_cm3: float
    optical_depth: float
    length_m: float = OD_REFERENCE_LENGTH_M
    notes: tuple = field(default=(), compare=False)

    @property
    def doppler_width(self):
        """Doppler width in MHz, 0 for stationary atoms."""
        if self.temperature_c is None:
            return 0.0
        return doppler_width(self.temperature_c)


def thermal_vector(scheme=None):
    """Thermal ground populations as an array ordered like ``scheme.levels``."""
    scheme = scheme or LevelScheme()
    pops = scheme.thermal_populations
    return np.array([pops[lvl] for lvl in scheme.levels])
