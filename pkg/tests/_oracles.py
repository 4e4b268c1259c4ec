"""Independent reference computations used by the tests."""

import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.linalg import expm

from deitsim.atom import LevelScheme, thermal_vector


def time_march(system, rate_floor_mhz, factor=40.0, substeps=1):
    """Propagate the thermal state with exact exponential steps.

    The state is advanced to ``t >= factor / rate_floor`` by repeated
    squaring of ``expm(M dt)``; no linear solve of the steady state is
    involved.
    """
    mat = system.matrix
    x = np.zeros(system.size)
    x[: system.n_populations] = thermal_vector(system.scheme)
    t_final = factor / rate_floor_mhz
    dt = 1e-2
    n_sq = max(0, math.ceil(math.log2(t_final / dt)))
    prop = expm(mat * dt)
    for _ in range(n_sq):
        prop = prop @ prop
    for _ in range(substeps):
        x = prop @ x
    return x[: system.n_populations]


def gaussian_average(func, width, center_points=(), limit=4000):
    """Adaptive-quadrature Maxwell average of a real scalar function."""
    norm = 1.0 / (width * math.sqrt(math.pi))
    pts = sorted(set(center_points) | {0.0})
    # roundoff warnings at the 1e-12 target are expected near narrow poles
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda x: func(x) * math.exp(-(x / width) ** 2) * norm,
                      -12 * width, 12 * width, points=pts, limit=limit,
                      epsabs=1e-16, epsrel=1e-12)
    return val


def chain_block_literal(m, fields, relax, scheme=None):
    """Populations-and-coherence generator for one m-chain, built by hand.

    Valid with ToP and Zeeman rates zero and no excited-state return flow.
    Unknowns are ``[a_m, b_m, c_m]`` (existing ones only) followed by the
    real and imaginary parts of ``rho_{a_m c_m}`` and ``rho_{b_m c_m}``.
    """
    scheme = scheme or LevelScheme()
    pops = [lvl for lvl in (("a", m), ("b", m), ("c", m))
            if abs(m) <= scheme.f_of(lvl[0])]
    coh = [lvl for lvl in pops if lvl[0] != "c" and abs(m) <= scheme.f_c]
    n = len(pops) + 2 * len(coh)
    mat = np.zeros((n, n))
    ic = pops.index(("c", m))
    mat[ic, ic] = -relax.gamma_c
    for k, g in enumerate(coh):
        if g[0] == "a":
            om, d, gam = fields.omega_c, fields.delta_c, relax.gamma_ca
            cg = scheme.pi_weight("a", m)
        else:
            om, d, gam = fields.omega_s, fields.delta_s, relax.gamma_cb
            cg = scheme.pi_weight("b", m)
        w = 0.5 * om * cg
        re, im = len(pops) + 2 * k, len(pops) + 2 * k + 1
        ig = pops.index(g)
        # d/dt (x + i y) = i w (pg - pc) - (i d + gam)(x + i y)
        mat[re, re], mat[re, im] = -gam, d
        mat[im, im], mat[im, re] = -gam, -d
        mat[im, ig], mat[im, ic] = w, -w
        mat[ic, im] += 2 * w
        mat[ig, im] -= 2 * w
    return pops, coh, mat
