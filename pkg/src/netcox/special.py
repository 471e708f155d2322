"""Log-scale modified Bessel function of the second kind.

``scipy.special.kve`` covers most of the domain.  Where it overflows (large
order, small argument) a leading-order series or the uniform Debye
expansion takes over, so that ratios such as ``K_nu(x) / K_nu(y)`` stay
finite.
"""
from __future__ import annotations

import numpy as np
from scipy import special


def _debye_log_kv(nu, z):
    # uniform asymptotic expansion in 1/nu, four correction terms
    x = z / nu
    s = np.sqrt(1.0 + x * x)
    eta = s + np.log(x / (1.0 + s))
    p = 1.0 / s
    p2 = p * p
    u1 = p * (3.0 - 5.0 * p2) / 24.0
    u2 = p2 * (81.0 - 462.0 * p2 + 385.0 * p2 * p2) / 1152.0
    u3 = p * p2 * (30375.0 - 369603.0 * p2 + 765765.0 * p2**2 - 425425.0 * p2**3) / 414720.0
    u4 = p2 * p2 * (4465125.0 - 94121676.0 * p2 + 349922430.0 * p2**2
                    - 446185740.0 * p2**3 + 185910725.0 * p2**4) / 39813120.0
    corr = 1.0 - u1 / nu + u2 / nu**2 - u3 / nu**3 + u4 / nu**4
    return 0.5 * np.log(np.pi / (2.0 * nu)) - nu * eta - 0.5 * np.log(s) + np.log(corr)


def _small_z_log_kv(nu, z):
    # K_nu(z) ~ Gamma(nu)/2 (2/z)^nu sum_k (z^2/4)^k / (k! (1-nu)_k), nu > 0
    q = z * z / 4.0
    total = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(1, 8):
        live = k < nu
        term = np.where(live, term * q / np.where(live, k * (k - nu), 1.0), 0.0)
        total = total + term
    return special.gammaln(nu) - np.log(2.0) + nu * (np.log(2.0) - np.log(z)) + np.log(total)


def log_kv(nu, z):
    """``log K_nu(z)`` for real order and ``z > 0``, vectorised."""
    nu = np.abs(np.asarray(nu, dtype=float))
    z = np.asarray(z, dtype=float)
    nu, z = np.broadcast_arrays(nu, z)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        val = special.kve(nu, z)
        out = np.log(val) - z
    bad = ~np.isfinite(out) | (val <= 0)
    if np.any(bad):
        nb, zb = nu[bad], z[bad]
        small = zb * zb < 0.1 * (nb + 1.0)
        fix = np.empty(nb.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            fix[small] = _small_z_log_kv(nb[small], zb[small])
            fix[~small] = _debye_log_kv(nb[~small], zb[~small])
        out = np.array(out, copy=True)
        out[bad] = fix
    return out[()] if out.ndim == 0 else out
