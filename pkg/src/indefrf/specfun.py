"""Special functions used by the radial spectral densities.

Thin validated wrappers around :mod:`scipy.special`; every function accepts
scalars or arrays and raises :class:`~indefrf.errors.DomainError` on
arguments outside its domain instead of returning NaN.
"""

import math

import numpy as np
from scipy import special

from .errors import DomainError

# Largest Bessel order the spectra are validated for.
MAX_ORDER = 40.0


def _check(name, value, lower, strict):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    bad = arr <= lower if strict else arr < lower
    if np.any(bad):
        op = ">" if strict else ">="
        raise DomainError(f"{name} must be {op} {lower}")
    return arr


def bessel_j(nu, x):
    """Bessel function of the first kind ``J_nu(x)`` for ``nu >= 0, x >= 0``.

    Parameters
    ----------
    nu : float or array_like
        Nonnegative order.
    x : float or array_like
        Nonnegative argument.

    Returns
    -------
    float or ndarray
        ``J_nu(x)``, broadcast over ``nu`` and ``x``.
    """
    nu_arr = _check("nu", nu, 0.0, strict=False)
    x_arr = _check("x", x, 0.0, strict=False)
    out = special.jv(nu_arr, x_arr)
    return float(out) if np.ndim(out) == 0 else out


def gamma_fn(x):
    """Gamma function on the positive reals."""
    arr = _check("x", x, 0.0, strict=True)
    out = special.gamma(arr)
    return float(out) if np.ndim(out) == 0 else out


def sphere_surface_area(d):
    """Surface area ``2 pi^(d/2) / Gamma(d/2)`` of the unit sphere in R^d."""
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise DomainError("d must be a positive integer")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def radial_char(d, u):
    """Characteristic function of the uniform direction on the sphere in R^d.

    ``h_d(u) = Gamma(d/2) (2/u)^(d/2-1) J_(d/2-1)(u)`` with ``h_d(0) = 1``;
    this is the kernel pairing a radial density with its radial transform.
    """
    u = np.abs(np.asarray(u, dtype=float))
    if d == 1:
        return np.cos(u)
    nu = d / 2.0 - 1.0
    out = np.empty_like(u)
    small = u < 1e-3
    # two-term series avoids 0/0 at the origin
    us = u[small]
    out[small] = 1.0 - us**2 / (2.0 * d) + us**4 / (8.0 * d * (d + 2.0))
    ul = u[~small]
    if nu == 0.0:
        out[~small] = special.j0(ul)
    else:
        out[~small] = special.gamma(d / 2.0) * (2.0 / ul) ** nu * special.jv(nu, ul)
    return out


def scaled_bessel(alpha, w):
    """``(2/w)^alpha J_alpha(2 w)`` with its finite limit ``2^alpha/Gamma(alpha+1)`` at 0.

    Uses the ascending series below ``w = 1`` where the direct product would
    underflow/overflow for large orders.
    """
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = w < 1.0
    ws = w[small] ** 2
    acc = np.zeros_like(ws)
    term = np.full_like(ws, 2.0**alpha / math.gamma(alpha + 1.0))
    for k in range(40):
        acc += term
        term = -term * ws / ((k + 1.0) * (alpha + k + 1.0))
    out[small] = acc
    wl = w[~small]
    out[~small] = (2.0 / wl) ** alpha * special.jv(alpha, 2.0 * wl)
    return out
