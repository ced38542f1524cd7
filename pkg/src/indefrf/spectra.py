"""Closed-form radial spectral densities for the kernel catalog.

Every density is expressed through ``B_a(w) = (2/w)^a J_a(2w)``, which is
finite at the origin, so no 0/0 appears at ``w = 0``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import stats

from . import kernels as K
from .errors import OrderOverflow, UnsupportedSpectrum
from .measures import (
    DEFAULT_RMAX,
    DecomposedMeasure,
    RadialSignedMeasure,
    calibrate,
    jordan_split,
    radial_forward_transform,
    zero_measure,
)
from .sampling import gaussian_radial_density
from .specfun import MAX_ORDER, scaled_bessel, sphere_surface_area


@dataclass(frozen=True)
class SpectrumSpec:
    kernel: K.KernelSpec
    truncation_terms: int = 1
    support_radius: float = DEFAULT_RMAX

    def __post_init__(self):
        if self.kernel.family in (K.ARCCOS0, K.ARCCOS1) and self.truncation_terms != 1:
            raise NotImplementedError("arc-cosine spectra are only available at truncation j=0")
        if not self.support_radius > 0:
            raise ValueError("support_radius must be positive")


def _power_tail(terms, d):
    """Tail of ``S_{d-1} int_R^inf sum_i c_i r^(d-1-beta_i) dr``; inf if divergent."""
    area = sphere_surface_area(d)

    def tail(R):
        total = 0.0
        for c, beta in terms:
            if c == 0:
                continue
            if beta <= d:
                return math.inf
            total += area * abs(c) * R ** (d - beta) / (beta - d)
        return total

    return tail


def _gaussian_tail(tau, d):
    return lambda R: float(stats.chi2.sf((R * tau) ** 2, d))


def gaussian_measure(tau, d, support_radius=DEFAULT_RMAX, name=None):
    return RadialSignedMeasure(
        gaussian_radial_density(tau, d),
        d,
        support_radius,
        name=name or f"gaussian(tau={tau:g})",
        tail=_gaussian_tail(tau, d),
        gaussian_tau=float(tau),
    )


def _check_order(order):
    if order > MAX_ORDER:
        raise OrderOverflow(f"Bessel order {order:g} exceeds validated range {MAX_ORDER:g}")


def spherical_polynomial_density(a, p, d):
    """Raw series density and its large-radius envelope terms."""
    _check_order(d / 2.0 + p)
    coefs = []
    for i in range(p + 1):
        c = math.factorial(p) / math.factorial(p - i) * (1.0 - 4.0 / a**2) ** (p - i)
        coefs.append(c * (2.0 / a**2) ** i)

    def density(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        for i, c in enumerate(coefs):
            if c != 0.0:
                out += c * scaled_bessel(d / 2.0 + i, w)
        return out

    # |B_a(w)| <~ 2^a w^-a (pi w)^-1/2 for large w
    envelope = [(c * 2.0 ** (d / 2.0 + i) / math.sqrt(math.pi), d / 2.0 + i + 0.5)
                for i, c in enumerate(coefs)]
    return density, envelope


def arccos0_density(d):
    """Truncation j=0 density of the zero-order arc-cosine kernel."""
    h = d / 2.0
    _check_order(h + 2)

    def density(w):
        w = np.asarray(w, dtype=float)
        b0, b1, b2 = scaled_bessel(h, w), scaled_bessel(h + 1, w), scaled_bessel(h + 2, w)
        bracket = -3.0 * b0 + 2.0 ** (-(h + 1)) * b1 + 0.5 * b2
        return 0.5 * b0 - w**2 / math.pi * bracket

    s = 1.0 / math.sqrt(math.pi)
    envelope = [
        (0.5 * 2.0**h * s, h + 0.5),
        (3.0 / math.pi * 2.0**h * s, h - 1.5),
        (1.0 / math.pi * 2.0 ** (-(h + 1)) * 2.0 ** (h + 1) * s, h - 0.5),
        (0.5 / math.pi * 2.0 ** (h + 2) * s, h + 0.5),
    ]
    return density, envelope


def arccos1_density(d):
    """Truncation j=0 density of the first-order arc-cosine kernel."""
    h = d / 2.0
    _check_order(h)
    c = (math.sqrt(2.0) - 1.0) / (2.0 * math.pi)

    def density(w):
        w = np.asarray(w, dtype=float)
        return c * w**2 * scaled_bessel(h, w)

    return density, [(c * 2.0**h / math.sqrt(math.pi), h - 1.5)]


def spectrum_of(spec):
    """Radial density of ``spec.kernel``; closed forms are calibrated to ``k(0)``.

    Raises
    ------
    UnsupportedSpectrum
        For the NTK, which has no closed-form spectrum; use
        :func:`numeric_spectrum` instead.
    """
    kern = spec.kernel
    d, R, p = kern.input_dim, spec.support_radius, kern.params
    if kern.family == K.GAUSSIAN:
        return gaussian_measure(p["tau"], d, R)
    if kern.family == K.DELTA_GAUSSIAN:
        g1 = gaussian_radial_density(p["tau1"], d)
        g2 = gaussian_radial_density(p["tau2"], d)
        t1, t2 = _gaussian_tail(p["tau1"], d), _gaussian_tail(p["tau2"], d)
        return RadialSignedMeasure(
            lambda w: g1(w) - g2(w), d, R, name=kern.describe(),
            tail=lambda r: t1(r) + t2(r),
        )
    if kern.family == K.NTK:
        raise UnsupportedSpectrum(
            "no closed-form spectrum for the NTK; use the numeric forward transform "
            "(numeric_spectrum / --kernel ntk with the numeric path)"
        )
    if kern.family == K.SPHERICAL_POLYNOMIAL:
        density, env = spherical_polynomial_density(p["a"], int(p["p"]), d)
    elif kern.family == K.ARCCOS0:
        density, env = arccos0_density(d)
    else:
        density, env = arccos1_density(d)
    raw = RadialSignedMeasure(density, d, R, name=kern.describe(), tail=_power_tail(env, d))
    return calibrate(raw, kern)


def numeric_spectrum(kernel, support_radius=DEFAULT_RMAX, points=2001):
    """Forward transform tabulated on a grid and linearly interpolated, then calibrated."""
    grid = np.linspace(0.0, support_radius, points)
    table = radial_forward_transform(kernel, grid)

    def density(w):
        return np.interp(np.asarray(w, dtype=float), grid, table, right=0.0)

    raw = RadialSignedMeasure(
        density, kernel.input_dim, support_radius, name=kernel.describe(),
        provenance="numeric", meta={"grid_points": points},
    )
    return calibrate(raw, kernel)


def spectrum_sign_profile(mu, grid):
    """Sign (-1, 0, +1) of the density at each radius."""
    return np.sign(mu(np.asarray(grid, dtype=float))).astype(int)


def decompose_kernel(kernel, support_radius=DEFAULT_RMAX, numeric_points=2001,
                     sampling_radius=None):
    """Positive decomposition of a kernel's spectral measure.

    Gaussian mixtures split by coefficient sign into exact Gaussian components
    of unit mass; every other family goes through the minimal Jordan split of
    its (calibrated) spectrum. ``sampling_radius`` restricts the calibrated
    spectrum to a smaller interval before splitting (sub-interval sampling).
    """
    d, p = kernel.input_dim, kernel.params
    if kernel.family == K.GAUSSIAN:
        g = gaussian_measure(p["tau"], d, support_radius)
        return DecomposedMeasure(g, zero_measure(d, support_radius), 1.0, 0.0, 1.0, 0.0)
    if kernel.family == K.DELTA_GAUSSIAN:
        g1 = gaussian_measure(p["tau1"], d, support_radius)
        g2 = gaussian_measure(p["tau2"], d, support_radius)
        return DecomposedMeasure(g1, g2, 1.0, 1.0, 1.0, 1.0)
    if kernel.family == K.NTK:
        mu = numeric_spectrum(kernel, support_radius, numeric_points)
    elif kernel.family not in K.FAMILIES:
        raise UnsupportedSpectrum(kernel.family)
    else:
        mu = spectrum_of(SpectrumSpec(kernel, 1, support_radius))
    if sampling_radius is not None:
        mu = mu.with_support(sampling_radius)
    return jordan_split(mu)
