"""Closed-form stationary kernels ``k(z)`` with ``z = ||x - x'||_2``."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataNotNormalized, DomainError
from .sampling import RngStream

GAUSSIAN = "gaussian"
DELTA_GAUSSIAN = "delta-gaussian"
SPHERICAL_POLYNOMIAL = "sph-poly"
ARCCOS0 = "arccos0"
ARCCOS1 = "arccos1"
NTK = "ntk"

FAMILIES = (GAUSSIAN, DELTA_GAUSSIAN, SPHERICAL_POLYNOMIAL, ARCCOS0, ARCCOS1, NTK)
SPHERICAL_FAMILIES = (SPHERICAL_POLYNOMIAL, ARCCOS0, ARCCOS1, NTK)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its parameters and input dimension.

    Use the classmethod constructors; they validate the parameters.
    """

    family: str
    input_dim: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}")
        if int(self.input_dim) != self.input_dim or self.input_dim < 1:
            raise DomainError("input_dim must be a positive integer")
        p = self.params
        if self.family == GAUSSIAN:
            if not p.get("tau", 0) > 0:
                raise DomainError("tau must be positive")
        elif self.family == DELTA_GAUSSIAN:
            t1, t2 = p.get("tau1", 0), p.get("tau2", 0)
            if not (t1 > 0 and t2 > 0):
                raise DomainError("tau1 and tau2 must be positive")
            if t1 == t2:
                raise DomainError("tau1 must differ from tau2")
        elif self.family == SPHERICAL_POLYNOMIAL:
            a, deg = p.get("a", 0), p.get("p", 0)
            if not a >= 2:
                raise DomainError("a must be >= 2")
            if int(deg) != deg or deg < 1:
                raise DomainError("p must be an integer >= 1")

    def __hash__(self):
        return hash((self.family, self.input_dim, tuple(sorted(self.params.items()))))

    @classmethod
    def gaussian(cls, tau, d):
        return cls(GAUSSIAN, d, {"tau": float(tau)})

    @classmethod
    def delta_gaussian(cls, tau1, tau2, d):
        return cls(DELTA_GAUSSIAN, d, {"tau1": float(tau1), "tau2": float(tau2)})

    @classmethod
    def spherical_polynomial(cls, a, p, d):
        return cls(SPHERICAL_POLYNOMIAL, d, {"a": float(a), "p": int(p)})

    @classmethod
    def arccos0(cls, d):
        return cls(ARCCOS0, d)

    @classmethod
    def arccos1(cls, d):
        return cls(ARCCOS1, d)

    @classmethod
    def ntk(cls, d):
        return cls(NTK, d)

    @property
    def spherical(self):
        return self.family in SPHERICAL_FAMILIES

    @property
    def support(self):
        """Radius beyond which ``k`` is treated as zero."""
        if self.spherical:
            return 2.0
        taus = [v for k, v in self.params.items() if k.startswith("tau")]
        # exp(-z^2/2tau^2) < 1e-20 beyond this radius
        return max(taus) * math.sqrt(2.0 * 46.0)

    def describe(self):
        args = "".join(f"{k}={v:g};" for k, v in sorted(self.params.items()))
        return f"{self.family}({args}d={self.input_dim})"

    def to_dict(self):
        return {"family": self.family, "input_dim": self.input_dim, **self.params}


def _arccos(u):
    return np.arccos(np.clip(u, -1.0, 1.0))


def eval_kernel(spec, z):
    """Exact kernel value ``k(z)``; vectorized over ``z``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("z must be nonnegative")
    fam, p = spec.family, spec.params
    if fam == GAUSSIAN:
        out = np.exp(-(z**2) / (2.0 * p["tau"] ** 2))
    elif fam == DELTA_GAUSSIAN:
        out = np.exp(-(z**2) / (2.0 * p["tau1"] ** 2)) - np.exp(-(z**2) / (2.0 * p["tau2"] ** 2))
    else:
        inside = z <= 2.0
        zc = np.minimum(z, 2.0)
        u = 1.0 - zc**2 / 2.0
        if fam == SPHERICAL_POLYNOMIAL:
            out = (1.0 - zc**2 / p["a"] ** 2) ** p["p"]
        elif fam == NTK:
            out = (2.0 - zc**2) / np.pi * _arccos(zc**2 / 2.0 - 1.0) + zc / (
                2.0 * np.pi
            ) * np.sqrt(np.maximum(4.0 - zc**2, 0.0))
        elif fam == ARCCOS0:
            out = 1.0 - _arccos(u) / np.pi
        else:  # ARCCOS1
            out = (u * (np.pi - _arccos(u)) + np.sqrt(np.maximum(1.0 - u**2, 0.0))) / np.pi
        out = np.where(inside, out, 0.0)
    return float(out) if out.ndim == 0 else out


def check_unit_rows(rows, tol=1e-8):
    """Raise :class:`DataNotNormalized` unless every row has unit norm."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0:
        return
    dev = np.abs(np.linalg.norm(rows, axis=1) - 1.0)
    if np.any(dev > tol):
        bad = int(np.argmax(dev))
        raise DataNotNormalized(f"row {bad} has norm deviating from 1 by {dev[bad]:.3g}")


def gram_matrix(spec, data):
    """Exact Gram matrix ``K[i, j] = k(||x_i - x_j||)``."""
    rows = getattr(data, "rows", data)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if spec.spherical:
        check_unit_rows(rows)
    dist = cdist(rows, rows)
    np.fill_diagonal(dist, 0.0)
    K = eval_kernel(spec, dist)
    return 0.5 * (K + K.T)


def ntk_monte_carlo_oracle(x, x_prime, samples, seed, chunk=250_000):
    """Monte Carlo estimate of the two-layer ReLU NTK on unit vectors.

    Averages ``2 (w.x)_+ (w.x')_+ + 2 (x.x') 1{w.x >= 0} 1{w.x' >= 0}`` over
    ``w ~ N(0, I)``. Each chunk draws from its own substream of ``seed``.

    Returns
    -------
    (float, float)
        Estimate and its standard error.
    """
    x = np.asarray(x, dtype=float)
    xp = np.asarray(x_prime, dtype=float)
    for v in (x, xp):
        if v.ndim != 1 or abs(np.linalg.norm(v) - 1.0) > 1e-8:
            raise DomainError("inputs must be unit vectors")
    if x.shape != xp.shape:
        raise DomainError("inputs must have the same dimension")
    if samples < 2:
        raise DomainError("need at least two samples")
    dot = float(x @ xp)
    total = total_sq = 0.0
    master = RngStream(seed, 0)
    done = 0
    block = 0
    while done < samples:
        m = min(chunk, samples - done)
        w = master.child("ntk-oracle", block).generator().standard_normal((m, x.size))
        a, b = w @ x, w @ xp
        vals = 2.0 * np.maximum(a, 0.0) * np.maximum(b, 0.0) + 2.0 * dot * ((a >= 0) & (b >= 0))
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += m
        block += 1
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0) * samples / (samples - 1)
    return mean, math.sqrt(var / samples)
