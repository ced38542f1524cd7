"""Frequency samplers: sphere directions, radial rejection, Gaussian, OMC, importance."""

from dataclasses import dataclass
import hashlib
import io
import logging
import math
import struct
from typing import NamedTuple

import numpy as np

from .errors import EnvelopeBreach, RankDeficient, ZeroSurrogate

log = logging.getLogger(__name__)

MC = "mc"
OMC = "omc"
IMPORTANCE = "importance"
SCHEMES = (MC, OMC, IMPORTANCE)

ENVELOPE_GRID = 10_000
ENVELOPE_SAFETY = 1.1
MAX_REDRAWS = 5


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Every call to :meth:`generator` returns a fresh generator positioned at
    the start of the stream, so identical streams give identical draws.
    """

    seed: int
    stream_id: int = 0

    def generator(self):
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, purpose, index=0):
        """Substream keyed by a stable hash of (seed, stream, purpose, index)."""
        key = f"{self.seed}:{self.stream_id}:{purpose}:{index}".encode()
        sid = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")
        return RngStream(self.seed, sid)


def _gen(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class FrequencySample:
    """Sampled frequency rows with importance weights (all ones for MC/OMC)."""

    vectors: np.ndarray
    weights: np.ndarray
    scheme: str

    @property
    def s(self):
        return self.vectors.shape[0]

    @property
    def d(self):
        return self.vectors.shape[1]

    @classmethod
    def empty(cls, d, scheme=MC):
        return cls(np.zeros((0, d)), np.zeros(0), scheme)

    def to_bytes(self):
        """``b'IRFS'``, scheme tag (16 bytes), s, d, vectors, weights (little endian)."""
        tag = self.scheme.encode()[:16].ljust(16, b"\0")
        head = b"IRFS" + tag + struct.pack("<QQ", self.s, self.d)
        body = np.ascontiguousarray(self.vectors, dtype="<f8").tobytes()
        body += np.ascontiguousarray(self.weights, dtype="<f8").tobytes()
        return head + body

    @classmethod
    def from_bytes(cls, blob):
        if blob[:4] != b"IRFS":
            raise ValueError("not a frequency sample file")
        scheme = blob[4:20].rstrip(b"\0").decode()
        s, d = struct.unpack("<QQ", blob[20:36])
        off = 36
        vec = np.frombuffer(blob, dtype="<f8", count=s * d, offset=off).reshape(s, d)
        w = np.frombuffer(blob, dtype="<f8", count=s, offset=off + 8 * s * d)
        return cls(vec.astype(float), w.astype(float), scheme)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# scheme={self.scheme} s={self.s} d={self.d}\n")
        buf.write(",".join([f"w{j}" for j in range(self.d)] + ["weight"]) + "\n")
        for row, wt in zip(self.vectors, self.weights):
            buf.write(",".join(f"{v:.17g}" for v in row) + f",{wt:.17g}\n")
        return buf.getvalue()


def sample_sphere_directions(d, s, rng):
    """``s`` i.i.d. uniform unit vectors in R^d (normalized standard normals)."""
    g = _gen(rng)
    x = g.standard_normal((s, d))
    norms = np.linalg.norm(x, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        x[bad] = g.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(x, axis=1)
    return x / norms[:, None]


class RadialDraw(NamedTuple):
    radii: np.ndarray
    acceptance_rate: float
    envelope: float
    breaches: int


def radial_law(mu):
    """Unnormalized radial law ``q(r) = mu(r) r^(d-1)`` of a nonnegative measure."""
    d = mu.ambient_dim
    return lambda r: mu(r) * np.asarray(r, dtype=float) ** (d - 1)


def sample_radius_rejection(mu, s, rng, batch=None):
    """Exact draws from ``q(r) ∝ mu(r) r^(d-1)`` on ``(0, R]`` by rejection.

    The proposal is uniform on ``(0, R]`` with envelope height 1.1 times the
    maximum of ``q`` on a 10,000-point grid. A proposal above the envelope
    doubles its height and restarts sampling.
    """
    q = radial_law(mu)
    R = mu.support_radius
    grid = np.linspace(R / ENVELOPE_GRID, R, ENVELOPE_GRID)
    qmax = float(np.max(q(grid)))
    if not qmax > 0:
        raise ValueError(f"measure {mu.name!r} has no positive mass on (0, {R:g}]")
    M = ENVELOPE_SAFETY * qmax
    g = _gen(rng)
    batch = batch or max(1024, 4 * s)
    breaches = 0
    while True:
        accepted, proposed = [], 0
        n_acc = 0
        try:
            while n_acc < s:
                r = R * (1.0 - g.random(batch))  # (0, R]
                qr = q(r)
                if np.any(qr > M):
                    raise EnvelopeBreach(f"q reached {qr.max():.3g} above envelope {M:.3g}")
                keep = r[g.random(batch) * M < qr]
                proposed += batch
                accepted.append(keep)
                n_acc += keep.size
        except EnvelopeBreach as exc:
            breaches += 1
            log.warning("rejection envelope breach (%s); doubling height", exc)
            M *= 2.0
            continue
        radii = np.concatenate(accepted)[:s]
        rate = n_acc / proposed
        log.debug("rejection acceptance rate %.4f for %s", rate, mu.name)
        return RadialDraw(radii, rate, M, breaches)


def sample_gaussian(tau, d, s, rng):
    """``s`` i.i.d. rows from ``N(0, tau^-2 I_d)``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return _gen(rng).standard_normal((s, d)) / tau


def random_orthonormal(d, g):
    """Haar-distributed orthogonal matrix via sign-corrected QR."""
    for _ in range(10):
        q, r = np.linalg.qr(g.standard_normal((d, d)))
        diag = np.diag(r)
        if np.min(np.abs(diag)) > 1e-12:
            return q * np.sign(diag)
        log.warning("degenerate QR factorization; redrawing")
    raise RankDeficient(f"could not draw an orthogonal {d}x{d} frame")


def orthogonalize_block(vectors, rng):
    """Replace directions by orthonormal frames per block of ``d`` rows.

    Row norms (the radial draws) are kept, so each row keeps its marginal law.
    """
    vectors = np.asarray(vectors, dtype=float)
    s, d = vectors.shape
    norms = np.linalg.norm(vectors, axis=1)
    g = _gen(rng)
    out = np.empty_like(vectors)
    for start in range(0, s, d):
        stop = min(start + d, s)
        frame = random_orthonormal(d, g)
        out[start:stop] = frame[: stop - start] * norms[start:stop, None]
    return out


def gaussian_radial_density(tau, d):
    """Density of ``N(0, tau^-2 I_d)`` as a function of the radius."""
    c = (2.0 * math.pi) ** (-d / 2.0) * tau**d
    return lambda r: c * np.exp(-0.5 * (tau * np.asarray(r, dtype=float)) ** 2)


def importance_weights(target, surrogate_tau, vectors, target_mass=None):
    """Importance weights of Gaussian-surrogate draws for a radial target.

    The ``r^(d-1)`` Jacobians cancel, leaving ``target(r) / phi(r)`` with
    ``phi`` the ``N(0, tau^-2 I)`` density. Dividing by ``target_mass``
    (when given) makes the weights average to one. Draws outside the target
    support get weight zero.
    """
    vectors = np.asarray(vectors, dtype=float)
    d = vectors.shape[1]
    r = np.linalg.norm(vectors, axis=1)
    phi = gaussian_radial_density(surrogate_tau, d)(r)
    if np.any(phi <= 0):
        raise ZeroSurrogate(f"surrogate density underflows at radius {r[phi <= 0].max():.3g}")
    tgt = np.where(r <= target.support_radius, target(r), 0.0)
    w = tgt / phi
    if target_mass is not None:
        w = w / target_mass
    return w


def matched_surrogate_tau(mu, d):
    """Gaussian scale whose second radial moment matches that of ``mu``."""
    from .measures import gauss_legendre

    q = radial_law(mu)
    R = mu.support_radius
    m0 = gauss_legendre(q, 0.0, R, 1e-6)[0]
    m2 = gauss_legendre(lambda r: q(r) * r**2, 0.0, R, 1e-6)[0]
    return math.sqrt(d * m0 / m2)


def draw_frequencies(mu, mass, s, scheme, rng, surrogate_tau=None):
    """Sample ``s`` frequencies from the normalized component ``mu / mass``."""
    d = mu.ambient_dim
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == IMPORTANCE:
        if mu.gaussian_tau is not None and surrogate_tau is None:
            surrogate_tau = mu.gaussian_tau
        if surrogate_tau is None:
            surrogate_tau = matched_surrogate_tau(mu, d)
        g = rng.child("importance").generator()
        vec = sample_gaussian(surrogate_tau, d, s, g)
        phi = gaussian_radial_density(surrogate_tau, d)(np.linalg.norm(vec, axis=1))
        for attempt in range(MAX_REDRAWS + 1):
            bad = phi <= 0
            if not np.any(bad):
                break
            if attempt == MAX_REDRAWS:
                raise ZeroSurrogate(f"surrogate N(0, {surrogate_tau:g}^-2 I) density underflows "
                                    f"on {int(bad.sum())} draws after {MAX_REDRAWS} redraws")
            log.warning("surrogate underflow on %d draws; redrawing", int(bad.sum()))
            vec[bad] = sample_gaussian(surrogate_tau, d, int(bad.sum()), g)
            phi = gaussian_radial_density(surrogate_tau, d)(np.linalg.norm(vec, axis=1))
        if mu.gaussian_tau is not None and surrogate_tau == mu.gaussian_tau:
            w = np.ones(s)
        else:
            w = importance_weights(mu, surrogate_tau, vec, target_mass=mass)
        return FrequencySample(vec, w, scheme)
    if mu.gaussian_tau is not None:
        vec = sample_gaussian(mu.gaussian_tau, d, s, rng.child("gaussian"))
    else:
        radii = sample_radius_rejection(mu, s, rng.child("radii")).radii
        vec = sample_sphere_directions(d, s, rng.child("directions")) * radii[:, None]
    if scheme == OMC:
        vec = orthogonalize_block(vec, rng.child("omc"))
    return FrequencySample(vec, np.ones(s), scheme)


def radial_cdf(mu, points=200_001):
    """Tabulated CDF of the normalized radial law on ``(0, R]`` (cumulative trapezoid)."""
    from scipy.integrate import cumulative_trapezoid

    R = mu.support_radius
    grid = np.linspace(0.0, R, points)
    q = radial_law(mu)(grid)
    cdf = cumulative_trapezoid(q, grid, initial=0.0)
    return grid, cdf / cdf[-1]


def chi_square_radial(mu, radii, bins=50):
    """Pearson chi-square of radii against the radial law over equiprobable bins.

    Returns
    -------
    (float, float)
        Statistic and p-value with ``bins - 1`` degrees of freedom.
    """
    from scipy import stats

    grid, cdf = radial_cdf(mu)
    # invert the CDF only on its strictly increasing part
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    edges = np.interp(np.linspace(0.0, 1.0, bins + 1), cdf[keep], grid[keep])
    edges[0], edges[-1] = 0.0, mu.support_radius
    counts, _ = np.histogram(radii, bins=edges)
    expected = len(radii) / bins
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return stat, float(stats.chi2.sf(stat, bins - 1))
