"""Explicit feature maps for indefinite kernels and their estimator statistics.

The imaginary half of the feature vector is stored as a real ``minus_block``
whose inner products are subtracted, so all linear algebra stays real.
"""

from dataclasses import dataclass
import io
import math
import struct
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, EmptyPlus
from .kernels import eval_kernel
from .sampling import MC, FrequencySample, RngStream, draw_frequencies


@dataclass(frozen=True)
class FeatureMapModel:
    omega: FrequencySample
    nu: Optional[FrequencySample]
    scale_plus: float
    scale_minus: float

    def __post_init__(self):
        if self.scale_plus < 0 or self.scale_minus < 0:
            raise ValueError("scales must be nonnegative")
        empty_nu = self.nu is None or self.nu.s == 0
        if empty_nu != (self.scale_minus == 0):
            raise ValueError("minus block must be empty exactly when scale_minus is 0")

    @property
    def s(self):
        return self.omega.s

    @property
    def d(self):
        return self.omega.d

    @property
    def feature_dim(self):
        return 4 * self.s


@dataclass(frozen=True)
class MappedFeatures:
    plus_block: np.ndarray
    minus_block: np.ndarray

    @property
    def n(self):
        return self.plus_block.shape[0]

    def concatenated(self):
        return np.hstack([self.plus_block, self.minus_block])

    def gram(self):
        return self.plus_block @ self.plus_block.T - self.minus_block @ self.minus_block.T

    def to_bytes(self):
        """``b'IRFM'``, n, 2s, plus block, minus block (row-major float64 LE)."""
        n, cols = self.plus_block.shape
        head = b"IRFM" + struct.pack("<QQ", n, cols)
        return (
            head
            + np.ascontiguousarray(self.plus_block, dtype="<f8").tobytes()
            + np.ascontiguousarray(self.minus_block, dtype="<f8").tobytes()
        )

    @classmethod
    def from_bytes(cls, blob):
        if blob[:4] != b"IRFM":
            raise ValueError("not a mapped-features file")
        n, cols = struct.unpack("<QQ", blob[4:20])
        size = n * cols
        plus = np.frombuffer(blob, "<f8", size, 20).reshape(n, cols)
        minus = np.frombuffer(blob, "<f8", size, 20 + 8 * size).reshape(n, cols)
        return cls(plus.astype(float), minus.astype(float))

    def to_csv(self):
        cols = self.plus_block.shape[1]
        buf = io.StringIO()
        header = [f"p{j}" for j in range(cols)] + [f"m{j}" for j in range(cols)]
        buf.write(",".join(header) + "\n")
        for row in self.concatenated():
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def build_feature_map(decomposed, s, scheme=MC, rng=None, surrogate_tau=None):
    """Sample ``s`` frequencies per Jordan component and record the block scales."""
    rng = rng if rng is not None else RngStream(0)
    scale_plus, scale_minus = decomposed.scale_plus, decomposed.scale_minus
    if scale_plus == 0 and scale_minus == 0:
        raise EmptyPlus("both components have zero mass")
    d = decomposed.mu_plus.ambient_dim
    if scale_plus > 0:
        omega = draw_frequencies(
            decomposed.mu_plus, decomposed.mass_plus, s, scheme, rng.child("plus"), surrogate_tau
        )
    else:
        omega = FrequencySample(np.zeros((s, d)), np.ones(s), scheme)
    nu = None
    if scale_minus > 0:
        nu = draw_frequencies(
            decomposed.mu_minus, decomposed.mass_minus, s, scheme, rng.child("minus"), surrogate_tau
        )
    return FeatureMapModel(omega, nu, scale_plus, scale_minus)


def _rows(data):
    rows = getattr(data, "rows", data)
    return np.atleast_2d(np.asarray(rows, dtype=float))


def _block(sample, scale, x):
    s = sample.s
    proj = x @ sample.vectors.T
    amp = np.sqrt(scale / s * sample.weights)
    out = np.empty((x.shape[0], 2 * s))
    out[:, 0::2] = amp * np.cos(proj)
    out[:, 1::2] = amp * np.sin(proj)
    return out


def map_points(model, data):
    """Map rows to the plus block ``[cos, sin]`` pairs and the minus block."""
    x = _rows(data)
    if x.shape[0] == 0:
        x = x.reshape(0, model.d)
    if x.shape[1] != model.d:
        raise DimensionMismatch(f"data has {x.shape[1]} columns, model expects {model.d}")
    plus = _block(model.omega, model.scale_plus, x)
    if model.nu is None:
        minus = np.zeros((x.shape[0], 2 * model.s))
    else:
        minus = _block(model.nu, model.scale_minus, x)
    return MappedFeatures(plus, minus)


def approx_kernel(model, x, x_prime, route="inner"):
    """``k~(x, x')`` by feature inner products or by the cosine-sum identity."""
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(x_prime, dtype=float).ravel()
    if x.size != model.d or xp.size != model.d:
        raise DimensionMismatch("input dimension does not match the model")
    if route == "inner":
        f = map_points(model, np.vstack([x, xp]))
        return float(f.plus_block[0] @ f.plus_block[1] - f.minus_block[0] @ f.minus_block[1])
    delta = x - xp
    om = model.omega
    val = model.scale_plus / om.s * np.sum(om.weights * np.cos(om.vectors @ delta))
    if model.nu is not None:
        nu = model.nu
        val -= model.scale_minus / nu.s * np.sum(nu.weights * np.cos(nu.vectors @ delta))
    return float(val)


def approx_gram(model, data):
    """Approximate Gram matrix ``P P^T - M M^T``."""
    feats = map_points(model, data)
    G = feats.gram()
    return 0.5 * (G + G.T)


@dataclass
class MseStats:
    exact: np.ndarray
    mean: np.ndarray
    bias: np.ndarray
    bias_se: np.ndarray
    mse: np.ndarray
    mse_se: np.ndarray
    trials: int

    @property
    def aggregate_mse(self):
        return float(np.mean(self.mse))

    @property
    def aggregate_mse_se(self):
        return float(math.sqrt(np.sum(self.mse_se**2)) / self.mse.size)

    def within(self, n_se=3.0):
        """Per-pair flag: ``|bias|`` within ``n_se`` standard errors."""
        return np.abs(self.bias) <= n_se * self.bias_se


def estimator_mse(spec, model_factory, pairs, trials, rng):
    """Empirical bias and MSE of ``k~`` over ``trials`` independent rebuilds.

    ``model_factory(stream)`` must build a fresh model from the given
    :class:`RngStream`; each trial gets its own substream of ``rng``.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    xs = np.asarray([p[0] for p in pairs], dtype=float)
    ys = np.asarray([p[1] for p in pairs], dtype=float)
    if xs.size == 0:
        raise ValueError("pairs must be nonempty")
    delta = xs - ys
    exact = eval_kernel(spec, np.linalg.norm(delta, axis=1))
    est = np.empty((trials, len(xs)))
    for t in range(trials):
        model = model_factory(rng.child("trial", t))
        est[t] = _cosine_route(model, delta)
    err = est - exact
    bias = err.mean(axis=0)
    bias_se = err.std(axis=0, ddof=1) / math.sqrt(trials)
    sq = err**2
    return MseStats(
        exact=exact,
        mean=est.mean(axis=0),
        bias=bias,
        bias_se=bias_se,
        mse=sq.mean(axis=0),
        mse_se=sq.std(axis=0, ddof=1) / math.sqrt(trials),
        trials=trials,
    )


def _cosine_route(model, delta):
    om = model.omega
    val = model.scale_plus / om.s * (np.cos(delta @ om.vectors.T) @ om.weights)
    if model.nu is not None:
        nu = model.nu
        val = val - model.scale_minus / nu.s * (np.cos(delta @ nu.vectors.T) @ nu.weights)
    return val
