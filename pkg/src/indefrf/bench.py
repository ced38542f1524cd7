"""Approximation-error metrics and the benchmark harness."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import io
import json
import logging
import time
from typing import Optional

import numpy as np
from scipy.sparse.linalg import eigsh

from .data import Dataset
from .errors import IndefRFError, NonSymmetric, ShapeMismatch, ZeroDenominator
from .features import build_feature_map, map_points
from .kernels import KernelSpec, gram_matrix
from .linear import train_classifier
from .measures import DEFAULT_RMAX
from .sampling import MC, RngStream, _gen
from .spectra import decompose_kernel

log = logging.getLogger(__name__)

REPORT_HEADER = "kernel,scheme,s,trial,rel_frob_err,gen_time_s,accuracy,seed"
CURVE_HEADER = "kernel,scheme,s,median_err,q25,q75"


def relative_frobenius_error(exact, approx):
    """``||exact - approx||_F / ||exact||_F``."""
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    if exact.shape != approx.shape:
        raise ShapeMismatch(f"shapes {exact.shape} and {approx.shape} differ")
    denom = np.linalg.norm(exact)
    if denom == 0:
        raise ZeroDenominator("exact matrix has zero Frobenius norm")
    return float(np.linalg.norm(exact - approx) / denom)


def min_eigenvalue(matrix, tol=1e-10, dense_below=256):
    """Smallest eigenvalue of a symmetric matrix.

    Small matrices use a dense solver; larger ones use Lanczos (ARPACK) with
    a fixed start vector so the result is deterministic.
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSymmetric("matrix must be square")
    if A.size and np.max(np.abs(A - A.T)) > tol:
        raise NonSymmetric("matrix is not symmetric within tolerance")
    n = A.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if n < dense_below:
        return float(np.linalg.eigvalsh(A)[0])
    v0 = np.ones(n) / np.sqrt(n)
    norm2 = float(eigsh(A, k=1, which="LM", v0=v0, return_eigenvectors=False)[0])
    val = eigsh(A, k=1, which="SA", v0=v0, tol=1e-6 * abs(norm2) / max(abs(norm2), 1.0),
                return_eigenvectors=False)
    return float(val[0])


@dataclass
class BenchReport:
    kernel: str
    scheme: str
    s: int
    trial: int
    rel_frobenius_error: float
    wall_time_feature_gen: float
    accuracy: Optional[float]
    seed: int
    mse: float = float("nan")
    error: Optional[str] = None

    def csv_row(self):
        acc = "" if self.accuracy is None else f"{self.accuracy:.6f}"
        err = "" if self.error else f"{self.rel_frobenius_error:.10g}"
        return (f"{self.kernel},{self.scheme},{self.s},{self.trial},{err},"
                f"{self.wall_time_feature_gen:.6f},{acc},{self.seed}")


@dataclass
class BenchConfig:
    kernel: KernelSpec
    data: Dataset
    s_values: list
    schemes: list = field(default_factory=lambda: [MC])
    trials: int = 1
    seed: int = 0
    subsample: int = 300
    test_data: Optional[Dataset] = None
    classify: bool = False
    support_radius: float = DEFAULT_RMAX
    surrogate_tau: Optional[float] = None
    jobs: int = 1
    epochs: int = 20
    reg: Optional[float] = None

    def resolved(self):
        """JSON-serializable description embedded in every output file."""
        return {
            "kernel": self.kernel.to_dict(),
            "n": self.data.n,
            "d": self.data.d,
            "s_values": [int(s) for s in self.s_values],
            "schemes": list(self.schemes),
            "trials": self.trials,
            "seed": self.seed,
            "subsample": self.subsample,
            "classify": self.classify,
            "support_radius": self.support_radius,
            "surrogate_tau": self.surrogate_tau,
            "epochs": self.epochs,
            "reg": self.reg,
        }


def error_subsample(data, size, seed):
    """Fixed row subset used for the Gram-matrix error."""
    if data.n <= size:
        return data
    idx = np.sort(_gen(RngStream(seed).child("subsample").generator()).choice(data.n, size, replace=False))
    return data.subset(idx)


def _run_cell(config, decomposed, exact, sub, scheme, s, trial):
    stream = RngStream(config.seed).child(f"cell:{scheme}:{s}", trial)
    label = config.kernel.describe()
    try:
        t0 = time.perf_counter()
        model = build_feature_map(decomposed, s, scheme, stream, config.surrogate_tau)
        train_feats = map_points(model, config.data)
        gen_time = time.perf_counter() - t0
        feats = map_points(model, sub)
        approx = feats.gram()
        err = relative_frobenius_error(exact, approx)
        mse = float(np.mean((exact - approx) ** 2))
        acc = None
        if config.classify:
            clf = train_classifier(train_feats, config.data.labels, config.reg, config.epochs,
                                   stream.child("classifier"))
            test = config.test_data if config.test_data is not None else config.data
            acc = clf.accuracy(map_points(model, test), test.labels)
        return BenchReport(label, scheme, s, trial, err, gen_time, acc, config.seed, mse)
    except (IndefRFError, ValueError, FloatingPointError) as exc:
        log.error("cell %s s=%d trial=%d failed: %s", scheme, s, trial, exc)
        return BenchReport(label, scheme, s, trial, float("nan"), 0.0, None, config.seed,
                           error=f"{type(exc).__name__}: {exc}")


def benchmark_run(config, decomposed=None):
    """Run every (scheme, s, trial) cell; failed cells carry ``error`` and are kept.

    Reports come back sorted by cell key regardless of ``jobs``.
    """
    if decomposed is None:
        decomposed = decompose_kernel(config.kernel, config.support_radius)
    sub = error_subsample(config.data, config.subsample, config.seed)
    exact = gram_matrix(config.kernel, sub)
    cells = [(scheme, int(s), t) for scheme in config.schemes for s in config.s_values
             for t in range(config.trials)]
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            reports = list(pool.map(lambda c: _run_cell(config, decomposed, exact, sub, *c), cells))
    else:
        reports = [_run_cell(config, decomposed, exact, sub, *c) for c in cells]
    return reports


def error_curve(reports):
    """Median and quartiles of the error per (kernel, scheme, s)."""
    groups = {}
    for r in reports:
        if r.error is None:
            groups.setdefault((r.kernel, r.scheme, r.s), []).append(r.rel_frobenius_error)
    rows = []
    for (kern, scheme, s), errs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        q25, med, q75 = np.percentile(errs, [25, 50, 75])
        rows.append({"kernel": kern, "scheme": scheme, "s": s,
                     "median_err": float(med), "q25": float(q25), "q75": float(q75)})
    return rows


def scheme_mse(reports):
    """Aggregate entrywise MSE per scheme."""
    out = {}
    for r in reports:
        if r.error is None:
            out.setdefault(r.scheme, []).append(r.mse)
    return {k: float(np.mean(v)) for k, v in out.items()}


def _config_comment(config):
    return "# config=" + json.dumps(config, sort_keys=True) + "\n"


def reports_csv(reports, config):
    buf = io.StringIO()
    buf.write(_config_comment(config))
    buf.write(REPORT_HEADER + "\n")
    for r in reports:
        buf.write(r.csv_row() + "\n")
    return buf.getvalue()


def _finite_or_none(rec):
    return {k: (None if isinstance(v, float) and v != v else v) for k, v in rec.items()}


def reports_jsonl(reports, config):
    lines = [json.dumps({"config": config}, sort_keys=True)]
    lines += [json.dumps(_finite_or_none(asdict(r)), sort_keys=True) for r in reports]
    return "\n".join(lines) + "\n"


def curve_csv(curve, config):
    buf = io.StringIO()
    buf.write(_config_comment(config))
    buf.write(CURVE_HEADER + "\n")
    for row in curve:
        buf.write(f"{row['kernel']},{row['scheme']},{row['s']},{row['median_err']:.10g},"
                  f"{row['q25']:.10g},{row['q75']:.10g}\n")
    return buf.getvalue()
