"""Datasets: LIBSVM parsing, normalization and a synthetic spherical generator."""

from dataclasses import dataclass, replace
import io
import logging
import math
import warnings

import numpy as np

from .errors import ParseError
from .sampling import RngStream, _gen

log = logging.getLogger(__name__)

# Dense storage guard against absurd indices in corrupt files.
MAX_INDEX = 2**24


@dataclass(frozen=True)
class Dataset:
    rows: np.ndarray
    labels: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        if self.rows.ndim != 2:
            raise ValueError("rows must be a 2-D array")
        if self.labels.shape != (self.rows.shape[0],):
            raise ValueError("one label per row is required")

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def d(self):
        return self.rows.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx)
        return replace(self, rows=self.rows[idx], labels=self.labels[idx])

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.labels, other.labels)
        )


def _parse_label(tok, lineno):
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(lineno, f"non-numeric label {tok!r}") from None
    if not math.isfinite(val) or val != int(val):
        raise ParseError(lineno, f"label {tok!r} is not an integer")
    if abs(val) >= 2**62:
        raise ParseError(lineno, f"label {tok!r} out of range")
    return int(val)


def parse_libsvm(source):
    """Parse ``label idx:val idx:val ...`` lines into a dense :class:`Dataset`.

    ``source`` may be a text or binary stream, ``bytes`` or ``str``.
    Indices are 1-based and strictly increasing; ``#`` starts a comment;
    blank lines are skipped; missing entries are zero.

    Raises
    ------
    ParseError
        With the offending 1-based line number.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            line = bytes(source)[: exc.start].count(b"\n") + 1
            raise ParseError(line, "invalid UTF-8") from None
    labels, entries = [], []
    d = 0
    for lineno, line in enumerate(source.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        labels.append(_parse_label(toks[0], lineno))
        row = []
        last = 0
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(lineno, f"feature {tok!r} lacks ':'")
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(lineno, f"non-numeric index {idx_s!r}") from None
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(lineno, f"non-numeric value {val_s!r}") from None
            if not math.isfinite(val):
                raise ParseError(lineno, f"non-finite value {val_s!r}")
            if idx > MAX_INDEX:
                raise ParseError(lineno, f"index {idx} exceeds the supported maximum {MAX_INDEX}")
            if idx <= last:
                raise ParseError(lineno, f"index {idx} not strictly increasing (after {last})")
            row.append((idx, val))
            last = idx
        d = max(d, last)
        entries.append(row)
    rows = np.zeros((len(entries), d))
    for i, row in enumerate(entries):
        for idx, val in row:
            rows[i, idx - 1] = val
    return Dataset(rows, np.asarray(labels, dtype=int))


def load_libsvm(path):
    with open(path, "rb") as fh:
        return parse_libsvm(fh)


def serialize_libsvm(data):
    """Inverse of :func:`parse_libsvm` (zeros are omitted; floats use repr)."""
    buf = io.StringIO()
    # an all-zero last column would otherwise shrink d on reparse
    pad_last = data.d > 0 and not np.any(data.rows[:, -1])
    for i, (label, row) in enumerate(zip(data.labels, data.rows)):
        cols = list(np.flatnonzero(row))
        if pad_last and i == 0:
            cols.append(data.d - 1)
        feats = " ".join(f"{j + 1}:{float(row[j])!r}" for j in cols)
        buf.write(f"{int(label):+d}" + (" " + feats if feats else "") + "\n")
    return buf.getvalue()


def l2_normalize(data):
    """Scale every nonzero row to unit Euclidean norm; zero rows stay zero."""
    rows = np.array(data.rows, dtype=float, copy=True)
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0
    rows[~zero] /= norms[~zero, None]
    if np.any(zero):
        msg = f"{int(zero.sum())} zero rows left unnormalized"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)
    return replace(data, rows=rows, normalized=True)


def minmax_normalize(data):
    """Rescale each column to [0, 1] (constant columns map to 0)."""
    rows = np.asarray(data.rows, dtype=float)
    if rows.shape[0] == 0:
        return data
    lo, hi = rows.min(axis=0), rows.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return replace(data, rows=(rows - lo) / span, normalized=False)


def synthetic_blobs(n, d, classes=2, spread=0.35, rng=0):
    """Gaussian blobs projected onto the unit sphere, labelled ``-1/+1`` when binary.

    Class centers are random unit vectors; each point is its center plus
    ``N(0, spread^2 / d I)`` noise, then l2-normalized.
    """
    g = _gen(rng.generator() if isinstance(rng, RngStream) else rng)
    centers = g.standard_normal((classes, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    y = g.integers(0, classes, size=n)
    x = centers[y] + g.standard_normal((n, d)) * spread / math.sqrt(d)
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    labels = np.where(y == 1, 1, -1) if classes == 2 else y
    return Dataset(x, labels.astype(int), normalized=True)
