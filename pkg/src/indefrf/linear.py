"""Hinge-loss linear classifier trained by mini-batch stochastic subgradient descent."""

from dataclasses import dataclass, field
import logging

import numpy as np

from .errors import NonBinaryLabels
from .sampling import RngStream, _gen

log = logging.getLogger(__name__)

C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass
class LinearClassifier:
    weights: np.ndarray
    intercept: float
    C: float
    cv_scores: dict = field(default_factory=dict)

    def decision_function(self, x):
        return _as_matrix(x) @ self.weights + self.intercept

    def predict(self, x):
        return np.where(self.decision_function(x) >= 0, 1, -1)

    def accuracy(self, x, labels):
        labels = np.asarray(labels)
        if labels.size == 0:
            return float("nan")
        return float(np.mean(self.predict(x) == labels))


def _as_matrix(features):
    if hasattr(features, "concatenated"):
        return features.concatenated()
    return np.atleast_2d(np.asarray(features, dtype=float))


def _pegasos(x, y, C, epochs, g, batch=32):
    """Pegasos with a regularized bias column and tail averaging."""
    n = x.shape[0]
    xa = np.hstack([x, np.ones((n, 1))])
    lam = 1.0 / (C * n)
    w = np.zeros(xa.shape[1])
    avg = np.zeros_like(w)
    n_avg = 0
    steps_per_epoch = max(1, n // batch)
    total = epochs * steps_per_epoch
    t = 0
    radius = 1.0 / np.sqrt(lam)
    for _ in range(epochs):
        order = g.permutation(n)
        for b in range(steps_per_epoch):
            t += 1
            idx = order[b * batch : (b + 1) * batch]
            margin = y[idx] * (xa[idx] @ w)
            viol = margin < 1.0
            eta = 1.0 / (lam * t)
            w *= 1.0 - eta * lam
            if np.any(viol):
                w += eta / idx.size * (y[idx][viol] @ xa[idx][viol])
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
            if t > total // 2:
                avg += w
                n_avg += 1
    w = avg / max(n_avg, 1)
    return w[:-1], float(w[-1])


def train_linear_classifier(features, labels, reg=None, epochs=20, rng=None, folds=5):
    """Fit a binary hinge-loss model on ``[plus_block, minus_block]``.

    With ``reg=None`` the regularization constant is chosen from
    ``C_GRID`` by ``folds``-fold cross-validation.

    Raises
    ------
    NonBinaryLabels
        If ``labels`` contain anything other than -1 and +1.
    """
    x = _as_matrix(features)
    y = np.asarray(labels)
    if not np.all(np.isin(y, (-1, 1))):
        raise NonBinaryLabels("labels must be in {-1, +1}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    y = y.astype(float)
    stream = rng if isinstance(rng, RngStream) else RngStream(0 if rng is None else int(rng))
    cv_scores = {}
    if reg is None:
        perm = _gen(stream.child("cv-split")).permutation(y.size)
        parts = np.array_split(perm, folds)
        best = None
        for C in C_GRID:
            accs = []
            for f, test in enumerate(parts):
                if test.size == 0:
                    continue
                train = np.concatenate([p for j, p in enumerate(parts) if j != f])
                if train.size == 0:
                    continue
                w, b = _pegasos(x[train], y[train], C, epochs, _gen(stream.child(f"cv{C}", f)))
                pred = np.where(x[test] @ w + b >= 0, 1.0, -1.0)
                accs.append(np.mean(pred == y[test]))
            cv_scores[C] = float(np.mean(accs)) if accs else float("nan")
            if best is None or cv_scores[C] > cv_scores[best]:
                best = C
        reg = best
        log.debug("cross-validation scores %s, chose C=%g", cv_scores, reg)
    w, b = _pegasos(x, y, reg, epochs, _gen(stream.child("fit")))
    return LinearClassifier(w, b, float(reg), cv_scores)


@dataclass
class OneVsRest:
    classes: np.ndarray
    models: list

    def predict(self, x):
        x = _as_matrix(x)
        scores = np.column_stack([m.decision_function(x) for m in self.models])
        return self.classes[np.argmax(scores, axis=1)]

    def accuracy(self, x, labels):
        labels = np.asarray(labels)
        if labels.size == 0:
            return float("nan")
        return float(np.mean(self.predict(x) == labels))


def train_classifier(features, labels, reg=None, epochs=20, rng=None):
    """Binary model for labels in {-1, +1}, otherwise one-vs-rest."""
    y = np.asarray(labels)
    classes = np.unique(y)
    if np.all(np.isin(classes, (-1, 1))):
        return train_linear_classifier(features, y, reg, epochs, rng)
    stream = rng if isinstance(rng, RngStream) else RngStream(0 if rng is None else int(rng))
    models = [
        train_linear_classifier(features, np.where(y == c, 1, -1), reg, epochs, stream.child("ovr", i))
        for i, c in enumerate(classes)
    ]
    return OneVsRest(classes, models)
