"""External clustering scores and density-fit metrics."""

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import LengthMismatch
from .gmm import log_likelihoods, weighted_log_densities


@dataclass
class MetricsReport:
    nmi: float
    ari: float
    joint_ll: float
    kl: Optional[float] = None

    def to_dict(self):
        return {"nmi": self.nmi, "ari": self.ari, "joint_ll": self.joint_ll, "kl": self.kl}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _labels(a):
    a = np.asarray(a)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("label vectors must be nonempty and one-dimensional")
    return a


def contingency(truth, pred):
    """Integer contingency table, rows = truth classes, cols = predicted clusters."""
    truth, pred = _labels(truth), _labels(pred)
    if truth.shape != pred.shape:
        raise LengthMismatch(f"{truth.size} true labels vs {pred.size} predictions")
    _, ti = np.unique(truth, return_inverse=True)
    _, pi = np.unique(pred, return_inverse=True)
    table = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return table


def assign_clusters(model, X):
    """Posterior-argmax cluster labels; ties go to the smaller component index."""
    return np.argmax(weighted_log_densities(model, X), axis=1)


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred):
    """Mutual information over the arithmetic mean of the two entropies (nats)."""
    table = contingency(truth, pred)
    n = table.sum()
    h_true = _entropy(table.sum(axis=1), n)
    h_pred = _entropy(table.sum(axis=0), n)
    nz = table > 0
    p = table[nz] / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))[nz] / float(n * n)
    mi = float(np.sum(p * np.log(p / outer)))
    denom = 0.5 * (h_true + h_pred)
    if denom <= 0.0:
        return 0.0
    return float(min(1.0, max(0.0, mi / denom)))


def _pairs(x):
    x = np.asarray(x, dtype=object)
    return sum(int(v) * (int(v) - 1) // 2 for v in x.ravel())


def ari(truth, pred):
    """Adjusted Rand index from pair counts, evaluated in exact rational arithmetic."""
    table = contingency(truth, pred)
    n = int(table.sum())
    if n < 2:
        raise ValueError("ARI needs at least two samples")
    index = _pairs(table)
    rows = _pairs(table.sum(axis=1))
    cols = _pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    expected = Fraction(rows * cols, total)
    maximum = Fraction(rows + cols, 2)
    if maximum == expected:
        # both partitions trivial (one cluster, or all singletons) and equal
        return 1.0
    return float((index - expected) / (maximum - expected))


def mean_joint_ll(model, X_test):
    """Average test log-density per sample."""
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
    if X_test.shape[0] == 0:
        raise ValueError("empty test set")
    return float(np.mean(log_likelihoods(model, X_test)))


def evaluate(model, X, labels=None):
    """NMI/ARI (when labels are given) and mean log-likelihood on ``X``."""
    ll = mean_joint_ll(model, X)
    if labels is None:
        return MetricsReport(nmi=None, ari=None, joint_ll=ll)
    pred = assign_clusters(model, X)
    return MetricsReport(nmi=nmi(labels, pred), ari=ari(labels, pred), joint_ll=ll)
