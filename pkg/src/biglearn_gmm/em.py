"""EM-type parameter updates for Gaussian mixtures and the randomized scheduler.

Three kinds of update share one M-step shape:

* joint: ordinary EM on all features,
* marginal: EM on the feature subset ``T``, writing back only the ``T`` entries
  of each mean and the ``T x T`` block of each covariance,
* transformed marginal: the marginal update performed after rotating data and
  model by an orthogonal ``A``, then rotated back.

Mixture weights always use the Dirichlet-MAP update ``(count + eta) / (1 + K eta)``.
Every covariance written by an update is eigenvalue-floored at ``cfg.eps``.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core_gaussian import eigen_floor, eigen_floor_all, weighted_moments_columns
from .errors import DimensionMismatch
from .gmm import GmmParams, IndexSubset, log_likelihoods, marginal_model, responsibilities

BRANCHES = ("joint", "marginal", "transformed")


@dataclass(frozen=True)
class BigLearnConfig:
    K: int = 6
    eta: float = 0.01
    eps: float = 1e-2
    p_joint: float = 1.0 / 3.0
    p_marginal: float = 1.0 / 3.0
    local_updates: int = 5
    beta1: float = 5.0
    beta2: float = 1.0
    outer_iters: int = 400
    tail_window: int = 40
    seed: int = 0
    init_mean_std: float = 1.0
    init_cov_scale: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.eta < 0 or self.eps <= 0:
            raise ValueError("eta must be >= 0 and eps > 0")
        if not (0 <= self.p_joint <= 1 and 0 <= self.p_marginal <= 1):
            raise ValueError("branch probabilities must lie in [0, 1]")
        if self.p_joint + self.p_marginal > 1 + 1e-12:
            raise ValueError("p_joint + p_marginal must not exceed 1")
        if self.local_updates < 1 or self.outer_iters < 0 or self.tail_window < 1:
            raise ValueError("local_updates, tail_window >= 1 and outer_iters >= 0 required")
        if self.outer_iters and self.tail_window > self.outer_iters:
            raise ValueError("tail_window must not exceed outer_iters")
        if self.beta1 <= 0 or self.beta2 <= 0 or self.init_mean_std <= 0 or self.init_cov_scale <= 0:
            raise ValueError("beta parameters and init scales must be positive")

    def replace(self, **changes):
        return replace(self, **changes)

    def joint_only(self):
        """Baseline projection: every outer iteration is a joint branch."""
        return replace(self, p_joint=1.0, p_marginal=0.0)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        known = cls.__dataclass_fields__
        unknown = set(doc) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True, eq=False)
class OrthogonalTransform:
    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"orthogonal transform must be square, got {A.shape}")
        err = np.linalg.norm(A.T @ A - np.eye(A.shape[0]))
        if err > 1e-10:
            raise ValueError(f"matrix is not orthogonal (||A^T A - I||_F = {err:.3g})")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "At", A.T)

    @property
    def dim(self):
        return self.A.shape[0]

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))


@dataclass
class TraceRecord:
    iter: int
    branch: str
    subset_size: int
    train_ll: float
    extra: dict = field(default_factory=dict)


class TrainTrace:
    """One record per outer iteration of :func:`run_biglearn_em`."""

    base_columns = ("iter", "branch", "subset_size", "train_ll")

    def __init__(self):
        self.records = []

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, record):
        self.records.append(record)

    @property
    def extra_columns(self):
        cols = []
        for r in self.records:
            for key in r.extra:
                if key not in cols:
                    cols.append(key)
        return cols

    def column(self, name):
        if name in self.base_columns:
            return [getattr(r, name) for r in self.records]
        return [r.extra.get(name) for r in self.records]

    def tail_mean(self, name, window):
        values = [v for v in self.column(name)[-window:] if v is not None]
        return float(np.mean(values)) if values else None

    def to_rows(self):
        cols = self.extra_columns
        for r in self.records:
            yield [r.iter, r.branch, r.subset_size, r.train_ll] + [r.extra.get(c) for c in cols]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.base_columns) + self.extra_columns)
        for row in self.to_rows():
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text

    def to_json(self):
        return json.dumps([
            {"iter": r.iter, "branch": r.branch, "subset_size": r.subset_size,
             "train_ll": r.train_ll, **r.extra}
            for r in self.records
        ])


def map_weight_update(soft_counts, eta):
    """Dirichlet-MAP mixture weights from average responsibilities."""
    c = np.asarray(soft_counts, dtype=float)
    return (c + eta) / (1.0 + c.size * eta)


def _check_X(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty data matrix")
    if X.shape[1] != model.dim:
        raise DimensionMismatch(f"data has {X.shape[1]} columns, model dim is {model.dim}")
    return X


def joint_em_step(model, X, cfg):
    """One E-step plus M-step on the full feature space."""
    X = _check_X(model, X)
    R = responsibilities(model, X)
    totals, new_means, new_covs = weighted_moments_columns(X, R)
    # a component with zero total responsibility keeps its Gaussian; the
    # weight update alone can revive it
    live = totals > 0.0
    means = model.means.copy()
    covs = model.covs.copy()
    means[live] = new_means[live]
    covs[live] = new_covs[live]
    return GmmParams(map_weight_update(R.mean(axis=0), cfg.eta), means,
                     eigen_floor_all(covs, cfg.eps))


def _partial_update(model, X, T, eta):
    """Marginal E/M step on columns ``T``; returns unfloored parameters."""
    sub = marginal_model(model, IndexSubset(model.dim, T))
    XT = X[:, T]
    R = responsibilities(sub, XT)
    totals, new_means, new_covs = weighted_moments_columns(XT, R)
    means = model.means.copy()
    covs = model.covs.copy()
    for k in np.flatnonzero(totals > 0.0):
        means[k, T] = new_means[k]
        covs[k][np.ix_(T, T)] = new_covs[k]
    return map_weight_update(R.mean(axis=0), eta), means, covs


def _marginal_subset(model, subset):
    if subset.full_dim != model.dim:
        raise DimensionMismatch(f"subset is over {subset.full_dim} dims, model has {model.dim}")
    if subset.S:
        raise ValueError("marginal updates take a pure marginal subset (S empty)")
    return np.asarray(subset.T)


def marginal_em_step(model, X, subset, cfg):
    """EM step on the marginal over ``subset.T``; other entries are kept."""
    X = _check_X(model, X)
    T = _marginal_subset(model, subset)
    weights, means, covs = _partial_update(model, X, T, cfg.eta)
    return GmmParams(weights, means, eigen_floor_all(covs, cfg.eps))


def transformed_marginal_em_step(model, X, transform, subset, cfg):
    """Marginal EM step in the rotated coordinates ``y = A x``."""
    X = _check_X(model, X)
    if transform.dim != model.dim:
        raise DimensionMismatch(f"transform is {transform.dim}-d, model is {model.dim}-d")
    T = _marginal_subset(model, subset)
    A, At = transform.A, transform.At
    Y = X @ At
    rotated = GmmParams(model.weights, model.means @ At, A @ model.covs @ At)
    weights, means_y, covs_y = _partial_update(rotated, Y, T, cfg.eta)
    means = means_y @ A
    covs = At @ covs_y @ A
    return GmmParams(weights, means, eigen_floor_all(covs, cfg.eps))


def sample_subset(full_dim, beta1, beta2, rng):
    """Random feature subset whose size fraction is Beta(beta1, beta2) distributed."""
    if full_dim < 1:
        raise ValueError("full_dim must be >= 1")
    r = rng.beta(beta1, beta2)
    m = min(full_dim, max(1, int(math.floor(r * full_dim + 0.5))))
    T = np.sort(rng.choice(full_dim, size=m, replace=False))
    return IndexSubset(full_dim, tuple(T.tolist()))


def sample_orthogonal(dim, rng):
    """Haar-random orthogonal matrix via sign-corrected QR of a Gaussian matrix."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return OrthogonalTransform(Q * signs)


def init_model(cfg, dim, rng):
    """Gaussian-random means, scaled-identity covariances, uniform weights."""
    means = rng.normal(0.0, cfg.init_mean_std, size=(cfg.K, dim))
    cov = eigen_floor(cfg.init_cov_scale * np.eye(dim), cfg.eps)
    covs = np.repeat(cov[None], cfg.K, axis=0)
    return GmmParams(np.full(cfg.K, 1.0 / cfg.K), means, covs)


def penalized_objective(model, X, eta, subset=None):
    """Mean (marginal) log-likelihood plus ``eta * sum(log pi)``."""
    if subset is not None:
        model = marginal_model(model, subset)
        X = np.asarray(X)[:, list(subset.T)]
    with np.errstate(divide="ignore"):
        prior = eta * np.sum(np.log(model.weights)) if eta > 0 else 0.0
    return float(np.mean(log_likelihoods(model, X)) + prior)


Evaluator = Callable[[GmmParams, int], dict]


def run_biglearn_em(X, cfg, rng=None, evaluator: Optional[Evaluator] = None, init=None):
    """Run the randomized joint / marginal / transformed-marginal schedule.

    Each outer iteration draws one branch, samples its subset (and rotation)
    once, and applies ``cfg.local_updates`` updates with them. Returns the
    final model and a :class:`TrainTrace`. If a step raises, the exception
    propagates with ``partial_trace`` and ``last_model`` attributes attached.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty data matrix")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    d = X.shape[1]
    model = init if init is not None else init_model(cfg, d, rng)
    trace = TrainTrace()
    try:
        for it in range(cfg.outer_iters):
            u = rng.uniform()
            if u < cfg.p_joint:
                branch, size = "joint", 0
                for _ in range(cfg.local_updates):
                    model = joint_em_step(model, X, cfg)
            elif u < cfg.p_joint + cfg.p_marginal:
                subset = sample_subset(d, cfg.beta1, cfg.beta2, rng)
                branch, size = "marginal", len(subset.T)
                for _ in range(cfg.local_updates):
                    model = marginal_em_step(model, X, subset, cfg)
            else:
                transform = sample_orthogonal(d, rng)
                subset = sample_subset(d, cfg.beta1, cfg.beta2, rng)
                branch, size = "transformed", len(subset.T)
                for _ in range(cfg.local_updates):
                    model = transformed_marginal_em_step(model, X, transform, subset, cfg)
            train_ll = float(np.mean(log_likelihoods(model, X)))
            extra = dict(evaluator(model, it)) if evaluator is not None else {}
            trace.append(TraceRecord(it, branch, size, train_ll, extra))
    except Exception as exc:
        exc.partial_trace = trace
        exc.last_model = model
        raise
    return model, trace
