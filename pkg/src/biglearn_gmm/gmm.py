"""Gaussian mixture parameters and the density computations built on them."""

import json
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .core_gaussian import batch_log_pdf, cholesky, gaussian_log_pdf, sym
from .errors import DimensionMismatch


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GmmParams:
    """Mixture weights ``(K,)``, means ``(K, d)`` and covariances ``(K, d, d)``.

    Weights must be nonnegative and sum to one. Zero weights are allowed so
    that the unregularized (``eta = 0``) updates can be represented.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covs, dtype=float)
        K, d = mu.shape
        if covs.ndim == 2 and d == 1:
            covs = covs.reshape(K, 1, 1)
        if w.shape != (K,) or covs.shape != (K, d, d):
            raise DimensionMismatch(
                f"weights {w.shape}, means {mu.shape}, covs {covs.shape} disagree")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must be a probability vector, got {w}")
        covs = 0.5 * (covs + np.swapaxes(covs, 1, 2))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "means", _frozen(mu))
        object.__setattr__(self, "covs", _frozen(covs))

    @property
    def K(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def replace(self, weights=None, means=None, covs=None):
        return GmmParams(
            self.weights if weights is None else weights,
            self.means if means is None else means,
            self.covs if covs is None else covs,
        )

    def allclose(self, other, atol=1e-10):
        return (self.K == other.K and self.dim == other.dim
                and np.allclose(self.weights, other.weights, rtol=0, atol=atol)
                and np.allclose(self.means, other.means, rtol=0, atol=atol)
                and np.allclose(self.covs, other.covs, rtol=0, atol=atol))

    def to_dict(self):
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covs": self.covs.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["weights"], doc["means"], doc["covs"])

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class IndexSubset:
    """Target indices ``T`` and (possibly empty) conditioning indices ``S``.

    Indices are 0-based feature positions in ``range(full_dim)``.
    """

    full_dim: int
    T: Tuple[int, ...]
    S: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        T = tuple(int(i) for i in self.T)
        S = tuple(int(i) for i in self.S)
        if not T:
            raise ValueError("T must be nonempty")
        for name, idx in (("T", T), ("S", S)):
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"{name} must be strictly increasing: {idx}")
            if idx and (idx[0] < 0 or idx[-1] >= self.full_dim):
                raise ValueError(f"{name} out of range for full_dim={self.full_dim}")
        if set(T) & set(S):
            raise ValueError("T and S must be disjoint")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "S", S)

    @classmethod
    def full(cls, dim):
        return cls(dim, tuple(range(dim)))

    @property
    def is_full(self):
        return len(self.T) == self.full_dim


def _check_data(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise DimensionMismatch(f"data has {X.shape[1]} columns, model dim is {model.dim}")
    return X


def weighted_log_densities(model, X):
    """``(n, K)`` matrix of ``log pi_k + log N(x_n | mu_k, Sigma_k)``."""
    X = _check_data(model, X)
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    out = batch_log_pdf(X, model.means, model.covs)
    out += log_w
    return out


def _row_logsumexp(a):
    top = a.max(axis=1, keepdims=True)
    top[~np.isfinite(top)] = 0.0
    e = a - top
    np.exp(e, out=e)
    return top + np.log(e.sum(axis=1, keepdims=True))


def log_likelihoods(model, X):
    """Per-row mixture log density."""
    return _row_logsumexp(weighted_log_densities(model, X))[:, 0]


def log_likelihood(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("log_likelihood takes a single vector")
    return float(log_likelihoods(model, x[None, :])[0])


def log_responsibilities(model, X):
    logp = weighted_log_densities(model, X)
    return logp - _row_logsumexp(logp)


def responsibilities(model, X):
    """Posterior component probabilities, one row per sample."""
    r = weighted_log_densities(model, X)
    r -= r.max(axis=1, keepdims=True)
    np.exp(r, out=r)
    r /= r.sum(axis=1, keepdims=True)
    return r


def marginal_model(model, subset):
    """Exact marginal mixture over ``subset.T`` (a detached copy)."""
    if subset.full_dim != model.dim:
        raise DimensionMismatch(f"subset is over {subset.full_dim} dims, model has {model.dim}")
    T = np.asarray(subset.T)
    return GmmParams(model.weights, model.means[:, T], model.covs[:, T[:, None], T])


def conditional_log_likelihood(model, x, subset):
    """``log p(x_T | x_S)`` for a single full-length vector ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise DimensionMismatch(f"x has shape {x.shape}, model dim is {model.dim}")
    if not subset.S:
        raise ValueError("conditional_log_likelihood needs a nonempty S")
    T, S = np.asarray(subset.T), np.asarray(subset.S)
    xT, xS = x[T], x[S]
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    gate = np.empty(model.K)
    cond = np.empty(model.K)
    for k in range(model.K):
        mu, cov = model.means[k], model.covs[k]
        c_ss = cov[S[:, None], S]
        c_ts = cov[T[:, None], S]
        L = cholesky(c_ss)
        gate[k] = log_w[k] + gaussian_log_pdf(xS, mu[S], c_ss)
        # Sigma_TS Sigma_SS^{-1} via two triangular solves
        gain = linalg.cho_solve((L, True), c_ts.T).T
        c_mean = mu[T] + gain @ (xS - mu[S])
        c_cov = sym(cov[T[:, None], T] - gain @ c_ts.T)
        cond[k] = gaussian_log_pdf(xT, c_mean, c_cov)
    gate -= logsumexp(gate)
    return float(logsumexp(gate + cond))


def sample(model, n, rng):
    """Draw ``n`` rows: component from the weights, then the Gaussian."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z = rng.choice(model.K, size=n, p=model.weights)
    eps = rng.standard_normal((n, model.dim))
    out = np.empty((n, model.dim))
    for k in range(model.K):
        rows = z == k
        if rows.any():
            L = cholesky(model.covs[k])
            out[rows] = model.means[k] + eps[rows] @ L.T
    return out


def mc_kl(q, p, n=100_000, rng=None):
    """Monte-Carlo estimate of ``KL[q || p]`` from ``n`` samples of ``q``."""
    if q.dim != p.dim:
        raise DimensionMismatch(f"q has dim {q.dim}, p has dim {p.dim}")
    if rng is None:
        rng = np.random.default_rng()
    X = sample(q, n, rng)
    return float(np.mean(log_likelihoods(q, X) - log_likelihoods(p, X)))


def standard_normal(dim=1):
    return GmmParams([1.0], np.zeros((1, dim)), np.eye(dim)[None])


__all__ = [
    "GmmParams", "IndexSubset", "conditional_log_likelihood",
    "log_likelihood", "log_likelihoods", "log_responsibilities",
    "marginal_model", "mc_kl", "responsibilities", "sample",
    "standard_normal", "weighted_log_densities",
]
