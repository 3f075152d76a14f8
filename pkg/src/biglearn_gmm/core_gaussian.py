"""Multivariate Gaussian primitives shared by the mixture code.

Covariances are plain ``(d, d)`` float arrays. :func:`sym` is the single
place where symmetry is enforced.
"""

import numpy as np
from scipy import linalg

from .errors import DegenerateWeights, DimensionMismatch, FactorizationFailure

LOG_2PI = float(np.log(2.0 * np.pi))


def sym(m):
    """Return ``m`` as a symmetric 2-D float array (exact mirror of its average)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


def cholesky(cov):
    """Lower Cholesky factor, raising :class:`FactorizationFailure` if not SPD."""
    try:
        return linalg.cholesky(cov, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise FactorizationFailure(str(exc)) from exc


def gaussian_log_pdf(x, mean, cov):
    """Log density of ``N(mean, cov)`` at ``x``.

    ``x`` may be a single vector of length d or an ``(n, d)`` matrix, in
    which case a length-n array is returned.
    """
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = cov.shape[0]
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != d or mean.shape != (d,):
        raise DimensionMismatch(
            f"x has {X.shape[1]} columns, mean {mean.shape}, cov is {d}x{d}")
    L = cholesky(cov)
    z = linalg.solve_triangular(L, (X - mean).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", z, z)
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    out = -0.5 * (d * LOG_2PI + log_det + maha)
    return float(out[0]) if single else out


def _quadratic_features(X):
    d = X.shape[1]
    iu, ju = np.triu_indices(d)
    return np.hstack([X[:, iu] * X[:, ju], X, np.ones((X.shape[0], 1))])


def batch_log_pdf(X, means, covs, max_block=4_000_000):
    """``(n, K)`` log densities of every row of ``X`` under every component.

    For small ``d`` the Mahalanobis terms are a single product of quadratic
    features ``[x_i x_j, x_i, 1]`` with per-component coefficients; otherwise
    columns of ``X^T`` are whitened by the stacked ``L_k^{-1}`` in blocks.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    means = np.asarray(means, dtype=float)
    covs = np.asarray(covs, dtype=float)
    K, d = means.shape
    if X.shape[1] != d or covs.shape != (K, d, d):
        raise DimensionMismatch(
            f"data has {X.shape[1]} columns, means {means.shape}, covs {covs.shape}")
    try:
        L = np.linalg.cholesky(covs)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure(str(exc)) from exc
    Linv = np.linalg.inv(L)
    const = -0.5 * (d * LOG_2PI) - np.log(np.diagonal(L, axis1=1, axis2=2)).sum(axis=1)
    if d <= 8:
        P = np.swapaxes(Linv, 1, 2) @ Linv
        iu, ju = np.triu_indices(d)
        quad = P[:, iu, ju] * np.where(iu == ju, 1.0, 2.0)
        Pmu = np.einsum("kij,kj->ki", P, means)
        coef = np.hstack([quad, -2.0 * Pmu, np.einsum("ki,ki->k", Pmu, means)[:, None]])
        # (K, n) layout keeps later per-sample reductions contiguous
        out = coef @ _quadratic_features(X).T
        np.maximum(out, 0.0, out=out)
        out *= -0.5
        out += const[:, None]
        return out.T
    W = Linv.reshape(K * d, d)
    offset = np.einsum("kij,kj->ki", Linv, means).reshape(K * d, 1)
    Xt = np.ascontiguousarray(X.T)
    n = X.shape[0]
    out = np.empty((K, n))
    step = max(1, max_block // (K * d))
    for start in range(0, n, step):
        cols = slice(start, start + step)
        Z = W @ Xt[:, cols]
        Z -= offset
        Z *= Z
        out[:, cols] = const[:, None] - 0.5 * Z.reshape(K, d, -1).sum(axis=1)
    return out.T


def eigen_floor(cov, eps):
    """Raise every eigenvalue of ``cov`` to at least ``eps``.

    When no eigenvalue is below ``eps`` the (symmetrized) input is returned
    unchanged, so repeated flooring is exact.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    cov = sym(cov)
    lam, V = np.linalg.eigh(cov)
    if lam[0] >= eps:
        return cov
    out = (V * np.maximum(lam, eps)) @ V.T
    return sym(out)


def eigen_floor_all(covs, eps):
    """:func:`eigen_floor` applied to each matrix of a ``(K, d, d)`` stack."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    covs = np.asarray(covs, dtype=float)
    covs = 0.5 * (covs + np.swapaxes(covs, 1, 2))
    lam, V = np.linalg.eigh(covs)
    out = covs.copy()
    for k in np.flatnonzero(lam[:, 0] < eps):
        f = (V[k] * np.maximum(lam[k], eps)) @ V[k].T
        out[k] = 0.5 * (f + f.T)
    return out


def weighted_moments(X, w):
    """Weighted mean and ML-normalized weighted scatter of the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.asarray(w, dtype=float)
    if w.shape != (X.shape[0],):
        raise DimensionMismatch(f"{X.shape[0]} rows but {w.shape} weights")
    total = w.sum()
    if not total > 0.0:
        raise DegenerateWeights(f"weights sum to {total}")
    mean = w @ X / total
    diff = X - mean
    scatter = (diff * w[:, None]).T @ diff / total
    return mean, sym(scatter)


def weighted_moments_columns(X, W):
    """:func:`weighted_moments` for every column of the ``(n, K)`` weight matrix.

    Returns ``(totals, means, scatters)``; columns whose total is not positive
    get NaN moments and are left for the caller to handle. Second moments are
    accumulated about the data mean, then shifted to each component mean.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    W = np.asarray(W, dtype=float)
    n, d = X.shape
    K = W.shape[1]
    totals = W.sum(axis=0)
    shift = X.mean(axis=0)
    Xc = X - shift
    first = W.T @ Xc
    second = np.empty((K, d, d))
    if d <= K:
        for j in range(d):
            second[:, :, j] = (W * Xc[:, j, None]).T @ Xc
    else:
        Xct = np.ascontiguousarray(Xc.T)
        Wt = np.ascontiguousarray(W.T)
        for k in range(K):
            second[k] = (Xct * Wt[k]) @ Xc
    means = np.full((K, d), np.nan)
    scatters = np.full((K, d, d), np.nan)
    live = totals > 0.0
    m = first[live] / totals[live, None]
    s = second[live] / totals[live, None, None] - m[:, :, None] * m[:, None, :]
    means[live] = m + shift
    scatters[live] = 0.5 * (s + np.swapaxes(s, 1, 2))
    return totals, means, scatters
