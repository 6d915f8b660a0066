"""Gaussian process regression over graph nodes with the spectral Matérn kernel.

The SVD of the operator is computed once; every likelihood evaluation only
re-weights the right singular vectors, so hyperparameter search costs one
Cholesky of the observed block per evaluation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import linalg

from .errors import (
    FactorizationFailure,
    IndexOutOfRange,
    SingularCovariance,
    ValidationError,
)
from .kernel import KernelMatrix, MaternHyperparams, SpectralFactorization, matern_kernel

__all__ = [
    "TrainingData",
    "GPPosterior",
    "OptimizationTrace",
    "prior_sample",
    "jittered_cholesky",
    "log_marginal_likelihood",
    "nll_from_spectrum",
    "fd_gradient",
    "fit_hyperparameters",
    "default_init",
    "posterior_predict",
    "posterior_sample",
    "l2_test_error",
]

_LOG_2PI = math.log(2 * math.pi)
FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class TrainingData:
    node_indices: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.node_indices)
        if idx.size and not np.issubdtype(idx.dtype, np.integer):
            if not np.all(idx == np.round(idx)):
                raise ValidationError("node indices must be integers")
        idx = idx.astype(np.int64).reshape(-1)
        y = np.asarray(self.targets, dtype=float).reshape(-1)
        if idx.size != y.size:
            raise ValidationError(f"{idx.size} indices but {y.size} targets")
        if np.unique(idx).size != idx.size:
            raise ValidationError("node indices must be distinct")
        if np.any(idx < 0):
            raise IndexOutOfRange("negative node index")
        if not np.all(np.isfinite(y)):
            raise ValidationError("targets must be finite")
        idx.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "node_indices", idx)
        object.__setattr__(self, "targets", y)

    def __len__(self):
        return self.targets.size

    def check_within(self, n: int):
        if self.node_indices.size and self.node_indices.max() >= n:
            raise IndexOutOfRange(f"node index {self.node_indices.max()} outside graph of {n} nodes")

    def subset(self, positions) -> "TrainingData":
        positions = np.asarray(positions, dtype=np.int64)
        return TrainingData(self.node_indices[positions], self.targets[positions])


@dataclass(frozen=True, eq=False)
class GPPosterior:
    mean: np.ndarray
    variance: np.ndarray
    hyperparams: MaternHyperparams
    final_nll: float

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)


def jittered_cholesky(a: np.ndarray, error=SingularCovariance):
    """Lower Cholesky factor of ``a``; on failure retry with jitter
    ``1e-10 * mean(diag)`` growing by 10x up to ``1e-4 * mean(diag)``.

    Returns ``(L, jitter)``.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, 0)), 0.0
    if not np.all(np.isfinite(a)):
        raise error("covariance has non-finite entries")
    try:
        return linalg.cholesky(a, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(a)))
    if not scale > 0:
        raise error("covariance has non-positive mean diagonal")
    eye = np.eye(a.shape[0])
    for k in range(7):
        jitter = 1e-10 * 10**k * scale
        try:
            return linalg.cholesky(a + jitter * eye, lower=True, check_finite=False), jitter
        except linalg.LinAlgError:
            continue
    raise error("covariance not positive definite even with jitter 1e-4 * mean(diag)")


def prior_sample(k: KernelMatrix, count: int, seed: int) -> List[np.ndarray]:
    """Draws from ``N(0, K)`` via Cholesky of ``K + 1e-10 * trace(K) / n * I``."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    m = np.asarray(k.matrix if isinstance(k, KernelMatrix) else k, dtype=float)
    n = m.shape[0]
    jitter = 1e-10 * np.trace(m) / n
    try:
        chol = linalg.cholesky(m + jitter * np.eye(n), lower=True)
    except linalg.LinAlgError as exc:
        raise FactorizationFailure(f"prior covariance factorization failed: {exc}") from exc
    z = np.random.default_rng(seed).standard_normal((count, n))
    draws = z @ chol.T
    return list(draws)


def _nll_from_block(k_obs, y, noise):
    m = y.size
    a = k_obs + noise * np.eye(m)
    chol, _ = jittered_cholesky(a)
    alpha = linalg.cho_solve((chol, True), y, check_finite=False)
    return 0.5 * float(y @ alpha) + float(np.sum(np.log(np.diag(chol)))) + 0.5 * m * _LOG_2PI


def log_marginal_likelihood(k: KernelMatrix, d: TrainingData) -> float:
    """Negative log marginal likelihood of the observed targets (the name
    follows common usage; smaller is better)."""
    d.check_within(k.n)
    idx = d.node_indices
    k_obs = k.matrix[np.ix_(idx, idx)]
    return _nll_from_block(k_obs, d.targets, k.hyperparams.noise_variance)


def _observed_block(f: SpectralFactorization, idx, h: MaternHyperparams):
    base = 2.0 * h.nu / h.kappa**2 + f.singular_values**2
    w = np.exp(-h.nu * np.log(base))
    v_obs = f.right_vectors[idx]
    k_obs = h.output_scale**2 * ((v_obs * w) @ v_obs.T)
    return 0.5 * (k_obs + k_obs.T)


def nll_from_spectrum(f: SpectralFactorization, d: TrainingData, h: MaternHyperparams) -> float:
    """Same value as ``log_marginal_likelihood(matern_kernel(f, h), d)`` but
    only assembles the observed block."""
    d.check_within(f.n)
    return _nll_from_block(_observed_block(f, d.node_indices, h), d.targets, h.noise_variance)


def _to_theta(h):
    return np.log([h.nu, h.kappa, h.output_scale, max(h.noise_variance, 1e-300)])


def _from_theta(theta):
    nu, kappa, scale, noise = np.exp(theta)
    return MaternHyperparams(nu, kappa, scale, noise)


def _objective(f, d):
    def nll(theta):
        if not np.all(np.isfinite(theta)) or np.any(np.abs(theta) > 700):
            return math.inf
        try:
            val = nll_from_spectrum(f, d, _from_theta(theta))
        except (ValidationError, SingularCovariance, FloatingPointError):
            return math.inf
        return val if math.isfinite(val) else math.inf

    return nll


def fd_gradient(fun, theta, step=FD_STEP) -> np.ndarray:
    """Central finite differences."""
    theta = np.asarray(theta, dtype=float)
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = step
        g[i] = (fun(theta + e) - fun(theta - e)) / (2 * step)
    return g


@dataclass
class OptimizationTrace:
    nll: list
    params: list


def default_init(d: TrainingData) -> MaternHyperparams:
    std = float(np.std(d.targets)) if len(d) > 1 else 1.0
    std = std if std > 0 else 1.0
    return MaternHyperparams(1.0, 1.0, std, (0.1 * std) ** 2)


def fit_hyperparameters(
    f: SpectralFactorization,
    d: TrainingData,
    init: Optional[MaternHyperparams] = None,
    budget: int = 200,
    trace: Optional[OptimizationTrace] = None,
    max_log_step: float = 1.0,
) -> MaternHyperparams:
    """Gradient descent on the NLL over log(nu, kappa, scale, noise variance).

    Gradients are central differences with step 1e-5 in log space; each
    iteration does an Armijo backtracking line search, so accepted iterates
    strictly decrease the NLL. ``budget`` is the iteration cap.
    """
    if budget < 1:
        raise ValidationError("budget must be >= 1")
    d.check_within(f.n)
    if init is None:
        init = default_init(d)
    fun = _objective(f, d)
    init_nll = nll_from_spectrum(f, d, init)  # propagates SingularCovariance
    theta = _to_theta(init)
    cur = fun(theta)
    best_theta, best = theta, cur
    if trace is not None:
        trace.nll.append(init_nll)
        trace.params.append(init)
    alpha = 1.0
    for _ in range(budget):
        g = fd_gradient(fun, theta)
        if not np.all(np.isfinite(g)):
            break
        gg = float(g @ g)
        if gg < 1e-20:
            break
        # cap the largest log-space move
        alpha = min(alpha, max_log_step / float(np.max(np.abs(g))))
        accepted = False
        for _ in range(50):
            cand = theta - alpha * g
            val = fun(cand)
            if val <= cur - 1e-4 * alpha * gg:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        theta, cur = cand, val
        if trace is not None:
            trace.nll.append(cur)
            trace.params.append(_from_theta(theta))
        if cur < best:
            best_theta, best = theta, cur
        alpha *= 2.0
    if best < init_nll:
        return _from_theta(best_theta)
    return init


def _predict_core(k, idx, y, noise):
    k_obs = k[np.ix_(idx, idx)]
    m = idx.size
    chol, _ = jittered_cholesky(k_obs + noise * np.eye(m))
    alpha = linalg.cho_solve((chol, True), y, check_finite=False)
    k_cross = k[:, idx]
    mean = k_cross @ alpha
    w = linalg.solve_triangular(chol, k_cross.T, lower=True, check_finite=False)
    nll = 0.5 * float(y @ alpha) + float(np.sum(np.log(np.diag(chol)))) + 0.5 * m * _LOG_2PI
    return mean, w, nll


def posterior_predict(f: SpectralFactorization, h: MaternHyperparams, d: TrainingData) -> GPPosterior:
    """Posterior mean and marginal variance at every node."""
    d.check_within(f.n)
    k = matern_kernel(f, h).matrix
    idx = d.node_indices
    if idx.size == 0:
        return GPPosterior(np.zeros(f.n), np.diag(k).copy(), h, 0.0)
    mean, w, nll = _predict_core(k, idx, d.targets, h.noise_variance)
    var = np.diag(k) - np.sum(w**2, axis=0)
    var = np.maximum(var, 0.0)
    return GPPosterior(mean, var, h, nll)


def posterior_sample(
    f: SpectralFactorization, h: MaternHyperparams, d: TrainingData, count: int, seed: int
) -> List[np.ndarray]:
    """Joint draws of the latent function from the predictive posterior."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    d.check_within(f.n)
    k = matern_kernel(f, h).matrix
    idx = d.node_indices
    if idx.size:
        mean, w, _ = _predict_core(k, idx, d.targets, h.noise_variance)
        cov = k - w.T @ w
    else:
        mean, cov = np.zeros(f.n), k
    cov = 0.5 * (cov + cov.T)
    chol, _ = jittered_cholesky(cov, error=FactorizationFailure)
    z = np.random.default_rng(seed).standard_normal((count, f.n))
    return list(mean + z @ chol.T)


def l2_test_error(posterior: GPPosterior, test: TrainingData) -> float:
    """Unnormalized Euclidean norm of the test residuals."""
    test.check_within(posterior.mean.size)
    r = posterior.mean[test.node_indices] - test.targets
    return float(np.sqrt(np.sum(r**2)))
