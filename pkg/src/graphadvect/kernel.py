"""Matérn covariance on a directed graph built from the singular values of
the advection operator.

With ``L = U diag(s) V^T`` the covariance is

    K = scale**2 * V diag((2 nu / kappa**2 + s**2) ** -nu) V^T

i.e. a Matérn function of ``L^T L`` evaluated through the SVD, so the
product ``L^T L`` is never formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, NotSymmetric, ValidationError
from .graphs import LinearOperator, OperatorKind

__all__ = [
    "SpectralFactorization",
    "MaternHyperparams",
    "KernelMatrix",
    "thin_svd",
    "spectral_weights",
    "matern_kernel",
    "symmetrized_average",
    "psd_check",
]


@dataclass(frozen=True, eq=False)
class SpectralFactorization:
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def n(self) -> int:
        return self.singular_values.size

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


@dataclass(frozen=True)
class MaternHyperparams:
    nu: float
    kappa: float
    output_scale: float = 1.0
    noise_variance: float = 0.0

    def __post_init__(self):
        for name in ("nu", "kappa", "output_scale"):
            val = float(getattr(self, name))
            if not (math.isfinite(val) and val > 0):
                raise ValidationError(f"{name} must be positive and finite, got {val}")
            object.__setattr__(self, name, val)
        nv = float(self.noise_variance)
        if not (math.isfinite(nv) and nv >= 0):
            raise ValidationError(f"noise_variance must be >= 0, got {nv}")
        object.__setattr__(self, "noise_variance", nv)

    def as_dict(self) -> dict:
        return {
            "nu": self.nu,
            "kappa": self.kappa,
            "output_scale": self.output_scale,
            "noise_variance": self.noise_variance,
        }


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    matrix: np.ndarray
    hyperparams: MaternHyperparams

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def thin_svd(op) -> SpectralFactorization:
    """Dense SVD of the operator with a deterministic sign convention: the
    first non-negligible entry of each right singular vector is positive."""
    m = op.matrix if isinstance(op, LinearOperator) else np.asarray(op, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"square matrix required, got shape {m.shape}")
    try:
        u, s, vt = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge: {exc}") from exc
    v = vt.T.copy()
    u = u.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        lead = np.flatnonzero(np.abs(col) > 1e-10)
        if lead.size and col[lead[0]] < 0:
            v[:, k] *= -1
            u[:, k] *= -1
    for arr in (u, s, v):
        arr.setflags(write=False)
    return SpectralFactorization(u, s, v)


def spectral_weights(singular_values, h: MaternHyperparams) -> np.ndarray:
    """Kernel eigenvalues ``scale**2 * (2 nu / kappa**2 + s**2) ** -nu``."""
    s = np.asarray(singular_values, dtype=float)
    base = 2.0 * h.nu / h.kappa**2 + s**2
    return h.output_scale**2 * np.exp(-h.nu * np.log(base))


def matern_kernel(f: SpectralFactorization, h: MaternHyperparams) -> KernelMatrix:
    base = 2.0 * h.nu / h.kappa**2 + f.singular_values**2
    v = f.right_vectors
    k = (v * np.exp(-h.nu * np.log(base))) @ v.T
    k = h.output_scale**2 * k
    k = 0.5 * (k + k.T)
    k.setflags(write=False)
    return KernelMatrix(k, h)


def symmetrized_average(op: LinearOperator) -> LinearOperator:
    """``(M + M^T) / 2``; indefinite for unbalanced graphs in general."""
    m = op.matrix
    return LinearOperator(0.5 * (m + m.T), OperatorKind.SYMMETRIZED_AVERAGE, op.n)


def psd_check(m):
    """Return ``(is_psd, min_eigenvalue)`` for a symmetric matrix."""
    if isinstance(m, (KernelMatrix, LinearOperator)):
        m = m.matrix
    m = np.asarray(m, dtype=float)
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or np.max(np.abs(m - m.T), initial=0.0) > 1e-10 * scale:
        raise NotSymmetric("psd_check needs a symmetric matrix")
    eig = np.linalg.eigvalsh(m)
    lo, hi = float(eig[0]), float(eig[-1])
    return lo >= -1e-8 * max(1.0, hi), lo
