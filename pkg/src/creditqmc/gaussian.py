"""Uniform-to-normal inversion and Cholesky correlation."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.special import erfc

__all__ = [
    "FactorizationError",
    "cholesky",
    "clamp_unit",
    "correlate",
    "inverse_normal_cdf",
    "load_correlation_csv",
    "normal_cdf",
    "uniform_to_normal",
]


class FactorizationError(ValueError):
    def __init__(self, pivot: int, value: float):
        super().__init__(f"matrix is not positive semi-definite: pivot {pivot} is {value:.3e}")
        self.pivot = pivot
        self.value = value


# Acklam's rational approximation (relative error ~1.2e-9), refined below.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)


def normal_cdf(z):
    """Standard normal CDF; scalar in, float out, array in, array out."""
    out = 0.5 * erfc(-np.asarray(z, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def _lower_tail_quantile(p: np.ndarray) -> np.ndarray:
    # p in (0, 0.5]; returns z <= 0
    z = np.empty_like(p)
    tail = p < _P_LOW
    if tail.any():
        q = np.sqrt(-2.0 * np.log(p[tail]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        z[tail] = num / den
    mid = ~tail
    if mid.any():
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        z[mid] = num / den
    # one Halley step against erfc brings the error down to rounding level
    err = 0.5 * erfc(-z / _SQRT2) - p
    u = err * _SQRT2PI * np.exp(0.5 * z * z)
    return z - u / (1.0 + 0.5 * z * u)


def inverse_normal_cdf(u):
    """Standard normal quantile for ``u`` strictly inside (0, 1).

    Evaluated on the smaller tail, ``min(u, 1-u)``, so that the result is
    antisymmetric and accurate near 1 as well as near 0.
    """
    arr = np.asarray(u, dtype=float)
    if np.any(~(arr > 0.0) | ~(arr < 1.0)):
        raise ValueError("inverse_normal_cdf requires 0 < u < 1")
    upper = arr > 0.5
    p = np.where(upper, 1.0 - arr, arr)
    z = _lower_tail_quantile(np.atleast_1d(p)).reshape(p.shape)
    z = np.where(upper, -z, z)
    z = np.where(arr == 0.5, 0.0, z)
    return float(z) if np.ndim(z) == 0 else z


def clamp_unit(u, bit_precision: int = 52):
    """Move exact zeros to half the finest point spacing, ``2**-(bit_precision+1)``."""
    eps = 2.0 ** -(bit_precision + 1)
    return np.clip(u, eps, 1.0 - eps)


def uniform_to_normal(u, bit_precision: int = 52):
    return inverse_normal_cdf(clamp_unit(u, bit_precision))


def cholesky(a, tol: float = 1e-12) -> np.ndarray:
    """Lower-triangular ``W`` with ``W @ W.T == a`` for a PSD correlation matrix.

    Pivots in ``[-tol, 0]`` are treated as zero (the column below is zeroed),
    which admits singular but semi-definite inputs.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"correlation matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if not np.allclose(a, a.T, atol=1e-12, rtol=0.0):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(a), 1.0, atol=1e-12, rtol=0.0):
        raise ValueError("correlation matrix must have a unit diagonal")
    if np.any(np.abs(a) > 1.0 + 1e-12):
        raise ValueError("correlation entries must satisfy |rho| <= 1")
    w = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - w[j, :j] @ w[j, :j]
        if pivot < -tol:
            raise FactorizationError(j, pivot)
        if pivot <= tol:
            w[j, j] = 0.0
            rest = a[j + 1 :, j] - w[j + 1 :, :j] @ w[j, :j]
            if np.any(np.abs(rest) > 1e-10):
                raise FactorizationError(j, pivot)
            continue
        d = np.sqrt(pivot)
        w[j, j] = d
        w[j + 1 :, j] = (a[j + 1 :, j] - w[j + 1 :, :j] @ w[j, :j]) / d
    return w


def correlate(w, z):
    """``xi = W @ z``; ``z`` may be one vector or a batch of row vectors."""
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != w.shape[1]:
        raise ValueError(f"dimension mismatch: factor is {w.shape}, vector has {z.shape[-1]}")
    return z @ w.T


def load_correlation_csv(path, credit_ids=None) -> np.ndarray:
    """Read a square correlation CSV whose header row names the credits.

    When ``credit_ids`` is given, rows/columns are reordered to that order.
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    body = np.array([[float(x) for x in row] for row in rows[1:] if row], dtype=float)
    if body.shape != (len(header), len(header)):
        raise ValueError(f"{path}: expected {len(header)}x{len(header)} values, got {body.shape}")
    if credit_ids is not None:
        pos = {name: i for i, name in enumerate(header)}
        missing = [c for c in credit_ids if str(c) not in pos]
        if missing or len(credit_ids) != len(header):
            raise ValueError(f"{path}: header does not match portfolio ids (missing {missing[:5]})")
        order = [pos[str(c)] for c in credit_ids]
        body = body[np.ix_(order, order)]
    return body
