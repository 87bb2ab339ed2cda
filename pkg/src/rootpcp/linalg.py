"""Dense matrix helpers.

Matrices are plain two-dimensional ``float64`` numpy arrays. Every exported
function accepts anything array-like and validates it with :func:`as_matrix`.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import NumericalError, UsageError


class SvdFactors(NamedTuple):
    u: np.ndarray
    singular_values: np.ndarray
    vt: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array, raising UsageError otherwise."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise UsageError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise UsageError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains NaN or Inf entries")
    return arr


def check_finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{what} produced non-finite entries")
    return a


def frobenius_norm(a) -> float:
    a = as_matrix(a)
    return float(np.sqrt(np.sum(a * a)))


def stacked_frobenius(parts: Sequence) -> float:
    """Frobenius norm of the concatenation of ``parts``."""
    if len(parts) == 0:
        raise UsageError("stacked_frobenius needs at least one matrix")
    total = 0.0
    for p in parts:
        p = np.asarray(p, dtype=np.float64)
        total += float(np.sum(p * p))
    return float(np.sqrt(total))


def svd(a) -> SvdFactors:
    """Thin SVD ``a = u @ diag(s) @ vt`` with nonincreasing ``s``.

    Backed by LAPACK ``gesdd``; falls back to ``gesvd`` when the
    divide-and-conquer driver does not converge.
    """
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        import scipy.linalg

        try:
            u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"SVD did not converge on a {a.shape[0]}x{a.shape[1]} matrix "
                f"with Frobenius norm {frobenius_norm(a):.3e}"
            ) from exc
    return SvdFactors(u, s, vt)


def spectral_norm(a) -> float:
    return float(svd(a).singular_values[0])


def nuclear_norm(a) -> float:
    return float(np.sum(svd(a).singular_values))


def max_abs_entry(a) -> float:
    return float(np.max(np.abs(as_matrix(a))))
