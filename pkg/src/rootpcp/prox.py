"""Proximal operators used by the ADMM updates.

Each ``prox_*`` function solves ``argmin_x gamma * f(x) + 0.5 * ||x - z||_F^2``
for its norm ``f`` in closed form.
"""

from __future__ import annotations

import numpy as np

from .exceptions import UsageError
from .linalg import as_matrix, svd


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma >= 0.0:
        raise UsageError(f"threshold must be nonnegative, got {gamma}")
    return gamma


def prox_nuclear(z, gamma: float) -> np.ndarray:
    """Singular value thresholding.

    Soft-thresholds the singular values of ``z`` by ``gamma`` and keeps the
    singular vectors. Uses a full thin SVD.
    """
    gamma = _check_gamma(gamma)
    u, s, vt = svd(z)
    shrunk = np.maximum(s - gamma, 0.0)
    keep = shrunk > 0.0
    if not np.any(keep):
        return np.zeros_like(as_matrix(z))
    return (u[:, keep] * shrunk[keep]) @ vt[keep]


def prox_l1(z, gamma: float) -> np.ndarray:
    """Entrywise soft thresholding: ``sign(z) * max(|z| - gamma, 0)``."""
    gamma = _check_gamma(gamma)
    z = as_matrix(z)
    return np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)


def prox_frobenius(z, gamma: float) -> np.ndarray:
    """Block shrinkage ``max(||z||_F - gamma, 0) * z / ||z||_F``.

    Returns an exact zero matrix when ``||z||_F <= gamma`` (including ``z = 0``).
    """
    gamma = _check_gamma(gamma)
    z = as_matrix(z)
    norm = float(np.sqrt(np.sum(z * z)))
    if norm <= gamma:
        return np.zeros_like(z)
    return z * ((norm - gamma) / norm)


def stable_z_update(residual_target, mu_bar: float, rho: float) -> np.ndarray:
    """Minimiser of ``mu_bar/2 ||Z||_F^2 + rho/2 ||Z - residual_target||_F^2``."""
    if not (mu_bar > 0 and rho > 0):
        raise UsageError(f"mu_bar and rho must be positive, got {mu_bar}, {rho}")
    return as_matrix(residual_target) / (1.0 + mu_bar / rho)
