"""scikit-learn compatible wrappers around :func:`rootpcp.solver.solve`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .linalg import as_matrix
from .solver import Formulation, SolverConfig, solve


class _BasePCP(TransformerMixin, BaseEstimator):
    _formulation = Formulation.ROOT_PCP

    def _config(self, shape) -> SolverConfig:
        return SolverConfig.with_defaults(
            shape,
            formulation=self._formulation,
            lam=self.lam,
            mu=self.mu,
            sigma=getattr(self, "sigma", None),
            eps_abs=self.eps_abs,
            eps_rel=self.eps_rel,
            max_iters=self.max_iter,
            rho_init=self.rho_init,
        )

    def _decompose(self, X):
        X = as_matrix(X, "X")
        config = self._config(X.shape)
        return X, config, solve(X, config)

    def fit(self, X, y=None):
        """Decompose ``X`` into low-rank, sparse and noise parts.

        Parameters
        ----------
        X : array-like of shape (n1, n2)
            Observation matrix. For video, one flattened frame per column.
        y : ignored

        Returns
        -------
        self
        """
        X, config, result = self._decompose(X)
        self.low_rank_ = result.l
        self.sparse_ = result.s
        self.noise_ = X - result.l - result.s
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.residual_history_ = np.asarray(result.residual_history)
        self.lam_ = config.lam
        self.mu_ = config.mu
        self.n_features_in_ = X.shape[1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).low_rank_

    def transform(self, X):
        """Low-rank part of ``X`` solved with the fitted parameters.

        The decomposition is transductive, so ``X`` is decomposed afresh with
        the ``lam_``/``mu_`` resolved during :meth:`fit`.
        """
        check_is_fitted(self, "low_rank_")
        X = as_matrix(X, "X")
        config = SolverConfig(
            lam=self.lam_,
            mu=self.mu_,
            eps_abs=self.eps_abs,
            eps_rel=self.eps_rel,
            max_iters=self.max_iter,
            rho_init=self.rho_init,
            formulation=self._formulation,
        )
        return solve(X, config).l


class RootPCP(_BasePCP):
    """Square-root principal component pursuit.

    Minimises ``||L||_* + lam ||S||_1 + mu ||L + S - X||_F``. The defaults
    ``lam = 1/sqrt(n1)`` and ``mu = sqrt(n2/2)`` do not depend on the noise
    level.

    Parameters
    ----------
    lam : float, default=None
        Sparsity weight; ``1/sqrt(n1)`` when None.
    mu : float, default=None
        Weight of the residual term; ``sqrt(n2/2)`` when None.
    eps_abs, eps_rel : float, default=1e-6
        Absolute and relative stopping tolerances.
    max_iter : int, default=5000
    rho_init : float, default=0.1
        Initial ADMM penalty.

    Attributes
    ----------
    low_rank_, sparse_, noise_ : ndarray of shape (n1, n2)
    n_iter_ : int
    converged_ : bool
    residual_history_ : ndarray of shape (n_iter_, 3)
        Per-iteration ``(r_primal, r_dual, rho)``.
    lam_, mu_ : float
        Effective weights used by the last fit.
    """

    _formulation = Formulation.ROOT_PCP

    def __init__(self, lam=None, mu=None, eps_abs=1e-6, eps_rel=1e-6, max_iter=5000, rho_init=0.1):
        self.lam = lam
        self.mu = mu
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.max_iter = max_iter
        self.rho_init = rho_init


class StablePCP(_BasePCP):
    """Unconstrained stable PCP, ``||L||_* + lam ||S||_1 + mu/2 ||L + S - X||_F^2``.

    Needs either ``mu`` or the noise level ``sigma``; in the latter case
    ``mu = 1/(sigma (sqrt(n1) + sqrt(n2)))``. Other parameters and fitted
    attributes are as in :class:`RootPCP`.
    """

    _formulation = Formulation.STABLE_PCP_UNCONSTRAINED

    def __init__(
        self,
        lam=None,
        mu=None,
        sigma=None,
        eps_abs=1e-6,
        eps_rel=1e-6,
        max_iter=5000,
        rho_init=0.1,
    ):
        self.lam = lam
        self.mu = mu
        self.sigma = sigma
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.max_iter = max_iter
        self.rho_init = rho_init
