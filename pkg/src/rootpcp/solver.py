"""Two-block ADMM for square-root PCP and unconstrained stable PCP.

The splitting keeps two copies of the low-rank and sparse blocks,
``X1 = (L1, S1, Z)`` and ``X2 = (L2, S2)``, coupled by ``L1 = L2``,
``S1 = S2`` and ``L2 + S2 + Z = D``. Dual variables are stored unscaled and
are not rescaled when the penalty ``rho`` changes.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import NumericalError, UsageError
from .linalg import (
    as_matrix,
    check_finite,
    frobenius_norm,
    max_abs_entry,
    nuclear_norm,
    spectral_norm,
    stacked_frobenius,
)
from .prox import prox_frobenius, prox_l1, prox_nuclear, stable_z_update

logger = logging.getLogger(__name__)

RHO_MIN = 1e-8
RHO_MAX = 1e8
KKT_SENTINEL = -1.0


class Formulation(str, enum.Enum):
    ROOT_PCP = "root"
    STABLE_PCP_UNCONSTRAINED = "stable"


def default_lambda(n1: int) -> float:
    """Sparsity weight ``1/sqrt(n1)``."""
    if n1 < 1:
        raise UsageError(f"n1 must be positive, got {n1}")
    return 1.0 / math.sqrt(n1)


def default_mu_root(n2: int) -> float:
    """Noise-independent weight ``sqrt(n2/2)`` for the square-root penalty."""
    if n2 < 1:
        raise UsageError(f"n2 must be positive, got {n2}")
    return math.sqrt(n2 / 2.0)


def default_mu_stable(sigma: float, n1: int, n2: int) -> float:
    """Noise-aware weight ``1/(sigma (sqrt(n1) + sqrt(n2)))`` for stable PCP.

    There is no finite default at ``sigma = 0``; use square-root PCP or pass
    ``mu`` explicitly.
    """
    if not sigma > 0:
        raise UsageError(
            "stable PCP needs sigma > 0 for its default mu; "
            "use the root formulation or supply mu explicitly"
        )
    if n1 < 1 or n2 < 1:
        raise UsageError(f"dimensions must be positive, got {n1}x{n2}")
    return 1.0 / (sigma * (math.sqrt(n1) + math.sqrt(n2)))


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    mu: float
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iters: int = 5000
    rho_init: float = 0.1
    formulation: Formulation = Formulation.ROOT_PCP

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation(self.formulation))
        for name in ("lam", "mu", "eps_abs", "eps_rel", "rho_init"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise UsageError(f"{name} must be a positive finite number, got {value!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise UsageError(f"max_iters must be a positive integer, got {self.max_iters!r}")

    @classmethod
    def with_defaults(
        cls,
        shape: Tuple[int, int],
        formulation=Formulation.ROOT_PCP,
        lam: Optional[float] = None,
        mu: Optional[float] = None,
        sigma: Optional[float] = None,
        **kwargs,
    ) -> "SolverConfig":
        """Fill unset ``lam``/``mu`` from the dimension-based default rules."""
        formulation = Formulation(formulation)
        n1, n2 = shape
        if lam is None:
            lam = default_lambda(n1)
        if mu is None:
            if formulation is Formulation.ROOT_PCP:
                mu = default_mu_root(n2)
            else:
                if sigma is None:
                    raise UsageError("stable formulation needs mu or sigma")
                mu = default_mu_stable(sigma, n1, n2)
        return cls(lam=lam, mu=mu, formulation=formulation, **kwargs)


@dataclass
class SolverState:
    l1: np.ndarray
    l2: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    z: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    rho: float
    iter: int = 0

    @classmethod
    def zeros(cls, shape: Tuple[int, int], rho: float) -> "SolverState":
        mats = [np.zeros(shape) for _ in range(8)]
        return cls(*mats, rho=float(rho), iter=0)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.l1.shape


@dataclass(frozen=True)
class ConvergenceReport:
    r_primal: float
    r_dual: float
    theta_primal: float
    theta_dual: float
    rho_next: float
    converged: bool


@dataclass(frozen=True)
class DecompositionResult:
    l: np.ndarray
    s: np.ndarray
    converged: bool
    iterations: int
    residual_history: List[Tuple[float, float, float]] = field(repr=False)
    config: Optional[SolverConfig] = None
    state: Optional[SolverState] = field(default=None, repr=False)

    @property
    def z(self) -> np.ndarray:
        """Noise estimate of the final iterate."""
        if self.state is None:
            raise AttributeError("result carries no solver state")
        return self.state.z


@dataclass(frozen=True)
class KktDiagnostic:
    residual_norm: float
    spectral_ratio: float
    linf_ratio: float
    nuclear_gap: float
    l1_gap: float

    @property
    def boundary_case(self) -> bool:
        return self.spectral_ratio == KKT_SENTINEL

    def satisfied(self, tol: float = 1e-3) -> bool:
        if self.boundary_case:
            return False
        return (
            self.spectral_ratio <= 1 + tol
            and self.linf_ratio <= 1 + tol
            and self.nuclear_gap <= tol
            and self.l1_gap <= tol
        )


def admm_step(state: SolverState, d, config: SolverConfig) -> SolverState:
    """One pass of the ADMM updates; returns a new state with ``iter + 1``.

    The Z update reads the previous ``L2, S2``; the ``L2, S2`` updates read
    the new ``L1, S1, Z``; the dual updates read the new ``L2, S2``.
    """
    d = np.asarray(d, dtype=np.float64)
    if state.shape != d.shape:
        raise UsageError(f"state shape {state.shape} does not match D {d.shape}")
    rho = state.rho
    inv = 1.0 / rho

    l1 = prox_nuclear(state.l2 - inv * state.y1, inv)
    s1 = prox_l1(state.s2 - inv * state.y2, config.lam * inv)
    target = d - state.l2 - state.s2 - inv * state.y3
    if config.formulation is Formulation.ROOT_PCP:
        z = prox_frobenius(target, config.mu * inv)
    else:
        z = stable_z_update(target, config.mu, rho)
    l2 = (d - z + 2.0 * l1 - s1 + inv * (2.0 * state.y1 - state.y2 - state.y3)) / 3.0
    s2 = (d - z + 2.0 * s1 - l1 + inv * (2.0 * state.y2 - state.y1 - state.y3)) / 3.0
    y1 = state.y1 + rho * (l1 - l2)
    y2 = state.y2 + rho * (s1 - s2)
    y3 = state.y3 + rho * (l2 + s2 + z - d)
    return SolverState(l1, l2, s1, s2, z, y1, y2, y3, rho=rho, iter=state.iter + 1)


def helper(
    state: SolverState,
    prev_l2,
    prev_s2,
    d,
    config: SolverConfig,
) -> ConvergenceReport:
    """Residuals, tolerance thresholds, next ``rho`` and the convergence flag.

    ``rho_next`` doubles when the primal residual exceeds ten times the dual
    one and halves in the opposite case, clamped to ``[RHO_MIN, RHO_MAX]``.
    """
    d = np.asarray(d, dtype=np.float64)
    n1, n2 = d.shape
    rho = state.rho
    l1, l2, s1, s2, z = state.l1, state.l2, state.s1, state.s2, state.z
    dl = l2 - prev_l2
    ds = s2 - prev_s2

    r_primal = stacked_frobenius([l1 - l2, s1 - s2, z + l2 + s2 - d])
    r_dual = rho * stacked_frobenius([dl, ds, dl + ds])

    abs_term = config.eps_abs * math.sqrt(3.0 * n1 * n2)
    theta_primal = (
        config.eps_rel
        * max(
            stacked_frobenius([l1, s1, z]),
            stacked_frobenius([l2, s2, l2 + s2]),
            stacked_frobenius([d]),
        )
        + abs_term
    )
    theta_dual = config.eps_rel * stacked_frobenius([state.y1, state.y2, state.y3]) + abs_term

    rho_next = rho
    if r_primal > 10.0 * r_dual:
        rho_next = 2.0 * rho
    elif r_dual > 10.0 * r_primal:
        rho_next = rho / 2.0
    rho_next = min(max(rho_next, RHO_MIN), RHO_MAX)

    converged = r_primal < theta_primal and r_dual < theta_dual
    return ConvergenceReport(r_primal, r_dual, theta_primal, theta_dual, rho_next, converged)


def solve(d, config: SolverConfig) -> DecompositionResult:
    """Run ADMM from the all-zero state until convergence or ``max_iters``.

    Returns the averages ``(L1 + L2)/2`` and ``(S1 + S2)/2`` of the final
    iterate. A run that exhausts ``max_iters`` comes back with
    ``converged=False`` rather than raising.
    """
    d = as_matrix(d, "D")
    state = SolverState.zeros(d.shape, config.rho_init)
    history: List[Tuple[float, float, float]] = []
    converged = False
    for _ in range(config.max_iters):
        prev_l2, prev_s2 = state.l2, state.s2
        state = admm_step(state, d, config)
        report = helper(state, prev_l2, prev_s2, d, config)
        history.append((report.r_primal, report.r_dual, state.rho))
        if not (math.isfinite(report.r_primal) and math.isfinite(report.r_dual)):
            raise NumericalError(f"residuals became non-finite at iteration {state.iter}")
        if report.converged:
            converged = True
            break
        state = replace(state, rho=report.rho_next)

    if not converged:
        logger.info("ADMM stopped at max_iters=%d without converging", config.max_iters)
    l = check_finite(0.5 * (state.l1 + state.l2), "low-rank estimate")
    s = check_finite(0.5 * (state.s1 + state.s2), "sparse estimate")
    return DecompositionResult(
        l=l,
        s=s,
        converged=converged,
        iterations=state.iter,
        residual_history=history,
        config=config,
        state=state,
    )


def root_pcp_objective(l, s, d, lam: float, mu: float) -> float:
    """``||L||_* + lam ||S||_1 + mu ||L + S - D||_F``."""
    l = np.asarray(l, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    return nuclear_norm(l) + lam * float(np.sum(np.abs(s))) + mu * frobenius_norm(l + s - d)


def kkt_diagnostic(l, s, d, lam: float, mu: float, certificate=None) -> KktDiagnostic:
    """Check that ``G = mu (D - L - S)/||D - L - S||_F`` certifies optimality.

    At a minimiser with nonzero residual, ``G`` lies in the subdifferential of
    ``||.||_*`` at ``L`` and of ``lam ||.||_1`` at ``S``: its spectral norm and
    its max entry over ``lam`` are at most one, and the inner-product gaps
    vanish. With zero residual no such certificate can be read off and all
    ratio and gap fields are set to ``KKT_SENTINEL``.

    ``certificate`` replaces ``G`` when given. In noiseless problems the
    optimal residual is exactly zero and the residual direction carries no
    information; :func:`dual_certificate` supplies the ADMM multiplier instead.
    """
    l = as_matrix(l, "L")
    s = as_matrix(s, "S")
    d = as_matrix(d, "D")
    resid = d - l - s
    rnorm = frobenius_norm(resid)
    if certificate is not None:
        g = as_matrix(certificate, "certificate")
    elif rnorm == 0.0:
        return KktDiagnostic(0.0, KKT_SENTINEL, KKT_SENTINEL, KKT_SENTINEL, KKT_SENTINEL)
    else:
        g = (mu / rnorm) * resid
    l_nuc = nuclear_norm(l)
    s_l1 = lam * float(np.sum(np.abs(s)))
    return KktDiagnostic(
        residual_norm=rnorm,
        spectral_ratio=spectral_norm(g),
        linf_ratio=max_abs_entry(g) / lam,
        nuclear_gap=abs(float(np.sum(g * l)) - l_nuc) / (1.0 + l_nuc),
        l1_gap=abs(float(np.sum(g * s)) - s_l1) / (1.0 + s_l1),
    )


def dual_certificate(result: DecompositionResult) -> np.ndarray:
    """``-Y3`` of the final iterate, the multiplier of ``L2 + S2 + Z = D``."""
    if result.state is None:
        raise UsageError("result carries no solver state")
    return -result.state.y3
