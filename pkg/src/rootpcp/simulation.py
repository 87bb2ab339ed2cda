"""Synthetic low-rank + sparse + noise instances and recovery metrics.

Random draws come from ``numpy.random.Generator`` with the PCG64 bit
generator seeded by ``SimSpec.seed``, in a fixed order: U, V, support mask,
signs, noise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import UsageError
from .linalg import as_matrix, frobenius_norm


class NoiseKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    POISSON = "poisson"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class NoiseModel:
    """Entrywise noise with target second moment ``sigma**2``.

    Poisson noise is ``l * Poisson(lambda_p)`` with
    ``l = sigma / sqrt(lambda_p + lambda_p**2)``; it is not mean-centred.
    Uniform noise is supported on ``(-sqrt(3) sigma, sqrt(3) sigma)``.
    """

    kind: NoiseKind = NoiseKind.GAUSSIAN
    sigma: float = 0.0
    lambda_p: Optional[float] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", NoiseKind(self.kind))
        except ValueError:
            raise UsageError(f"unknown noise kind {self.kind!r}") from None
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise UsageError(f"sigma must be nonnegative, got {self.sigma}")
        if self.kind is NoiseKind.POISSON:
            if self.lambda_p is None or not self.lambda_p > 0:
                raise UsageError("Poisson noise needs lambda_p > 0")

    @property
    def poisson_scale(self) -> float:
        lp = self.lambda_p
        return self.sigma / math.sqrt(lp + lp * lp)

    @property
    def label(self) -> str:
        if self.kind is NoiseKind.POISSON:
            return f"poisson({self.lambda_p:g})"
        return self.kind.value

    def with_sigma(self, sigma: float) -> "NoiseModel":
        return NoiseModel(self.kind, sigma, self.lambda_p)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind is NoiseKind.GAUSSIAN:
            z = rng.normal(0.0, 1.0, size=shape) * self.sigma
        elif self.kind is NoiseKind.POISSON:
            z = self.poisson_scale * rng.poisson(self.lambda_p, size=shape).astype(np.float64)
        else:
            half = math.sqrt(3.0) * self.sigma
            z = rng.uniform(-1.0, 1.0, size=shape) * half
        if self.sigma == 0.0:
            # keeps the draw count fixed and avoids -0.0 entries
            z = np.zeros(shape)
        return z


@dataclass(frozen=True)
class SimSpec:
    n1: int
    n2: int
    rank: int
    rho_s: float = 0.1
    s_magnitude: float = 0.05
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise UsageError(f"dimensions must be positive, got {self.n1}x{self.n2}")
        if self.rank < 1 or self.rank > min(self.n1, self.n2):
            raise UsageError(f"rank must be in [1, {min(self.n1, self.n2)}], got {self.rank}")
        if not 0.0 <= self.rho_s <= 1.0:
            raise UsageError(f"rho_s must lie in [0, 1], got {self.rho_s}")
        if not self.s_magnitude > 0:
            raise UsageError(f"s_magnitude must be positive, got {self.s_magnitude}")

    def with_seed(self, seed: int) -> "SimSpec":
        return SimSpec(self.n1, self.n2, self.rank, self.rho_s, self.s_magnitude, self.noise, seed)

    def with_noise(self, noise: NoiseModel) -> "SimSpec":
        return SimSpec(self.n1, self.n2, self.rank, self.rho_s, self.s_magnitude, noise, self.seed)


@dataclass(frozen=True)
class SimInstance:
    l0: np.ndarray
    s0: np.ndarray
    z0: np.ndarray
    d: np.ndarray
    spec: SimSpec


def generate_instance(spec: SimSpec) -> SimInstance:
    """Draw ``D = L0 + S0 + Z0``.

    ``L0 = U V^T`` with U, V entrywise N(0, 1/n1) and N(0, 1/n2); each entry
    of ``S0`` is in the support independently with probability ``rho_s`` and
    takes ``+-s_magnitude`` with equal probability.
    """
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    n1, n2, r = spec.n1, spec.n2, spec.rank
    u = rng.normal(0.0, 1.0 / math.sqrt(n1), size=(n1, r))
    v = rng.normal(0.0, 1.0 / math.sqrt(n2), size=(n2, r))
    l0 = u @ v.T
    support = rng.random((n1, n2)) < spec.rho_s
    signs = np.where(rng.random((n1, n2)) < 0.5, 1.0, -1.0)
    s0 = np.where(support, signs * spec.s_magnitude, 0.0)
    z0 = spec.noise.sample(rng, (n1, n2))
    d = l0 + s0 + z0
    return SimInstance(l0=l0, s0=s0, z0=z0, d=d, spec=spec)


def rms_error(estimates: Sequence, truth) -> float:
    """``sqrt(mean_k ||estimate_k - truth||_F^2)``.

    ``truth`` may be a single matrix or a sequence with one matrix per estimate.
    """
    if len(estimates) == 0:
        raise UsageError("rms_error needs at least one estimate")
    if isinstance(truth, (list, tuple)):
        truths = [as_matrix(t, "truth") for t in truth]
        if len(truths) != len(estimates):
            raise UsageError("truth list length does not match estimates")
    else:
        truths = [as_matrix(truth, "truth")] * len(estimates)
    total = 0.0
    for est, t in zip(estimates, truths):
        est = as_matrix(est, "estimate")
        if est.shape != t.shape:
            raise UsageError(f"shape mismatch: estimate {est.shape} vs truth {t.shape}")
        total += frobenius_norm(est - t) ** 2
    return math.sqrt(total / len(estimates))


def relative_error(estimate, truth) -> float:
    truth = as_matrix(truth, "truth")
    estimate = as_matrix(estimate, "estimate")
    if estimate.shape != truth.shape:
        raise UsageError(f"shape mismatch: estimate {estimate.shape} vs truth {truth.shape}")
    denom = frobenius_norm(truth)
    if denom == 0.0:
        raise UsageError("relative error is undefined for a zero truth matrix")
    return frobenius_norm(estimate - truth) / denom
