"""Deterministic simulation sweeps over noise level, dimension, mu and noise law.

Trial ``k`` of a row uses seed ``seed_base + k``. Trials may run on a thread
pool (size from ``ROOTPCP_THREADS``, default 1); results are always assembled
in trial order so outputs do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .exceptions import UsageError
from .linalg import stacked_frobenius
from .simulation import NoiseKind, NoiseModel, SimSpec, generate_instance, rms_error
from .solver import (
    Formulation,
    SolverConfig,
    default_lambda,
    default_mu_root,
    default_mu_stable,
    solve,
)

logger = logging.getLogger(__name__)

SWEEP_HEADER = [
    "parameter",
    "value",
    "formulation",
    "noise",
    "rms_l",
    "rms_s",
    "mean_iterations",
    "mean_wall_time_seconds",
    "trials",
    "seed_base",
]
MU_SWEEP_HEADER = ["c", "mu", "mean_joint_error", "eta_rel"]
TIMING_COLUMNS = ("mean_wall_time_seconds",)


@dataclass(frozen=True)
class SweepResultRow:
    parameter: str
    value: float
    formulation: Formulation
    noise: str
    rms_l: float
    rms_s: float
    mean_iterations: float
    mean_wall_time_seconds: float
    trials: int
    seed_base: int


@dataclass(frozen=True)
class MuSweepCell:
    c: float
    mu: float
    mean_joint_error: float
    eta_rel: float


@dataclass(frozen=True)
class _Trial:
    l_err: float
    s_err: float
    iterations: int
    seconds: float


def _threads() -> int:
    raw = os.environ.get("ROOTPCP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"ROOTPCP_THREADS must be an integer, got {raw!r}") from None


def _map_trials(fn, items: Sequence) -> list:
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def config_for(spec: SimSpec, formulation: Formulation, **solver_kwargs) -> SolverConfig:
    """Default parameters for a simulated instance (sigma known for stable)."""
    formulation = Formulation(formulation)
    lam = default_lambda(spec.n1)
    if formulation is Formulation.ROOT_PCP:
        mu = default_mu_root(spec.n2)
    else:
        mu = default_mu_stable(spec.noise.sigma, spec.n1, spec.n2)
    return SolverConfig(lam=lam, mu=mu, formulation=formulation, **solver_kwargs)


def _run_trial(spec: SimSpec, config: SolverConfig) -> _Trial:
    inst = generate_instance(spec)
    t0 = time.perf_counter()
    res = solve(inst.d, config)
    seconds = time.perf_counter() - t0
    return _Trial(
        l_err=float(np.linalg.norm(res.l - inst.l0)),
        s_err=float(np.linalg.norm(res.s - inst.s0)),
        iterations=res.iterations,
        seconds=seconds,
    )


def _row(
    parameter: str,
    value: float,
    spec: SimSpec,
    formulation: Formulation,
    trials: int,
    seed_base: int,
    solver_kwargs: dict,
) -> SweepResultRow:
    config = config_for(spec, formulation, **solver_kwargs)
    specs = [spec.with_seed(seed_base + k) for k in range(trials)]

    def run(s):
        try:
            return _run_trial(s, config)
        except Exception as exc:
            raise RuntimeError(
                f"trial seed={s.seed} failed ({parameter}={value}, {formulation.value})"
            ) from exc

    results = _map_trials(run, specs)
    return SweepResultRow(
        parameter=parameter,
        value=float(value),
        formulation=formulation,
        noise=spec.noise.label,
        rms_l=math.sqrt(sum(r.l_err**2 for r in results) / trials),
        rms_s=math.sqrt(sum(r.s_err**2 for r in results) / trials),
        mean_iterations=sum(r.iterations for r in results) / trials,
        mean_wall_time_seconds=sum(r.seconds for r in results) / trials,
        trials=trials,
        seed_base=seed_base,
    )


def _check_trials(trials: int) -> None:
    if int(trials) != trials or trials < 1:
        raise UsageError(f"trials must be a positive integer, got {trials!r}")


def sweep_sigma(
    base_spec: SimSpec,
    sigmas: Sequence[float],
    trials: int,
    formulations: Iterable = (Formulation.ROOT_PCP, Formulation.STABLE_PCP_UNCONSTRAINED),
    seed_base: int = 0,
    **solver_kwargs,
) -> List[SweepResultRow]:
    """RMS recovery error for each noise level and formulation.

    Stable rows at ``sigma = 0`` are skipped: the default stable weight is
    infinite there.
    """
    if len(sigmas) == 0:
        raise UsageError("sigmas must be nonempty")
    _check_trials(trials)
    formulations = [Formulation(f) for f in formulations]
    rows = []
    for sigma in sigmas:
        spec = base_spec.with_noise(base_spec.noise.with_sigma(float(sigma)))
        for form in formulations:
            if form is Formulation.STABLE_PCP_UNCONSTRAINED and sigma == 0:
                logger.info("skipping stable row at sigma=0 (default mu is infinite)")
                continue
            rows.append(_row("sigma", sigma, spec, form, trials, seed_base, solver_kwargs))
    return rows


def sweep_n(
    ns: Sequence[int],
    rank_fraction: float,
    sigma: float,
    trials: int,
    formulations: Iterable = (Formulation.ROOT_PCP,),
    rho_s: float = 0.1,
    s_magnitude: float = 0.05,
    noise: Optional[NoiseModel] = None,
    seed_base: int = 0,
    **solver_kwargs,
) -> List[SweepResultRow]:
    """RMS recovery error on square ``n x n`` instances with rank ``round(rank_fraction * n)``."""
    if len(ns) == 0:
        raise UsageError("ns must be nonempty")
    _check_trials(trials)
    noise = (noise or NoiseModel()).with_sigma(float(sigma))
    formulations = [Formulation(f) for f in formulations]
    rows = []
    for n in ns:
        rank = max(1, int(round(rank_fraction * n)))
        spec = SimSpec(n, n, rank, rho_s=rho_s, s_magnitude=s_magnitude, noise=noise)
        for form in formulations:
            if form is Formulation.STABLE_PCP_UNCONSTRAINED and sigma == 0:
                logger.info("skipping stable row at sigma=0 (default mu is infinite)")
                continue
            rows.append(_row("n", n, spec, form, trials, seed_base, solver_kwargs))
    return rows


def sweep_mu(
    spec: SimSpec,
    coefficients: Sequence[float],
    trials: int,
    seed_base: int = 0,
    **solver_kwargs,
) -> List[MuSweepCell]:
    """Root PCP with ``mu = c * sqrt(n2)`` for each coefficient ``c``.

    The mean joint error ``||(L - L0, S - S0)||_F`` over trials is divided by
    its minimum over the grid, so the best coefficient has ``eta_rel = 1``.
    The same ``trials`` instances are reused for every coefficient.
    """
    if len(coefficients) == 0:
        raise UsageError("coefficients must be nonempty")
    if any(not c > 0 for c in coefficients):
        raise UsageError("coefficients must be positive")
    _check_trials(trials)
    instances = [generate_instance(spec.with_seed(seed_base + k)) for k in range(trials)]
    lam = default_lambda(spec.n1)
    mu0 = math.sqrt(spec.n2)

    def joint_error(args):
        mu, inst = args
        res = solve(inst.d, SolverConfig(lam=lam, mu=mu, **solver_kwargs))
        return stacked_frobenius([res.l - inst.l0, res.s - inst.s0])

    means = []
    for c in coefficients:
        errs = _map_trials(joint_error, [(c * mu0, inst) for inst in instances])
        means.append(sum(errs) / trials)
    best = min(means)
    return [
        MuSweepCell(c=float(c), mu=float(c * mu0), mean_joint_error=m, eta_rel=m / best)
        for c, m in zip(coefficients, means)
    ]


def noise_model_sweep(
    base_spec: SimSpec,
    models: Sequence[NoiseModel],
    sigmas: Sequence[float],
    trials: int,
    formulations: Iterable = (Formulation.ROOT_PCP, Formulation.STABLE_PCP_UNCONSTRAINED),
    seed_base: int = 0,
    **solver_kwargs,
) -> List[SweepResultRow]:
    """:func:`sweep_sigma` repeated for each noise distribution."""
    formulations = list(formulations)
    rows = []
    for model in models:
        if not isinstance(model, NoiseModel):
            raise UsageError(f"expected a NoiseModel, got {model!r}")
        spec = base_spec.with_noise(model)
        rows.extend(sweep_sigma(spec, sigmas, trials, formulations, seed_base, **solver_kwargs))
    return rows


def parse_noise_model(text: str) -> NoiseModel:
    """Parse ``gaussian``, ``uniform`` or ``poisson:<lambda_p>``."""
    kind, _, arg = text.strip().lower().partition(":")
    if kind == "poisson":
        try:
            lp = float(arg)
        except ValueError:
            raise UsageError(f"poisson noise needs a rate, e.g. poisson:3 (got {text!r})") from None
        return NoiseModel(NoiseKind.POISSON, 0.0, lp)
    if kind in ("gaussian", "uniform") and not arg:
        return NoiseModel(NoiseKind(kind), 0.0)
    raise UsageError(f"unknown noise model {text!r}")


def _fmt(x) -> str:
    if isinstance(x, Formulation):
        return x.value
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def rows_to_csv(rows: Sequence, include_timing: bool = True) -> str:
    """Render sweep rows or mu-sweep cells as CSV text (LF line endings)."""
    if rows and isinstance(rows[0], MuSweepCell):
        header = list(MU_SWEEP_HEADER)
    else:
        header = list(SWEEP_HEADER)
    if not include_timing:
        header = [h for h in header if h not in TIMING_COLUMNS]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(getattr(row, h)) for h in header])
    return buf.getvalue()
