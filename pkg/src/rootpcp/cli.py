"""Command-line interface: ``rootpcp <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 no convergence
within ``--max-iters`` when ``--strict`` is given.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import io as rio
from .exceptions import NumericalError, UsageError
from .experiments import (
    noise_model_sweep,
    parse_noise_model,
    rows_to_csv,
    sweep_mu,
    sweep_n,
    sweep_sigma,
)
from .simulation import NoiseModel, SimSpec, generate_instance
from .solver import Formulation, SolverConfig, kkt_diagnostic, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_NOT_CONVERGED = 3

logger = logging.getLogger("rootpcp")

SOLVER_DEFAULTS = {
    "formulation": "root",
    "eps_abs": 1e-6,
    "eps_rel": 1e-6,
    "max_iters": 5000,
    "rho_init": 0.1,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _formulations(text: str) -> List[Formulation]:
    try:
        return [Formulation(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"formulations must be root and/or stable, got {text!r}")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps-abs", type=float, default=None)
    p.add_argument("--eps-rel", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--rho-init", type=float, default=None)


def _solver_kwargs(args) -> dict:
    out = {}
    for key in ("eps_abs", "eps_rel", "max_iters", "rho_init"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _add_instance_flags(p: argparse.ArgumentParser, n_default: int, rank_default: int) -> None:
    p.add_argument("--n1", type=int, default=n_default)
    p.add_argument("--n2", type=int, default=None, help="defaults to n1")
    p.add_argument("--rank", type=int, default=rank_default)
    p.add_argument("--rho-s", type=float, default=0.1)
    p.add_argument("--s-magnitude", type=float, default=0.05)
    p.add_argument("--noise", default="gaussian", help="gaussian, uniform or poisson:<rate>")


def _spec_from(args, sigma: float, seed: int = 0) -> SimSpec:
    noise = parse_noise_model(args.noise).with_sigma(sigma)
    n2 = args.n2 if args.n2 is not None else args.n1
    return SimSpec(args.n1, n2, args.rank, args.rho_s, args.s_magnitude, noise, seed)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rootpcp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("decompose", help="split a matrix or frame stack into L + S + Z")
    p.add_argument("input", help="CSV matrix file, or a directory of PGM frames")
    p.add_argument("-o", "--output-dir", default="rootpcp_out")
    p.add_argument("--config", help="key=value file; flags on the command line take precedence")
    p.add_argument("--formulation", choices=["root", "stable"], default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None, help="noise level for the stable default mu")
    p.add_argument("--strict", action="store_true", help="exit 3 if not converged")
    _add_solver_flags(p)

    p = sub.add_parser("simulate", help="write a synthetic instance as CSV files")
    _add_instance_flags(p, 100, 5)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output-dir", default="rootpcp_sim")

    p = sub.add_parser("sweep-sigma", help="RMS error against noise level")
    _add_instance_flags(p, 100, 5)
    p.add_argument("--sigmas", type=_float_list, default=[0.0, 0.005, 0.01])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--formulations", type=_formulations, default="root,stable")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--paper-scale", action="store_true",
                   help="n=200, r=10, sigma in 0..0.015 step 0.001, 20 trials")
    p.add_argument("--out", required=True, help="CSV output path ('-' for stdout)")
    _add_solver_flags(p)

    p = sub.add_parser("sweep-n", help="RMS error against square dimension n")
    p.add_argument("--ns", type=_int_list, default=[50, 100])
    p.add_argument("--rank-fraction", type=float, default=0.1)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--rho-s", type=float, default=0.1)
    p.add_argument("--s-magnitude", type=float, default=0.05)
    p.add_argument("--noise", default="gaussian")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--formulations", type=_formulations, default="root")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--paper-scale", action="store_true", help="n in 200..1000 step 100, 20 trials")
    p.add_argument("--out", required=True)
    _add_solver_flags(p)

    p = sub.add_parser("sweep-mu", help="relative error of mu = c*sqrt(n2) over a c grid")
    _add_instance_flags(p, 100, 10)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--coefficients", type=_float_list, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_solver_flags(p)

    p = sub.add_parser("sweep-noise", help="sigma sweep repeated per noise distribution")
    _add_instance_flags(p, 100, 5)
    p.add_argument("--models", default="gaussian,poisson:1,poisson:3,poisson:5,uniform")
    p.add_argument("--sigmas", type=_float_list, default=[0.0, 0.005, 0.01])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--formulations", type=_formulations, default="root,stable")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_solver_flags(p)

    p = sub.add_parser("check", help="KKT diagnostic for a candidate (L, S) against D")
    p.add_argument("--L", dest="l_path", required=True)
    p.add_argument("--S", dest="s_path", required=True)
    p.add_argument("--D", dest="d_path", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    return parser


def _load_input(path: Path):
    if path.is_dir():
        stack = rio.load_frames(path)
        return stack.matrix, stack
    return rio.load_csv(path), None


_CONFIG_TYPES = {
    "formulation": str,
    "lam": float,
    "lambda": float,
    "mu": float,
    "sigma": float,
    "eps_abs": float,
    "eps_rel": float,
    "max_iters": int,
    "rho_init": float,
}


def _merge_config(args) -> dict:
    """Built-in defaults < config file < command-line flags."""
    merged = dict(SOLVER_DEFAULTS)
    merged.update(lam=None, mu=None, sigma=None)
    if args.config:
        for key, raw in rio.read_key_values(args.config).items():
            norm = key.replace("-", "_")
            if norm not in _CONFIG_TYPES:
                raise UsageError(f"{args.config}: unknown key {key!r}")
            try:
                value = _CONFIG_TYPES[norm](raw)
            except ValueError:
                raise UsageError(f"{args.config}: bad value for {key}: {raw!r}") from None
            merged["lam" if norm == "lambda" else norm] = value
    for key in ("formulation", "lam", "mu", "sigma", "eps_abs", "eps_rel", "max_iters", "rho_init"):
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    return merged


def cmd_decompose(args) -> int:
    path = Path(args.input)
    d, stack = _load_input(path)
    opts = _merge_config(args)
    config = SolverConfig.with_defaults(
        d.shape,
        formulation=opts["formulation"],
        lam=opts["lam"],
        mu=opts["mu"],
        sigma=opts["sigma"],
        eps_abs=opts["eps_abs"],
        eps_rel=opts["eps_rel"],
        max_iters=opts["max_iters"],
        rho_init=opts["rho_init"],
    )
    t0 = time.perf_counter()
    result = solve(d, config)
    elapsed = time.perf_counter() - t0
    z = d - result.l - result.s

    out = Path(args.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc}") from exc
    if stack is None:
        rio.save_csv(result.l, out / "L.csv")
        rio.save_csv(result.s, out / "S.csv")
        rio.save_csv(z, out / "Z.csv")
    else:
        rio.save_frames(stack.with_matrix(result.l), out / "L", clamp=(0.0, 255.0))
        rio.save_frames(stack.with_matrix(result.s), out / "S", clamp=rio.symmetric_range(result.s))
        rio.save_frames(stack.with_matrix(z), out / "Z", clamp=rio.symmetric_range(z))

    r_primal, r_dual, rho_final = result.residual_history[-1]
    kkt = kkt_diagnostic(result.l, result.s, d, config.lam, config.mu)
    summary = {
        "input": str(path),
        "n1": d.shape[0],
        "n2": d.shape[1],
        "formulation": config.formulation.value,
        "lambda": config.lam,
        "mu": config.mu,
        "rho_init": config.rho_init,
        "eps_abs": config.eps_abs,
        "eps_rel": config.eps_rel,
        "max_iters": config.max_iters,
        "iterations": result.iterations,
        "converged": result.converged,
        "r_primal": r_primal,
        "r_dual": r_dual,
        "rho_final": rho_final,
        "kkt_residual_norm": kkt.residual_norm,
        "kkt_spectral_ratio": kkt.spectral_ratio,
        "kkt_linf_ratio": kkt.linf_ratio,
        "kkt_nuclear_gap": kkt.nuclear_gap,
        "kkt_l1_gap": kkt.l1_gap,
        "wall_time_seconds": elapsed,
    }
    rio.write_key_values(summary, out / "summary.txt")
    sys.stdout.write(rio.format_key_values(summary))
    if args.strict and not result.converged:
        logger.error("not converged after %d iterations", result.iterations)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_simulate(args) -> int:
    inst = generate_instance(_spec_from(args, args.sigma, args.seed))
    out = Path(args.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc}") from exc
    for name, m in (("D", inst.d), ("L0", inst.l0), ("S0", inst.s0), ("Z0", inst.z0)):
        rio.save_csv(m, out / f"{name}.csv")
    spec = inst.spec
    rio.write_key_values(
        {
            "n1": spec.n1,
            "n2": spec.n2,
            "rank": spec.rank,
            "rho_s": spec.rho_s,
            "s_magnitude": spec.s_magnitude,
            "noise": spec.noise.label,
            "sigma": spec.noise.sigma,
            "seed": spec.seed,
        },
        out / "spec.txt",
    )
    return EXIT_OK


def _emit_csv(text: str, dest: str) -> None:
    if dest == "-":
        sys.stdout.write(text)
    else:
        rio._write_text(dest, text)


def cmd_sweep_sigma(args) -> int:
    if args.paper_scale:
        args.n1, args.n2, args.rank, args.trials = 200, None, 10, 20
        args.sigmas = [k / 1000 for k in range(16)]
    rows = sweep_sigma(
        _spec_from(args, 0.0),
        args.sigmas,
        args.trials,
        args.formulations,
        seed_base=args.seed_base,
        **_solver_kwargs(args),
    )
    _emit_csv(rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_sweep_n(args) -> int:
    if args.paper_scale:
        args.ns = list(range(200, 1001, 100))
        args.trials = 20
    forms = args.formulations
    rows = sweep_n(
        args.ns,
        args.rank_fraction,
        args.sigma,
        args.trials,
        forms,
        rho_s=args.rho_s,
        s_magnitude=args.s_magnitude,
        noise=parse_noise_model(args.noise),
        seed_base=args.seed_base,
        **_solver_kwargs(args),
    )
    _emit_csv(rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_sweep_mu(args) -> int:
    cells = sweep_mu(
        _spec_from(args, args.sigma),
        args.coefficients,
        args.trials,
        seed_base=args.seed_base,
        **_solver_kwargs(args),
    )
    _emit_csv(rows_to_csv(cells), args.out)
    return EXIT_OK


def cmd_sweep_noise(args) -> int:
    models = [parse_noise_model(m) for m in args.models.split(",") if m.strip()]
    forms = args.formulations
    rows = noise_model_sweep(
        _spec_from(args, 0.0),
        models,
        args.sigmas,
        args.trials,
        forms,
        seed_base=args.seed_base,
        **_solver_kwargs(args),
    )
    _emit_csv(rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    l = rio.load_csv(args.l_path)
    s = rio.load_csv(args.s_path)
    d = rio.load_csv(args.d_path)
    if not (l.shape == s.shape == d.shape):
        raise UsageError(f"shape mismatch: L {l.shape}, S {s.shape}, D {d.shape}")
    config = SolverConfig.with_defaults(d.shape, lam=args.lam, mu=args.mu)
    kkt = kkt_diagnostic(l, s, d, config.lam, config.mu)
    sys.stdout.write(
        rio.format_key_values(
            {
                "lambda": config.lam,
                "mu": config.mu,
                "residual_norm": kkt.residual_norm,
                "spectral_ratio": kkt.spectral_ratio,
                "linf_ratio": kkt.linf_ratio,
                "nuclear_gap": kkt.nuclear_gap,
                "l1_gap": kkt.l1_gap,
                "boundary_case": kkt.boundary_case,
            }
        )
    )
    return EXIT_OK


COMMANDS = {
    "decompose": cmd_decompose,
    "simulate": cmd_simulate,
    "sweep-sigma": cmd_sweep_sigma,
    "sweep-n": cmd_sweep_n,
    "sweep-mu": cmd_sweep_mu,
    "sweep-noise": cmd_sweep_noise,
    "check": cmd_check,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
