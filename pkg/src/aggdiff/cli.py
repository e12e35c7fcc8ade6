"""Command line interface: simulate, steady, eigencurve, eigenfunctions, verify.

Every subcommand writes its data files plus a run manifest
(`<first output>.manifest.json`) holding the resolved configuration, its
hash, the tool version, the produced files, and the wall time. Outputs are
deterministic for a fixed configuration and version: floats are printed
with 17 significant digits and all randomness is seeded.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 on
numerical failure (instability, non-convergence, or a diffusivity outside
the steady-state range).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import Instability, load_config, run
from .grid import save_field_csv
from .kernels import gaussian_kernel, kernel_to_config, laplace_kernel
from .steady import (
    EpsilonOutOfRange,
    NoConvergence,
    ZeroEigenfunction,
    epsilon_curve,
    solve_for_epsilon,
)
from .verify import run_full_suite

_NUMERICAL_ERRORS = (Instability, NoConvergence, EpsilonOutOfRange, ZeroEigenfunction)


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 on usage errors (2 means numerics)."""

    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _hash_config(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_manifest(subcommand: str, config: dict, outputs: list[Path], started: float) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "config_hash": _hash_config(config),
        "tool_version": __version__,
        "outputs": [str(p) for p in outputs],
        "wall_time_s": time.perf_counter() - started,
    }
    path = Path(str(outputs[0]) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _kernel_from_args(args) -> tuple[dict, object]:
    cfg = {"type": args.kernel, "normalize": True}
    if args.kernel == "gaussian":
        cfg["sigma"] = args.sigma
        kernel = gaussian_kernel(args.sigma)
    elif args.kernel == "laplace":
        cfg["scale"] = args.scale
        kernel = laplace_kernel(args.scale)
    else:
        raise ValueError(f"unsupported kernel {args.kernel!r}")
    return cfg, kernel


def _cmd_simulate(args) -> int:
    started = time.perf_counter()
    raw = json.loads(Path(args.config).read_text())
    cfg = load_config(raw)
    trace = run(cfg)
    trace.to_csv(args.out)
    outputs = [Path(args.out)]
    if args.final:
        save_field_csv(trace.final_state, args.final)
        outputs.append(Path(args.final))
    _write_manifest("simulate", raw, outputs, started)
    if not args.quiet:
        note = " (steady state detected early)" if trace.steady_detected else ""
        print(
            f"simulated {trace.steps} steps at dt={trace.dt:.6g}{note}; "
            f"clipped mass {trace.clipped_mass:.3g}"
        )
    return 0


def _cmd_steady(args) -> int:
    started = time.perf_counter()
    kernel_cfg, kernel = _kernel_from_args(args)
    result = solve_for_epsilon(kernel, args.epsilon, args.m)
    save_field_csv(result.rho, args.out)
    config = {"kernel": kernel_cfg, "epsilon": args.epsilon, "m": args.m}
    _write_manifest("steady", config, [Path(args.out)], started)
    if not args.quiet:
        print(
            f"steady state at eps={result.epsilon:.10g}: half support "
            f"L={result.L:.8g}, peak {result.rho.values.max():.6g}, "
            f"residual {result.residual:.2e}"
        )
    return 0


def _cmd_eigencurve(args) -> int:
    started = time.perf_counter()
    kernel_cfg, kernel = _kernel_from_args(args)
    lengths = np.geomspace(args.Lmin, args.Lmax, args.points)
    points = epsilon_curve(kernel, lengths, args.m, threads=args.threads)
    lines = ["L,epsilon,lambda2"]
    lines.extend(f"{L:.17g},{eps:.17g},{lam2:.17g}" for L, eps, lam2 in points)
    Path(args.out).write_text("\n".join(lines) + "\n")
    config = {
        "kernel": kernel_cfg,
        "Lmin": args.Lmin,
        "Lmax": args.Lmax,
        "points": args.points,
        "m": args.m,
    }
    _write_manifest("eigencurve", config, [Path(args.out)], started)
    if not args.quiet:
        print(
            f"eigenvalue curve over {args.points} lengths in "
            f"[{args.Lmin:g}, {args.Lmax:g}]: eps from {points[0][1]:.3e} "
            f"to {points[-1][1]:.6g}"
        )
    return 0


def _cmd_eigenfunctions(args) -> int:
    started = time.perf_counter()
    kernel_cfg, kernel = _kernel_from_args(args)
    lengths = [float(part) for part in args.L.split(",") if part.strip()]
    if not lengths:
        raise ValueError("need at least one half-support length")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    from .steady import HalfSupportProblem, leading_eigenpair

    for L in lengths:
        result = leading_eigenpair(HalfSupportProblem(L=L, m=args.m, kernel=kernel))
        path = out_dir / f"rho_L{L:g}.csv"
        save_field_csv(result.rho, path)
        outputs.append(path)
        if not args.quiet:
            print(f"L={L:g}: eps={result.epsilon:.10g}, peak {result.rho.values.max():.6g}")
    config = {"kernel": kernel_cfg, "L": lengths, "m": args.m}
    _write_manifest("eigenfunctions", config, outputs, started)
    return 0


def _cmd_verify(args) -> int:
    started = time.perf_counter()
    if args.suite == "full":
        reports = run_full_suite()
        config = {"suite": "full", "seed": args.seed}
    else:
        reports = run_full_suite(
            eps_list=(0.5, 1.5),
            n=300,
            half_width=16.0,
            m=160,
            t_end_subcritical=80.0,
            t_end_supercritical=30.0,
            l1_tol=8e-2,
        )
        config = {"suite": "quick", "seed": args.seed}
    Path(args.out).write_text(
        json.dumps([r.to_json() for r in reports], indent=2) + "\n"
    )
    _write_manifest("verify", config, [Path(args.out)], started)
    failed = [r for r in reports if not r.passed]
    if not args.quiet:
        for r in reports:
            status = "pass" if r.passed else "FAIL"
            print(f"[{status}] {r.check_id}: {r.measured:.3g} vs {r.tolerance:.3g}")
        print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="aggdiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"aggdiff {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=42, help="seed for randomized checks")
        p.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get("AGGDIFF_THREADS", "1")),
            help="worker threads for independent solves",
        )
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("simulate", help="time-step the evolution equation")
    p.add_argument("--config", required=True, help="JSON simulation config")
    p.add_argument("--out", required=True, help="trace CSV (t,mass,com,energy,l2)")
    p.add_argument("--final", default=None, help="final state CSV (x,rho)")
    common(p)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("steady", help="construct the steady state for one diffusivity")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--kernel", choices=("gaussian", "laplace"), default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0, help="gaussian width")
    p.add_argument("--scale", type=float, default=1.0, help="laplace decay length")
    p.add_argument("--m", type=int, default=400, help="cells on the half support")
    p.add_argument("--out", required=True, help="profile CSV (x,rho)")
    common(p)
    p.set_defaults(handler=_cmd_steady)

    p = sub.add_parser("eigencurve", help="eps(L) over a log-spaced range of lengths")
    p.add_argument("--Lmin", type=float, default=0.01)
    p.add_argument("--Lmax", type=float, default=20.0)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--kernel", choices=("gaussian", "laplace"), default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--m", type=int, default=400)
    p.add_argument("--out", required=True, help="curve CSV (L,epsilon,lambda2)")
    common(p)
    p.set_defaults(handler=_cmd_eigencurve)

    p = sub.add_parser("eigenfunctions", help="steady profiles for given lengths")
    p.add_argument("--L", required=True, help="comma-separated half-support lengths")
    p.add_argument("--kernel", choices=("gaussian", "laplace"), default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--m", type=int, default=400)
    p.add_argument("--out-dir", required=True)
    common(p)
    p.set_defaults(handler=_cmd_eigenfunctions)

    p = sub.add_parser("verify", help="run the property suite and emit a JSON report")
    p.add_argument("--suite", choices=("full", "quick"), default="full")
    p.add_argument("--out", required=True, help="report JSON path")
    common(p)
    p.set_defaults(handler=_cmd_verify)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
