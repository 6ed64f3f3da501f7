"""Command-line driver: ``kmdtca {synth,dmd,cp,compare,bench,sweep}``.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .correspondence import compare_report
from .cp import CPConfig, cp_als, cp_residual
from .dmd import Strategy, dmd_tensor, dmd_to_cp
from .errors import FormatError, NumericalError, ShapeError
from .experiments import ExperimentConfig, bench, sweep, write_bench, write_sweep
from .synth import SynthConfig, synth_generate
from .tensor_core import frobenius_norm3

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _steps_list(text: str) -> tuple[int, ...]:
    try:
        steps = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not steps:
        raise argparse.ArgumentTypeError("sweep list is empty")
    return steps


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("synthetic data")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rank", type=int, default=2, help="number of modes R")
    g.add_argument("--dim", type=int, default=2, help="state dimension n")
    g.add_argument("--steps", type=int, default=100, help="time steps N")
    g.add_argument("--ics", type=int, default=10, help="initial conditions q")
    g.add_argument("--kmax", type=float, default=3.0, help="exclusive bound K on polynomial exponents")
    s = common.add_argument_group("solvers")
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--max-iters", type=int, default=2000)
    s.add_argument("--tol-rel-change", type=float, default=1e-14)
    s.add_argument("--tol-rank", type=float, default=1e-10)
    s.add_argument("--strategy", choices=[m.value for m in Strategy], default=Strategy.STACKED.value)
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--verbose", action="store_true")

    parser = _Parser(prog="kmdtca", description="Exact DMD and CP decomposition of snapshot tensors.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("synth", parents=[common], help="generate X, Y and the planted truth")

    p = sub.add_parser("dmd", parents=[common], help="exact DMD of a tensor pair")
    p.add_argument("--x", help="tensor JSON for X (default: synthesize)")
    p.add_argument("--y", help="tensor JSON for Y (default: synthesize)")

    p = sub.add_parser("cp", parents=[common], help="CP-ALS of Y")
    p.add_argument("--y", help="tensor JSON for Y (default: synthesize)")

    p = sub.add_parser("compare", parents=[common], help="match DMD triplets against CP factors")
    p.add_argument("--x", help="tensor JSON for X")
    p.add_argument("--y", help="tensor JSON for Y")
    p.add_argument("--dmd-factors", help="DMD factors JSON (default: compute)")
    p.add_argument("--cp-factors", help="CP factors JSON (default: compute)")

    for name, text in (("bench", "repeated seeded trials"), ("sweep", "benchmarks over step counts")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--trials", type=int, default=100 if name == "bench" else 25)
        p.add_argument("--workers", type=int, default=1)
        if name == "sweep":
            p.add_argument("--sweep", type=_steps_list, default=(25, 100, 400),
                           help="comma-separated step counts")
    return parser


def _synth_cfg(args) -> SynthConfig:
    return SynthConfig(seed=args.seed, R=args.rank, n=args.dim, N=args.steps, q=args.ics, K=args.kmax)


def _cp_cfg(args) -> CPConfig:
    return CPConfig(R=args.rank, max_iters=args.max_iters, tol_rel_change=args.tol_rel_change,
                    restarts=args.restarts, seed=args.seed)


def _load_pair(args, need_x: bool = True):
    """Tensors from ``--x``/``--y`` when given, otherwise freshly synthesized."""
    x_path = getattr(args, "x", None)
    y_path = getattr(args, "y", None)
    if y_path and (x_path or not need_x):
        X = io.tensor_io_read(x_path) if x_path else None
        return X, io.tensor_io_read(y_path)
    if x_path or y_path:
        raise UsageError("--x and --y must be given together")
    X, Y, _ = synth_generate(_synth_cfg(args))
    return X, Y


def _emit(doc: dict, out: str | None, default_name: str) -> None:
    text = json.dumps(doc, indent=2, allow_nan=False)
    if out:
        path = Path(out)
        if path.is_dir():
            path = path / default_name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    print(text)


def _complex_list(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values).reshape(-1)]


def cmd_synth(args) -> None:
    cfg = _synth_cfg(args)
    X, Y, truth = synth_generate(cfg)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    io.tensor_io_write(X, out / "X.json")
    io.tensor_io_write(Y, out / "Y.json")
    doc = {
        "config": vars(cfg),
        "Vbar": io.matrix_to_dict(truth.Vbar),
        "lambdas": _complex_list(truth.lambdas),
        "alphas": truth.alphas.tolist(),
        "betas": truth.betas.tolist(),
        "gammas": truth.gammas.tolist(),
        "initial_grid": truth.initial_grid.tolist(),
    }
    io.write_json(doc, out / "truth.json")
    print(json.dumps({"X": str(out / "X.json"), "Y": str(out / "Y.json"),
                      "truth": str(out / "truth.json"), "lambdas": doc["lambdas"]}, indent=2))


def cmd_dmd(args) -> None:
    X, Y = _load_pair(args)
    res = dmd_tensor(X, Y, args.strategy, args.tol_rank)
    m = Y.shape[1]
    if args.out:
        io.factors_io_write(res, args.out, steps=m)
    f = dmd_to_cp(res, m)
    _emit({
        "rank_used": res.rank_used,
        "strategy": Strategy(res.strategy).value,
        "eigenvalues": _complex_list(res.eigenvalues),
        "eigvec_condition": res.diagnostics.get("eigvec_condition"),
        "consistent_slices": res.diagnostics.get("consistent_slices"),
        "rel_residual": cp_residual(Y, f) / frobenius_norm3(Y),
    }, None, "")


def cmd_cp(args) -> None:
    _, Y = _load_pair(args, need_x=False)
    res = cp_als(Y, _cp_cfg(args))
    if args.out:
        io.factors_io_write(res.factors, args.out)
    _emit({
        "rel_residual": res.rel_residual,
        "iters": res.iters,
        "restart_index": res.restart_index,
        "converged": res.converged,
    }, None, "")


def cmd_compare(args) -> None:
    X, Y = _load_pair(args, need_x=args.dmd_factors is None)
    if args.dmd_factors:
        d = io.factors_io_read(args.dmd_factors)
    else:
        d = dmd_to_cp(dmd_tensor(X, Y, args.strategy, args.tol_rank), Y.shape[1])
    if args.cp_factors:
        t = io.factors_io_read(args.cp_factors)
    else:
        t = cp_als(Y, _cp_cfg(args)).factors
    _emit(compare_report(Y, d, t, args.tol_rank).to_dict(), args.out, "compare.json")


def _experiment_cfg(args) -> ExperimentConfig:
    return ExperimentConfig(
        command=args.command, seed=args.seed, R=args.rank, n=args.dim, N=args.steps, q=args.ics,
        K=args.kmax, restarts=args.restarts, max_iters=args.max_iters,
        tol_rel_change=args.tol_rel_change, tol_rank=args.tol_rank, strategy=args.strategy,
        trials=args.trials, sweep_steps=tuple(getattr(args, "sweep", (args.steps,))),
        out_path=args.out, workers=args.workers,
    )


def cmd_bench(args) -> None:
    report = bench(_experiment_cfg(args))
    summary = report.summary()
    if args.out:
        write_bench(report, args.out)
    summary.pop("config")
    print(json.dumps(summary, indent=2))


def cmd_sweep(args) -> None:
    report = sweep(_experiment_cfg(args))
    if args.out:
        write_sweep(report, args.out)
    print(json.dumps(report.rows(), indent=2))


COMMANDS = {
    "synth": cmd_synth,
    "dmd": cmd_dmd,
    "cp": cmd_cp,
    "compare": cmd_compare,
    "bench": cmd_bench,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"kmdtca: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ShapeError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"kmdtca: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"kmdtca: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"kmdtca: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
