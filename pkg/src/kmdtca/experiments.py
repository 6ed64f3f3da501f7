"""Benchmark and step-count sweep over seeded synthetic trials.

Trial ``i`` of a benchmark uses seed ``seed + i`` for both the generator and
the CP restarts, so any subset of a benchmark can be rerun on its own.
A trial that raises is quarantined with its reason; summaries cover the
completed trials and count the failures.
"""

from __future__ import annotations

import csv
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .correspondence import compare_report
from .cp import CPConfig, cp_als
from .dmd import ConsistencyWarning, Strategy, dmd_tensor, dmd_to_cp
from .errors import KmdTcaError
from .io import write_json
from .synth import SynthConfig, synth_generate
from .tensor_core import DEFAULT_RANK_TOL

log = logging.getLogger(__name__)

DISCREPANCY_THRESHOLD = 1e-6

RECORD_FIELDS = [
    "seed",
    "mean_error",
    "dmd_residual",
    "cp_residual",
    "cp_converged",
    "kruskal",
    "wall_ms_dmd",
    "wall_ms_cp",
]
SWEEP_FIELDS = [
    "N",
    "median_mean_error",
    "discrepancy_fraction",
    "trials",
    "completed",
    "failed",
]


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "bench"
    seed: int = 0
    R: int = 2
    n: int = 2
    N: int = 100
    q: int = 10
    K: float = 3.0
    restarts: int = 10
    max_iters: int = 2000
    tol_rel_change: float = 1e-14
    tol_rank: float = DEFAULT_RANK_TOL
    strategy: str = Strategy.STACKED.value
    trials: int = 100
    sweep_steps: tuple[int, ...] = (25, 100, 400)
    out_path: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.sweep_steps:
            raise ValueError("sweep_steps must not be empty")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        Strategy(self.strategy)
        self.synth_config(self.seed)
        self.cp_config(self.seed)

    def synth_config(self, seed: int, N: int | None = None) -> SynthConfig:
        return SynthConfig(seed=seed, R=self.R, n=self.n, N=self.N if N is None else N,
                           q=self.q, K=self.K)

    def cp_config(self, seed: int) -> CPConfig:
        return CPConfig(R=self.R, max_iters=self.max_iters, tol_rel_change=self.tol_rel_change,
                        restarts=self.restarts, seed=seed)


@dataclass(frozen=True)
class RunRecord:
    seed: int
    mean_error: float
    dmd_residual: float
    cp_residual: float
    cp_converged: bool
    kruskal_satisfied: bool
    wall_ms_dmd: float
    wall_ms_cp: float

    def csv_row(self) -> list:
        return [
            self.seed,
            repr(self.mean_error),
            repr(self.dmd_residual),
            repr(self.cp_residual),
            int(self.cp_converged),
            int(self.kruskal_satisfied),
            f"{self.wall_ms_dmd:.3f}",
            f"{self.wall_ms_cp:.3f}",
        ]


@dataclass(frozen=True)
class TrialFailure:
    seed: int
    reason: str


@dataclass
class BenchReport:
    config: ExperimentConfig
    N: int
    records: list[RunRecord] = field(default_factory=list)
    failures: list[TrialFailure] = field(default_factory=list)

    def mean_errors(self) -> np.ndarray:
        return np.array([r.mean_error for r in self.records], dtype=float)

    def summary(self) -> dict:
        errs = self.mean_errors()
        have = errs.size > 0
        return {
            "N": self.N,
            "trials": len(self.records) + len(self.failures),
            "completed": len(self.records),
            "failed": len(self.failures),
            "median_mean_error": float(np.median(errs)) if have else None,
            "mean_mean_error": float(np.mean(errs)) if have else None,
            "min_mean_error": float(np.min(errs)) if have else None,
            "max_mean_error": float(np.max(errs)) if have else None,
            "discrepancy_threshold": DISCREPANCY_THRESHOLD,
            "discrepant": int(np.count_nonzero(errs > DISCREPANCY_THRESHOLD)),
            "cp_nonconverged": sum(not r.cp_converged for r in self.records),
            "kruskal_satisfied": sum(r.kruskal_satisfied for r in self.records),
            "max_dmd_residual": max((r.dmd_residual for r in self.records), default=None),
            "failures": [asdict(f) for f in self.failures],
            "config": _config_dict(self.config, self.N),
        }


def _config_dict(cfg: ExperimentConfig, N: int) -> dict:
    out = asdict(cfg)
    out["N"] = N
    out["sweep_steps"] = list(cfg.sweep_steps)
    return out


def run_trial(cfg: ExperimentConfig, seed: int, N: int) -> RunRecord:
    X, Y, _ = synth_generate(cfg.synth_config(seed, N))
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConsistencyWarning)
        res = dmd_tensor(X, Y, cfg.strategy, cfg.tol_rank)
    if res.rank_used != cfg.R:
        raise KmdTcaError(f"DMD retained {res.rank_used} modes, expected {cfg.R}")
    d = dmd_to_cp(res, N)
    t1 = time.perf_counter()
    cp = cp_als(Y, cfg.cp_config(seed))
    t2 = time.perf_counter()
    rep = compare_report(Y, d, cp.factors, cfg.tol_rank)
    return RunRecord(
        seed=seed,
        mean_error=rep.mean_error,
        dmd_residual=rep.dmd_residual,
        cp_residual=rep.cp_residual,
        cp_converged=cp.converged,
        kruskal_satisfied=rep.kruskal_satisfied,
        wall_ms_dmd=1e3 * (t1 - t0),
        wall_ms_cp=1e3 * (t2 - t1),
    )


def _guarded_trial(args):
    cfg, seed, N = args
    try:
        return run_trial(cfg, seed, N)
    except (KmdTcaError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return TrialFailure(seed, f"{type(exc).__name__}: {exc}")


def bench(cfg: ExperimentConfig, N: int | None = None) -> BenchReport:
    """Run ``cfg.trials`` seeded trials at ``N`` time steps (default ``cfg.N``)."""
    N = cfg.N if N is None else N
    jobs = [(cfg, cfg.seed + i, N) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_guarded_trial, jobs))
    else:
        outcomes = [_guarded_trial(job) for job in jobs]
    report = BenchReport(cfg, N)
    for outcome in outcomes:
        if isinstance(outcome, TrialFailure):
            log.warning("trial seed=%d failed: %s", outcome.seed, outcome.reason)
            report.failures.append(outcome)
        else:
            report.records.append(outcome)
    return report


@dataclass
class SweepReport:
    config: ExperimentConfig
    benches: list[BenchReport]

    def rows(self) -> list[dict]:
        rows = []
        for b in self.benches:
            errs = b.mean_errors()
            rows.append({
                "N": b.N,
                "median_mean_error": float(np.median(errs)) if errs.size else None,
                "discrepancy_fraction": float(np.mean(errs > DISCREPANCY_THRESHOLD)) if errs.size else None,
                "trials": len(b.records) + len(b.failures),
                "completed": len(b.records),
                "failed": len(b.failures),
            })
        return rows

    def summary(self) -> dict:
        return {
            "rows": self.rows(),
            "discrepancy_threshold": DISCREPANCY_THRESHOLD,
            "benches": [b.summary() for b in self.benches],
        }


def sweep(cfg: ExperimentConfig) -> SweepReport:
    """One benchmark per step count in ``cfg.sweep_steps``, all from ``cfg.seed``."""
    return SweepReport(cfg, [bench(cfg, N) for N in cfg.sweep_steps])


def write_records_csv(records: list[RunRecord], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow(r.csv_row())


def write_bench(report: BenchReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    paths = {"records": out / "records.csv", "summary": out / "summary.json"}
    write_records_csv(report.records, paths["records"])
    write_json(report.summary(), paths["summary"])
    return paths


def write_sweep(report: SweepReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"sweep": out / "sweep.csv", "summary": out / "sweep.json"}
    with open(paths["sweep"], "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS)
        w.writeheader()
        for row in report.rows():
            w.writerow({k: ("" if v is None else v) for k, v in row.items()})
    write_json(report.summary(), paths["summary"])
    for b in report.benches:
        paths[f"records_N{b.N}"] = out / f"records_N{b.N}.csv"
        write_records_csv(b.records, paths[f"records_N{b.N}"])
    return paths
