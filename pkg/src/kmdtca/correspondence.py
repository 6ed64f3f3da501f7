"""Matching two CP decompositions up to permutation and per-column scaling.

The two inputs are typically the DMD triplets exported by
:func:`kmdtca.dmd.dmd_to_cp` and the factors found by :func:`kmdtca.cp.cp_als`.
Each matched column is aligned by its own least-squares complex scale, and
the discrepancy of the pair of decompositions is the mean of the ``3R``
relative column errors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cp import cp_residual, kruskal_check
from .errors import ShapeError
from .tensor_core import DEFAULT_RANK_TOL, CPFactors, frobenius_norm3

EXHAUSTIVE_MAX_R = 8


@dataclass(frozen=True)
class MatchReport:
    permutation: list[int]
    per_mode_scalars: list[tuple[complex, complex, complex]]
    factor_errors: np.ndarray
    mean_error: float
    dmd_residual: float
    cp_residual: float
    kruskal_satisfied: bool

    def to_dict(self) -> dict:
        return {
            "permutation": list(self.permutation),
            "per_mode_scalars": [[[z.real, z.imag] for z in triple] for triple in self.per_mode_scalars],
            "factor_errors": self.factor_errors.tolist(),
            "mean_error": self.mean_error,
            "dmd_residual": self.dmd_residual,
            "cp_residual": self.cp_residual,
            "kruskal_satisfied": self.kruskal_satisfied,
        }


def _unit_columns(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=0)
    norms[norms == 0] = 1.0
    return m / norms


def similarity_matrix(d: CPFactors, t: CPFactors) -> np.ndarray:
    """``S[r, s]`` = product over factors of ``|<unit(d_r), unit(t_s)>|``."""
    if d.R != t.R:
        raise ShapeError(f"decompositions have different ranks: {d.R} vs {t.R}")
    if d.dims != t.dims:
        raise ShapeError(f"factor dims differ: {d.dims} vs {t.dims}")
    sim = np.ones((d.R, t.R))
    for md, mt in zip((d.A, d.B, d.C), (t.A, t.B, t.C)):
        sim *= np.abs(_unit_columns(md).conj().T @ _unit_columns(mt))
    return sim


def _exhaustive(sim: np.ndarray) -> list[int]:
    R = sim.shape[0]
    best, best_score = None, -np.inf
    for perm in itertools.permutations(range(R)):
        score = sim[np.arange(R), perm].sum()
        if score > best_score:
            best, best_score = perm, score
    return list(best)


def _hungarian(sim: np.ndarray) -> list[int]:
    rows, cols = linear_sum_assignment(sim, maximize=True)
    return [int(c) for _, c in sorted(zip(rows, cols))]


def match_modes(d: CPFactors, t: CPFactors, method: str = "auto") -> list[int]:
    """Assignment ``perm[r] = s`` pairing column ``r`` of ``d`` with column ``s`` of ``t``.

    Maximizes the summed similarity; exhaustive search for ``R <= 8``,
    Hungarian assignment otherwise (``method`` forces either).
    """
    sim = similarity_matrix(d, t)
    if method == "auto":
        method = "exhaustive" if d.R <= EXHAUSTIVE_MAX_R else "hungarian"
    if method == "exhaustive":
        return _exhaustive(sim)
    if method == "hungarian":
        return _hungarian(sim)
    raise ValueError(f"unknown matching method {method!r}")


def align_and_error(d_col, t_col) -> tuple[complex, float]:
    """Least-squares scale ``sigma`` with ``sigma * d_col ~= t_col`` and the relative error."""
    d_col = np.asarray(d_col, dtype=np.complex128).reshape(-1)
    t_col = np.asarray(t_col, dtype=np.complex128).reshape(-1)
    if d_col.shape != t_col.shape:
        raise ShapeError(f"column lengths differ: {d_col.size} vs {t_col.size}")
    t_norm = np.linalg.norm(t_col)
    if t_norm == 0.0:
        raise ValueError("reference column is zero")
    dd = np.vdot(d_col, d_col).real
    if dd == 0.0:
        return 0j, 1.0
    sigma = complex(np.vdot(d_col, t_col) / dd)
    return sigma, float(np.linalg.norm(sigma * d_col - t_col) / t_norm)


def compare_report(Y, d: CPFactors, t: CPFactors, rank_tol: float = DEFAULT_RANK_TOL) -> MatchReport:
    """Match ``d`` (DMD side) to ``t`` (CP side) and measure their discrepancy on ``Y``.

    ``factor_errors[r, k]`` is the aligned error of factor ``k`` (A, B, C) of
    DMD mode ``r`` against its matched CP mode, normalized by the CP
    column.  Residuals are relative to ``||Y||``.
    """
    perm = match_modes(d, t)
    errors = np.empty((d.R, 3))
    scalars = []
    for r, s in enumerate(perm):
        triple = []
        for k, (dc, tc) in enumerate(zip(d.columns(r), t.columns(s))):
            sigma, errors[r, k] = align_and_error(dc, tc)
            triple.append(sigma)
        scalars.append(tuple(triple))
    norm_y = frobenius_norm3(Y)
    if norm_y == 0.0:
        raise ValueError("Y is the zero tensor")
    satisfied, _ = kruskal_check(t, rank_tol)
    return MatchReport(
        permutation=perm,
        per_mode_scalars=scalars,
        factor_errors=errors,
        mean_error=float(errors.mean()),
        dmd_residual=cp_residual(Y, d) / norm_y,
        cp_residual=cp_residual(Y, t) / norm_y,
        kruskal_satisfied=bool(satisfied),
    )
