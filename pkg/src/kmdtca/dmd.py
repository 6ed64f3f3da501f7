"""Exact DMD on snapshot pairs and on third-order snapshot tensors.

For a pair ``(X, Y)`` with ``Y ~= A X`` the operator ``A = Y X^+`` is never
formed: with the reduced SVD ``X = Q S V^H``, the projected operator
``A~ = Q^H Y V S^-1`` is diagonalized, ``A~ w_r = lambda_r w_r``, and the
exact modes are ``v_r = Y V S^-1 w_r / lambda_r``.

Tensor data has shape ``(n, m, q)``: state, time, initial condition.  The
resulting triplets are exported as CP factors ``(modes, Vandermonde time
factors, amplitudes)`` so that ``Y = sum_r v_r (x) s_r (x) phi_r``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import NumericalError, ShapeError
from .tensor_core import (
    DEFAULT_RANK_TOL,
    CPFactors,
    as_matrix,
    as_tensor3,
    eig,
    pinv,
    reduced_svd,
)

log = logging.getLogger(__name__)

ZERO_EIGENVALUE = 1e-12
DEFAULT_CONSISTENCY_TOL = 1e-10


class Strategy(str, Enum):
    STACKED = "stacked"
    PER_SLICE_MEAN = "per_slice_mean"


class ConsistencyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SnapshotPair:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        Y = as_matrix(self.Y, "Y")
        if X.shape != Y.shape:
            raise ShapeError(f"X and Y shapes differ: {X.shape} vs {Y.shape}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def from_trajectory(cls, Z) -> "SnapshotPair":
        """Split an ``n x (m+1)`` trajectory into ``X = Z[:, :-1]``, ``Y = Z[:, 1:]``."""
        Z = as_matrix(Z, "trajectory")
        if Z.shape[1] < 2:
            raise ShapeError("a trajectory needs at least two snapshots")
        return cls(Z[:, :-1], Z[:, 1:])


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    worst_violation: float
    null_dim: int


@dataclass
class DMDResult:
    modes: np.ndarray
    eigenvalues: np.ndarray
    amplitudes: np.ndarray | None
    rank_used: int
    strategy: Strategy
    diagnostics: dict = field(default_factory=dict)

    @property
    def R(self) -> int:
        return self.eigenvalues.size


def linear_consistency_check(p: SnapshotPair, tol: float = DEFAULT_CONSISTENCY_TOL,
                             tol_rank: float = DEFAULT_RANK_TOL) -> ConsistencyReport:
    """Check that every null vector of ``X`` is annihilated by ``Y``.

    The null space of ``X`` is spanned by the right singular vectors beyond
    its numerical rank; the reported violation is ``max ||Y c|| / ||Y||``
    over that orthonormal basis.
    """
    X, Y = p.X, p.Y
    rank = reduced_svd(X, tol_rank).sigma.size
    m = X.shape[1]
    null_dim = m - rank
    if null_dim == 0:
        return ConsistencyReport(True, 0.0, 0)
    _, _, vh = np.linalg.svd(X, full_matrices=True)
    basis = vh[rank:].conj().T
    norm_y = np.linalg.norm(Y)
    if norm_y == 0.0:
        return ConsistencyReport(True, 0.0, null_dim)
    worst = float(np.max(np.linalg.norm(Y @ basis, axis=0)) / norm_y)
    return ConsistencyReport(worst <= tol, worst, null_dim)


def exact_dmd(p: SnapshotPair, tol_rank: float = DEFAULT_RANK_TOL) -> DMDResult:
    q, s, v = reduced_svd(p.X, tol_rank)
    if s.size == 0:
        raise NumericalError("X is numerically zero; no DMD modes exist")
    yvs = p.Y @ (v / s)
    a_tilde = q.conj().T @ yvs
    lam, w, cond = eig(a_tilde)
    modes = np.empty((p.X.shape[0], lam.size), dtype=np.complex128)
    for r in range(lam.size):
        if abs(lam[r]) < ZERO_EIGENVALUE:
            modes[:, r] = q @ w[:, r]
        else:
            modes[:, r] = yvs @ w[:, r] / lam[r]
    return DMDResult(
        modes=modes,
        eigenvalues=lam,
        amplitudes=None,
        rank_used=s.size,
        strategy=Strategy.STACKED,
        diagnostics={"eigvec_condition": cond},
    )


def koopman_amplitudes(modes, x0) -> tuple[np.ndarray, float]:
    """Least-squares coefficients of ``x0`` in the mode basis, with residual norm."""
    modes = as_matrix(modes, "modes")
    x0 = np.asarray(x0, dtype=np.complex128).reshape(-1)
    if x0.size != modes.shape[0]:
        raise ShapeError(f"x0 has length {x0.size}, modes have {modes.shape[0]} rows")
    phi = pinv(modes) @ x0
    return phi, float(np.linalg.norm(modes @ phi - x0))


def vandermonde_matrix(lambdas, m: int) -> np.ndarray:
    """``m x R`` matrix with entry ``(k, r) = lambda_r**(k+1)``."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    lambdas = np.asarray(lambdas, dtype=np.complex128).reshape(-1)
    out = np.empty((m, lambdas.size), dtype=np.complex128)
    if m:
        out[0] = lambdas
    for k in range(1, m):
        out[k] = out[k - 1] * lambdas
    return out


def _unit_phase(v: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Scale ``v`` to unit norm with phase aligned to ``ref``."""
    v = v / np.linalg.norm(v)
    ip = np.vdot(v, ref)
    if abs(ip) > 0:
        v = v * (ip / abs(ip))
    return v


def _match_to_reference(ref: DMDResult, res: DMDResult) -> list[int]:
    """Greedy nearest-eigenvalue matching; ties go to mode-vector cosine similarity."""
    free = list(range(res.R))
    order = []
    for r in range(ref.R):
        dist = np.array([abs(res.eigenvalues[s] - ref.eigenvalues[r]) for s in free])
        cands = [free[i] for i in np.flatnonzero(dist <= dist.min() * (1 + 1e-12) + 1e-300)]
        if len(cands) > 1:
            u = ref.modes[:, r] / np.linalg.norm(ref.modes[:, r])
            cos = [abs(np.vdot(u, res.modes[:, s])) / np.linalg.norm(res.modes[:, s]) for s in cands]
            pick = cands[int(np.argmax(cos))]
        else:
            pick = cands[0]
        order.append(pick)
        free.remove(pick)
    return order


def dmd_tensor(X, Y, strategy: Strategy | str = Strategy.STACKED,
               tol_rank: float = DEFAULT_RANK_TOL,
               consistency_tol: float = DEFAULT_CONSISTENCY_TOL) -> DMDResult:
    """Exact DMD of snapshot tensors ``X, Y`` of shape ``(n, m, q)``.

    ``stacked`` fits one operator to the frontal slices laid side by side.
    ``per_slice_mean`` fits each slice separately, matches modes to slice 0
    by eigenvalue, and averages unit-normalized, phase-aligned modes and the
    eigenvalues over slices.  In both cases row ``j`` of the amplitudes holds
    the coefficients of ``X[:, 0, j]`` in the mode basis.

    Slices that fail the linear-consistency check raise a
    :class:`ConsistencyWarning`; the reports are kept in ``diagnostics``.
    """
    X = as_tensor3(X, "X")
    Y = as_tensor3(Y, "Y")
    if X.shape != Y.shape:
        raise ShapeError(f"X and Y dims differ: {X.shape} vs {Y.shape}")
    strategy = Strategy(strategy)
    n, m, q = X.shape
    slices = [SnapshotPair(X[:, :, j], Y[:, :, j]) for j in range(q)]

    reports = [linear_consistency_check(p, consistency_tol, tol_rank) for p in slices]
    bad = [j for j, rep in enumerate(reports) if not rep.consistent]
    if bad:
        warnings.warn(f"slices {bad} are not linearly consistent", ConsistencyWarning, stacklevel=2)

    if strategy is Strategy.STACKED:
        stacked = SnapshotPair(
            np.reshape(X, (n, m * q), order="F"), np.reshape(Y, (n, m * q), order="F")
        )
        res = exact_dmd(stacked, tol_rank)
    else:
        runs = [exact_dmd(p, tol_rank) for p in slices]
        ranks = [r.rank_used for r in runs]
        if len(set(ranks)) != 1:
            raise NumericalError(f"per-slice DMD ranks disagree: {ranks}")
        ref = runs[0]
        ref_modes = np.column_stack([_unit_phase(ref.modes[:, r], ref.modes[:, r]) for r in range(ref.R)])
        mode_sum = np.zeros_like(ref_modes)
        lam_sum = np.zeros(ref.R, dtype=np.complex128)
        for run in runs:
            order = _match_to_reference(ref, run)
            for r, s in enumerate(order):
                mode_sum[:, r] += _unit_phase(run.modes[:, s], ref_modes[:, r])
                lam_sum[r] += run.eigenvalues[s]
        res = DMDResult(
            modes=mode_sum / q,
            eigenvalues=lam_sum / q,
            amplitudes=None,
            rank_used=ranks[0],
            strategy=strategy,
            diagnostics={"eigvec_condition": max(r.diagnostics["eigvec_condition"] for r in runs)},
        )

    amps = np.empty((q, res.R), dtype=np.complex128)
    amp_res = []
    for j in range(q):
        amps[j], r = koopman_amplitudes(res.modes, X[:, 0, j])
        amp_res.append(r)
    res.amplitudes = amps
    res.strategy = strategy
    res.diagnostics.update(
        consistency=reports,
        consistent_slices=[rep.consistent for rep in reports],
        amplitude_residuals=amp_res,
    )
    log.debug("dmd_tensor %s: rank %d, eigenvalues %s", strategy.value, res.rank_used, res.eigenvalues)
    return res


def dmd_to_cp(res: DMDResult, m: int) -> CPFactors:
    """Triplets as CP factors: modes, ``vandermonde_matrix(eigenvalues, m)``, amplitudes."""
    if res.amplitudes is None or np.size(res.amplitudes) == 0:
        raise ValueError("DMD result has no amplitudes; run dmd_tensor first")
    return CPFactors(res.modes, vandermonde_matrix(res.eigenvalues, m), res.amplitudes)
