"""CP decomposition by multi-restart alternating least squares.

Also holds the objective (:func:`cp_residual`), the rank-inflation
construction that turns an exact rank-R* factorization into an exact
R-component one (:func:`lemma1_inflate`), and the matrix-rank uniqueness
inequality ``rank(A) + rank(B) + rank(C) >= 2R + 2`` (:func:`kruskal_check`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ShapeError
from .synth import derive_seed, uniform_stream
from .tensor_core import (
    DEFAULT_RANK_TOL,
    CPFactors,
    as_tensor3,
    cp_reconstruct,
    frobenius_norm3,
    khatri_rao,
    matrix_rank,
    pinv,
    unfold_mode,
)

# residual above which a stalled run is flagged as a probable local minimum
STALL_RESIDUAL = 1e-6


@dataclass(frozen=True)
class CPConfig:
    """ALS settings.

    ``init`` is either ``"random"`` or a :class:`CPFactors` used as the
    starting point of every restart (restarts then coincide, so pass
    ``restarts=1``).
    """

    R: int
    max_iters: int = 2000
    tol_rel_change: float = 1e-14
    restarts: int = 10
    seed: int = 0
    init: str | CPFactors = "random"
    equilibrate: bool = True
    line_search: bool = True

    def __post_init__(self):
        if self.R < 1:
            raise ValueError(f"R must be >= 1, got {self.R}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not isinstance(self.init, CPFactors) and self.init != "random":
            raise ValueError(f"init must be 'random' or CPFactors, got {self.init!r}")


@dataclass
class CPResult:
    factors: CPFactors
    rel_residual: float
    iters: int
    restart_index: int
    converged: bool
    residual_history: list[float] = field(default_factory=list)


def cp_residual(Y, f: CPFactors) -> float:
    """Unnormalized objective ``||Y - [[A, B, C]]||``."""
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.ndim != 3 or Y.shape != f.dims:
        raise ShapeError(f"tensor shape {Y.shape} does not match factor dims {f.dims}")
    return frobenius_norm3(Y - cp_reconstruct(f))


def random_factors(dims: Sequence[int], R: int, seed: int) -> CPFactors:
    """Complex factors with real and imaginary parts uniform in (-1, 1).

    Draw order: A, B, C; within a matrix row by row, real part before
    imaginary part for each entry.
    """
    rng = uniform_stream(seed)
    mats = []
    for size in dims:
        u = 2.0 * rng.uniforms(2 * size * R) - 1.0
        mats.append((u[0::2] + 1j * u[1::2]).reshape(size, R))
    return CPFactors(*mats)


def _normalize(A, B, C):
    na = np.linalg.norm(A, axis=0)
    nb = np.linalg.norm(B, axis=0)
    na[na == 0] = 1.0
    nb[nb == 0] = 1.0
    return A / na, B / nb, C * (na * nb)


def _mode_scales(Y) -> list[np.ndarray]:
    """Slice norms along each mode, taken in sequence (one equilibration pass)."""
    scales = []
    T = Y
    for axes in ((1, 2), (0, 2), (0, 1)):
        d = np.sqrt(np.sum(T.real**2 + T.imag**2, axis=axes))
        d[d == 0] = 1.0
        shape = [1, 1, 1]
        shape[3 - sum(axes)] = -1
        T = T / d.reshape(shape)
        scales.append(d)
    return scales


class _ALS:
    """Sweeps and line search for one tensor; factors are plain arrays."""

    def __init__(self, Y, cfg: CPConfig):
        self.unfolded = (unfold_mode(Y, 1), unfold_mode(Y, 2), unfold_mode(Y, 3))
        self.norm = frobenius_norm3(Y)
        self.cfg = cfg

    def sweep(self, A, B, C):
        Y1, Y2, Y3 = self.unfolded
        gb = B.T @ B.conj()
        gc = C.T @ C.conj()
        A = Y1 @ khatri_rao(C, B).conj() @ pinv(gc * gb)
        ga = A.T @ A.conj()
        B = Y2 @ khatri_rao(A, C).conj() @ pinv(ga * gc)
        gb = B.T @ B.conj()
        C = Y3 @ khatri_rao(B, A).conj() @ pinv(gb * ga)
        return _normalize(A, B, C)

    def residual(self, A, B, C) -> float:
        return float(np.linalg.norm(self.unfolded[2] - C @ khatri_rao(B, A).T)) / self.norm

    def run(self, A, B, C, max_iters: int):
        """Iterate until the relative residual stalls; returns factors, history, stop flag."""
        history = []
        prev = np.inf
        for it in range(1, max_iters + 1):
            A0, B0, C0 = A, B, C
            A, B, C = self.sweep(A, B, C)
            res = self.residual(A, B, C)
            if self.cfg.line_search and it > 2:
                step = it ** (1.0 / 3.0)
                At, Bt, Ct = A0 + step * (A - A0), B0 + step * (B - B0), C0 + step * (C - C0)
                trial = self.residual(At, Bt, Ct)
                if trial < res:
                    A, B, C = _normalize(At, Bt, Ct)
                    res = trial
            history.append(res)
            if abs(prev - res) < self.cfg.tol_rel_change:
                return (A, B, C), history, True
            prev = res
        return (A, B, C), history, False


def _restart(Y, solver: _ALS, start: CPFactors, cfg: CPConfig):
    A, B, C = start.A, start.B, start.C
    warmup = 0
    if cfg.equilibrate:
        d1, d2, d3 = _mode_scales(Y)
        Yb = Y / d1[:, None, None] / d2[None, :, None] / d3[None, None, :]
        start_b = (A / d1[:, None], B / d2[:, None], C / d3[:, None])
        (A, B, C), hist, _ = _ALS(Yb, cfg).run(*start_b, cfg.max_iters)
        A, B, C = _normalize(A * d1[:, None], B * d2[:, None], C * d3[:, None])
        warmup = len(hist)
    (A, B, C), history, stopped = solver.run(A, B, C, cfg.max_iters)
    factors = CPFactors(A, B, C)
    rel = cp_residual(Y, factors) / solver.norm
    converged = stopped and rel <= STALL_RESIDUAL
    return factors, rel, warmup + len(history), converged, history


def cp_als(Y, cfg: CPConfig) -> CPResult:
    """Best-of-restarts ALS fit of an ``R``-component CP model to ``Y``.

    Each sweep solves the three complex least-squares problems, e.g.
    ``A = Y_(1) conj(C kr B) pinv((C^T conj C) * (B^T conj B))``, then
    rescales the columns of ``A`` and ``B`` to unit norm, pushing the
    magnitudes into ``C``.  With ``cfg.line_search`` the sweep is followed
    by an extrapolation step ``old + it**(1/3) * (new - old)``, kept only if
    it lowers the residual.

    With ``cfg.equilibrate`` each restart first runs on a copy of ``Y``
    whose slices were divided by their norms, one pass per mode (a diagonal
    change of basis per mode, so exact low-rank structure is preserved),
    then the unscaled factors are polished on ``Y`` itself.
    Geometric time factors with growth or decay spread the slice norms over
    orders of magnitude, which otherwise leaves weak components in a swamp.

    A phase stops when the relative residual changes by less than
    ``cfg.tol_rel_change`` or after ``cfg.max_iters`` sweeps.
    ``residual_history`` covers the polish phase (the true objective).  The
    restart with the lowest relative residual wins; ties go to the lowest
    restart index.
    """
    Y = as_tensor3(Y, "Y")
    norm_y = frobenius_norm3(Y)
    if norm_y == 0.0:
        raise ValueError("cannot fit a CP model to the zero tensor")
    I1, I2, I3 = Y.shape
    if cfg.R > min(I2 * I3, I1 * I3, I1 * I2):
        raise ValueError(f"R={cfg.R} exceeds the solvable bound for dims {Y.shape}")
    solver = _ALS(Y, cfg)

    best = None
    for k in range(cfg.restarts):
        if isinstance(cfg.init, CPFactors):
            if cfg.init.dims != Y.shape or cfg.init.R != cfg.R:
                raise ShapeError("given initial factors do not conform to Y and R")
            start = cfg.init
        else:
            start = random_factors(Y.shape, cfg.R, derive_seed(cfg.seed, k))
        factors, rel, iters, converged, history = _restart(Y, solver, start, cfg)
        if best is None or rel < best.rel_residual:
            best = CPResult(factors, rel, iters, k, converged, history)
    return best


def lemma1_inflate(f: CPFactors, R_target: int, alphas) -> CPFactors:
    """Grow an exact factorization to ``R_target`` components.

    The last component is replaced by ``R_target - R + 1`` copies whose
    ``A`` columns are scaled by ``alphas``; since the weights are nonzero,
    pairwise distinct and sum to one the reconstruction is unchanged.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    if R_target <= f.R:
        raise ValueError(f"R_target={R_target} must exceed the current R={f.R}")
    if f.R < 1:
        raise ValueError("cannot inflate an empty factorization")
    needed = R_target - f.R + 1
    if alphas.shape != (needed,):
        raise ValueError(f"expected {needed} alpha weights, got {alphas.size}")
    if np.any(alphas == 0.0):
        raise ValueError("alpha weights must be nonzero")
    if np.unique(alphas).size != alphas.size:
        raise ValueError("alpha weights must be pairwise distinct")
    if not np.isclose(alphas.sum(), 1.0, rtol=0.0, atol=1e-12):
        raise ValueError(f"alpha weights must sum to 1, got {alphas.sum()!r}")
    last = f.R - 1
    a, b, c = f.columns(last)
    A = np.hstack([f.A[:, :last], a[:, None] * alphas[None, :]])
    B = np.hstack([f.B[:, :last], np.repeat(b[:, None], needed, axis=1)])
    C = np.hstack([f.C[:, :last], np.repeat(c[:, None], needed, axis=1)])
    return CPFactors(A, B, C)


def kruskal_check(f: CPFactors, rank_tol: float = DEFAULT_RANK_TOL) -> tuple[bool, tuple[int, int, int]]:
    """Whether ``rank(A) + rank(B) + rank(C) >= 2R + 2`` (ordinary matrix ranks)."""
    ranks = tuple(matrix_rank(m, rank_tol) for m in (f.A, f.B, f.C))
    return sum(ranks) >= 2 * f.R + 2, ranks
