"""Dense complex matrix and third-order tensor kernels.

Matrices are 2-D ``complex128`` arrays and third-order tensors are 3-D
``complex128`` arrays of shape ``(I1, I2, I3)``.  The canonical flat layout
of a tensor (used by the JSON format) has ``i1`` varying fastest and ``i3``
slowest, i.e. Fortran order.  Frontal slice ``j`` is ``t[:, :, j]``.

Unfoldings follow the cyclic convention::

    mode 1: I1 x (I2*I3), column i2 + I2*i3
    mode 2: I2 x (I3*I1), column i3 + I3*i1
    mode 3: I3 x (I1*I2), column i1 + I1*i2

so that for a CP tensor ``unfold_mode(t, 1) == A @ khatri_rao(C, B).T`` and
cyclically for the other modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DefectiveMatrixError, NumericalError, ShapeError

DEFAULT_RANK_TOL = 1e-10
DEFECTIVE_COND = 1e12

# axis order that brings mode n to the front while keeping the cyclic order
_CYCLIC = {1: (0, 1, 2), 2: (1, 2, 0), 3: (2, 0, 1)}


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name} contains non-finite entries")
    return a


def as_tensor3(t, name: str = "tensor") -> np.ndarray:
    a = np.asarray(t, dtype=np.complex128)
    if a.ndim != 3 or min(a.shape) < 1:
        raise ShapeError(f"{name} must be a non-empty 3-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class CPFactors:
    """Factor matrices of ``sum_r a_r (x) b_r (x) c_r``.

    ``A`` is ``I1 x R``, ``B`` is ``I2 x R`` and ``C`` is ``I3 x R``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        mats = []
        for label in ("A", "B", "C"):
            m = np.asarray(getattr(self, label), dtype=np.complex128)
            if m.ndim != 2:
                raise ShapeError(f"factor {label} must be 2-D, got shape {m.shape}")
            mats.append(m)
            object.__setattr__(self, label, m)
        cols = {m.shape[1] for m in mats}
        if len(cols) != 1:
            raise ShapeError(
                "factor column counts differ: "
                f"A={mats[0].shape[1]}, B={mats[1].shape[1]}, C={mats[2].shape[1]}"
            )

    @property
    def R(self) -> int:
        return self.A.shape[1]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])

    def permuted(self, perm) -> "CPFactors":
        perm = list(perm)
        return CPFactors(self.A[:, perm], self.B[:, perm], self.C[:, perm])

    def columns(self, r: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.A[:, r], self.B[:, r], self.C[:, r]


def frobenius_norm3(t) -> float:
    """Square root of the summed squared moduli of all entries."""
    a = np.asarray(t, dtype=np.complex128)
    return float(np.sqrt(np.sum(a.real**2 + a.imag**2)))


def unfold_mode(t, mode: int) -> np.ndarray:
    if mode not in _CYCLIC:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    a = np.asarray(t, dtype=np.complex128)
    if a.ndim != 3:
        raise ShapeError(f"expected a 3-D tensor, got shape {a.shape}")
    moved = np.transpose(a, _CYCLIC[mode])
    return np.reshape(moved, (moved.shape[0], -1), order="F")


def fold_mode(m, mode: int, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold_mode`."""
    if mode not in _CYCLIC:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    order = _CYCLIC[mode]
    moved_shape = tuple(dims[k] for k in order)
    a = np.asarray(m, dtype=np.complex128)
    if a.shape != (moved_shape[0], moved_shape[1] * moved_shape[2]):
        raise ShapeError(f"unfolding of shape {a.shape} does not match dims {dims} in mode {mode}")
    moved = np.reshape(a, moved_shape, order="F")
    return np.transpose(moved, np.argsort(order))


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Kronecker product; column r is ``kron(a[:, r], b[:, r])``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("khatri_rao operands must be 2-D")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"khatri_rao column mismatch: {a.shape[1]} vs {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def cp_reconstruct(f: CPFactors, dims: tuple[int, int, int] | None = None) -> np.ndarray:
    if dims is not None and tuple(dims) != f.dims:
        raise ShapeError(f"factor row counts {f.dims} do not match dims {tuple(dims)}")
    return np.einsum("ir,jr,kr->ijk", f.A, f.B, f.C)


class SVD(NamedTuple):
    Q: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


def reduced_svd(m, tol_rank: float = DEFAULT_RANK_TOL) -> SVD:
    """Rank-revealing reduced SVD ``m = Q @ diag(sigma) @ V^H``.

    Singular values ``<= tol_rank * sigma[0]`` are dropped together with their
    vectors.  A zero matrix yields rank 0 (empty factors).
    """
    a = as_matrix(m)
    try:
        q, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge for a {a.shape} matrix: {exc}") from exc
    if s.size == 0 or s[0] == 0.0:
        keep = 0
    else:
        keep = int(np.count_nonzero(s > tol_rank * s[0]))
    return SVD(q[:, :keep], s[:keep], vh[:keep].conj().T)


def matrix_rank(m, tol_rank: float = DEFAULT_RANK_TOL) -> int:
    return reduced_svd(m, tol_rank).sigma.size


class Eigendecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    condition: float


def eig(m) -> Eigendecomposition:
    """Eigenvalues and unit-norm right eigenvectors of a square matrix.

    Raises :class:`DefectiveMatrixError` when the eigenvector matrix has
    2-norm condition number above ``1e12``.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"eig needs a square matrix, got {a.shape}")
    try:
        w, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    cond = float(np.linalg.cond(vecs))
    if not np.isfinite(cond) or cond > DEFECTIVE_COND:
        raise DefectiveMatrixError(
            f"no full eigenvector set (eigenvector condition number {cond:.3e})"
        )
    return Eigendecomposition(w, vecs, cond)


def pinv(m, tol_rank: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via :func:`reduced_svd`."""
    q, s, v = reduced_svd(m, tol_rank)
    if s.size == 0:
        a = np.asarray(m)
        return np.zeros((a.shape[1], a.shape[0]), dtype=np.complex128)
    return (v / s) @ q.conj().T
