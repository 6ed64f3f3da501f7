"""Seeded synthetic snapshot tensors from a planted linear dynamical system.

Each of the ``R`` planted modes has an orthonormal spatial vector, a
geometric time factor ``lambda_r**(k+1)`` with
``lambda_r = exp(2*pi*i*alpha_r/10 + beta_r/10)``, and a polynomial
dependence ``x**gamma_r`` on the initial condition ``x``.

Random draws come from a SplitMix64 stream and are consumed in this order:

1. the ``n*R`` raw entries of ``Vbar`` in (0, 1), vector by vector
   (all entries of vector 0, then vector 1, ...);
2. ``alpha_0 .. alpha_{R-1}`` in (-1, 1);
3. ``beta_0 .. beta_{R-1}`` in (-1, 1);
4. ``gamma_0 .. gamma_{R-1}`` in (0, K).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ShapeError
from .tensor_core import CPFactors, cp_reconstruct

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """SplitMix64 generator yielding doubles strictly inside (0, 1)."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        return _mix64(self.state)

    def uniform(self) -> float:
        # top 53 bits, offset by half an ulp so 0 and 1 are unreachable
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def uniforms(self, count: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(count)], dtype=np.float64)

    def __iter__(self):
        return self

    def __next__(self) -> float:
        return self.uniform()


def uniform_stream(seed: int) -> SplitMix64:
    return SplitMix64(seed)


def derive_seed(seed: int, salt: int) -> int:
    """Decorrelated child seed, used for per-restart streams."""
    return _mix64((int(seed) + _mix64((int(salt) + 1) * _GOLDEN & _MASK64)) & _MASK64)


def orthonormalize(m, tol: float = 1e-12) -> np.ndarray:
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Raises :class:`ShapeError` for more columns than rows and
    :class:`NumericalError` when the columns are (numerically) dependent.
    """
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {a.shape}")
    rows, cols = a.shape
    if cols > rows:
        raise ShapeError(f"cannot orthonormalize {cols} columns in dimension {rows}")
    q = np.empty_like(a)
    for j in range(cols):
        v = a[:, j].copy()
        norm0 = np.linalg.norm(v)
        for _ in range(2):
            for i in range(j):
                v -= np.vdot(q[:, i], v) * q[:, i]
        norm = np.linalg.norm(v)
        if norm0 == 0.0 or norm <= tol * norm0:
            raise NumericalError(f"column {j} is linearly dependent on the previous columns")
        q[:, j] = v / norm
    return q


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    R: int = 2
    n: int = 2
    N: int = 100
    q: int = 10
    K: float = 3.0

    def __post_init__(self):
        if self.R < 1:
            raise ValueError(f"R must be >= 1, got {self.R}")
        if self.n < self.R:
            raise ValueError(f"n must be >= R for orthonormal modes, got n={self.n}, R={self.R}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if not self.K > 0:
            raise ValueError(f"K must be positive, got {self.K}")


@dataclass(frozen=True)
class SynthGroundTruth:
    Vbar: np.ndarray
    lambdas: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    gammas: np.ndarray
    initial_grid: np.ndarray

    def time_factors(self, N: int) -> np.ndarray:
        """``N x R`` matrix with entries ``lambda_r**(k+1)``."""
        k = np.arange(1, N + 1)[:, None]
        return self.lambdas[None, :] ** k

    def eigenfunction_values(self) -> np.ndarray:
        """``q x R`` matrix with entries ``grid_j**gamma_r``."""
        return self.initial_grid[:, None] ** self.gammas[None, :]

    def factors_x(self, N: int) -> CPFactors:
        return CPFactors(self.Vbar, self.time_factors(N), self.eigenfunction_values())

    def factors_y(self, N: int) -> CPFactors:
        return CPFactors(
            self.Vbar, self.time_factors(N) * self.lambdas[None, :], self.eigenfunction_values()
        )

    def operator(self) -> np.ndarray:
        """The planted linear map ``Vbar diag(lambda) Vbar^+``."""
        return (self.Vbar * self.lambdas) @ np.linalg.pinv(self.Vbar)


def initial_grid(q: int) -> np.ndarray:
    """``q`` evenly spaced points in (0, 1]; 0.1, 0.2, ..., 1.0 for q = 10."""
    return np.arange(1, q + 1, dtype=np.float64) / q


def synth_generate(cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray, SynthGroundTruth]:
    """Return ``(X, Y, truth)`` with ``X, Y`` of shape ``(n, N, q)``."""
    rng = uniform_stream(cfg.seed)
    raw = rng.uniforms(cfg.n * cfg.R).reshape(cfg.R, cfg.n).T
    vbar = orthonormalize(raw)
    alphas = 2.0 * rng.uniforms(cfg.R) - 1.0
    betas = 2.0 * rng.uniforms(cfg.R) - 1.0
    gammas = cfg.K * rng.uniforms(cfg.R)
    lambdas = np.exp(2j * np.pi * alphas / 10 + betas / 10)
    truth = SynthGroundTruth(
        Vbar=vbar,
        lambdas=lambdas,
        alphas=alphas,
        betas=betas,
        gammas=gammas,
        initial_grid=initial_grid(cfg.q),
    )
    X = cp_reconstruct(truth.factors_x(cfg.N))
    Y = cp_reconstruct(truth.factors_y(cfg.N))
    return X, Y, truth
