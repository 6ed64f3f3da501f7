import numpy as np

from kmdtca.cp import random_factors
from kmdtca.synth import derive_seed
from kmdtca.tensor_core import CPFactors


def well_conditioned_factors(seed: int, dims=(4, 20, 6), R: int = 2, max_cond: float = 10.0) -> CPFactors:
    """Random complex factors with every factor matrix of condition number <= ``max_cond``."""
    for attempt in range(1000):
        f = random_factors(dims, R, derive_seed(seed, 10_000 + attempt))
        if all(np.linalg.cond(m) <= max_cond for m in (f.A, f.B, f.C)):
            return f
    raise RuntimeError("no well-conditioned draw found")


def rank_by_minors(m, tol: float = 1e-12) -> int:
    """Rank of a matrix with at most two columns from its 2x2 minors."""
    m = np.asarray(m)
    assert m.shape[1] <= 2
    if m.shape[1] == 2:
        for i in range(m.shape[0]):
            for j in range(i + 1, m.shape[0]):
                if abs(m[i, 0] * m[j, 1] - m[i, 1] * m[j, 0]) > tol:
                    return 2
    return 1 if np.any(np.abs(m) > tol) else 0
