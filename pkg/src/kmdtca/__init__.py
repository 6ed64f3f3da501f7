"""Exact DMD and CP decomposition of third-order snapshot tensors, and the
correspondence between their triplets."""

from .correspondence import MatchReport, align_and_error, compare_report, match_modes
from .cp import CPConfig, CPResult, cp_als, cp_residual, kruskal_check, lemma1_inflate
from .dmd import (
    ConsistencyReport,
    DMDResult,
    SnapshotPair,
    Strategy,
    dmd_tensor,
    dmd_to_cp,
    exact_dmd,
    koopman_amplitudes,
    linear_consistency_check,
    vandermonde_matrix,
)
from .synth import SynthConfig, SynthGroundTruth, orthonormalize, synth_generate, uniform_stream
from .tensor_core import (
    CPFactors,
    cp_reconstruct,
    eig,
    fold_mode,
    frobenius_norm3,
    khatri_rao,
    pinv,
    reduced_svd,
    unfold_mode,
)

__version__ = "0.1.0"
