"""Ruin probabilities for a two-level no-claim-discount risk process.

The surplus earns premium at rate 1 and pays i.i.d. claims whose
inter-arrival law switches between two exponentials depending on whether the
previous gap exceeded a fixed window.  The package provides closed-form
analytics (cycle m.g.f., decay exponent, tail constants), exact path
simulation with crude Monte Carlo, tilted-measure importance sampling, and an
independent integral-equation solver, all sharing one parameter record.
"""

from .analytics import (
    AsymptoticReport,
    EigenPair,
    KernelMatrix,
    adjustment_eigenvector,
    asymptotic_report,
    classical_ruin,
    cramer_upper_constant,
    cramer_upper_constant_series,
    heavy_tail_asymptotic,
    heavy_tail_constant,
    map_kernel_mgf,
    mgf_x1,
    principal_eigenpair,
    s_alpha_constant_D,
    solve_kappa,
)
from .importance import (
    RuinSample,
    TiltedModel,
    build_tilted_model,
    macro_is_ruin,
    map_is_ruin,
    map_is_samples,
    sample_tilted_gap,
)
from .model_core import (
    ClaimDistribution,
    Exponential,
    ModelParams,
    Pareto,
    StateLabel,
    claim_mgf,
    drift_mu,
    gap_side_probs,
    npc_holds,
    npc_margin,
    restricted_laplace,
    steady_state,
    truncated_mean,
)
from .oracle import (
    GridFunction,
    mc_mgf_x1,
    mc_tail_ratio,
    sample_cycle_increments,
    solve_integral_equations,
)
from .simulation import (
    PathState,
    RuinEstimate,
    SweepCell,
    crude_mc_indicators,
    crude_mc_ruin,
    step_path,
    xi_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticReport",
    "ClaimDistribution",
    "EigenPair",
    "Exponential",
    "GridFunction",
    "KernelMatrix",
    "ModelParams",
    "Pareto",
    "PathState",
    "RuinEstimate",
    "RuinSample",
    "StateLabel",
    "SweepCell",
    "TiltedModel",
    "adjustment_eigenvector",
    "asymptotic_report",
    "build_tilted_model",
    "claim_mgf",
    "classical_ruin",
    "cramer_upper_constant",
    "cramer_upper_constant_series",
    "crude_mc_indicators",
    "crude_mc_ruin",
    "drift_mu",
    "gap_side_probs",
    "heavy_tail_asymptotic",
    "heavy_tail_constant",
    "macro_is_ruin",
    "map_is_ruin",
    "map_is_samples",
    "map_kernel_mgf",
    "mc_mgf_x1",
    "mc_tail_ratio",
    "mgf_x1",
    "npc_holds",
    "npc_margin",
    "principal_eigenpair",
    "restricted_laplace",
    "s_alpha_constant_D",
    "sample_cycle_increments",
    "sample_tilted_gap",
    "solve_integral_equations",
    "solve_kappa",
    "steady_state",
    "step_path",
    "truncated_mean",
    "xi_sweep",
]
