"""Exact constrained-Hamiltonian analysis of compactified 5D quadratic field theories.

The pipeline: declare a quadratic 5D theory (``model``), reduce it on a
circle with a reflection identification into a tower of decoupled
per-level phase-space models (``kaluza``), run the full constraint
algorithm on each level (``dirac``), and validate by exact midpoint
evolution (``dynamics``).  Everything is rational arithmetic end to end
(``exactla``); ``cli`` wraps the pipeline in a deterministic scenario
runner.
"""

from .dirac import (
    ChainPass,
    Classification,
    ConstraintTower,
    DiracReport,
    LevelAnalysis,
    LinearConstraint,
    Multiplier,
    RawFamily,
    ReducibilityRow,
    UnfixedMultiplierError,
    analyze_level,
    analyze_tower,
    canonical_hamiltonian,
    classify,
    consistency_chain,
    dirac_matrix,
    dof_count,
    extended_hamiltonian,
    omega,
    primary_constraints,
    reducibility_report,
    solve_multipliers,
)
from .dynamics import (
    CayleyResonanceError,
    FlowSpec,
    TrajectorySummary,
    evolve,
    project_to_surface,
    step_matrix,
)
from .exactla import (
    InfeasibleError,
    Mat,
    Rat,
    SingularError,
    hstack,
    inverse,
    kron,
    null_space,
    rank,
    rref,
    solve,
    vstack,
)
from .kaluza import (
    KKTower,
    SpatialChannel,
    channel_plane,
    channel_zero,
    compactify,
    lagrangian_value,
    mass_blocks,
    phase_dim,
)
from .model import (
    BFCoupling,
    FieldSpec,
    FieldStrengthSq,
    MassSq,
    QuadraticPhaseModel,
    TheorySpec5D,
    builtin_bfproca5d,
    builtin_proca5d,
    direct_sum,
    legendre_data,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # exact linear algebra
    "Mat",
    "Rat",
    "InfeasibleError",
    "SingularError",
    "hstack",
    "vstack",
    "kron",
    "rank",
    "rref",
    "null_space",
    "solve",
    "inverse",
    # theory declarations and phase-space models
    "FieldSpec",
    "FieldStrengthSq",
    "MassSq",
    "BFCoupling",
    "TheorySpec5D",
    "QuadraticPhaseModel",
    "builtin_proca5d",
    "builtin_bfproca5d",
    "legendre_data",
    "direct_sum",
    # reduction to level towers
    "SpatialChannel",
    "KKTower",
    "channel_zero",
    "channel_plane",
    "compactify",
    "phase_dim",
    "mass_blocks",
    "lagrangian_value",
    # constraint algorithm
    "LinearConstraint",
    "ConstraintTower",
    "RawFamily",
    "ChainPass",
    "Classification",
    "Multiplier",
    "ReducibilityRow",
    "LevelAnalysis",
    "DiracReport",
    "UnfixedMultiplierError",
    "omega",
    "primary_constraints",
    "canonical_hamiltonian",
    "consistency_chain",
    "classify",
    "solve_multipliers",
    "dirac_matrix",
    "reducibility_report",
    "dof_count",
    "extended_hamiltonian",
    "analyze_level",
    "analyze_tower",
    # evolution checks
    "FlowSpec",
    "TrajectorySummary",
    "CayleyResonanceError",
    "project_to_surface",
    "step_matrix",
    "evolve",
]
