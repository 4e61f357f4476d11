"""Weyl algebras over R^2n, their states, classical limits and finite-dimensional diagnostics."""

__version__ = "0.1.0"

from .phase_space import (
    DimensionError,
    LatticeSubgroup,
    PhasePoint,
    SymplecticContext,
    rational_rank,
    symplectic_form,
)
from .weyl_algebra import (
    LevelMismatchError,
    NormConvergenceError,
    NormEstimate,
    NormOptions,
    WeylElement,
    adjoint,
    commutator,
    estimate_norm,
    multiply,
    poisson_bracket,
)
from .state_space import (
    INCONCLUSIVE,
    NON_REGULAR,
    REGULAR,
    BochnerCertificate,
    CharacteristicState,
    FockDensity,
    Gaussian,
    Mixture,
    PointMixture,
    SubgroupCharacter,
    Tabulated,
    TraceState,
    bochner_certificate,
    convex_combine,
    evaluate,
    evaluate_char,
    quantum_admissible,
    twisted_gram,
)
from .quantization import (
    FieldGrid,
    classical_limit,
    quantize,
    verify_dirac_property,
    verify_norm_continuity,
    verify_product_property,
)
from .classical_measures import (
    QuadratureSpec,
    captured_mass,
    mass_defect,
    recover_point_weights,
    regularity_classify,
    theorem_witness,
)
from .gns_finite import ClockShiftRep, GnsData, clock_shift, displacement_matrix, gns_gram, relation_residual
from .reduction import (
    AnnihilatorNotIdeal,
    BlockAlgebra,
    FunctionalSubspace,
    annihilator,
    check_condition_ii,
    is_ideal,
    reduce,
)
