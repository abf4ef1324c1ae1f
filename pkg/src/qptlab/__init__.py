"""Desk-scale simulation laboratory for passive property testing of Boolean
functions from quantum data, with exact brute-force oracles beside every
estimator and spectral bound."""

from .boolfn import (
    BooleanFunction,
    DistanceReport,
    FourierSpectrum,
    builtin,
    evaluate,
    exact_distance_to_class,
    exact_distance_to_monotone,
    exact_distance_to_symmetric,
    fourier_monotonicity_statistic,
    from_hex,
    is_monotone,
    is_symmetric,
    is_triangle_free,
    monotone_violation_probability,
    symmetry_violation_probability,
    to_hex,
    total_influence,
    triangle_density,
    walsh_transform,
)
from .ensembles import (
    Matching,
    SetTriple,
    TwinFunction,
    build_layer_matching,
    certify_separation,
    sample_mm_pair,
    sample_set_triple,
    sample_twin,
)
from .errors import (
    ArityError,
    BudgetExceededError,
    CapabilityError,
    ContractError,
    InternalConsistencyError,
    TheoremViolationError,
)
from .qstate import (
    FAIL,
    CopyLedger,
    RngStream,
    SubsetState,
    estimate_joint_membership,
    estimate_overlap,
    fourier_sample,
    ip_transform,
    postselect_subset,
    sample_classical,
    shift_function,
    swap_test,
    symmetric_subspace_measure,
)
from .spectra import (
    CountParams,
    DensityMatrix,
    StateVector,
    build_difference_matrix,
    closed_form_trace_norm,
    compatible,
    component_census,
    distinct_projector_report,
    distinguishability_star_term,
    empty_type_size,
    empty_type_split,
    ensemble_average,
    function_state,
    helstrom_success,
    jacobi_eigh,
    odd_pair_string_count,
    phase_state,
    trace_norm,
    tuple_stats,
    type_class_size,
)
from .testers import (
    TesterVerdict,
    classical_triangle_baseline,
    estimate_intersection2,
    test_mm,
    test_monotonicity,
    test_symmetry,
    test_triangle_freeness,
)

__version__ = "0.1.0"
