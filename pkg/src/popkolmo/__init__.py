"""Spectral structure of Kolmogorov transition matrices and an
age-structured multi-patch population simulator."""

__version__ = "0.1.0"

from .aggregation import AveragedModel, ErrorReport, averaged_rates, compare, simulate_aggregated
from .errors import (
    ColumnSumNonZero,
    NegativeOffDiagonal,
    NoConvergence,
    NonFiniteState,
    NonSquare,
    PopKolmoError,
    ValidationError,
)
from .kolmogorov import (
    MatrixExponentialResult,
    TransitionMatrix,
    from_offdiagonal_rates,
    matrix_exponential,
    validate_kolmogorov,
)
from .simulation import (
    PopulationState,
    SimulationConfig,
    Trajectory,
    VitalRates,
    patch_shares,
    renewal_boundary,
    simulate,
    step,
)
from .spectral import (
    SpectralReport,
    analyze,
    full_spectrum,
    right_perron_basis,
    spectral_bound_with_witness,
    verify_zero_pattern,
)
from .structure import Kind, NormalForm, PatchGraph, adjacency_graph, classify_states, is_irreducible, normal_form
