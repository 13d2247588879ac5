"""Quantum-limited gravimetry with a vertical optomechanical cavity.

Closed-form cavity-mirror dynamics, quantum/classical Fisher information for
estimating the gravitational acceleration, Cramer-Rao and SNR budgets, and a
seeded Monte-Carlo measurement-and-inference pipeline.
"""

from .constants import G_NEWTON, G_STANDARD, HBAR, M_EARTH, R_EARTH, UGAL
from .dynamics import (
    FieldDensityMatrix,
    FieldState,
    HamiltonianSpec,
    JointState,
    JointStateVector,
    PhaseSpacePoint,
    brute_force_evolution,
    closed_form_overlap,
    coherent_amplitudes,
    field_density_matrix_thermal,
    field_state_at_period,
    fock_cutoff,
    joint_state,
    mean_field,
    oracle_mirror_cutoff,
    phase_derivatives,
    phase_periods,
    phase_space_trajectory,
)
from .errors import (
    ConfigError,
    DimensionTooLarge,
    FlatLikelihood,
    FrequencyImaginary,
    GravimetryError,
    GridResolutionInsufficient,
    MaximumOnBoundary,
    NonPositiveInput,
    QuadratureNotConverged,
    StepTooSmall,
    TruncationInsufficient,
    ZeroInformation,
)
from .estimation import (
    EstimationReport,
    Heterodyne,
    Homodyne,
    MeasurementScheme,
    cramer_rao,
    discussion_params,
    hermite_functions,
    heterodyne_fi,
    heterodyne_probability,
    homodyne_fi,
    homodyne_probability,
    platform_table,
    qfi_closed_form,
    qfi_from_state,
    qfi_poisson_sum,
    snr_budget,
)
from .inference import (
    EstimateResult,
    SampleBatch,
    StudySummary,
    bayes_posterior,
    crb_saturation_study,
    max_likelihood,
    rng_from_seed,
    sample_homodyne,
)
from .params import (
    DerivedQuantities,
    GradientQuantities,
    PhysicalParams,
    derive_quantities,
    finite_difference_step,
    gradient_quantities,
    scaled_quantities,
)

__version__ = "0.1.0"
