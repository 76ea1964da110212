"""Channel estimation and training design for RIS-aided links."""

from .channels import (
    GeometricParams,
    RicianParams,
    WidebandChannelSet,
    WidebandConfig,
    complex_normal,
    gen_geometric,
    gen_iid_rayleigh,
    gen_narrowband_set,
    gen_rician,
    gen_wideband,
    steering,
)
from .exceptions import (
    ConfigValidationError,
    DimensionMismatchError,
    IdentifiabilityError,
    MemoryBudgetError,
    RankDeficientError,
    RisEstimError,
    UnsupportedFamilyError,
    UnsupportedSizeError,
)
from .harness import ExperimentConfig, ExperimentRecord, run, write_csv
from .linear_estimators import (
    ls_closed_form,
    ls_estimate,
    lmmse_estimate,
    mmse_closed_form,
)
from .model import (
    CascadedChannel,
    NarrowbandChannelSet,
    RisState,
    SystemConfig,
    build_cascaded,
    extended_state,
    rx_matrix_form,
    rx_vectorized,
    training_row,
)
from .multiuser import (
    MultiuserChannels,
    MultiuserEstimate,
    gen_multiuser_channels,
    opportunistic_select,
    overhead_common_channel,
    overhead_two_timescale,
    simulate_common_channel,
)
from .ofdm import (
    CascadedFreqChannel,
    OfdmFrame,
    build_freq_channel,
    full_pilot_ls,
    interp_pilot_ls,
    make_ofdm_frame,
    rx_freq,
    rx_time,
)
from .sparse import (
    Dictionary,
    SparseProblem,
    StackedSparseOperator,
    build_dictionary,
    canonical_support,
    make_sparse_problem,
    omp,
    pilot_budget,
    plant_sparse_channels,
    reconstruct_channel,
    stack_sparse,
    subspace_pursuit,
)
from .spectral_efficiency import (
    PowerSplit,
    RateConfig,
    RateEstimate,
    optimal_ris_size,
    optimal_split_canonical,
    optimal_split_orthogonal,
    rate_canonical,
    rate_orthogonal,
)
from .training import (
    TrainingPlan,
    family_states,
    make_training_plan,
    pilot_matrix,
    stack_training,
)

__version__ = "0.1.0"
