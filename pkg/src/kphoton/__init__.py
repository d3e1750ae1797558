"""Multi-photon two-mode states on a truncated Fock space and their separability."""

__version__ = "0.1.0"

from .fock import (
    DensityReport,
    ModeOperator,
    TruncationConfig,
    TruncationError,
    TwoModeState,
    check_density,
    embed,
    expectation,
    expectation_local,
    make_annihilation,
    make_number,
    partial_trace,
    partial_transpose,
    tensor_op,
)
from .measures import (
    EnergyReport,
    entanglement_entropy,
    mean_energy,
    p_min,
    purity,
    von_neumann_entropy,
)
from .multiphoton import (
    MultiPhotonLadder,
    NotConfinedError,
    QuadratureSet,
    SectorIsometry,
    SectorReport,
    build_U_tilde,
    compress_to_sector,
    detect_sector,
    expand_from_sector,
    infer_k,
    make_A,
    make_quadratures,
)
from .phase_space import (
    CovarianceMatrix,
    GridSpec,
    WignerGrid,
    covariance,
    gaussianity_check,
    moments_k2_formula,
    wigner_multiphoton,
    wigner_single_mode,
)
from .separability import (
    Decision,
    SeparabilityVerdict,
    StandardFormCM,
    assess,
    criterion,
    log_negativity,
    ppt_check,
    standardize,
    validate_standard_form,
)
from .states import (
    SqueezingParam,
    gamma_for_energy,
    mp_thermal,
    mp_tmsv,
    number_distribution,
    product,
    thermal,
    tmsv,
)
