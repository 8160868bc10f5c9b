"""Log determinants of large sparse SPD matrices via maximum-entropy spectral densities."""

from .estimator import (
    EntropySweep,
    EstimationError,
    ICReport,
    LogDetEstimate,
    error_bound,
    informativeness,
    logdet,
    select_moment_count,
)
from .matio import (
    CsrMatrix,
    MatrixMarketError,
    NormalizationFactor,
    gershgorin_bound,
    matvec,
    parse_matrix_market,
    read_matrix_market,
    write_matrix_market,
)
from .maxent import (
    Grid,
    GridDensity,
    MaxEntDensity,
    MaxEntError,
    MaxEntReport,
    entropy,
    kl_divergence,
    solve_maxent,
    total_variation_bound,
)
from .probe import MomentSet, ProbeConfig, estimate_moments, sample_adequacy_ratio

__version__ = "0.1.0"
