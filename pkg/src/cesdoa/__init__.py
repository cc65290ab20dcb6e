"""Monte Carlo benchmark of DOA estimators against semiparametric CRBs.

Library layout:

- :mod:`cesdoa.ces` -- CES snapshot model (density generators, sampling)
- :mod:`cesdoa.geometry` -- ULA steering vectors and structured scatter
- :mod:`cesdoa.bounds` -- stochastic and semiparametric stochastic CRBs
- :mod:`cesdoa.scatter` -- SCM, NSCM, Kendall tau, Tyler, Huber estimators
- :mod:`cesdoa.doa` -- MUSIC and IAA-APES frequency estimators
- :mod:`cesdoa.harness` -- seeded Monte Carlo sweeps
- :mod:`cesdoa.cli` -- ``cesdoa`` command-line entry point
"""

from .ces import (
    DensityGenerator,
    Gaussian,
    GeneralizedGaussian,
    SnapshotSet,
    StudentT,
    density_h,
    expected_q2psi2,
    expected_q2psi2_numeric,
    modular_pdf,
    psi,
    sample_modular_variate,
    sample_snapshots,
    sample_uniform_sphere,
)
from .geometry import (
    SourceScenario,
    build_scatter,
    orthogonal_projector,
    steering_derivative,
    steering_matrix,
    steering_vector,
)
from .bounds import BoundResult, bound_index, c_matrix, scrb, sscrb
from .scatter import (
    HuberTuning,
    ScatterEstimate,
    huber,
    huber_tuning,
    kendall_tau_scm,
    m_fixed_point,
    nscm,
    scm,
    spatial_sign,
    tyler,
)
from .doa import (
    DoaEstimate,
    FrequencyGrid,
    iaa_apes_estimate,
    match_frequencies,
    music_estimate,
    music_pseudospectrum,
    pick_peaks,
)
from .harness import (
    ESTIMATOR_NAMES,
    ExperimentConfig,
    ShapeSweep,
    SnrSweep,
    SweepResult,
    SweepRow,
    mse_index,
    run_sweep,
    run_trial,
)

__version__ = "0.1.0"
