"""Ensemble transform Kalman filtering with stochastic covariance shrinkage.

Small dynamic ensembles underestimate forecast spread and lose rank; the
filters here blend the dynamic ensemble with synthetic members drawn from a
scaled climatological covariance, with the blend weight chosen by classical
shrinkage estimators.  A Lorenz '96 twin-experiment harness, verification
metrics, and a CLI round out the package.
"""

from .climatology import (
    SyntheticEnsembleSpec,
    TargetCovariance,
    generate_climatology,
    sample_synthetic,
    scaling_mu,
    whiten,
)
from .config import ExperimentConfig, load_config
from .ensemble import (
    AnomalySet,
    Ensemble,
    ObservationOperator,
    ObservationRecord,
    decompose,
    inflate,
    observe,
)
from .errors import (
    ConfigError,
    DegenerateClimatologyError,
    EmptyHistogramError,
    EnsembleSizeError,
    EnshrinkError,
    GammaBoundError,
    InflationError,
    IntegrationBlowupError,
    InvalidScaleError,
    ModelDimensionError,
    ObservationOperatorError,
    SingularInnovationError,
    UnsupportedRError,
    ZeroCovarianceError,
)
from .filters import (
    ExtendedAnomalySet,
    FilterConfig,
    TransformResult,
    build_extended,
    etkf_analysis,
    letkf_analysis,
    run_analysis,
    shrinkage_etkf_analysis,
    split_shrinkage_analysis,
)
from .harness import (
    ExperimentResult,
    ReplicateResult,
    run_replicate,
    run_sweep,
    run_twin_experiment,
    write_results,
)
from .linalg import symmetric_sqrt
from .metrics import (
    RankHistogram,
    RunMetrics,
    kl_from_uniform,
    rank_histogram,
    spatiotemporal_rmse,
)
from .models import (
    ModelConfig,
    ModelErrorSpec,
    ModelState,
    forecast_ensemble,
    forecast_member,
    lorenz96_tendency,
    rk4_step,
)
from .presets import get_preset, list_presets
from .shrinkage import (
    GammaPolicy,
    ShrinkageEstimate,
    closed_form_gamma,
    rblw_gamma,
    sphericity,
)
from .taper import gaspari_cohn, operational, ring_distance, taper_weights

__version__ = "0.1.0"
