"""Multi-sensor control for multi-target tracking with labeled random finite sets.

Local per-sensor delta-GLMB filters, generalized covariance intersection
fusion, a closed-form Cauchy-Schwarz divergence reward, and joint /
independent decision-making action selectors, plus a seeded Monte Carlo
experiment harness scored with OSPA.
"""

from .core import (
    DeltaGlmbDensity,
    DensityError,
    FusionError,
    GaussianComponent,
    GlmbHypothesis,
    KinematicState,
    LabeledGaussianMixture,
    LmbDensity,
    LmbTrack,
    MDeltaGlmbDensity,
    NumericalError,
    TrackLabel,
    gaussian_pair_integral,
    kronecker_delta,
    multi_target_exponential,
)
from .divergence import HypervolumeUnit, cs_divergence, set_integral_oracle, zeta
from .filter import (
    BirthModel,
    BirthSite,
    FilterParams,
    MotionModel,
    convert_to_lmb,
    map_estimate,
    marginalize_to_mdglmb,
    predict,
    update,
)
from .fusion import FusionWeights, fuse_lmb, fuse_mdglmb, weighted_gm_power_product
from .control import (
    ControlActionGrid,
    ControlConfig,
    ControlModels,
    generate_pims,
    idm_select,
    jdm_select,
    pseudo_predict,
    pseudo_update_local,
    sample_multitarget,
)
from .metrics import OspaParams, ospa
from .world import GroundTruth, Region, SensorModel, apply_action, measure, propagate_targets
from .config import ScenarioConfig, default_scenario
from .harness import run_compare, run_experiment, run_scan_cycle, run_single

__version__ = "0.1.0"
