"""Embeddings of finite metric spaces into Gaussian mixtures.

The package provides the mixture-Wasserstein distance machinery
(closed-form Gaussian couplings plus an exact transportation solver),
constructive and trainable embedding maps into that geometry, baseline
Euclidean / hyperbolic / Fisher-Rao readouts, and distortion / PAC
reporting, behind sklearn-style estimators and a CLI.
"""

from .exceptions import NumericError, ValidationError
from .metric import (
    FiniteMetricSpace,
    LandmarkSet,
    aspect_ratio_and_diameter,
    build_metric_space,
    frechet_landmarks,
    landmark_features,
    metric_capacity_bruteforce,
    snowflake,
)
from .graphs import (
    GraphSpec,
    gen_binary_tree,
    gen_two_hop,
    graph_geodesics,
    read_edge_list,
    spectral_radius,
    write_edge_list,
)
from .spheres import (
    SpherePointSet,
    quasi_uniform_landmarks,
    sphere_distance,
    sphere_metric_space,
    sphere_sample,
)
from .gaussians import (
    Gaussian1D,
    GaussianD,
    GaussianMixture1D,
    GaussianMixtureD,
    mixture_from_json,
    mixture_to_json,
    psd_sqrt,
    w2_gaussian_1d,
    w2_gaussian_d,
)
from .transport import (
    TransportPlan,
    mw2,
    mw2_gradients,
    solve_transport,
    w2_empirical_1d,
    w2_mixture_1d_numeric,
)
from .embedding import (
    BiasVector,
    ConstructiveEmbedder,
    ball_to_empirical,
    constructive_embed,
    empirical_mw2,
    initialize_bias,
    memorize_pt,
)
from .nets import MLPParams, mlp_forward, mlp_param_count
from .transformer import (
    ComplexityReport,
    PTParams,
    complexity_report,
    dimensional_constant,
    effective_dimension,
    param_count,
    pt_forward,
    pt_from_json,
    pt_to_json,
)
from .heads import (
    BaselineParams,
    FisherRaoPoint,
    HyperbolicPoint,
    fisher_rao_distance,
    head_forward,
    hyperbolic_distance,
)
from .training import (
    AdamState,
    TrainConfig,
    TrainReport,
    TransformerEmbedder,
    adam_step,
    embedded_distance,
    gradcheck,
    init_model,
    loss_eval,
    pairwise_embedded_distances,
    train_run,
)
from .analysis import (
    DistortionReport,
    PacCurve,
    distortion_report,
    pac_distortion_from_delta,
    pac_fraction_curve,
    pac_min_delta,
    pac_summary,
    pac_theta_from_distortion,
)
from .experiments import (
    ExperimentBundle,
    run_sphere_experiment,
    run_tree_experiment,
    sphere_dimension_sweep,
)

__version__ = "0.1.0"
