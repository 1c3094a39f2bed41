"""Train small GANs on a 2D Gaussian-grid benchmark and filter their samples
by rejection sampling on discriminator logits."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ContractError,
    DrsLabError,
    EnvelopeError,
    LowAcceptanceError,
    NumericError,
    SupportError,
    TrainingDivergedError,
)
from .mixtures import (
    MixtureSpec,
    PriorSpec,
    make_grid_mixture,
    mixture_density,
    mixture_log_density,
    mixture_sample,
    optimal_logit,
    prior_sample,
)
from .nets import (
    AdamHyper,
    AdamState,
    LayerSpec,
    NetworkParams,
    adam_step,
    backward,
    forward,
    init_adam,
    init_network,
    load_checkpoint,
    mlp_spec,
    save_checkpoint,
)
from .numerics import log1mexp, log_sigmoid, sigmoid, softplus
from .rejection import (
    DRSConfig,
    DRSResult,
    MaxEstimate,
    SampleLog,
    SampleRecord,
    acceptance_prob,
    burn_in,
    density_ratio,
    drs_sample,
    exact_rejection_sample,
    f_hat,
    hard_threshold_filter,
    nearest_rank_percentile,
    select_gamma,
    threshold_for_rate,
)
from .training import (
    CalibratedCritic,
    CalibrationConfig,
    KeepTrainingConfig,
    TrainConfig,
    TrainedGAN,
    direct_critic,
    fit_calibration_layer,
    generator_sampler,
    hinge_d_loss,
    hinge_g_loss,
    keep_training,
    network_critic,
    ns_d_loss,
    ns_g_loss,
    train_gan,
)
from .metrics import (
    EvalReport,
    HistogramResult,
    InterpolationTrace,
    ModeAssignments,
    SweepPoint,
    acceptance_rate_sweep,
    acceptance_vs_quality_scatter,
    assign_modes,
    evaluate_samples,
    ground_truth_report,
    hq_fraction,
    hq_residual_std,
    histogram,
    interpolation_trace,
    recovered_modes,
    within_k_std_table,
)
from .experiments import (
    ExperimentConfig,
    MixtureParams,
    child_rng,
    child_seed,
    load_config,
    run_ablation,
    run_experiment,
    run_interp,
    run_oracle,
    run_sweep,
    run_table1,
)

__all__ = [
    "AdamHyper", "AdamState", "CalibratedCritic", "CalibrationConfig", "ConfigError",
    "ContractError", "DRSConfig", "DRSResult", "DrsLabError", "EnvelopeError", "EvalReport",
    "ExperimentConfig", "HistogramResult", "InterpolationTrace", "KeepTrainingConfig",
    "LayerSpec", "LowAcceptanceError", "MaxEstimate",
    "MixtureParams", "MixtureSpec", "ModeAssignments", "NetworkParams", "NumericError",
    "PriorSpec", "SampleLog", "SampleRecord", "SupportError", "SweepPoint", "TrainConfig",
    "TrainedGAN",
    "TrainingDivergedError", "acceptance_prob", "acceptance_rate_sweep",
    "acceptance_vs_quality_scatter", "adam_step", "assign_modes", "backward", "burn_in",
    "child_rng", "child_seed", "density_ratio", "direct_critic", "drs_sample",
    "evaluate_samples", "exact_rejection_sample", "f_hat", "fit_calibration_layer", "forward",
    "generator_sampler", "ground_truth_report", "hard_threshold_filter", "hinge_d_loss",
    "hinge_g_loss", "histogram",
    "hq_fraction", "hq_residual_std", "init_adam", "init_network", "interpolation_trace",
    "keep_training", "load_checkpoint", "load_config", "log1mexp", "log_sigmoid",
    "make_grid_mixture", "mixture_density", "mixture_log_density", "mixture_sample", "mlp_spec",
    "nearest_rank_percentile", "network_critic", "ns_d_loss", "ns_g_loss", "optimal_logit",
    "prior_sample", "recovered_modes", "run_ablation", "run_experiment", "run_interp",
    "run_oracle", "run_sweep", "run_table1", "save_checkpoint", "select_gamma", "sigmoid",
    "softplus", "threshold_for_rate", "train_gan", "within_k_std_table",
]
