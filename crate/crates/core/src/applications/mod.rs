//! The increment-ratio roughness statistic on exactly simulated paths and
//! locally stationary moving averages with their CLT pipeline.

mod ir;
mod lambda;
mod locstat;
mod locstat_clt;
mod paths;

pub use ir::{
    ir_clt_experiment, ir_clt_from_values, ir_pair_expansion, ir_pair_model, ir_replicates, ir_sigma_limit, IRExperiment,
    IrOptions,
};
pub use lambda::{angular_expectation, ir_target, lambda_cross_check, lambda_of_H, lambda_of_rho, rho2, LambdaCheck};
pub use paths::{
    ir_ratio, ir_statistic, ir_value, second_increments, simulate_path, standardized_pairs, HurstCurve, IRResult,
    PathSampler, PathSpec, PATH_LIMIT,
};
pub use locstat::{
    locstat_covariances, simulate_locstat, spectral_density, spectral_grid_len, spectral_quadratic_form, Affine,
    CoefficientTerm, CovarianceGapRow, Kernel, LocStatCovariances, LocStatModel, LocStatSimulator, LocStatSpec,
    TAIL_ENERGY_TOLERANCE,
};
pub use locstat_clt::{
    check_rank_condition, locstat_clt_experiment, tangent_family, LocStatExperiment, LocStatOptions, WindowFunction,
};
