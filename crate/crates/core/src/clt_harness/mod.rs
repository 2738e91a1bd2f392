//! Variance of subordinated sums, the limit variance over a tangent family,
//! Monte Carlo CLT checks and cumulant-decay diagnostics.

mod decay;
mod family;
mod mc;
mod variance;

pub use decay::{cumulant_decay, cumulant_decay_cutoff, CumulantDecayReport, CumulantDecayRow, DECAY_MAX_N};
pub use family::{FunctionFamily, PointFn};
pub use mc::{mc_clt, simulate_sums, CLTReport, HISTOGRAM_BINS};
pub use variance::{
    arcones_psi, cross_expectation, cross_expectation_tol, cross_truncated, integration_weights, sigma_limit,
    sigma_n_detailed, sigma_n_squared, variance_bound_check, SigmaLimit, SigmaN, VarianceBoundReport, VarianceBoundRow,
    CROSS_TOLERANCE, PAIRWISE_LIMIT,
};

use crate::error::{Error, Result};
use crate::gaussian_model::CovarianceModel;

/// Centering tolerance on `J(0)` for family members.
pub const CENTER_TOLERANCE: f64 = 1e-8;

/// A model, a function family on it and the declared Hermite rank.
#[derive(Clone)]
pub struct SubordinatedSumSpec<'a> {
    pub model: &'a dyn CovarianceModel,
    pub family: FunctionFamily,
    pub m: usize,
}

impl<'a> SubordinatedSumSpec<'a> {
    /// Validates dimensions, centering and the declared rank on every grid member.
    pub fn new(model: &'a dyn CovarianceModel, family: FunctionFamily, m: usize) -> Result<Self> {
        if family.nu() != model.nu() {
            return Err(Error::DimensionMismatch {
                expected: model.nu(),
                got: family.nu(),
            });
        }
        if !family.is_centered(CENTER_TOLERANCE) {
            return Err(Error::Precondition("family members must be centered".into()));
        }
        if !family.certify_rank(m) {
            return Err(Error::Precondition(format!("declared rank {m} not certified on the grid")));
        }
        Ok(SubordinatedSumSpec { model, family, m })
    }

    /// Skip the rank certificate (for deliberately misdeclared controls).
    pub fn unchecked(model: &'a dyn CovarianceModel, family: FunctionFamily, m: usize) -> Self {
        SubordinatedSumSpec { model, family, m }
    }
}
