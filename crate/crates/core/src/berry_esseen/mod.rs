//! Berry–Esseen-type bounds for a fixed function of a Gaussian triangular
//! array, and Monte Carlo distances to compare them with.

mod bounds;
mod empirical;
mod ingredients;

pub use bounds::{
    a2, a3, a4, a5, a6_series, a7, assemble_bounds, default_lag_grid, default_level_grid, BEBoundReport, BoundValue,
    LagRow, LevelRow,
};
pub use empirical::{
    distance_from_values, empirical_distance, interpolation_check, z_grid, DistanceMode, EmpiricalDistance,
    InterpolationCase, MIN_REPS,
};
pub use ingredients::{compute_ingredients, BEIngredients, IndexRange, LAG_HORIZON};

use crate::clt_harness::{sigma_limit, SubordinatedSumSpec};
use crate::error::{Error, Result};

/// Inputs for a full bound computation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BEConfig {
    pub n: usize,
    /// Highest chaos level used by the `N` grid.
    pub n_max: usize,
    pub lipschitz: f64,
    pub sigma_lag_cut: usize,
    pub tau_points: usize,
    pub index_range: IndexRange,
}

impl Default for BEConfig {
    fn default() -> Self {
        BEConfig {
            n: 512,
            n_max: 10,
            lipschitz: 1.0,
            sigma_lag_cut: 200,
            tau_points: 33,
            index_range: IndexRange::Array,
        }
    }
}

/// `sigma_S` from the limit variance, then ingredients and bounds on the
/// default grids. The family must be a single fixed function.
pub fn bound_report(spec: &SubordinatedSumSpec<'_>, cfg: &BEConfig) -> Result<BEBoundReport> {
    if !spec.family.is_fixed() {
        return Err(Error::Precondition("bounds need a fixed function f".into()));
    }
    let f = spec.family.at(0.0);
    let lim = sigma_limit(spec, cfg.tau_points, cfg.sigma_lag_cut, 1e-8)?;
    let ing = compute_ingredients(spec.model, &f, spec.m, cfg.n, cfg.n_max, cfg.lipschitz, cfg.index_range)?;
    assemble_bounds(
        &ing,
        spec.model,
        lim.value.sqrt(),
        &default_level_grid(spec.m, cfg.n_max),
        &default_lag_grid(cfg.n),
        cfg.tau_points,
    )
}

/// `|x| - E|X|` in one dimension, from the closed-form coefficients
/// `J(2k) = sqrt(2/pi) (-1)^{k+1} (2k)! / (2^k k! (2k - 1))`; the residual is exact.
pub fn abs_centered(order: usize) -> Result<crate::hermite::HermiteExpansion> {
    use crate::hermite::{factorial, HermiteExpansion, MultiIndex};
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let coeffs: Vec<(MultiIndex, f64)> = (1..=order / 2)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let j = sign * c * factorial(2 * k) / (2f64.powi(k as i32) * factorial(k) * (2 * k - 1) as f64);
            (MultiIndex::scalar(2 * k as u32), j)
        })
        .collect();
    let mut e = HermiteExpansion::from_coefficients(1, order, coeffs, 0.0)?;
    let residual = 1.0 - 2.0 / std::f64::consts::PI - e.l2_norm_sq();
    e = HermiteExpansion::from_coefficients(1, order, e.coeffs().iter().map(|c| (c.k.clone(), c.j)), residual.max(0.0))?;
    Ok(e)
}
