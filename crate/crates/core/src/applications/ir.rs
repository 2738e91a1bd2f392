use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lambda::{ir_target, lambda_of_rho, rho2};
use super::paths::{ir_ratio, ir_value, PathSpec};
use crate::clt_harness::{sigma_limit, CLTReport, FunctionFamily, SigmaLimit, SubordinatedSumSpec};
use crate::error::{Error, Result};
use crate::gaussian_model::{matrix_sqrt, Autocorrelation, StandardizedModel, StationaryModel};
use crate::hermite::{pullback_expansion, HermiteExpansion, QuadSpec};

/// Consecutive pairs of fBm second differences, whitened.
pub fn ir_pair_model(h: f64) -> Result<StandardizedModel<StationaryModel>> {
    StandardizedModel::shared(StationaryModel::new(Autocorrelation::FbmSecondDifference { hurst: h }, 2))
}

/// Polar rule whose arcs break where `S x` has a zero coordinate or a zero
/// coordinate sum.
fn pair_quadrature(s: &DMatrix<f64>) -> QuadSpec {
    let rows = [
        (s[(0, 0)], s[(0, 1)]),
        (s[(1, 0)], s[(1, 1)]),
        (s[(0, 0)] + s[(1, 0)], s[(0, 1)] + s[(1, 1)]),
    ];
    let mut kinks = Vec::new();
    for (a, b) in rows {
        let t = (-a).atan2(b);
        kinks.push(t);
        kinks.push(t + std::f64::consts::PI);
    }
    QuadSpec::Polar {
        kink_angles: kinks,
        radial_nodes: 24,
        nodes_per_arc: 48,
        radius: 10.0,
    }
}

/// Expansion of the centered ratio `ir_ratio(S x) - Lambda` under the
/// whitened pair law, `S = Sigma^{1/2}`.
pub fn ir_pair_expansion(h: f64, order: usize) -> Result<HermiteExpansion> {
    let rho = rho2(h);
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    let s = matrix_sqrt(&sigma)?;
    let lambda = lambda_of_rho(rho);
    pullback_expansion(|y| ir_ratio(y[0], y[1]) - lambda, &s, order, &pair_quadrature(&s))
}

/// Limit variance of `sqrt(n) (R - Lambda(H))` through the tangent pair
/// model; `truncation_bound` records what the finite order may miss.
pub fn ir_sigma_limit(h: f64, order: usize, j_cut: usize) -> Result<SigmaLimit> {
    let model = ir_pair_model(h)?;
    let e = ir_pair_expansion(h, order)?;
    let spec = SubordinatedSumSpec::new(&model, FunctionFamily::fixed(e), 2)?;
    sigma_limit(&spec, 3, j_cut, 1e-6)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrOptions {
    pub expansion_order: usize,
    pub j_cut: usize,
    /// Compute the expansion-based limit variance (constant `H` only).
    pub with_sigma_limit: bool,
}

impl Default for IrOptions {
    fn default() -> Self {
        IrOptions {
            expansion_order: 8,
            j_cut: 200,
            with_sigma_limit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IRExperiment {
    pub path: PathSpec,
    pub target: f64,
    pub mean_r: f64,
    pub mean_r_se: f64,
    /// `(mean_r - target) / mean_r_se`.
    pub standardized_deviation: f64,
    pub sigma_limit: Option<SigmaLimit>,
    pub report: CLTReport,
}

/// CLT summary of `sqrt(n) (R_i - target)`; refuses a degenerate sample.
pub fn ir_clt_from_values(
    path: &PathSpec,
    seed: u64,
    rs: &[f64],
    target: f64,
    sigma_limit: Option<SigmaLimit>,
) -> Result<IRExperiment> {
    let root_n = (path.n as f64).sqrt();
    let zs: Vec<f64> = rs.iter().map(|r| root_n * (r - target)).collect();
    let var = crate::stats::variance(&zs);
    if !(var > 0.0) {
        return Err(Error::ZeroVariance("IR statistic is constant across replicates".into()));
    }
    let sigma2 = sigma_limit.as_ref().map(|s| s.value).filter(|v| *v > 0.0).unwrap_or(var);
    let report = CLTReport::from_values(&format!("ir[{:?}]", path.hurst), path.n, seed, &zs, sigma2, None)?;
    let mean_r = crate::stats::mean(rs);
    let mean_r_se = (crate::stats::variance(rs) / rs.len() as f64).sqrt();
    Ok(IRExperiment {
        path: path.clone(),
        target,
        mean_r,
        mean_r_se,
        standardized_deviation: (mean_r - target) / mean_r_se,
        sigma_limit,
        report,
    })
}

/// Replicated IR statistics on exact paths with seeds `seed + i`.
pub fn ir_replicates(path: &PathSpec, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = path.sampler()?;
    Ok(sampler.map_paths(seed, reps, ir_value))
}

pub fn ir_clt_experiment(path: &PathSpec, reps: usize, seed: u64, opts: &IrOptions) -> Result<IRExperiment> {
    let target = ir_target(&path.hurst)?;
    let rs = ir_replicates(path, reps, seed)?;
    let lim = if opts.with_sigma_limit && path.hurst.is_constant() {
        Some(ir_sigma_limit(path.hurst.at(0.0), opts.expansion_order, opts.j_cut)?)
    } else {
        None
    };
    ir_clt_from_values(path, seed, &rs, target, lim)
}
