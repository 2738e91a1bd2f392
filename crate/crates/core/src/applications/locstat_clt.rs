use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::locstat::{locstat_covariances, LocStatModel, LocStatSimulator, LocStatSpec, TAIL_ENERGY_TOLERANCE};
use crate::clt_harness::{sigma_limit, CLTReport, FunctionFamily, SigmaLimit, SubordinatedSumSpec};
use crate::error::{Error, Result};
use crate::gaussian_model::{matrix_sqrt, CovarianceModel, StandardizedModel};
use crate::hermite::{HermiteExpansion, MultiIndex};

/// Centered functions of a window `y = Y_n(k)` with covariance `Sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowFunction {
    /// `y_1`
    Linear,
    /// `y_1^2 - Sigma_11`
    Square,
    /// `y_1 y_2 - Sigma_12`
    Product,
}

impl WindowFunction {
    pub fn eval(&self, y: &[f64], sigma: &DMatrix<f64>) -> f64 {
        match self {
            WindowFunction::Linear => y[0],
            WindowFunction::Square => y[0] * y[0] - sigma[(0, 0)],
            WindowFunction::Product => y[0] * y[1] - sigma[(0, 1)],
        }
    }

    fn min_window(&self) -> usize {
        match self {
            WindowFunction::Product => 2,
            _ => 1,
        }
    }

    /// Exact Hermite expansion of `x -> f(S x)` for `x` standard normal,
    /// `S = Sigma^{1/2}`.
    pub fn pullback(&self, s: &DMatrix<f64>) -> Result<HermiteExpansion> {
        let nu = s.nrows();
        let e = |i: usize| {
            let mut v = vec![0u32; nu];
            v[i] += 1;
            v
        };
        let ee = |i: usize, j: usize| {
            let mut v = vec![0u32; nu];
            v[i] += 1;
            v[j] += 1;
            MultiIndex::new(v)
        };
        let mut coeffs: Vec<(MultiIndex, f64)> = Vec::new();
        match self {
            WindowFunction::Linear => {
                for a in 0..nu {
                    coeffs.push((MultiIndex::new(e(a)), s[(0, a)]));
                }
                return HermiteExpansion::from_coefficients(nu, 1, coeffs, 0.0);
            }
            WindowFunction::Square | WindowFunction::Product => {
                let (r0, r1) = if *self == WindowFunction::Square { (0, 0) } else { (0, 1) };
                // (S x)_r0 (S x)_r1 minus its mean; x_a x_b = H_{e_a + e_b} + delta_ab
                for a in 0..nu {
                    for b in a..nu {
                        let c = if a == b {
                            // H_2 = x^2 - 1 has J = 2 per unit coefficient
                            2.0 * s[(r0, a)] * s[(r1, a)]
                        } else {
                            s[(r0, a)] * s[(r1, b)] + s[(r0, b)] * s[(r1, a)]
                        };
                        coeffs.push((ee(a, b), c));
                    }
                }
            }
        }
        HermiteExpansion::from_coefficients(nu, 2, coeffs, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocStatOptions {
    pub tau_points: usize,
    pub tail_tolerance: f64,
}

impl Default for LocStatOptions {
    fn default() -> Self {
        LocStatOptions {
            tau_points: 33,
            tail_tolerance: TAIL_ENERGY_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocStatExperiment {
    pub spec: LocStatSpec,
    pub function: WindowFunction,
    pub m: usize,
    pub sigma_limit: SigmaLimit,
    pub continuity_modulus: f64,
    pub sup_gap: f64,
    pub g_min: f64,
    pub report: CLTReport,
}

/// The rank condition `m (1 - 2 alpha) > 1`.
pub fn check_rank_condition(m: usize, alpha: f64) -> Result<()> {
    let threshold = 1.0 / (1.0 - 2.0 * alpha);
    if alpha >= 0.5 || (m as f64) <= threshold {
        return Err(Error::Precondition(format!(
            "rank condition m > 1/(1 - 2 alpha) violated: m = {m}, 1/(1 - 2 alpha) = {threshold:.4}"
        )));
    }
    Ok(())
}

/// The tangent family `phi_tau` on a uniform grid, pulled back to whitened inputs.
pub fn tangent_family(model: &LocStatModel, function: WindowFunction, tau_points: usize) -> Result<FunctionFamily> {
    let taus: Vec<f64> = (0..tau_points).map(|i| i as f64 / (tau_points - 1) as f64).collect();
    let exps = taus
        .iter()
        .map(|&t| function.pullback(&matrix_sqrt(&model.tangent(t, 0).unwrap())?))
        .collect::<Result<Vec<_>>>()?;
    FunctionFamily::curve(taus, exps)
}

/// `n^{-1/2} sum_k f(Y_n(k))` for one draw of the windowed array.
fn window_sum(x: &[f64], n: usize, nu: usize, function: WindowFunction, marginals: &[DMatrix<f64>]) -> f64 {
    (0..n).map(|k| function.eval(&x[k..k + nu], &marginals[k])).sum::<f64>() / (n as f64).sqrt()
}

/// Whitened windows of the moving average, the tangent-family limit
/// variance and a Monte Carlo CLT check against it.
pub fn locstat_clt_experiment(
    spec: &LocStatSpec,
    function: WindowFunction,
    m: usize,
    n: usize,
    reps: usize,
    seed: u64,
    opts: &LocStatOptions,
) -> Result<LocStatExperiment> {
    check_rank_condition(m, spec.alpha)?;
    if spec.window < function.min_window() {
        return Err(Error::OutOfRange(format!("{function:?} needs a window of at least {}", function.min_window())));
    }
    let model = LocStatModel::new(spec.clone())?;
    let nu = spec.window;
    let taus: Vec<f64> = (0..opts.tau_points).map(|i| i as f64 / (opts.tau_points - 1) as f64).collect();
    let cov = locstat_covariances(&model, n, &taus)?;
    let family = tangent_family(&model, function, opts.tau_points)?;
    let continuity_modulus = family.continuity_modulus();
    let white = StandardizedModel::per_row(model.clone(), n)?;
    let sum_spec = SubordinatedSumSpec::new(&white, family, m)?;
    let lim = sigma_limit(&sum_spec, opts.tau_points, spec.j_max + nu, 1e-8)?;

    let marginals: Vec<DMatrix<f64>> = (0..n).map(|k| model.marginal(n, k)).collect();
    let sim = LocStatSimulator::new(spec, n, nu - 1, opts.tail_tolerance)?;
    let zs: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|i| window_sum(&sim.sample(seed.wrapping_add(i)), n, nu, function, &marginals))
        .collect();
    let report = CLTReport::from_values(&model.id(), n, seed, &zs, lim.value, None)?;
    Ok(LocStatExperiment {
        spec: spec.clone(),
        function,
        m,
        sigma_limit: lim,
        continuity_modulus,
        sup_gap: cov.sup_gap,
        g_min: cov.g_min,
        report,
    })
}
