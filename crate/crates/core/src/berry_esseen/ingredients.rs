use serde::{Deserialize, Serialize};

use crate::clt_harness::{sigma_n_detailed, FunctionFamily, SubordinatedSumSpec};
use crate::error::{Error, Result};
use crate::gaussian_model::CovarianceModel;
use crate::hermite::HermiteExpansion;

/// Lags scanned explicitly when locating `K` and summing `theta`.
pub const LAG_HORIZON: usize = 4096;

/// Index range for the level variances `sigma_{l,n}^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IndexRange {
    /// `t, t' = 1..n`, the domain of the array.
    #[default]
    Array,
    /// `t, t' = -n..n` as displayed; stationary models only.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BEIngredients {
    pub n: usize,
    pub nu: usize,
    pub m: usize,
    pub n_max: usize,
    /// `theta(j)` for `j = 0..=n`.
    pub theta_lags: Vec<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub theta: f64,
    /// `(l, sigma_{l,n}^2)` for `l = m..=n_max`.
    pub sigma_levels: Vec<(usize, f64)>,
    /// `gamma[l][e]` for `1 <= e <= l - 1`, zero elsewhere.
    pub gamma: Vec<Vec<f64>>,
    /// `E f_(l)^2` for `l = 0..=order`.
    pub chaos_moments: Vec<f64>,
    pub chaos_residual: f64,
    pub ef2: f64,
    pub lipschitz: f64,
    pub index_range: IndexRange,
}

impl BEIngredients {
    /// `sum_{l > N} E f_(l)^2`, using the expansion residual past its order.
    pub fn chaos_tail(&self, big_n: usize) -> f64 {
        self.chaos_moments.iter().skip(big_n + 1).sum::<f64>() + self.chaos_residual
    }

    pub fn gamma(&self, l: usize, e: usize) -> f64 {
        self.gamma[l][e]
    }

    pub fn level_sum(&self, big_n: usize) -> f64 {
        self.sigma_levels.iter().filter(|(l, _)| *l <= big_n).map(|(_, s)| s).sum()
    }
}

fn theta_at(model: &dyn CovarianceModel, j: usize) -> Result<f64> {
    let v = model
        .envelope(j as i64)
        .ok_or_else(|| Error::Precondition(format!("model {} declares no envelope", model.id())))?;
    Ok(v.abs().min(1.0))
}

fn level_expansion(f: &HermiteExpansion, l: usize) -> Result<HermiteExpansion> {
    HermiteExpansion::from_coefficients(f.nu(), l, f.level(l).map(|c| (c.k.clone(), c.j)), 0.0)
}

fn level_variance(model: &dyn CovarianceModel, f: &HermiteExpansion, l: usize, n: usize, range: IndexRange) -> Result<f64> {
    let e = level_expansion(f, l)?;
    if e.l2_norm_sq() == 0.0 {
        return Ok(0.0);
    }
    let spec = SubordinatedSumSpec::unchecked(model, FunctionFamily::fixed(e), l);
    match range {
        IndexRange::Array => Ok(sigma_n_detailed(&spec, n)?.value),
        IndexRange::Symmetric => {
            if !model.is_stationary() {
                return Err(Error::Precondition("symmetric index range needs a stationary model".into()));
            }
            // 2n + 1 consecutive indices, normalized by n
            let s = sigma_n_detailed(&spec, 2 * n + 1)?.value;
            Ok(s * (2 * n + 1) as f64 / n as f64)
        }
    }
}

/// Every quantity the bounds are assembled from, for a fixed centered `f`
/// and levels up to `n_max`.
pub fn compute_ingredients(
    model: &dyn CovarianceModel,
    f: &HermiteExpansion,
    m: usize,
    n: usize,
    n_max: usize,
    lipschitz: f64,
    range: IndexRange,
) -> Result<BEIngredients> {
    if f.nu() != model.nu() {
        return Err(Error::DimensionMismatch {
            expected: model.nu(),
            got: f.nu(),
        });
    }
    if n_max < m || n_max > f.order() {
        return Err(Error::OutOfRange(format!(
            "level cap {n_max} must lie in [m = {m}, expansion order {}]",
            f.order()
        )));
    }
    if m == 0 {
        return Err(Error::OutOfRange("rank m must be positive".into()));
    }
    let nu = model.nu();
    let horizon = LAG_HORIZON.max(n);
    let lags = (0..=horizon).map(|j| theta_at(model, j)).collect::<Result<Vec<f64>>>()?;
    let inv_nu = 1.0 / nu as f64;
    let tail = model
        .envelope_tail(m as u32, horizon)
        .ok_or_else(|| Error::Precondition(format!("model {} declares no envelope tail", model.id())))?;
    // a tail sum below nu^{-m} bounds every single term beyond the horizon
    if tail > inv_nu.powi(m as i32) {
        return Err(Error::TailTooLarge {
            bound: tail,
            tolerance: inv_nu.powi(m as i32),
        });
    }
    let k = lags
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, t)| **t > inv_nu)
        .map(|(j, _)| j + 1)
        .max()
        .unwrap_or(1);
    let theta = 1.0 + 2.0 * lags[1..].iter().map(|t| t.powi(m as i32)).sum::<f64>() + tail;

    let partial = |e: usize| -> f64 { 1.0 + 2.0 * lags[1..=n].iter().map(|t| t.powi(e as i32)).sum::<f64>() };
    let sums: Vec<f64> = (0..=n_max).map(|e| if e == 0 { 0.0 } else { partial(e) }).collect();
    let mut gamma = vec![vec![0.0; n_max + 1]; n_max + 1];
    for (l, row) in gamma.iter_mut().enumerate().skip(2) {
        for (e, g) in row.iter_mut().enumerate().take(l).skip(1) {
            *g = (2.0 * theta * (sums[e] * sums[l - e]) / n as f64).sqrt();
        }
    }

    let sigma_levels = (m..=n_max)
        .map(|l| Ok((l, level_variance(model, f, l, n, range)?)))
        .collect::<Result<Vec<_>>>()?;
    let chaos_moments: Vec<f64> = (0..=f.order()).map(|l| f.level_mass(l)).collect();
    Ok(BEIngredients {
        n,
        nu,
        m,
        n_max,
        theta_lags: lags[..=n].to_vec(),
        k,
        theta,
        sigma_levels,
        gamma,
        chaos_moments,
        chaos_residual: f.residual(),
        ef2: f.full_norm_sq(),
        lipschitz,
        index_range: range,
    })
}
