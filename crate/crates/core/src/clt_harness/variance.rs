use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SubordinatedSumSpec;
use crate::error::{Error, Result};
use crate::hermite::HermiteExpansion;
use crate::moment_bounds::no_upward_trend;
use crate::wick_diagrams::product_expectation;

/// Default cap on the truncation tail allowed in [`cross_expectation`].
pub const CROSS_TOLERANCE: f64 = 1e-8;

/// Largest `n` for the pairwise `sigma_n^2` sum on non-stationary inputs.
pub const PAIRWISE_LIMIT: usize = 8192;

/// Arcones' `psi`: largest absolute row or column sum of `c`.
pub fn arcones_psi(c: &DMatrix<f64>) -> f64 {
    let rows = c.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>());
    let cols = c.column_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Truncated `E f(X) g(X')` with `E X X'^T = c`, plus a bound on the part
/// carried by the chaos levels above the truncation order.
pub fn cross_truncated(f: &HermiteExpansion, g: &HermiteExpansion, c: &DMatrix<f64>) -> Result<(f64, f64)> {
    let nu = f.nu();
    if g.nu() != nu || c.nrows() != nu || c.ncols() != nu {
        return Err(Error::DimensionMismatch {
            expected: nu,
            got: c.nrows(),
        });
    }
    let value = product_expectation(&[f, g], |_, _, a, b| c[(a, b)])?;
    // levels above N only pair with levels above N; Cauchy-Schwarz or Arcones
    let psi = arcones_psi(c).min(1.0);
    let order = f.order().min(g.order()) as i32;
    let tail = (f.residual() * g.residual()).sqrt() * psi.powi(order + 1);
    Ok((value, tail))
}

/// `E[f(X) g(X')]` for standardized `X, X'` with cross-covariance `c`.
pub fn cross_expectation(f: &HermiteExpansion, g: &HermiteExpansion, c: &DMatrix<f64>) -> Result<f64> {
    cross_expectation_tol(f, g, c, CROSS_TOLERANCE)
}

pub fn cross_expectation_tol(f: &HermiteExpansion, g: &HermiteExpansion, c: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let (value, tail) = cross_truncated(f, g, c)?;
    if tail > tol {
        return Err(Error::ResidualTooLarge { residual: tail, tolerance: tol });
    }
    Ok(value)
}

/// `sigma_n^2` with the accumulated truncation bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaN {
    pub n: usize,
    pub value: f64,
    pub truncation_bound: f64,
}

fn is_zero_block(c: &DMatrix<f64>) -> bool {
    c.iter().all(|&x| x == 0.0)
}

/// Pair term for distinct rows: exact zero blocks reduce to a product of means.
fn pair_term(f: &HermiteExpansion, g: &HermiteExpansion, c: &DMatrix<f64>) -> Result<(f64, f64)> {
    if is_zero_block(c) {
        return Ok((f.mean() * g.mean(), 0.0));
    }
    cross_truncated(f, g, c)
}

/// `Var(n^{-1/2} sum_k f_{k,n}(X_n(k)))` computed from the diagram formula.
pub fn sigma_n_squared(spec: &SubordinatedSumSpec<'_>, n: usize) -> Result<f64> {
    let s = sigma_n_detailed(spec, n)?;
    let tol = 1e-6 * s.value.abs().max(1.0);
    if s.truncation_bound > tol {
        return Err(Error::ResidualTooLarge {
            residual: s.truncation_bound,
            tolerance: tol,
        });
    }
    Ok(s.value)
}

pub fn sigma_n_detailed(spec: &SubordinatedSumSpec<'_>, n: usize) -> Result<SigmaN> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be positive".into()));
    }
    let model = spec.model;
    if spec.family.is_fixed() && model.is_stationary() {
        let f = spec.family.at(0.0);
        let lag_terms = (1..n)
            .into_par_iter()
            .map(|j| pair_term(&f, &f, &model.cross_block(n, 0, j)))
            .collect::<Result<Vec<_>>>()?;
        let mut value = f.full_norm_sq();
        let mut bound = 0.0;
        for (j, (v, t)) in lag_terms.iter().enumerate() {
            let w = 2.0 * (n - j - 1) as f64 / n as f64;
            value += w * v;
            bound += w * t;
        }
        return Ok(SigmaN {
            n,
            value,
            truncation_bound: bound,
        });
    }
    if n > PAIRWISE_LIMIT {
        return Err(Error::SizeLimit {
            what: "n (pairwise sigma_n^2)",
            size: n,
            limit: PAIRWISE_LIMIT,
        });
    }
    let fs: Vec<HermiteExpansion> = (0..n).map(|k| spec.family.for_index(k, n)).collect();
    let rows = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut v = fs[k].full_norm_sq();
            let mut t = 0.0;
            for k2 in k + 1..n {
                if model.envelope(k2 as i64 - k as i64) == Some(0.0) && fs[k].mean() == 0.0 {
                    continue;
                }
                let (a, b) = pair_term(&fs[k], &fs[k2], &model.cross_block(n, k, k2))?;
                v += 2.0 * a;
                t += 2.0 * b;
            }
            Ok((v, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let (value, bound) = rows.iter().fold((0.0, 0.0), |(a, b), (v, t)| (a + v, b + t));
    Ok(SigmaN {
        n,
        value: value / n as f64,
        truncation_bound: bound / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBoundRow {
    pub n: usize,
    pub sigma_n2: f64,
    pub max_norm_sq: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBoundReport {
    pub model: String,
    pub m: usize,
    pub rows: Vec<VarianceBoundRow>,
    pub trend_factor: f64,
    pub bounded: bool,
}

/// `sigma_n^2 / max_k ||f_{k,n}||^2` over `n_list`, with a trend verdict.
pub fn variance_bound_check(spec: &SubordinatedSumSpec<'_>, n_list: &[usize], trend_factor: f64) -> Result<VarianceBoundReport> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let s = sigma_n_detailed(spec, n)?;
        let max_norm_sq = if spec.family.is_fixed() {
            spec.family.max_norm_sq()
        } else {
            (0..n).map(|k| spec.family.for_index(k, n).full_norm_sq()).fold(0.0, f64::max)
        };
        rows.push(VarianceBoundRow {
            n,
            sigma_n2: s.value,
            max_norm_sq,
            ratio: s.value / max_norm_sq,
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    Ok(VarianceBoundReport {
        model: spec.model.id(),
        m: spec.m,
        bounded: no_upward_trend(&ratios, trend_factor),
        rows,
        trend_factor,
    })
}

/// `sigma^2` of the limit law with the per-`tau` integrand and the
/// envelope bound on the lags beyond the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaLimit {
    pub value: f64,
    pub j_cut: usize,
    pub tail_bound: f64,
    pub truncation_bound: f64,
    pub integrand: Vec<(f64, f64)>,
}

/// Composite Simpson weights on a uniform grid of odd length; trapezoid
/// weights otherwise.
pub fn integration_weights(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    let h = 1.0 / (points - 1) as f64;
    if points % 2 == 1 {
        (0..points)
            .map(|i| {
                let c = if i == 0 || i == points - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    } else {
        (0..points)
            .map(|i| if i == 0 || i == points - 1 { h / 2.0 } else { h })
            .collect()
    }
}

fn tangent_block(spec: &SubordinatedSumSpec<'_>, tau: f64, lag: i64) -> Result<DMatrix<f64>> {
    spec.model
        .tangent(tau, lag)
        .ok_or_else(|| Error::Precondition(format!("model {} declares no tangent process", spec.model.id())))
}

/// `sum_{|j| <= j_cut} E phi_tau(W_tau(0)) phi_tau(W_tau(j))` and its truncation bound.
fn integrand(spec: &SubordinatedSumSpec<'_>, tau: f64, j_cut: usize) -> Result<(f64, f64)> {
    let phi = spec.family.at(tau);
    let c0 = tangent_block(spec, tau, 0)?;
    let dev = (&c0 - DMatrix::identity(c0.nrows(), c0.ncols())).abs().max();
    if dev > 1e-8 {
        return Err(Error::NotStandardized { index: 0, deviation: dev });
    }
    let lags = (1..=j_cut)
        .into_par_iter()
        .map(|j| Ok::<_, Error>(pair_term(&phi, &phi, &tangent_block(spec, tau, j as i64)?)?))
        .collect::<Result<Vec<_>>>()?;
    let (v, t) = lags.iter().fold((0.0, 0.0), |(a, b), (v, t)| (a + v, b + t));
    Ok((phi.full_norm_sq() + 2.0 * v, 2.0 * t))
}

/// `int_0^1 sum_j E phi_tau(W_tau(0)) phi_tau(W_tau(j)) dtau` on a uniform
/// grid of `tau_points` points, lags cut at `j_cut`.
pub fn sigma_limit(spec: &SubordinatedSumSpec<'_>, tau_points: usize, j_cut: usize, tol: f64) -> Result<SigmaLimit> {
    let model = spec.model;
    let tail_sum = model.envelope_tail(spec.m as u32, j_cut).ok_or_else(|| {
        Error::Precondition(format!("model {} declares no envelope tail", model.id()))
    })?;
    let nu_m = (model.nu() as f64).powi(spec.m as i32);
    let stationary = spec.family.is_fixed() && model.is_stationary();
    let taus: Vec<f64> = if stationary {
        vec![0.0]
    } else {
        (0..tau_points).map(|i| i as f64 / (tau_points - 1) as f64).collect()
    };
    let tail_bound = nu_m * spec.family.max_norm_sq() * tail_sum;
    if tail_bound > tol {
        return Err(Error::TailTooLarge { bound: tail_bound, tolerance: tol });
    }
    let mut integrand_vals = Vec::with_capacity(taus.len());
    let mut trunc = 0.0f64;
    for &tau in &taus {
        let (v, t) = integrand(spec, tau, j_cut)?;
        integrand_vals.push((tau, v));
        trunc = trunc.max(t);
    }
    let value = if stationary {
        integrand_vals[0].1
    } else {
        integration_weights(taus.len())
            .iter()
            .zip(&integrand_vals)
            .map(|(w, (_, v))| w * v)
            .sum()
    };
    Ok(SigmaLimit {
        value,
        j_cut,
        tail_bound,
        truncation_bound: trunc,
        integrand: integrand_vals,
    })
}
