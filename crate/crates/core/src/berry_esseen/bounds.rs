use serde::{Deserialize, Serialize};

use super::ingredients::BEIngredients;
use crate::error::{Error, Result};
use crate::gaussian_model::{spectral_norm, CovarianceModel};
use crate::hermite::poly::{binomial, factorial};

/// `2 (2K + nu^m theta) (E f^2 sum_{l > N} E f_(l)^2)^{1/2}`.
pub fn a2(ing: &BEIngredients, big_n: usize) -> Result<f64> {
    let tail = ing.chaos_tail(big_n);
    if !(tail >= 0.0) || !tail.is_finite() {
        return Err(Error::NegativeResidual {
            residual: tail,
            tolerance: 0.0,
        });
    }
    let nu_m = (ing.nu as f64).powi(ing.m as i32);
    Ok(2.0 * (2.0 * ing.k as f64 + nu_m * ing.theta) * (ing.ef2 * tail).sqrt())
}

pub fn a3(ing: &BEIngredients, big_n: usize) -> f64 {
    let nu = ing.nu as f64;
    let mut acc = 0.0;
    for l in ing.m..=big_n {
        let inner: f64 = (1..l)
            .map(|j| {
                j as f64 * factorial(j) * binomial(l, j).powi(2) * factorial(2 * l - 2 * j).sqrt() * ing.gamma(l, j)
            })
            .sum();
        acc += nu.powi(l as i32) / factorial(l) * inner;
    }
    0.5 * ing.ef2 * acc
}

pub fn a4(ing: &BEIngredients, big_n: usize) -> f64 {
    let nu = ing.nu as f64;
    let mut acc = 0.0;
    for l in ing.m..=big_n {
        for lp in l + 1..=big_n {
            let (lf, lpf) = (l as f64, lp as f64);
            acc += nu.powf(lpf / 2.0)
                * (factorial(lp) / factorial(l) * (lf + lpf) / lf).sqrt()
                * binomial(lp - 1, l - 1)
                * (factorial(lp - l) * ing.gamma(lp, lp - l)).sqrt();
        }
    }
    0.5 * ing.ef2 * acc
}

pub fn a5(ing: &BEIngredients, big_n: usize) -> f64 {
    let nu = ing.nu as f64;
    let mut acc = 0.0;
    for l in ing.m..=big_n {
        for lp in l + 1..=big_n {
            let inner: f64 = (1..l)
                .map(|j| {
                    factorial(j - 1)
                        * binomial(l - 1, j - 1)
                        * binomial(lp - 1, j - 1)
                        * factorial(l + lp - 2 * j).sqrt()
                        * (nu.powi(l as i32) / factorial(l) * ing.gamma(l, l - j)
                            + nu.powi(lp as i32) / factorial(lp) * ing.gamma(lp, lp - j))
                })
                .sum();
            acc += (l + lp) as f64 * inner;
        }
    }
    ing.ef2 / (2.0 * std::f64::consts::SQRT_2) * acc
}

/// `1/2 E f^2 nu^m sum_{|k| > J} theta(k)^m`.
pub fn a7(ing: &BEIngredients, model: &dyn CovarianceModel, j_cut: usize) -> Result<f64> {
    let tail = model
        .envelope_tail(ing.m as u32, j_cut)
        .ok_or_else(|| Error::Precondition(format!("model {} declares no envelope tail", model.id())))?;
    Ok(0.5 * ing.ef2 * (ing.nu as f64).powi(ing.m as i32) * tail)
}

/// `A_6` for every `J` in `j_grid` (ascending): half the squared Lipschitz
/// constant times the sup over the `tau` grid of summed covariance gaps
/// between the array at row `[n tau]` and the tangent process.
pub fn a6_series(ing: &BEIngredients, model: &dyn CovarianceModel, tau_points: usize, j_grid: &[usize]) -> Result<Vec<f64>> {
    let n = ing.n;
    let j_max = j_grid.iter().copied().max().unwrap_or(0);
    let mut sup = vec![0.0f64; j_grid.len()];
    for i in 0..tau_points {
        let tau = i as f64 / (tau_points - 1).max(1) as f64;
        // one-based row [n tau] clamped into 1..n, then zero-based
        let k0 = ((n as f64 * tau).floor() as usize).clamp(1, n) - 1;
        let mut by_lag = vec![0.0; j_max + 1];
        for (a, slot) in by_lag.iter_mut().enumerate() {
            for lag in if a == 0 { vec![0i64] } else { vec![a as i64, -(a as i64)] } {
                let k1 = k0 as i64 + lag;
                if k1 < 0 || k1 >= n as i64 {
                    continue;
                }
                let tangent = model
                    .tangent(tau, lag)
                    .ok_or_else(|| Error::Precondition(format!("model {} declares no tangent process", model.id())))?;
                *slot += spectral_norm(&(model.cross_block(n, k0, k1 as usize) - tangent));
            }
        }
        let mut cum = 0.0;
        let mut gi = 0;
        let mut order: Vec<(usize, usize)> = j_grid.iter().copied().enumerate().map(|(p, j)| (j, p)).collect();
        order.sort();
        for (a, v) in by_lag.iter().enumerate() {
            cum += v;
            while gi < order.len() && order[gi].0 == a {
                sup[order[gi].1] = sup[order[gi].1].max(cum);
                gi += 1;
            }
        }
    }
    Ok(sup.into_iter().map(|s| 0.5 * ing.lipschitz * ing.lipschitz * s).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    #[serde(rename = "N")]
    pub big_n: usize,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub level_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagRow {
    #[serde(rename = "J")]
    pub j: usize,
    pub a6: f64,
    pub a7: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(rename = "J")]
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BEBoundReport {
    pub model: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub theta: f64,
    pub sigma_s: f64,
    pub ef2: f64,
    pub levels: Vec<LevelRow>,
    pub lags: Vec<LagRow>,
    /// Unit `|h''|_inf`.
    pub smooth: BoundValue,
    /// Unit `|h'|_inf`.
    pub lipschitz: BoundValue,
    pub kolmogorov: BoundValue,
}

/// Default `N` grid `m..=m+8`, capped by the level cap.
pub fn default_level_grid(m: usize, n_max: usize) -> Vec<usize> {
    (m..=(m + 8).min(n_max)).collect()
}

/// Default `J` grid: powers of two up to `n`, and `n` itself.
pub fn default_lag_grid(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |j| Some(j * 2)).take_while(|&j| j < n).collect();
    out.push(n);
    out
}

fn argmin(values: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    values.fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
}

/// The three right-hand sides with infima over the supplied grids.
pub fn assemble_bounds(
    ing: &BEIngredients,
    model: &dyn CovarianceModel,
    sigma_s: f64,
    n_grid: &[usize],
    j_grid: &[usize],
    tau_points: usize,
) -> Result<BEBoundReport> {
    if ing.n <= ing.k {
        return Err(Error::Precondition(format!("n = {} must exceed K = {}", ing.n, ing.k)));
    }
    if !(sigma_s > 0.0) {
        return Err(Error::ZeroVariance(format!("sigma_S = {sigma_s}")));
    }
    if n_grid.is_empty() || j_grid.is_empty() {
        return Err(Error::Precondition("empty N or J grid".into()));
    }
    if let Some(&bad) = n_grid.iter().find(|&&x| x < ing.m || x > ing.n_max) {
        return Err(Error::OutOfRange(format!("N = {bad} outside [{}, {}]", ing.m, ing.n_max)));
    }
    if let Some(&bad) = j_grid.iter().find(|&&j| j < 1 || j > ing.n) {
        return Err(Error::OutOfRange(format!("J = {bad} outside [1, {}]", ing.n)));
    }
    let levels = n_grid
        .iter()
        .map(|&big_n| {
            Ok(LevelRow {
                big_n,
                a2: a2(ing, big_n)?,
                a3: a3(ing, big_n),
                a4: a4(ing, big_n),
                a5: a5(ing, big_n),
                level_sum: ing.level_sum(big_n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let a6 = a6_series(ing, model, tau_points, j_grid)?;
    let lags = j_grid
        .iter()
        .zip(&a6)
        .map(|(&j, &a6)| Ok(LagRow { j, a6, a7: a7(ing, model, j)? }))
        .collect::<Result<Vec<_>>>()?;

    let (ji, lag_inf) = argmin(lags.iter().enumerate().map(|(i, r)| (i, r.a6 + r.a7)));
    let (si, smooth_inf) = argmin(levels.iter().enumerate().map(|(i, r)| (i, r.a2 + r.a3 + r.a4 + r.a5)));
    let nu_m = (ing.nu as f64).powi(ing.m as i32);
    let coef = 1.0 / (2.0 * sigma_s) + 1.0 / ((2.0 * ing.k as f64 + nu_m) * ing.ef2).sqrt();
    let lip_terms: Vec<(usize, f64)> = levels
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let rest = r.a3 + r.a4 + r.a5;
            let v = if rest == 0.0 {
                coef * r.a2
            } else if r.level_sum > 0.0 {
                coef * r.a2 + rest / r.level_sum.sqrt()
            } else {
                f64::INFINITY
            };
            (i, v)
        })
        .collect();
    let (li, lip_inf) = argmin(lip_terms.into_iter());
    if !lip_inf.is_finite() {
        return Err(Error::ZeroVariance("level sum of sigma_{l,n}^2 vanishes on the N grid".into()));
    }
    let bracket = 2.0 / sigma_s * lag_inf + lip_inf;
    let j_star = lags[ji].j;
    Ok(BEBoundReport {
        model: model.id(),
        n: ing.n,
        m: ing.m,
        k: ing.k,
        theta: ing.theta,
        sigma_s,
        ef2: ing.ef2,
        smooth: BoundValue {
            value: smooth_inf + lag_inf,
            big_n: levels[si].big_n,
            j: j_star,
        },
        lipschitz: BoundValue {
            value: bracket,
            big_n: levels[li].big_n,
            j: j_star,
        },
        kolmogorov: BoundValue {
            value: 2.0 / sigma_s * bracket.sqrt(),
            big_n: levels[li].big_n,
            j: j_star,
        },
        levels,
        lags,
    })
}
