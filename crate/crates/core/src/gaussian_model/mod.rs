//! Triangular-array Gaussian covariance models, correlation checks and
//! exact sampling.

mod linalg;
mod model;
mod sampling;
mod standardized;

pub use linalg::{inverse_sqrt, matrix_sqrt, min_eigenvalue, spectral_norm, DEGENERACY_THRESHOLD};
pub use model::{
    fbm_second_diff_autocov, fgn_autocov, Autocorrelation, CovarianceModel, ExplicitModel, ModelSpec,
    StationaryModel,
};
pub use sampling::{
    covariance_factor, full_covariance, sample_array, standardize, GaussianSample, GaussianSampler, PSD_TOLERANCE,
    SAMPLE_LIMIT,
};
pub use standardized::{RowTransforms, StandardizedModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `max_{p,q} |r_n^{(p,q)}(t,s)|`.
pub fn max_abs_cov(model: &dyn CovarianceModel, n: usize, t: usize, s: usize) -> f64 {
    let nu = model.nu();
    let mut best = 0.0f64;
    for p in 0..nu {
        for q in 0..nu {
            best = best.max(model.cross_cov(n, t, s, p, q).abs());
        }
    }
    best
}

/// Fails unless every marginal `Sigma_{k,n}` is the identity within `tol`.
pub fn check_standardized(model: &dyn CovarianceModel, n: usize, tol: f64) -> Result<()> {
    let nu = model.nu();
    for k in 0..n {
        for p in 0..nu {
            for q in 0..nu {
                let want = if p == q { 1.0 } else { 0.0 };
                let dev = (model.cross_cov(n, k, k, p, q) - want).abs();
                if dev > tol {
                    return Err(Error::NotStandardized { index: k, deviation: dev });
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonCheck {
    pub holds: bool,
    /// `(t, s, u, v)` attaining the largest off-diagonal correlation.
    pub worst_pair: Option<(usize, usize, usize, usize)>,
    pub worst_value: f64,
}

/// Whether `|E X_t^{(u)} X_s^{(v)}| <= eps` for all `t != s`.
pub fn check_epsilon_standard(model: &dyn CovarianceModel, n: usize, eps: f64) -> Result<EpsilonCheck> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange(format!("epsilon {eps} not in [0, 1]")));
    }
    check_standardized(model, n, 1e-10)?;
    let nu = model.nu();
    let mut worst = None;
    let mut worst_value = 0.0f64;
    for t in 0..n {
        for s in 0..n {
            if s == t {
                continue;
            }
            for u in 0..nu {
                for v in 0..nu {
                    let r = model.cross_cov(n, t, s, u, v).abs();
                    if r > worst_value {
                        worst_value = r;
                        worst = Some((t, s, u, v));
                    }
                }
            }
        }
    }
    Ok(EpsilonCheck {
        holds: worst_value <= eps,
        worst_pair: worst,
        worst_value,
    })
}

/// `sum_{s != t} (max_{u,v} |r(t,s;u,v)|)^m` for one `t`.
pub fn qn_row(model: &dyn CovarianceModel, n: usize, m: u32, t: usize) -> f64 {
    (0..n)
        .filter(|&s| s != t)
        .map(|s| max_abs_cov(model, n, t, s).powi(m as i32))
        .sum()
}

/// `Q_n = max_t sum_{s != t} (max_{u,v} |r(t,s;u,v)|)^m`.
pub fn compute_qn(model: &dyn CovarianceModel, n: usize, m: u32) -> f64 {
    (0..n).map(|t| qn_row(model, n, m, t)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityRow {
    pub n: usize,
    /// `max_k sum_j max_{p,q} |r_n(j,k)|^m`
    pub s1: f64,
    /// `(K, n^{-1} sum_{|j-k| > K} max_{p,q} |r_n(j,k)|^m)`
    pub tails: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    /// `(J, sum_{|j| <= J} |rho(j)|^m)`
    pub partial_sums: Vec<(usize, f64)>,
    /// Closed-form bound on the remaining tail, if known.
    pub tail_bound: Option<f64>,
    pub stabilizing: bool,
}

/// Finite-`n` diagnostics for the summability and tail conditions. These
/// can falsify the conditions but never certify a supremum over all `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsReport {
    pub model: String,
    pub m: u32,
    pub rows: Vec<SummabilityRow>,
    /// `s1` does not increase by more than 5% between the smaller and larger half of `n_list`.
    pub s1_bounded: bool,
    /// Tails at the largest `K` shrink as `n` grows or stay below `1e-6`.
    pub tails_vanishing: bool,
    pub envelope: Option<EnvelopeSummary>,
    pub note: String,
}

pub fn check_conditions(
    model: &dyn CovarianceModel,
    m: u32,
    n_list: &[usize],
    k_list: &[usize],
) -> Result<ConditionsReport> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be >= 1".into()));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let mut per_k = vec![0.0; n];
        let mut tails = vec![0.0; k_list.len()];
        for k in 0..n {
            for j in 0..n {
                let v = max_abs_cov(model, n, j, k).powi(m as i32);
                per_k[k] += v;
                let lag = j.abs_diff(k);
                for (i, &cut) in k_list.iter().enumerate() {
                    if lag > cut {
                        tails[i] += v;
                    }
                }
            }
        }
        rows.push(SummabilityRow {
            n,
            s1: per_k.iter().copied().fold(0.0, f64::max),
            tails: k_list.iter().zip(tails).map(|(&c, t)| (c, t / n as f64)).collect(),
        });
    }
    let s1: Vec<f64> = rows.iter().map(|r| r.s1).collect();
    let s1_bounded = crate::moment_bounds::no_upward_trend(&s1, 1.05);
    let tails_vanishing = match k_list.iter().max() {
        None => true,
        Some(_) => {
            let last: Vec<f64> = rows.iter().map(|r| r.tails.last().map_or(0.0, |t| t.1)).collect();
            last.iter().all(|&t| t < 1e-6) || last.windows(2).all(|w| w[1] <= w[0] * 1.05 + 1e-12)
        }
    };
    let envelope = if model.envelope(1).is_some() {
        let mut partial = Vec::new();
        let mut acc = 1.0;
        let mut done = 0usize;
        for e in 4..=20 {
            let cut = 1usize << e;
            for j in done + 1..=cut {
                acc += 2.0 * model.envelope(j as i64).unwrap().abs().powi(m as i32);
            }
            done = cut;
            partial.push((cut, acc));
        }
        let inc: Vec<f64> = partial.windows(2).map(|w| w[1].1 - w[0].1).collect();
        let n_inc = inc.len();
        let stabilizing = inc[n_inc - 1] <= 1e-12 || inc[n_inc - 1] < 0.95 * inc[n_inc - 2];
        let tail_bound = model.envelope_tail(m, done);
        Some(EnvelopeSummary {
            partial_sums: partial,
            tail_bound,
            stabilizing,
        })
    } else {
        None
    };
    Ok(ConditionsReport {
        model: model.id(),
        m,
        rows,
        s1_bounded,
        tails_vanishing,
        envelope,
        note: "finite-n diagnostics; asymptotic conditions can be falsified, not certified".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_examples() {
        let ind = StationaryModel::independent(2);
        assert!(check_epsilon_standard(&ind, 6, 0.0).unwrap().holds);
        let g = StationaryModel::geometric(0.5);
        let c = check_epsilon_standard(&g, 10, 0.5).unwrap();
        assert!(c.holds);
        let (t, s, _, _) = c.worst_pair.unwrap();
        assert_eq!(t.abs_diff(s), 1);
        assert!(!check_epsilon_standard(&g, 10, 0.4).unwrap().holds);
        let w = StationaryModel::new(Autocorrelation::Geometric { r: 0.5 }, 2);
        assert!(matches!(
            check_epsilon_standard(&w, 4, 0.5),
            Err(Error::NotStandardized { .. })
        ));
    }

    #[test]
    fn qn_examples() {
        assert_eq!(compute_qn(&StationaryModel::independent(1), 8, 1), 0.0);
        let g = StationaryModel::geometric(0.5);
        assert!((qn_row(&g, 5, 1, 0) - 0.9375).abs() < 1e-15);
        assert!((qn_row(&g, 5, 1, 1) - 1.375).abs() < 1e-15);
        assert!((qn_row(&g, 5, 2, 1) - 0.578125).abs() < 1e-15);
        // the middle index sees lags 2, 1, 1, 2
        assert!((compute_qn(&g, 5, 1) - 1.5).abs() < 1e-15);
        assert!((compute_qn(&g, 5, 2) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn conditions_independent() {
        let r = check_conditions(&StationaryModel::independent(1), 2, &[4, 8], &[1]).unwrap();
        assert!(r.rows.iter().all(|row| row.s1 == 1.0));
        assert!(r.s1_bounded);
    }
}
