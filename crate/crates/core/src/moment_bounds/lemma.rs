use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

use super::no_upward_trend;
use crate::error::{Error, Result};
use crate::gaussian_model::{check_epsilon_standard, compute_qn, CovarianceModel};
use crate::hermite::{hermite_rank, HermiteExpansion, RANK_TOLERANCE};
use crate::wick_diagrams::product_expectation;

/// Default limits for the exact off-diagonal sum (`n^p` index tuples).
pub const MAX_N: usize = 14;
pub const MAX_P: usize = 3;

/// A configuration of the moment inequality: `p` slots, the first `alpha`
/// of which are declared to have rank at least `m`.
pub struct BoundInstance<'a> {
    pub model: &'a dyn CovarianceModel,
    pub functions: Vec<HermiteExpansion>,
    pub alpha: usize,
    pub m: usize,
    pub residual_tol: f64,
    pub max_n: usize,
    pub max_p: usize,
}

impl<'a> BoundInstance<'a> {
    pub fn new(model: &'a dyn CovarianceModel, functions: Vec<HermiteExpansion>, alpha: usize, m: usize) -> Self {
        BoundInstance {
            model,
            functions,
            alpha,
            m,
            residual_tol: 1e-6,
            max_n: MAX_N,
            max_p: MAX_P,
        }
    }

    pub fn p(&self) -> usize {
        self.functions.len()
    }

    fn validate(&self, n: usize) -> Result<()> {
        let p = self.p();
        if p < 2 || self.alpha > p {
            return Err(Error::OutOfRange(format!("need p >= 2 and alpha <= p (p={p}, alpha={})", self.alpha)));
        }
        if p > self.max_p {
            return Err(Error::SizeLimit {
                what: "p",
                size: p,
                limit: self.max_p,
            });
        }
        if n > self.max_n {
            return Err(Error::SizeLimit {
                what: "n",
                size: n,
                limit: self.max_n,
            });
        }
        let nu = self.model.nu();
        for f in &self.functions {
            if f.nu() != nu {
                return Err(Error::DimensionMismatch { expected: nu, got: f.nu() });
            }
            let tol = self.residual_tol * f.full_norm_sq().max(1.0);
            if f.residual() > tol {
                return Err(Error::ResidualTooLarge {
                    residual: f.residual(),
                    tolerance: tol,
                });
            }
        }
        Ok(())
    }

    /// `K = prod_j ||f_j||`.
    pub fn k_constant(&self) -> f64 {
        self.functions.iter().map(|f| f.full_norm_sq().sqrt()).product()
    }

    /// Whether each of the first `alpha` slots is certified to have rank `>= m`.
    pub fn rank_certificates(&self) -> Vec<bool> {
        self.functions[..self.alpha]
            .iter()
            .map(|f| hermite_rank(f, RANK_TOLERANCE).at_least(self.m))
            .collect()
    }
}

/// `sum' |E f_1(X_{t_1}) ... f_p(X_{t_p})|` over pairwise distinct `t_i`.
pub fn offdiag_sum(inst: &BoundInstance<'_>, n: usize) -> Result<f64> {
    inst.validate(n)?;
    let p = inst.p();
    let refs: Vec<&HermiteExpansion> = inst.functions.iter().collect();
    // parallel over the first index, each branch summed in a fixed order
    let partial: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|t0| {
            let mut tuple = vec![0usize; p];
            tuple[0] = t0;
            let mut acc = 0.0;
            distinct_tuples(n, 1, &mut tuple, &mut |t| {
                let v = product_expectation(&refs, |u, v, a, b| inst.model.cross_cov(n, t[u], t[v], a, b))?;
                acc += v.abs();
                Ok(())
            })?;
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for r in partial {
        total += r?;
    }
    Ok(total)
}

/// Visit every tuple with pairwise distinct entries in `0..n`, filling
/// positions `pos..` (earlier positions are fixed by the caller).
pub(crate) fn distinct_tuples(
    n: usize,
    pos: usize,
    tuple: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if pos == tuple.len() {
        return visit(tuple);
    }
    for t in 0..n {
        if tuple[..pos].contains(&t) {
            continue;
        }
        tuple[pos] = t;
        distinct_tuples(n, pos + 1, tuple, visit)?;
    }
    Ok(())
}

/// `K n^{p - alpha/2} Q_n^{alpha/2}`; the unspecified constant is omitted.
pub fn bound_rhs(k: f64, n: usize, p: usize, alpha: usize, qn: f64) -> f64 {
    let a = alpha as f64 / 2.0;
    k * (n as f64).powf(p as f64 - a) * qn.powf(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub lhs: f64,
    pub qn: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub model: String,
    pub p: usize,
    pub alpha: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub rank_certified: Vec<bool>,
    /// Largest off-diagonal correlation at the largest `n`, and whether it
    /// is below `1/(nu p - 1)`.
    pub epsilon: f64,
    pub epsilon_ok: bool,
    pub rows: Vec<BoundRow>,
    pub trend_factor: f64,
    pub bounded: bool,
    pub note: String,
}

impl BoundReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,lhs,rhs,ratio\n");
        for r in &self.rows {
            writeln!(out, "{},{:e},{:e},{:e}", r.n, r.lhs, r.rhs, r.ratio).unwrap();
        }
        out
    }
}

/// `lhs(n) / rhs(n)` over `n_list` with the no-upward-trend verdict.
pub fn ratio_scan(inst: &BoundInstance<'_>, n_list: &[usize], trend_factor: f64) -> Result<BoundReport> {
    let k = inst.k_constant();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let lhs = offdiag_sum(inst, n)?;
        let qn = compute_qn(inst.model, n, inst.m as u32);
        let rhs = bound_rhs(k, n, inst.p(), inst.alpha, qn);
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        rows.push(BoundRow { n, lhs, qn, rhs, ratio });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let n_max = n_list.iter().copied().max().unwrap_or(0);
    let eps = match check_epsilon_standard(inst.model, n_max, 1.0) {
        Ok(c) => c.worst_value,
        Err(_) => f64::NAN,
    };
    let limit = 1.0 / ((inst.model.nu() * inst.p()) as f64 - 1.0);
    Ok(BoundReport {
        model: inst.model.id(),
        p: inst.p(),
        alpha: inst.alpha,
        m: inst.m,
        k,
        rank_certified: inst.rank_certificates(),
        epsilon: eps,
        epsilon_ok: eps < limit,
        rows,
        trend_factor,
        bounded: no_upward_trend(&ratios, trend_factor) && ratios.iter().all(|r| r.is_finite()),
        note: "scaling check only: the constant C(eps, p, m, alpha, nu) is not estimated".into(),
    })
}
