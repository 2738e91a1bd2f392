use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_model::CovarianceModel;
use crate::hermite::MultiIndex;
use crate::wick_diagrams::hermite_cumulant;

pub const DECAY_MAX_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantDecayRow {
    pub n: usize,
    pub sum_abs: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantDecayReport {
    pub model: String,
    pub ks: Vec<MultiIndex>,
    pub rows: Vec<CumulantDecayRow>,
    pub strictly_decreasing: bool,
}

fn check_inputs(ks: &[MultiIndex], model: &dyn CovarianceModel, n: usize) -> Result<()> {
    if !(3..=4).contains(&ks.len()) {
        return Err(Error::OutOfRange(format!("p = {} (expected 3 or 4)", ks.len())));
    }
    if let Some(k) = ks.iter().find(|k| k.dim() != model.nu()) {
        return Err(Error::DimensionMismatch {
            expected: model.nu(),
            got: k.dim(),
        });
    }
    if n > DECAY_MAX_N {
        return Err(Error::SizeLimit {
            what: "n (cumulant enumeration)",
            size: n,
            limit: DECAY_MAX_N,
        });
    }
    Ok(())
}

/// `sum |cum(H_{k_1}(X(t_1)), ..., H_{k_p}(X(t_p)))|` over index tuples
/// accepted by `keep`.
fn abs_cumulant_sum<F>(ks: &[MultiIndex], model: &dyn CovarianceModel, n: usize, keep: F) -> Result<f64>
where
    F: Fn(&[usize]) -> bool + Sync,
{
    let p = ks.len();
    let per_first = (0..n)
        .into_par_iter()
        .map(|t0| {
            let mut t = vec![0usize; p];
            t[0] = t0;
            let mut acc = 0.0;
            let total = n.pow(p as u32 - 1);
            for code in 0..total {
                let mut c = code;
                for slot in t.iter_mut().skip(1) {
                    *slot = c % n;
                    c /= n;
                }
                if !keep(&t) {
                    continue;
                }
                let v = hermite_cumulant(ks, |u, v, a, b| model.cross_cov(n, t[u], t[v], a, b))?;
                acc += v.abs();
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_first.iter().sum())
}

/// `Sigma_n / n^{p/2}` over `n_list` for the cumulant of Hermite monomials.
pub fn cumulant_decay(ks: &[MultiIndex], model: &dyn CovarianceModel, n_list: &[usize]) -> Result<CumulantDecayReport> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        check_inputs(ks, model, n)?;
        let s = abs_cumulant_sum(ks, model, n, |_| true)?;
        rows.push(CumulantDecayRow {
            n,
            sum_abs: s,
            normalized: s / (n as f64).powf(ks.len() as f64 / 2.0),
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].normalized < w[0].normalized);
    Ok(CumulantDecayReport {
        model: model.id(),
        ks: ks.to_vec(),
        rows,
        strictly_decreasing,
    })
}

/// Same sum restricted to `|t_i - t_j| > cut`, one value per cut.
pub fn cumulant_decay_cutoff(
    ks: &[MultiIndex],
    model: &dyn CovarianceModel,
    n: usize,
    pair: (usize, usize),
    cuts: &[usize],
) -> Result<Vec<(usize, f64)>> {
    check_inputs(ks, model, n)?;
    let (i, j) = pair;
    if i >= ks.len() || j >= ks.len() || i == j {
        return Err(Error::OutOfRange(format!("slot pair ({i}, {j})")));
    }
    cuts.iter()
        .map(|&cut| {
            let s = abs_cumulant_sum(ks, model, n, |t| t[i].abs_diff(t[j]) > cut)?;
            Ok((cut, s))
        })
        .collect()
}
