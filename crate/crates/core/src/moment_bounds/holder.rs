use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::lemma::distinct_tuples;
use crate::error::{Error, Result};
use crate::gaussian_model::{max_abs_cov, CovarianceModel};
use crate::wick_diagrams::Diagram;

/// `L(U)`, `L*(U)` for one row subset, exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSplit {
    pub rows: Vec<usize>,
    pub l: Ratio<i64>,
    pub l_star: Ratio<i64>,
}

impl SubsetSplit {
    /// `L(U) + L*(U) = |U|`.
    pub fn identity_holds(&self) -> bool {
        self.l + self.l_star == Ratio::from_integer(self.rows.len() as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderQuantities {
    /// `R[u][v]` for `u != v`; `1` where `ell_uv = 0`.
    pub r: Vec<Vec<f64>>,
    #[serde(skip)]
    pub splits: Vec<SubsetSplit>,
}

/// `L(U)` and `L*(U)` for every nonempty `U` of the rows (bitmask order).
pub fn subset_splits(d: &Diagram, lens: &[usize]) -> Result<Vec<SubsetSplit>> {
    let p = d.p();
    if lens.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: lens.len(),
        });
    }
    if lens.contains(&0) {
        return Err(Error::Precondition("every row needs at least one point".into()));
    }
    let mut out = Vec::with_capacity((1 << p) - 1);
    for mask in 1u32..(1 << p) {
        let rows: Vec<usize> = (0..p).filter(|u| mask & (1 << u) != 0).collect();
        let mut l = Ratio::from_integer(0i64);
        let mut l_star = Ratio::from_integer(0i64);
        for &u in &rows {
            for v in 0..p {
                let term = Ratio::new(d.ell[u][v] as i64, lens[u] as i64);
                if v > u {
                    l += term;
                } else if v < u {
                    l_star += term;
                }
            }
        }
        out.push(SubsetSplit { rows, l, l_star });
    }
    Ok(out)
}

/// `R_uv = (sum_t (sum_{s != t} rho^{k_u}(s,t))^{k_v/k_u})^{ell_uv/k_v}`
/// with `rho(s,t) = max_{p,q} |r_n(s,t)|`. With `k_cut`, only pairs with
/// `|s - t| > k_cut` enter the inner sum.
pub fn holder_quantities(
    d: &Diagram,
    lens: &[usize],
    model: &dyn CovarianceModel,
    n: usize,
    k_cut: Option<usize>,
) -> Result<HolderQuantities> {
    let splits = subset_splits(d, lens)?;
    let p = d.p();
    let rho: Vec<Vec<f64>> = (0..n)
        .map(|t| (0..n).map(|s| max_abs_cov(model, n, t, s)).collect())
        .collect();
    let keep = |s: usize, t: usize| s != t && k_cut.is_none_or(|c| s.abs_diff(t) > c);
    let mut r = vec![vec![1.0; p]; p];
    for u in 0..p {
        for v in 0..p {
            if u == v || d.ell[u][v] == 0 {
                continue;
            }
            let (ku, kv) = (lens[u] as f64, lens[v] as f64);
            let outer: f64 = (0..n)
                .map(|t| {
                    let inner: f64 = (0..n).filter(|&s| keep(s, t)).map(|s| rho[s][t].powf(ku)).sum();
                    inner.powf(kv / ku)
                })
                .sum();
            r[u][v] = outer.powf(d.ell[u][v] as f64 / kv);
        }
    }
    Ok(HolderQuantities { r, splits })
}

/// `I_{n,T}(gamma) = sum' prod_{u<v} rho(t_u, t_v)^{ell_uv}`.
pub fn diagram_index_sum(d: &Diagram, model: &dyn CovarianceModel, n: usize) -> Result<f64> {
    let p = d.p();
    let rho: Vec<Vec<f64>> = (0..n)
        .map(|t| (0..n).map(|s| max_abs_cov(model, n, t, s)).collect())
        .collect();
    let mut tuple = vec![0usize; p];
    let mut total = 0.0;
    distinct_tuples(n, 0, &mut tuple, &mut |t| {
        let mut w = 1.0;
        for u in 0..p {
            for v in u + 1..p {
                if d.ell[u][v] > 0 {
                    w *= rho[t[u]][t[v]].powi(d.ell[u][v] as i32);
                }
            }
        }
        total += w;
        Ok(())
    })?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_model::StationaryModel;
    use crate::wick_diagrams::{enumerate_diagrams, DiagramTable};

    #[test]
    fn two_rows_split_evenly() {
        let t = DiagramTable::scalar(&[2, 2]);
        let d = enumerate_diagrams(&t).unwrap().next().unwrap();
        let s = subset_splits(&d, &[2, 2]).unwrap();
        let all = s.last().unwrap();
        assert_eq!(all.l, Ratio::from_integer(1));
        assert_eq!(all.l_star, Ratio::from_integer(1));
        assert!(s.iter().all(SubsetSplit::identity_holds));
    }

    #[test]
    fn independent_r_vanishes() {
        let t = DiagramTable::scalar(&[1, 2, 1]);
        let d = enumerate_diagrams(&t).unwrap().next().unwrap();
        let m = StationaryModel::independent(1);
        let h = holder_quantities(&d, &[1, 2, 1], &m, 6, None).unwrap();
        for u in 0..3 {
            for v in 0..3 {
                if u != v && d.ell[u][v] > 0 {
                    assert_eq!(h.r[u][v], 0.0);
                }
            }
        }
    }

    #[test]
    fn holder_inequality_small() {
        let m = StationaryModel::geometric(0.4);
        let t = DiagramTable::scalar(&[2, 1, 1, 2]);
        for d in enumerate_diagrams(&t).unwrap() {
            if !crate::wick_diagrams::is_connected(&d) {
                continue;
            }
            let h = holder_quantities(&d, &[2, 1, 1, 2], &m, 7, None).unwrap();
            let i = diagram_index_sum(&d, &m, 7).unwrap();
            let mut up = 1.0;
            let mut down = 1.0;
            for u in 0..4 {
                for v in u + 1..4 {
                    up *= h.r[u][v];
                    down *= h.r[v][u];
                }
            }
            assert!(i <= up.min(down) + 1e-10, "{d}: {i} > {}", up.min(down));
        }
    }
}
