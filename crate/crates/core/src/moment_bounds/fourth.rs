use serde::{Deserialize, Serialize};

use super::lemma::{bound_rhs, distinct_tuples};
use crate::error::{Error, Result};
use crate::gaussian_model::{compute_qn, CovarianceModel};
use crate::hermite::{hermite_rank, HermiteExpansion, RANK_TOLERANCE};
use crate::wick_diagrams::product_expectation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternTerm {
    /// Block sizes of the coincidence pattern, e.g. `[2, 1, 1]`.
    pub pattern: Vec<usize>,
    /// Number of set partitions of the four positions with this shape.
    pub multiplicity: usize,
    /// `multiplicity * sum' E prod_b f^{|b|}(Y_{t_b})`
    pub value: f64,
    /// Moment-bound scaling `K n^{q - alpha/2} Q_n^{alpha/2}` for this pattern,
    /// with `q` blocks and `alpha` singleton blocks.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentReport {
    pub n: usize,
    pub m_n: f64,
    pub terms: Vec<PatternTerm>,
}

const PATTERNS: [(&[usize], usize); 5] = [(&[1, 1, 1, 1], 1), (&[2, 1, 1], 6), (&[2, 2], 3), (&[3, 1], 4), (&[4], 1)];

/// `M_n = E (sum_t f(Y_t))^4`, split by which of the four indices coincide.
/// `f` is used through its truncated expansion.
pub fn fourth_moment_bound(model: &dyn CovarianceModel, f: &HermiteExpansion, n: usize, max_n: usize) -> Result<FourthMomentReport> {
    if n > max_n {
        return Err(Error::SizeLimit {
            what: "n",
            size: n,
            limit: max_n,
        });
    }
    let f2 = f.product(f)?;
    let f3 = f2.product(f)?;
    let f4 = f2.product(&f2)?;
    let powers = [f, &f2, &f3, &f4];
    let m = hermite_rank(f, RANK_TOLERANCE).at_least as u32;
    let qn = compute_qn(model, n, m.max(1));
    let mut terms = Vec::new();
    for (shape, mult) in PATTERNS {
        let slots: Vec<&HermiteExpansion> = shape.iter().map(|&b| powers[b - 1]).collect();
        let mut tuple = vec![0usize; shape.len()];
        let mut sum = 0.0;
        distinct_tuples(n, 0, &mut tuple, &mut |t| {
            sum += product_expectation(&slots, |u, v, a, b| model.cross_cov(n, t[u], t[v], a, b))?;
            Ok(())
        })?;
        let k: f64 = slots.iter().map(|s| s.l2_norm_sq().sqrt()).product();
        let alpha = shape.iter().filter(|&&b| b == 1).count();
        let rhs = if shape.len() >= 2 {
            bound_rhs(k, n, shape.len(), alpha, qn)
        } else {
            k * n as f64
        };
        terms.push(PatternTerm {
            pattern: shape.to_vec(),
            multiplicity: mult,
            value: mult as f64 * sum,
            rhs: mult as f64 * rhs,
        });
    }
    Ok(FourthMomentReport {
        n,
        m_n: terms.iter().map(|t| t.value).sum(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_model::StationaryModel;
    use crate::hermite::MultiIndex;

    #[test]
    fn iid_h2() {
        let m = StationaryModel::independent(1);
        let f = HermiteExpansion::monomial(MultiIndex::scalar(2), 1.0, 2).unwrap();
        for n in [3usize, 5] {
            let r = fourth_moment_bound(&m, &f, n, 14).unwrap();
            let nf = n as f64;
            assert!((r.m_n - (60.0 * nf + 12.0 * nf * (nf - 1.0))).abs() < 1e-9);
        }
    }

    #[test]
    fn odd_rank_one_all_distinct_vanishes() {
        let m = StationaryModel::independent(1);
        let f = HermiteExpansion::from_coefficients(1, 3, [(MultiIndex::scalar(1), 1.0), (MultiIndex::scalar(3), 2.0)], 0.0).unwrap();
        let r = fourth_moment_bound(&m, &f, 5, 14).unwrap();
        assert_eq!(r.terms[0].value, 0.0);
    }
}
