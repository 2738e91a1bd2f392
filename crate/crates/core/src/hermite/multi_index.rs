use serde::{Deserialize, Serialize};
use std::fmt;

use super::poly::factorial;

/// A multi-index `k = (k^(1), ..., k^(nu))` of nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(nu: usize) -> Self {
        MultiIndex(vec![0; nu])
    }

    /// Single-coordinate index `(k)`.
    pub fn scalar(k: u32) -> Self {
        MultiIndex(vec![k])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k|`
    pub fn order(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `k! = prod k^(u)!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as usize)).product()
    }

    /// All multi-indices of dimension `nu` and order exactly `order`,
    /// in decreasing lexicographic order (`(2,0), (1,1), (0,2)`).
    pub fn of_order(nu: usize, order: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        if nu == 0 {
            if order == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        let mut cur = vec![0u32; nu];
        fill(&mut cur, 0, order, &mut out);
        out
    }

    /// Graded listing of every index with `|k| <= max_order`.
    pub fn up_to_order(nu: usize, max_order: usize) -> Vec<MultiIndex> {
        (0..=max_order).flat_map(|l| Self::of_order(nu, l)).collect()
    }
}

fn fill(cur: &mut Vec<u32>, pos: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining as u32;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v as u32;
        fill(cur, pos + 1, remaining - v, out);
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}
