use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hermite::{build_expansion, hermite_rank, HermiteExpansion, QuadSpec, RANK_TOLERANCE};

/// Pointwise evaluator `(tau, x) -> phi_tau(x)`.
pub type PointFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// The functions `f_{k,n} = phi_{k/n}` of a triangular array, encoded by
/// expansions on a `tau` grid with linear interpolation in between. A fixed
/// function is a one-point grid.
#[derive(Clone)]
pub struct FunctionFamily {
    taus: Vec<f64>,
    expansions: Vec<HermiteExpansion>,
    eval: Option<PointFn>,
}

impl std::fmt::Debug for FunctionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionFamily")
            .field("taus", &self.taus)
            .field("has_eval", &self.eval.is_some())
            .finish()
    }
}

impl FunctionFamily {
    pub fn fixed(e: HermiteExpansion) -> Self {
        FunctionFamily {
            taus: vec![0.0],
            expansions: vec![e],
            eval: None,
        }
    }

    /// Fixed function with its exact pointwise evaluator (used for sampling).
    pub fn fixed_with<F>(e: HermiteExpansion, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        FunctionFamily {
            taus: vec![0.0],
            expansions: vec![e],
            eval: Some(Arc::new(move |_, x| f(x))),
        }
    }

    pub fn curve(taus: Vec<f64>, expansions: Vec<HermiteExpansion>) -> Result<Self> {
        if taus.is_empty() || taus.len() != expansions.len() {
            return Err(Error::DimensionMismatch {
                expected: taus.len(),
                got: expansions.len(),
            });
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("tau grid must be strictly increasing".into()));
        }
        let (nu, order) = (expansions[0].nu(), expansions[0].order());
        if expansions.iter().any(|e| e.nu() != nu || e.order() != order) {
            return Err(Error::Precondition("grid expansions must share nu and truncation order".into()));
        }
        Ok(FunctionFamily {
            taus,
            expansions,
            eval: None,
        })
    }

    /// Expand `phi_tau` at every grid point and keep `phi` as evaluator.
    pub fn from_fn<F>(phi: F, taus: Vec<f64>, nu: usize, order: usize, quad: &QuadSpec) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        let expansions = taus
            .iter()
            .map(|&t| build_expansion(|x| phi(t, x), nu, order, quad))
            .collect::<Result<Vec<_>>>()?;
        let mut fam = Self::curve(taus, expansions)?;
        fam.eval = Some(Arc::new(phi));
        Ok(fam)
    }

    pub fn with_eval(mut self, eval: PointFn) -> Self {
        self.eval = Some(eval);
        self
    }

    pub fn is_fixed(&self) -> bool {
        self.taus.len() == 1
    }

    pub fn nu(&self) -> usize {
        self.expansions[0].nu()
    }

    pub fn order(&self) -> usize {
        self.expansions[0].order()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn grid_expansions(&self) -> &[HermiteExpansion] {
        &self.expansions
    }

    pub fn has_eval(&self) -> bool {
        self.eval.is_some()
    }

    /// `phi_tau`, interpolated linearly and clamped to the grid ends.
    pub fn at(&self, tau: f64) -> HermiteExpansion {
        if self.is_fixed() || tau <= self.taus[0] {
            return self.expansions[0].clone();
        }
        let last = self.taus.len() - 1;
        if tau >= self.taus[last] {
            return self.expansions[last].clone();
        }
        let i = self.taus.partition_point(|&t| t <= tau) - 1;
        let w = (tau - self.taus[i]) / (self.taus[i + 1] - self.taus[i]);
        self.expansions[i]
            .interpolate(&self.expansions[i + 1], w)
            .expect("grid expansions share shape")
    }

    /// `tau` attached to the zero-based row `k` of an array of length `n`.
    pub fn tau_of(k: usize, n: usize) -> f64 {
        (k + 1) as f64 / n as f64
    }

    pub fn for_index(&self, k: usize, n: usize) -> HermiteExpansion {
        self.at(Self::tau_of(k, n))
    }

    /// `phi_tau(x)`: the exact evaluator when present, else the truncated series.
    pub fn eval(&self, tau: f64, x: &[f64]) -> f64 {
        match &self.eval {
            Some(f) => f(tau, x),
            None => self.at(tau).eval(x),
        }
    }

    pub fn evaluator(&self) -> Option<PointFn> {
        self.eval.clone()
    }

    /// `max_i ||phi_{tau_{i+1}} - phi_{tau_i}||` over adjacent grid points.
    pub fn continuity_modulus(&self) -> f64 {
        self.expansions
            .windows(2)
            .map(|w| {
                w[0].coeffs()
                    .iter()
                    .zip(w[1].coeffs())
                    .map(|(a, b)| (a.j - b.j).powi(2) / a.k.factorial())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Every grid member has rank at least `m`.
    pub fn certify_rank(&self, m: usize) -> bool {
        self.expansions.iter().all(|e| hermite_rank(e, RANK_TOLERANCE).at_least(m))
    }

    /// `|J(0)| <= tol` on every grid member.
    pub fn is_centered(&self, tol: f64) -> bool {
        self.expansions.iter().all(|e| e.mean().abs() <= tol)
    }

    pub fn max_norm_sq(&self) -> f64 {
        self.expansions.iter().map(|e| e.full_norm_sq()).fold(0.0, f64::max)
    }
}
