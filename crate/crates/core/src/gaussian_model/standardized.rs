use nalgebra::DMatrix;

use super::linalg::inverse_sqrt;
use super::model::CovarianceModel;
use crate::error::{Error, Result};

/// Per-row whitening maps `A_k` with `A_k Sigma_k A_k^T = I`.
#[derive(Debug, Clone)]
pub enum RowTransforms {
    /// One map for every row and every `n`.
    Shared(DMatrix<f64>),
    /// One map per row of an array of fixed length.
    PerRow { n: usize, maps: Vec<DMatrix<f64>> },
}

/// `W_n(k) = A_k X_n(k)` for an inner model whose marginals are not the
/// identity. The tangent process is whitened by `Sigma_tau^{-1/2}`.
#[derive(Debug, Clone)]
pub struct StandardizedModel<M> {
    inner: M,
    rows: RowTransforms,
    /// `max_k ||A_k||_inf`, bounding entry growth under the maps.
    scale: f64,
}

fn row_abs_sum(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

impl<M: CovarianceModel> StandardizedModel<M> {
    /// Whiten a model whose marginal is the same at every row.
    pub fn shared(inner: M) -> Result<Self> {
        let a = inverse_sqrt(&inner.marginal(1, 0))?;
        let scale = row_abs_sum(&a);
        Ok(StandardizedModel {
            inner,
            rows: RowTransforms::Shared(a),
            scale,
        })
    }

    /// Whiten each row of a length-`n` array by its own marginal.
    pub fn per_row(inner: M, n: usize) -> Result<Self> {
        let maps = (0..n)
            .map(|k| inverse_sqrt(&inner.marginal(n, k)))
            .collect::<Result<Vec<_>>>()?;
        let scale = maps.iter().map(row_abs_sum).fold(0.0, f64::max);
        Ok(StandardizedModel {
            inner,
            rows: RowTransforms::PerRow { n, maps },
            scale,
        })
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn map(&self, k: usize) -> &DMatrix<f64> {
        match &self.rows {
            RowTransforms::Shared(a) => a,
            RowTransforms::PerRow { maps, .. } => &maps[k],
        }
    }

    fn check_n(&self, n: usize) {
        if let RowTransforms::PerRow { n: own, .. } = &self.rows {
            assert_eq!(n, *own, "standardized array was built for n = {own}");
        }
    }

    pub fn tangent_map(&self, tau: f64) -> Result<DMatrix<f64>> {
        let s = self
            .inner
            .tangent(tau, 0)
            .ok_or_else(|| Error::Precondition("inner model declares no tangent process".into()))?;
        inverse_sqrt(&s)
    }
}

impl<M: CovarianceModel> CovarianceModel for StandardizedModel<M> {
    fn nu(&self) -> usize {
        self.inner.nu()
    }

    fn id(&self) -> String {
        format!("standardized({})", self.inner.id())
    }

    fn cross_cov(&self, n: usize, j: usize, k: usize, p: usize, q: usize) -> f64 {
        self.cross_block(n, j, k)[(p, q)]
    }

    fn cross_block(&self, n: usize, j: usize, k: usize) -> DMatrix<f64> {
        self.check_n(n);
        self.map(j) * self.inner.cross_block(n, j, k) * self.map(k).transpose()
    }

    fn is_stationary(&self) -> bool {
        matches!(self.rows, RowTransforms::Shared(_)) && self.inner.is_stationary()
    }

    fn envelope(&self, lag: i64) -> Option<f64> {
        if lag == 0 {
            return Some(1.0);
        }
        Some(self.scale * self.scale * self.inner.envelope(lag)?)
    }

    fn envelope_tail(&self, m: u32, cut: usize) -> Option<f64> {
        Some(self.scale.powi(2 * m as i32) * self.inner.envelope_tail(m, cut)?)
    }

    fn tangent(&self, tau: f64, lag: i64) -> Option<DMatrix<f64>> {
        let a = self.tangent_map(tau).ok()?;
        Some(&a * self.inner.tangent(tau, lag)? * a.transpose())
    }
}
