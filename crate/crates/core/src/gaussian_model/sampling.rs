use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

use super::linalg::inverse_sqrt;
use super::model::CovarianceModel;
use crate::error::{Error, Result};

/// Default cap on `n * nu` for exact sampling.
pub const SAMPLE_LIMIT: usize = 8192;

/// Negative eigenvalues down to `-PSD_TOLERANCE * max(1, lambda_max)` are treated as zero.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// One realization `X_n(k)`, `k = 0..n`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSample {
    pub n: usize,
    pub nu: usize,
    pub values: Vec<f64>,
    pub seed: u64,
    pub model: String,
}

impl GaussianSample {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.nu..(k + 1) * self.nu]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.nu)
    }

    /// CSV with a header `t,x1,...,xnu`, one row per time index.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for p in 1..=self.nu {
            write!(out, ",x{p}").unwrap();
        }
        out.push('\n');
        for (t, row) in self.rows().enumerate() {
            write!(out, "{t}").unwrap();
            for v in row {
                write!(out, ",{v:e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// The `(n nu) x (n nu)` covariance of the first `n` rows.
pub fn full_covariance(model: &dyn CovarianceModel, n: usize) -> DMatrix<f64> {
    let nu = model.nu();
    let dim = n * nu;
    let mut c = DMatrix::zeros(dim, dim);
    for j in 0..n {
        for k in j..n {
            for p in 0..nu {
                for q in 0..nu {
                    let v = model.cross_cov(n, j, k, p, q);
                    c[(j * nu + p, k * nu + q)] = v;
                    c[(k * nu + q, j * nu + p)] = v;
                }
            }
        }
    }
    c
}

/// Square-root factor `L` with `L L^T = cov`: Cholesky when possible,
/// otherwise a clipped eigen-factor for numerically semidefinite input.
pub fn covariance_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let asym = (cov - cov.transpose()).amax();
    if asym > 1e-10 * cov.amax().max(1.0) {
        return Err(Error::Precondition(format!("covariance not symmetric (max gap {asym:e})")));
    }
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE * max.max(1.0) {
        return Err(Error::NotPositiveSemidefinite { min_eig: min });
    }
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d))
}

/// Exact sampler for a fixed `(model, n)`; the factorization is done once.
pub struct GaussianSampler {
    n: usize,
    nu: usize,
    factor: DMatrix<f64>,
    model: String,
}

impl GaussianSampler {
    pub fn new(model: &dyn CovarianceModel, n: usize) -> Result<Self> {
        Self::with_limit(model, n, SAMPLE_LIMIT)
    }

    pub fn with_limit(model: &dyn CovarianceModel, n: usize, limit: usize) -> Result<Self> {
        let dim = n * model.nu();
        if dim > limit {
            return Err(Error::SizeLimit {
                what: "n * nu",
                size: dim,
                limit,
            });
        }
        let cov = full_covariance(model, n);
        Ok(GaussianSampler {
            n,
            nu: model.nu(),
            factor: covariance_factor(&cov)?,
            model: model.id(),
        })
    }

    pub fn from_covariance(cov: &DMatrix<f64>, nu: usize, label: &str) -> Result<Self> {
        Ok(GaussianSampler {
            n: cov.nrows() / nu,
            nu,
            factor: covariance_factor(cov)?,
            model: label.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n * self.nu
    }

    fn noise(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..self.dim()).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    pub fn sample(&self, seed: u64) -> GaussianSample {
        self.sample_batch(&[seed]).pop().unwrap()
    }

    /// One sample per seed. Each sample depends only on its own seed, so
    /// the batch split does not affect the output.
    pub fn sample_batch(&self, seeds: &[u64]) -> Vec<GaussianSample> {
        let dim = self.dim();
        let mut z = DMatrix::zeros(dim, seeds.len());
        for (c, &s) in seeds.iter().enumerate() {
            z.set_column(c, &nalgebra::DVector::from_vec(self.noise(s)));
        }
        let x = &self.factor * z;
        seeds
            .iter()
            .enumerate()
            .map(|(c, &seed)| GaussianSample {
                n: self.n,
                nu: self.nu,
                values: x.column(c).iter().copied().collect(),
                seed,
                model: self.model.clone(),
            })
            .collect()
    }

    /// Apply `stat` to samples with seeds `base_seed + i`, `i = 0..reps`,
    /// in parallel; results come back in replicate order.
    pub fn map_replicates<T, F>(&self, base_seed: u64, reps: usize, stat: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&GaussianSample) -> T + Sync,
    {
        const CHUNK: usize = 64;
        let chunks: Vec<Vec<u64>> = (0..reps as u64)
            .map(|i| base_seed.wrapping_add(i))
            .collect::<Vec<_>>()
            .chunks(CHUNK)
            .map(|c| c.to_vec())
            .collect();
        chunks
            .par_iter()
            .map(|seeds| self.sample_batch(seeds).iter().map(&stat).collect::<Vec<T>>())
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }
}

/// Exact draw of the first `n` rows.
pub fn sample_array(model: &dyn CovarianceModel, n: usize, seed: u64) -> Result<GaussianSample> {
    Ok(GaussianSampler::new(model, n)?.sample(seed))
}

/// Map each row through `Sigma_k^{-1/2}`; `marginals` has one matrix per row
/// or a single matrix shared by all rows.
pub fn standardize(sample: &GaussianSample, marginals: &[DMatrix<f64>]) -> Result<GaussianSample> {
    if marginals.len() != 1 && marginals.len() != sample.n {
        return Err(Error::DimensionMismatch {
            expected: sample.n,
            got: marginals.len(),
        });
    }
    let inv: Vec<DMatrix<f64>> = marginals.iter().map(inverse_sqrt).collect::<Result<_>>()?;
    let mut out = sample.clone();
    for k in 0..sample.n {
        let a = &inv[if inv.len() == 1 { 0 } else { k }];
        if a.nrows() != sample.nu {
            return Err(Error::DimensionMismatch {
                expected: sample.nu,
                got: a.nrows(),
            });
        }
        let row = sample.row(k);
        for p in 0..sample.nu {
            out.values[k * sample.nu + p] = (0..sample.nu).map(|q| a[(p, q)] * row[q]).sum();
        }
    }
    Ok(out)
}
