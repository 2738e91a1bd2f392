use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::gaussian_model::GaussianSampler;

/// Hurst exponent as a function of time on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HurstCurve {
    Constant { h: f64 },
    /// `h0 + (h1 - h0) t`
    Linear { h0: f64, h1: f64 },
}

impl HurstCurve {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            HurstCurve::Constant { h } => h,
            HurstCurve::Linear { h0, h1 } => h0 + (h1 - h0) * t,
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            HurstCurve::Constant { .. } => true,
            HurstCurve::Linear { h0, h1 } => h0 == h1,
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = match *self {
            HurstCurve::Constant { h } => (h, h),
            HurstCurve::Linear { h0, h1 } => (h0, h1),
        };
        if a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0 {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("Hurst curve {self:?} must stay inside (0, 1)")))
        }
    }
}

/// A Gaussian path observed at `k / n`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub hurst: HurstCurve,
    pub n: usize,
}

/// Largest `n` for the exact path sampler.
pub const PATH_LIMIT: usize = 8192;

fn mbm_normalizer(x: f64, y: f64) -> f64 {
    use std::f64::consts::PI;
    if x == y {
        return 1.0;
    }
    let num = (gamma(2.0 * x + 1.0) * gamma(2.0 * y + 1.0) * (PI * x).sin() * (PI * y).sin()).sqrt();
    num / (gamma(x + y + 1.0) * (PI * (x + y) / 2.0).sin())
}

impl PathSpec {
    pub fn fbm(h: f64, n: usize) -> Self {
        PathSpec {
            hurst: HurstCurve::Constant { h },
            n,
        }
    }

    /// `E X_s X_t`; fBm for a constant curve, the normalized multifractional
    /// covariance otherwise.
    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        let (hs, ht) = (self.hurst.at(s), self.hurst.at(t));
        let e = hs + ht;
        let pw = |x: f64| if x == 0.0 { 0.0 } else { x.abs().powf(e) };
        0.5 * mbm_normalizer(hs, ht) * (pw(s) + pw(t) - pw(t - s))
    }

    /// Covariance of `(X_{1/n}, ..., X_{n/n})`; `X_0 = 0`.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| self.covariance((i + 1) as f64 / n as f64, (j + 1) as f64 / n as f64))
    }

    /// `Var(Delta_k^{2,n} X)` from the model covariance.
    pub fn second_increment_variance(&self, k: usize) -> f64 {
        let n = self.n as f64;
        let c = [1.0, -2.0, 1.0];
        let mut v = 0.0;
        for (a, ca) in c.iter().enumerate() {
            for (b, cb) in c.iter().enumerate() {
                v += ca * cb * self.covariance((k + a) as f64 / n, (k + b) as f64 / n);
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        self.hurst.validate()?;
        if self.n < 3 {
            return Err(Error::OutOfRange(format!("n = {} (need n >= 3)", self.n)));
        }
        if self.n > PATH_LIMIT {
            return Err(Error::SizeLimit {
                what: "path length n",
                size: self.n,
                limit: PATH_LIMIT,
            });
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<PathSampler> {
        self.validate()?;
        let inner = GaussianSampler::from_covariance(&self.covariance_matrix(), 1, &format!("{:?}", self.hurst))?;
        Ok(PathSampler { inner })
    }
}

/// Exact sampler for one path specification; factorization done once.
pub struct PathSampler {
    inner: GaussianSampler,
}

impl PathSampler {
    /// `X_{k/n}`, `k = 0..=n`, with `X_0 = 0`.
    pub fn path(&self, seed: u64) -> Vec<f64> {
        let s = self.inner.sample(seed);
        std::iter::once(0.0).chain(s.values).collect()
    }

    /// Apply `stat` to the paths with seeds `seed + i`, in replicate order.
    pub fn map_paths<T, F>(&self, seed: u64, reps: usize, stat: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        self.inner.map_replicates(seed, reps, |s| {
            let mut p = Vec::with_capacity(s.values.len() + 1);
            p.push(0.0);
            p.extend_from_slice(&s.values);
            stat(&p)
        })
    }
}

pub fn simulate_path(spec: &PathSpec, seed: u64) -> Result<Vec<f64>> {
    Ok(spec.sampler()?.path(seed))
}

/// `Delta_k = X_{k+2} - 2 X_{k+1} + X_k` for `k = 0..len-3`.
pub fn second_increments(path: &[f64]) -> Vec<f64> {
    path.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect()
}

/// `(Delta_k / sigma(k), Delta_{k+1} / sigma(k))` with the model scale `sigma(k)`.
pub fn standardized_pairs(spec: &PathSpec, path: &[f64]) -> Result<Vec<(f64, f64)>> {
    let d = second_increments(path);
    (0..d.len().saturating_sub(1))
        .map(|k| {
            let v = spec.second_increment_variance(k);
            if !(v > 0.0) {
                return Err(Error::ZeroVariance(format!("second increment {k} has model variance {v}")));
            }
            let s = v.sqrt();
            Ok((d[k] / s, d[k + 1] / s))
        })
        .collect()
}

/// `|a + b| / (|a| + |b|)` with `0/0 = 1`.
pub fn ir_ratio(a: f64, b: f64) -> f64 {
    let den = a.abs() + b.abs();
    if den == 0.0 {
        1.0
    } else {
        (a + b).abs() / den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IRResult {
    pub value: f64,
    pub ratios: Vec<f64>,
}

/// Mean of `ir_ratio(Delta_k, Delta_{k+1})` over consecutive second increments.
pub fn ir_statistic(path: &[f64]) -> Result<IRResult> {
    if path.len() < 4 {
        return Err(Error::OutOfRange(format!("path of {} points (need at least 4)", path.len())));
    }
    let d = second_increments(path);
    let ratios: Vec<f64> = d.windows(2).map(|w| ir_ratio(w[0], w[1])).collect();
    let value = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(IRResult { value, ratios })
}

/// Same value as [`ir_statistic`] without keeping the ratio series.
pub fn ir_value(path: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut cnt = 0usize;
    let mut prev: Option<f64> = None;
    for w in path.windows(3) {
        let d = w[2] - 2.0 * w[1] + w[0];
        if let Some(p) = prev {
            acc += ir_ratio(p, d);
            cnt += 1;
        }
        prev = Some(d);
    }
    acc / cnt as f64
}
