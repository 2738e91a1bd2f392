use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clt_harness::{simulate_sums, SubordinatedSumSpec};
use crate::error::{Error, Result};
use crate::gaussian_model::{covariance_factor, spectral_norm};
use crate::stats;

pub const MIN_REPS: usize = 100;

/// Distance used to compare `S_n` with `S ~ N(0, sigma_S^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// `h = cos`, `|h''| = 1`; `E cos(S) = exp(-sigma^2 / 2)`.
    Smooth,
    /// `h = |x|`, `|h'| = 1`; `E |S| = sigma sqrt(2 / pi)`.
    Lipschitz,
    /// `sup_z |P(S_n <= z) - Phi(z / sigma)|` over a grid.
    Kolmogorov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistance {
    pub mode: DistanceMode,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub value: f64,
    pub se: f64,
}

/// Evaluation grid for the Kolmogorov mode: `points` values on `[-4 sigma, 4 sigma]`.
pub fn z_grid(sigma: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| sigma * (-4.0 + 8.0 * i as f64 / (points - 1) as f64))
        .collect()
}

/// Distance of already simulated `S_n` values from `N(0, sigma_s2)`.
pub fn distance_from_values(mode: DistanceMode, values: &[f64], sigma_s2: f64) -> Result<(f64, f64)> {
    let reps = values.len();
    if reps < MIN_REPS {
        return Err(Error::OutOfRange(format!("{reps} replicates; at least {MIN_REPS} required")));
    }
    if !(sigma_s2 > 0.0) {
        return Err(Error::ZeroVariance(format!("sigma_S^2 = {sigma_s2}")));
    }
    let sigma = sigma_s2.sqrt();
    let r = reps as f64;
    let probe = |h: &dyn Fn(f64) -> f64, exact: f64| {
        let hs: Vec<f64> = values.iter().map(|&x| h(x)).collect();
        let m = stats::mean(&hs);
        ((m - exact).abs(), (stats::variance(&hs) / r).sqrt())
    };
    Ok(match mode {
        DistanceMode::Smooth => probe(&f64::cos, (-sigma_s2 / 2.0).exp()),
        DistanceMode::Lipschitz => probe(&f64::abs, sigma * (2.0 / std::f64::consts::PI).sqrt()),
        DistanceMode::Kolmogorov => {
            let mut v = values.to_vec();
            v.sort_by(|a, b| a.total_cmp(b));
            let mut best = (0.0, 0.0);
            for z in z_grid(sigma, 161) {
                let p = v.partition_point(|&x| x <= z) as f64 / r;
                let d = (p - stats::normal_cdf(z / sigma)).abs();
                if d > best.0 {
                    best = (d, (p * (1.0 - p) / r).sqrt());
                }
            }
            best
        }
    })
}

/// Monte Carlo distance between `S_n` and `N(0, sigma_s2)`.
pub fn empirical_distance(
    spec: &SubordinatedSumSpec<'_>,
    n: usize,
    reps: usize,
    seed: u64,
    sigma_s2: f64,
    mode: DistanceMode,
) -> Result<EmpiricalDistance> {
    if reps < MIN_REPS {
        return Err(Error::OutOfRange(format!("{reps} replicates; at least {MIN_REPS} required")));
    }
    let values = simulate_sums(spec, n, reps, seed)?;
    let (value, se) = distance_from_values(mode, &values, sigma_s2)?;
    Ok(EmpiricalDistance {
        mode,
        n,
        reps,
        seed,
        value,
        se,
    })
}

/// One covariance pair in the interpolation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationCase {
    pub gap: f64,
    pub gap_se: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Random `nu x nu` cross-covariance with spectral norm `scale < 1`.
fn random_cross(nu: usize, scale: f64, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(nu, nu, |_, _| StandardNormal.sample(rng));
    let s = spectral_norm(&a);
    a * (scale / s)
}

/// MC estimate of `Cov(f(X_1), f(X_2))` with `E X_i X_i^T = I`, `E X_1 X_2^T = c`.
fn mc_cov<F>(f: &F, c: &DMatrix<f64>, samples: usize, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let nu = c.nrows();
    let mut joint = DMatrix::identity(2 * nu, 2 * nu);
    joint.view_mut((0, nu), (nu, nu)).copy_from(c);
    joint.view_mut((nu, 0), (nu, nu)).copy_from(&c.transpose());
    let l = covariance_factor(&joint)?;
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(ci as u64));
            let len = CHUNK.min(samples - ci * CHUNK);
            (0..len)
                .map(|_| {
                    let z = DVector::from_fn(2 * nu, |_, _| StandardNormal.sample(&mut rng));
                    let x = &l * z;
                    (f(&x.as_slice()[..nu]), f(&x.as_slice()[nu..]))
                })
                .collect()
        })
        .collect();
    let pairs: Vec<(f64, f64)> = parts.into_iter().flatten().collect();
    let r = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / r;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / r;
    let prods: Vec<f64> = pairs.iter().map(|(a, b)| (a - ma) * (b - mb)).collect();
    Ok((stats::mean(&prods), (stats::variance(&prods) / r).sqrt()))
}

/// `|Cov_1 - Cov_0| <= L^2 ||Sigma_1 - Sigma_0||` on `pairs` random
/// cross-covariance pairs, with MC covariances from `samples` draws each.
/// A case holds when the gap is within three standard errors of the bound.
pub fn interpolation_check<F>(
    f: F,
    lipschitz: f64,
    nu: usize,
    pairs: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<InterpolationCase>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let s1 = random_cross(nu, rand::Rng::random_range(&mut rng, 0.05..0.95), &mut rng);
        let s0 = random_cross(nu, rand::Rng::random_range(&mut rng, 0.05..0.95), &mut rng);
        let base = seed.wrapping_mul(1_000_003).wrapping_add(1_000 * i as u64);
        let (c1, e1) = mc_cov(&f, &s1, samples, base)?;
        let (c0, e0) = mc_cov(&f, &s0, samples, base.wrapping_add(500))?;
        let gap = (c1 - c0).abs();
        let gap_se = (e1 * e1 + e0 * e0).sqrt();
        let rhs = lipschitz * lipschitz * spectral_norm(&(&s1 - &s0));
        out.push(InterpolationCase {
            gap,
            gap_se,
            rhs,
            holds: gap <= rhs + 3.0 * gap_se,
        });
    }
    Ok(out)
}
