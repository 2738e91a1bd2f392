use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paths::ir_ratio;
use crate::error::{Error, Result};
use crate::gaussian_model::fbm_second_diff_autocov;
use crate::hermite::quadrature::gauss_legendre;

/// Correlation of consecutive second differences of fBm.
pub fn rho2(h: f64) -> f64 {
    fbm_second_diff_autocov(1, h) / fbm_second_diff_autocov(0, h)
}

/// Angles in `[0, 2 pi)` where `a cos t + b sin t` changes sign.
fn zero_angles(a: f64, b: f64) -> [f64; 2] {
    let t = (-a).atan2(b).rem_euclid(2.0 * PI);
    [t, (t + PI).rem_euclid(2.0 * PI)]
}

/// `E g(Z_1, Z_2)` for a degree-0 homogeneous `g` under a standard bivariate
/// normal with correlation `rho`: an angular average, split where `Z_1`,
/// `Z_2` or `Z_1 + Z_2` vanish.
pub fn angular_expectation<G: Fn(f64, f64) -> f64>(rho: f64, g: G, nodes_per_arc: usize) -> f64 {
    let s = (1.0 - rho * rho).max(0.0).sqrt();
    let mut cuts: Vec<f64> = [zero_angles(1.0, 0.0), zero_angles(rho, s), zero_angles(1.0 + rho, s)]
        .concat();
    cuts.push(0.0);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    cuts.push(2.0 * PI);
    let (x, w) = gauss_legendre(nodes_per_arc);
    let mut acc = 0.0;
    for arc in cuts.windows(2) {
        let (lo, hi) = (arc[0], arc[1]);
        let half = (hi - lo) / 2.0;
        for (xi, wi) in x.iter().zip(&w) {
            let t = lo + half * (xi + 1.0);
            acc += wi * half * g(t.cos(), rho * t.cos() + s * t.sin());
        }
    }
    acc / (2.0 * PI)
}

/// `E |Z_1 + Z_2| / (|Z_1| + |Z_2|)` at correlation `rho`.
pub fn lambda_of_rho(rho: f64) -> f64 {
    angular_expectation(rho, ir_ratio, 64)
}

#[allow(non_snake_case)]
pub fn lambda_of_H(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::OutOfRange(format!("H = {h} outside (0, 1)")));
    }
    Ok(lambda_of_rho(rho2(h)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCheck {
    pub hurst: f64,
    pub rho: f64,
    pub quadrature: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub agrees: bool,
}

/// Monte Carlo cross-check of [`lambda_of_H`]; errors when the two differ
/// by more than three standard errors.
pub fn lambda_cross_check(h: f64, samples: usize, seed: u64) -> Result<LambdaCheck> {
    let quadrature = lambda_of_H(h)?;
    let rho = rho2(h);
    let s = (1.0 - rho * rho).sqrt();
    const CHUNK: usize = 1 << 14;
    let sums: Vec<(f64, f64, usize)> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(c as u64));
            let len = CHUNK.min(samples - c * CHUNK);
            let (mut a, mut b) = (0.0, 0.0);
            for _ in 0..len {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                let r = ir_ratio(z1, rho * z1 + s * z2);
                a += r;
                b += r * r;
            }
            (a, b, len)
        })
        .collect();
    let (a, b, cnt) = sums.iter().fold((0.0, 0.0, 0usize), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    let nf = cnt as f64;
    let mc_mean = a / nf;
    let mc_se = ((b / nf - mc_mean * mc_mean) / (nf - 1.0)).sqrt();
    let agrees = (mc_mean - quadrature).abs() <= 3.0 * mc_se;
    let check = LambdaCheck {
        hurst: h,
        rho,
        quadrature,
        mc_mean,
        mc_se,
        agrees,
    };
    if !agrees {
        return Err(Error::Precondition(format!(
            "quadrature value {quadrature} disagrees with Monte Carlo {mc_mean} +- {mc_se}"
        )));
    }
    Ok(check)
}

/// `int_0^1 Lambda(H(t)) dt` by Gauss-Legendre.
pub fn ir_target(curve: &super::paths::HurstCurve) -> Result<f64> {
    if curve.is_constant() {
        return lambda_of_H(curve.at(0.0));
    }
    let (x, w) = gauss_legendre(32);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| Ok(0.5 * wi * lambda_of_H(curve.at(0.5 * (xi + 1.0)))?))
        .sum()
}
