use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_model::{spectral_norm, CovarianceModel};

/// `c0 + c1 tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub c0: f64,
    pub c1: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { c0: c, c1: 0.0 }
    }

    pub fn at(&self, tau: f64) -> f64 {
        self.c0 + self.c1 * tau
    }

    /// `sup |c0 + c1 tau|` over `[0, 2]`, which covers every time index
    /// `t / n` with `t <= n + nu - 1 <= 2n`.
    fn sup(&self) -> f64 {
        self.at(0.0).abs().max(self.at(2.0).abs())
    }
}

/// Lag profile of one coefficient term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `k(0) = 1`, zero elsewhere.
    Delta,
    /// `k(j) = j^{alpha - 1}` for `j >= 1`, `k(0) = 0`.
    Power { alpha: f64 },
}

impl Kernel {
    fn values(&self, j_max: usize) -> Vec<f64> {
        match *self {
            Kernel::Delta => {
                let mut v = vec![0.0; j_max + 1];
                v[0] = 1.0;
                v
            }
            Kernel::Power { alpha } => (0..=j_max)
                .map(|j| if j == 0 { 0.0 } else { (j as f64).powf(alpha - 1.0) })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTerm {
    pub amplitude: Affine,
    pub kernel: Kernel,
}

/// Causal moving average `X_{t,n} = sum_{j=0}^{J} a(t/n, j) eps_{t-j}` with
/// separable coefficients `a(tau, j) = sum_r amp_r(tau) k_r(j)`, observed
/// through windows `Y_n(k) = (X_{k+1}, ..., X_{k+nu})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocStatSpec {
    pub terms: Vec<CoefficientTerm>,
    /// Memory exponent in the decay envelope `K max(1, |j|)^{alpha - 1}`.
    pub alpha: f64,
    pub j_max: usize,
    pub window: usize,
}

/// Default tolerance on the coefficient energy dropped by the truncation.
pub const TAIL_ENERGY_TOLERANCE: f64 = 1e-2;

impl LocStatSpec {
    /// `a(tau, j) = amp(tau) delta_{j0}`.
    pub fn white(amp: Affine, window: usize) -> Self {
        LocStatSpec {
            terms: vec![CoefficientTerm {
                amplitude: amp,
                kernel: Kernel::Delta,
            }],
            alpha: 0.0,
            j_max: 0,
            window,
        }
    }

    /// `a(tau, 0) = lead(tau)`, `a(tau, j) = tail(tau) j^{alpha - 1}` for `j >= 1`.
    pub fn long_memory(lead: Affine, tail: Affine, alpha: f64, j_max: usize, window: usize) -> Self {
        LocStatSpec {
            terms: vec![
                CoefficientTerm {
                    amplitude: lead,
                    kernel: Kernel::Delta,
                },
                CoefficientTerm {
                    amplitude: tail,
                    kernel: Kernel::Power { alpha },
                },
            ],
            alpha,
            j_max,
            window,
        }
    }

    pub fn coefficient(&self, tau: f64, j: usize) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let k = match t.kernel {
                    Kernel::Delta => (j == 0) as u8 as f64,
                    Kernel::Power { alpha } => {
                        if j == 0 {
                            0.0
                        } else {
                            (j as f64).powf(alpha - 1.0)
                        }
                    }
                };
                t.amplitude.at(tau) * k
            })
            .sum()
    }

    /// Smallest `K` with `|a(tau, j)| <= K max(1, j)^{alpha - 1}`, `tau in [0, 2]`.
    pub fn envelope_constant(&self) -> f64 {
        let mut k0 = 0.0;
        let mut k_tail = 0.0f64;
        for t in &self.terms {
            match t.kernel {
                Kernel::Delta => k0 += t.amplitude.sup(),
                Kernel::Power { .. } => k_tail += t.amplitude.sup(),
            }
        }
        k0.max(k_tail)
    }

    /// Bound on `sup_tau sum_{j > J} a(tau, j)^2` for the untruncated curve.
    pub fn tail_energy(&self) -> f64 {
        let j = self.j_max as f64;
        let s: f64 = self
            .terms
            .iter()
            .filter_map(|t| match t.kernel {
                Kernel::Delta => None,
                Kernel::Power { alpha } => {
                    let e = 2.0 * alpha - 1.0;
                    Some(t.amplitude.sup() * (j.max(1.0).powf(e) / -e).sqrt())
                }
            })
            .sum();
        s * s
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::OutOfRange("window length must be positive".into()));
        }
        if !(self.alpha < 0.5) {
            return Err(Error::OutOfRange(format!("alpha = {} (need alpha < 1/2)", self.alpha)));
        }
        for t in &self.terms {
            if let Kernel::Power { alpha } = t.kernel {
                if alpha > self.alpha || alpha >= 0.5 {
                    return Err(Error::OutOfRange(format!(
                        "kernel exponent {alpha} exceeds the envelope exponent {}",
                        self.alpha
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Covariance model of the windowed moving average, exact for the
/// truncated coefficients.
#[derive(Debug, Clone)]
pub struct LocStatModel {
    spec: LocStatSpec,
    /// `g[r][r'][d + J] = sum_j k_r(j) k_{r'}(j + d)`, `|d| <= J`.
    g: Vec<Vec<Vec<f64>>>,
    sups: Vec<f64>,
}

impl LocStatModel {
    pub fn new(spec: LocStatSpec) -> Result<Self> {
        spec.validate()?;
        let jm = spec.j_max;
        let ks: Vec<Vec<f64>> = spec.terms.iter().map(|t| t.kernel.values(jm)).collect();
        let support: Vec<Vec<usize>> = ks
            .iter()
            .map(|k| (0..=jm).filter(|&j| k[j] != 0.0).collect())
            .collect();
        let g = (0..ks.len())
            .map(|r| {
                (0..ks.len())
                    .map(|rp| {
                        (0..=2 * jm)
                            .map(|idx| {
                                let d = idx as i64 - jm as i64;
                                support[r]
                                    .iter()
                                    .filter_map(|&j| {
                                        let jp = j as i64 + d;
                                        (0..=jm as i64).contains(&jp).then(|| ks[r][j] * ks[rp][jp as usize])
                                    })
                                    .sum()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let sups = spec.terms.iter().map(|t| t.amplitude.sup()).collect();
        Ok(LocStatModel { spec, g, sups })
    }

    pub fn spec(&self) -> &LocStatSpec {
        &self.spec
    }

    fn g_at(&self, r: usize, rp: usize, d: i64) -> f64 {
        let jm = self.spec.j_max as i64;
        if d.abs() > jm {
            0.0
        } else {
            self.g[r][rp][(d + jm) as usize]
        }
    }

    /// `Cov(X_{t,n}, X_{s,n})` for one-based times.
    pub fn time_cov(&self, n: usize, t: usize, s: usize) -> f64 {
        let (tt, ts) = (t as f64 / n as f64, s as f64 / n as f64);
        let d = s as i64 - t as i64;
        let mut acc = 0.0;
        for (r, a) in self.spec.terms.iter().enumerate() {
            for (rp, b) in self.spec.terms.iter().enumerate() {
                acc += a.amplitude.at(tt) * b.amplitude.at(ts) * self.g_at(r, rp, d);
            }
        }
        acc
    }

    /// `Cov` of the stationary process frozen at `tau`, at time lag `d`.
    pub fn frozen_cov(&self, tau: f64, d: i64) -> f64 {
        let mut acc = 0.0;
        for (r, a) in self.spec.terms.iter().enumerate() {
            for (rp, b) in self.spec.terms.iter().enumerate() {
                acc += a.amplitude.at(tau) * b.amplitude.at(tau) * self.g_at(r, rp, d);
            }
        }
        acc
    }

    fn time_envelope(&self, d: i64) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.sups.len() {
            for rp in 0..self.sups.len() {
                acc += self.sups[r] * self.sups[rp] * self.g_at(r, rp, d).abs();
            }
        }
        acc
    }
}

impl CovarianceModel for LocStatModel {
    fn nu(&self) -> usize {
        self.spec.window
    }

    fn id(&self) -> String {
        format!("locstat(alpha={},J={},window={})", self.spec.alpha, self.spec.j_max, self.spec.window)
    }

    fn cross_cov(&self, n: usize, j: usize, k: usize, p: usize, q: usize) -> f64 {
        self.time_cov(n, j + 1 + p, k + 1 + q)
    }

    fn is_stationary(&self) -> bool {
        self.spec.terms.iter().all(|t| t.amplitude.c1 == 0.0)
    }

    fn envelope(&self, lag: i64) -> Option<f64> {
        let w = self.spec.window as i64;
        Some(((1 - w)..w).map(|d| self.time_envelope(lag + d)).fold(0.0, f64::max))
    }

    fn envelope_tail(&self, m: u32, cut: usize) -> Option<f64> {
        // the truncated kernels vanish beyond j_max, so the tail is a finite sum
        let last = self.spec.j_max + self.spec.window;
        Some(
            2.0 * (cut + 1..=last)
                .map(|j| self.envelope(j as i64).unwrap().powi(m as i32))
                .sum::<f64>(),
        )
    }

    fn tangent(&self, tau: f64, lag: i64) -> Option<DMatrix<f64>> {
        let nu = self.spec.window;
        Some(DMatrix::from_fn(nu, nu, |p, q| self.frozen_cov(tau, lag + q as i64 - p as i64)))
    }
}

/// FFT convolution sampler for one `(spec, n)`; plans and kernel spectra are
/// built once.
pub struct LocStatSimulator {
    spec: LocStatSpec,
    n: usize,
    len: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectra: Vec<Option<Vec<Complex<f64>>>>,
}

impl LocStatSimulator {
    /// Sampler for `X_{t,n}`, `t = 1..=n + extra`.
    pub fn new(spec: &LocStatSpec, n: usize, extra: usize, tail_tol: f64) -> Result<Self> {
        spec.validate()?;
        let energy = spec.tail_energy();
        if energy > tail_tol {
            return Err(Error::TailTooLarge {
                bound: energy,
                tolerance: tail_tol,
            });
        }
        let len = n + extra;
        let fft_len = (len + 2 * spec.j_max + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let spectra = spec
            .terms
            .iter()
            .map(|t| match t.kernel {
                Kernel::Delta => None,
                k => {
                    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); fft_len];
                    for (j, v) in k.values(spec.j_max).into_iter().enumerate() {
                        buf[j] = Complex::new(v, 0.0);
                    }
                    forward.process(&mut buf);
                    Some(buf)
                }
            })
            .collect();
        Ok(LocStatSimulator {
            spec: spec.clone(),
            n,
            len,
            fft_len,
            forward,
            inverse,
            spectra,
        })
    }

    /// One draw; innovations `eps_{1-J}, ..., eps_{n+extra}` from `seed`.
    pub fn sample(&self, seed: u64) -> Vec<f64> {
        let jm = self.spec.j_max;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let eps: Vec<f64> = (0..self.len + jm).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut out = vec![0.0; self.len];
        let mut eps_hat: Option<Vec<Complex<f64>>> = None;
        for (term, spectrum) in self.spec.terms.iter().zip(&self.spectra) {
            // conv[t] = sum_j k(j) eps_{t-j}, eps index shifted by J
            let conv: Vec<f64> = match spectrum {
                None => (0..self.len).map(|i| eps[i + jm]).collect(),
                Some(kh) => {
                    let eh = eps_hat.get_or_insert_with(|| {
                        let mut b: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); self.fft_len];
                        for (i, e) in eps.iter().enumerate() {
                            b[i] = Complex::new(*e, 0.0);
                        }
                        self.forward.process(&mut b);
                        b
                    });
                    let mut b: Vec<Complex<f64>> = eh.iter().zip(kh).map(|(a, k)| a * k).collect();
                    self.inverse.process(&mut b);
                    let scale = 1.0 / self.fft_len as f64;
                    (0..self.len).map(|i| b[i + jm].re * scale).collect()
                }
            };
            for (i, c) in conv.iter().enumerate() {
                out[i] += term.amplitude.at((i + 1) as f64 / self.n as f64) * c;
            }
        }
        out
    }
}

pub fn simulate_locstat(spec: &LocStatSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(LocStatSimulator::new(spec, n, spec.window - 1, TAIL_ENERGY_TOLERANCE)?.sample(seed))
}

/// `g_tau(v_k) = |sum_j a(tau, j) e^{-i j v_k}|^2 / (2 pi)` on `v_k = 2 pi k / L`.
pub fn spectral_density(spec: &LocStatSpec, tau: f64, len: usize) -> Vec<f64> {
    assert!(len > spec.j_max);
    let mut buf: Vec<Complex<f64>> = (0..len)
        .map(|j| Complex::new(if j <= spec.j_max { spec.coefficient(tau, j) } else { 0.0 }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf.iter().map(|c| c.norm_sqr() / (2.0 * std::f64::consts::PI)).collect()
}

/// Grid length that integrates `g_tau` against window trigonometric
/// polynomials exactly.
pub fn spectral_grid_len(spec: &LocStatSpec) -> usize {
    (2 * (spec.j_max + spec.window) + 2).next_power_of_two()
}

/// `int g_tau(v) |sum_p e^{i p v} x_p|^2 dv` on the exact grid.
pub fn spectral_quadratic_form(spec: &LocStatSpec, tau: f64, x: &[f64]) -> f64 {
    let len = spectral_grid_len(spec);
    let g = spectral_density(spec, tau, len);
    let h = 2.0 * std::f64::consts::PI / len as f64;
    g.iter()
        .enumerate()
        .map(|(k, gk)| {
            let v = h * k as f64;
            let s: Complex<f64> = x
                .iter()
                .enumerate()
                .map(|(p, xp)| Complex::from_polar(*xp, p as f64 * v))
                .sum();
            gk * s.norm_sqr()
        })
        .sum::<f64>()
        * h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceGapRow {
    pub tau: f64,
    /// Zero-based window index `[n tau]` clamped into the array.
    pub k: usize,
    pub gap: f64,
    pub g_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocStatCovariances {
    pub n: usize,
    pub rows: Vec<CovarianceGapRow>,
    pub sup_gap: f64,
    pub g_min: f64,
}

/// `||Sigma_{[n tau], n} - Sigma_tau||` on a `tau` grid, with the minimum
/// of the frozen spectral density at each grid point.
pub fn locstat_covariances(model: &LocStatModel, n: usize, taus: &[f64]) -> Result<LocStatCovariances> {
    let spec = model.spec();
    let len = spectral_grid_len(spec);
    let rows: Vec<CovarianceGapRow> = taus
        .iter()
        .map(|&tau| {
            let k = ((n as f64 * tau).floor() as usize).clamp(1, n) - 1;
            let sk = model.marginal(n, k);
            let st = model.tangent(tau, 0).unwrap();
            let g = spectral_density(spec, tau, len);
            CovarianceGapRow {
                tau,
                k,
                gap: spectral_norm(&(sk - st)),
                g_min: g.iter().copied().fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    Ok(LocStatCovariances {
        n,
        sup_gap: rows.iter().map(|r| r.gap).fold(0.0, f64::max),
        g_min: rows.iter().map(|r| r.g_min).fold(f64::INFINITY, f64::min),
        rows,
    })
}
