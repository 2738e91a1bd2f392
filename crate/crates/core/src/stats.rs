//! Small statistical helpers shared by the Monte Carlo experiments.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `sup_x |F_n(x) - F(x)|` for the empirical law of `xs`.
pub fn ks_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov critical value `c(level) / sqrt(n)` for the
/// two-sided one-sample test, e.g. `level = 0.05`.
pub fn ks_critical(n: usize, level: f64) -> f64 {
    (-0.5 * (level / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// Asymptotic p-value `P(sqrt(n) D > d sqrt(n))` from the Kolmogorov series.
pub fn ks_pvalue(n: usize, d: f64) -> f64 {
    let t = d * (n as f64).sqrt();
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// k-statistics `(k2, k3, k4)` from power sums of centered data.
fn kstats_from_sums(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> (f64, f64, f64) {
    let k2 = (n * s2 - s1 * s1) / (n * (n - 1.0));
    let k3 = (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3) / (n * (n - 1.0) * (n - 2.0));
    let k4 = (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2 - 3.0 * n * (n - 1.0) * s2 * s2 - 4.0 * n * (n + 1.0) * s1 * s3
        + n * n * (n + 1.0) * s4)
        / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    (k2, k3, k4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cumulants {
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k3_se: f64,
    pub k4_se: f64,
    /// `k3 / k2^{3/2}` and `k4 / k2^2` with jackknife errors.
    pub skewness: f64,
    pub skewness_se: f64,
    pub excess_kurtosis: f64,
    pub excess_kurtosis_se: f64,
}

/// Unbiased cumulant estimates with leave-one-out jackknife errors.
pub fn cumulants(xs: &[f64]) -> Cumulants {
    let n = xs.len();
    assert!(n >= 5, "need at least 5 observations");
    let c = mean(xs);
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - c;
        s1 += d;
        s2 += d * d;
        s3 += d * d * d;
        s4 += d * d * d * d;
    }
    let nf = n as f64;
    let (k2, k3, k4) = kstats_from_sums(nf, s1, s2, s3, s4);
    let stats = |k2: f64, k3: f64, k4: f64| [k3, k4, k3 / k2.powf(1.5), k4 / (k2 * k2)];
    let full = stats(k2, k3, k4);
    let mut loo = vec![[0.0; 4]; n];
    for (i, &x) in xs.iter().enumerate() {
        let d = x - c;
        let (a, b, e) = kstats_from_sums(nf - 1.0, s1 - d, s2 - d * d, s3 - d * d * d, s4 - d * d * d * d);
        loo[i] = stats(a, b, e);
    }
    let mut se = [0.0; 4];
    for (q, s) in se.iter_mut().enumerate() {
        let m = loo.iter().map(|r| r[q]).sum::<f64>() / nf;
        *s = ((nf - 1.0) / nf * loo.iter().map(|r| (r[q] - m).powi(2)).sum::<f64>()).sqrt();
    }
    Cumulants {
        k2,
        k3,
        k4,
        k3_se: se[0],
        k4_se: se[1],
        skewness: full[2],
        skewness_se: se[2],
        excess_kurtosis: full[3],
        excess_kurtosis_se: se[3],
    }
}

/// `(left, right, count)` over `bins` equal-width bins spanning the data.
pub fn histogram(xs: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if xs.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let p = normal_cdf(1.959963984540054);
        assert!((p - 0.975).abs() < 1e-11, "{p}");
        let q = normal_quantile(0.975);
        assert!((q - 1.959963984540054).abs() < 1e-6, "{q}");
    }

    #[test]
    fn ks_of_uniform_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
        assert!((ks_critical(100, 0.05) - 0.1358).abs() < 1e-3);
        assert!((ks_pvalue(100, 0.1358) - 0.05).abs() < 2e-3);
    }

    #[test]
    fn kstats_match_direct_formulas() {
        let xs = [1.0, 2.0, 4.0, 7.0, 11.0, 3.0, -2.0];
        let c = cumulants(&xs);
        let n = xs.len() as f64;
        let m = mean(&xs);
        let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
        assert!((c.k2 - variance(&xs)).abs() < 1e-12);
        assert!((c.k3 - n * n * m3 / ((n - 1.0) * (n - 2.0))).abs() < 1e-10);
        let k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
        assert!((c.k4 - k4).abs() < 1e-9);
    }

    #[test]
    fn histogram_counts_everything() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let h = histogram(&xs, 7);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 50);
    }
}
