use serde::{Deserialize, Serialize};

use super::SubordinatedSumSpec;
use super::family::FunctionFamily;
use crate::error::{Error, Result};
use crate::gaussian_model::{GaussianSample, GaussianSampler};
use crate::hermite::HermiteExpansion;
use crate::stats::{self, Cumulants};

/// Distributional summary of replicated statistics against `N(0, sigma2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CLTReport {
    pub label: String,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub sigma2: f64,
    pub sigma_n2: Option<f64>,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub variance_se: f64,
    /// KS distance of `Z / sigma` to the standard normal.
    pub ks_distance: f64,
    /// KS distance to the normal law with the empirical mean and variance.
    pub ks_fitted: f64,
    pub ks_critical_05: f64,
    pub ks_critical_01: f64,
    pub ks_pvalue: f64,
    /// Cumulants of `Z / sigma`.
    pub cumulants: Cumulants,
    pub histogram: Vec<(f64, f64, usize)>,
}

pub const HISTOGRAM_BINS: usize = 40;

impl CLTReport {
    /// Build from replicated values `zs`. `sigma2` is the reference variance.
    pub fn from_values(label: &str, n: usize, seed: u64, zs: &[f64], sigma2: f64, sigma_n2: Option<f64>) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::ZeroVariance(format!("declared sigma^2 = {sigma2}")));
        }
        if zs.len() < 5 {
            return Err(Error::OutOfRange(format!("need at least 5 replicates, got {}", zs.len())));
        }
        let sd = sigma2.sqrt();
        let scaled: Vec<f64> = zs.iter().map(|z| z / sd).collect();
        let cumulants = stats::cumulants(&scaled);
        let mean = stats::mean(zs);
        let var = stats::variance(zs);
        let reps = zs.len();
        let k4 = cumulants.k4 * sigma2 * sigma2;
        let variance_se = ((k4 / reps as f64) + 2.0 * var * var / (reps as f64 - 1.0)).max(0.0).sqrt();
        let ks = stats::ks_distance(&scaled, stats::normal_cdf);
        let fsd = var.sqrt();
        let ks_fitted = if fsd > 0.0 {
            stats::ks_distance(zs, |x| stats::normal_cdf((x - mean) / fsd))
        } else {
            1.0
        };
        Ok(CLTReport {
            label: label.to_string(),
            n,
            reps,
            seed,
            sigma2,
            sigma_n2,
            empirical_mean: mean,
            empirical_variance: var,
            variance_se,
            ks_distance: ks,
            ks_fitted,
            ks_critical_05: stats::ks_critical(reps, 0.05),
            ks_critical_01: stats::ks_critical(reps, 0.01),
            ks_pvalue: stats::ks_pvalue(reps, ks),
            cumulants,
            histogram: stats::histogram(zs, HISTOGRAM_BINS),
        })
    }

    pub fn csv_header() -> &'static str {
        "n,reps,seed,sigma2,sigma_n2,empirical_mean,empirical_variance,variance_se,ks,ks_fitted,ks_critical_05,k3,k3_se,k4,k4_se"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.reps,
            self.seed,
            self.sigma2,
            self.sigma_n2.map(|v| v.to_string()).unwrap_or_default(),
            self.empirical_mean,
            self.empirical_variance,
            self.variance_se,
            self.ks_distance,
            self.ks_fitted,
            self.ks_critical_05,
            self.cumulants.k3,
            self.cumulants.k3_se,
            self.cumulants.k4,
            self.cumulants.k4_se
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::csv_header(), self.csv_row())
    }

    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("left,right,count\n");
        for (l, r, c) in &self.histogram {
            s.push_str(&format!("{l},{r},{c}\n"));
        }
        s
    }
}

/// Per-row evaluators of `f_{k,n}` for one array length.
pub(crate) struct RowFunctions<'a> {
    family: &'a FunctionFamily,
    n: usize,
    expansions: Vec<HermiteExpansion>,
}

impl<'a> RowFunctions<'a> {
    pub(crate) fn new(family: &'a FunctionFamily, n: usize) -> Self {
        let expansions = if family.has_eval() {
            Vec::new()
        } else if family.is_fixed() {
            vec![family.at(0.0)]
        } else {
            (0..n).map(|k| family.for_index(k, n)).collect()
        };
        RowFunctions { family, n, expansions }
    }

    pub(crate) fn eval(&self, k: usize, x: &[f64]) -> f64 {
        if self.family.has_eval() {
            self.family.eval(FunctionFamily::tau_of(k, self.n), x)
        } else if self.expansions.len() == 1 {
            self.expansions[0].eval(x)
        } else {
            self.expansions[k].eval(x)
        }
    }

    /// `n^{-1/2} sum_k f_{k,n}(X_n(k))`.
    pub(crate) fn normalized_sum(&self, s: &GaussianSample) -> f64 {
        s.rows().enumerate().map(|(k, x)| self.eval(k, x)).sum::<f64>() / (self.n as f64).sqrt()
    }
}

/// Replicated `Z_n` drawn with seeds `seed + i`.
pub fn simulate_sums(spec: &SubordinatedSumSpec<'_>, n: usize, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = GaussianSampler::new(spec.model, n)?;
    let rows = RowFunctions::new(&spec.family, n);
    Ok(sampler.map_replicates(seed, reps, |s| rows.normalized_sum(s)))
}

/// Monte Carlo check of `Z_n -> N(0, sigma2)`.
pub fn mc_clt(spec: &SubordinatedSumSpec<'_>, n: usize, reps: usize, seed: u64, sigma2: f64, sigma_n2: Option<f64>) -> Result<CLTReport> {
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroVariance(format!("declared sigma^2 = {sigma2}")));
    }
    let zs = simulate_sums(spec, n, reps, seed)?;
    CLTReport::from_values(&spec.model.id(), n, seed, &zs, sigma2, sigma_n2)
}
