use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Joint covariance structure of a triangular array `X_n(k) in R^nu`,
/// `k = 0..n`. Time indices are zero-based throughout the crate.
pub trait CovarianceModel: Send + Sync {
    fn nu(&self) -> usize;

    /// Short identifier recorded in reports.
    fn id(&self) -> String;

    /// `r_n^{(p,q)}(j,k) = E X_n^{(p)}(j) X_n^{(q)}(k)`.
    fn cross_cov(&self, n: usize, j: usize, k: usize, p: usize, q: usize) -> f64;

    /// `nu x nu` block `E X_n(j) X_n(k)^T`.
    fn cross_block(&self, n: usize, j: usize, k: usize) -> DMatrix<f64> {
        let nu = self.nu();
        DMatrix::from_fn(nu, nu, |p, q| self.cross_cov(n, j, k, p, q))
    }

    fn marginal(&self, n: usize, k: usize) -> DMatrix<f64> {
        self.cross_block(n, k, k)
    }

    /// Whether `r_n^{(p,q)}(j,k)` depends only on `j - k` (and not on `n`).
    fn is_stationary(&self) -> bool {
        false
    }

    /// Dominating envelope `rho(lag)` with `|r_n^{(p,q)}(j,k)| <= |rho(j-k)|`, if declared.
    fn envelope(&self, _lag: i64) -> Option<f64> {
        None
    }

    /// Upper bound on `sum_{|j| > cut} |rho(j)|^m`, if known in closed form.
    fn envelope_tail(&self, _m: u32, _cut: usize) -> Option<f64> {
        None
    }

    /// `E W_tau(0) W_tau(lag)^T` for the tangent process, if declared.
    fn tangent(&self, _tau: f64, _lag: i64) -> Option<DMatrix<f64>> {
        None
    }
}

/// Scalar stationary correlation sequences with `acf(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Autocorrelation {
    Independent,
    /// `r^{|j|}`
    Geometric { r: f64 },
    /// `c (1 + |j|)^{-beta}` for `j != 0`
    Polynomial { c: f64, beta: f64 },
    /// Unit-spacing increments of fBm.
    FbmIncrement { hurst: f64 },
    /// Unit-spacing second differences of fBm, normalized.
    FbmSecondDifference { hurst: f64 },
}

fn fbm_abs(x: f64, h: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(2.0 * h)
    }
}

/// Autocovariance of `B(k+1) - B(k)` for fBm at unit spacing.
pub fn fgn_autocov(j: i64, h: f64) -> f64 {
    let j = j as f64;
    0.5 * (fbm_abs(j + 1.0, h) - 2.0 * fbm_abs(j, h) + fbm_abs(j - 1.0, h))
}

/// Autocovariance of `B(k+2) - 2B(k+1) + B(k)` for fBm at unit spacing.
pub fn fbm_second_diff_autocov(j: i64, h: f64) -> f64 {
    const C: [f64; 3] = [1.0, -2.0, 1.0];
    let mut acc = 0.0;
    for (a, ca) in C.iter().enumerate() {
        for (b, cb) in C.iter().enumerate() {
            acc += ca * cb * fbm_abs((j + a as i64 - b as i64) as f64, h);
        }
    }
    -0.5 * acc
}

impl Autocorrelation {
    pub fn at(&self, j: i64) -> f64 {
        if j == 0 {
            return 1.0;
        }
        match *self {
            Autocorrelation::Independent => 0.0,
            Autocorrelation::Geometric { r } => r.powi(j.unsigned_abs() as i32),
            Autocorrelation::Polynomial { c, beta } => c * (1.0 + j.unsigned_abs() as f64).powf(-beta),
            Autocorrelation::FbmIncrement { hurst } => fgn_autocov(j, hurst),
            Autocorrelation::FbmSecondDifference { hurst } => {
                fbm_second_diff_autocov(j, hurst) / fbm_second_diff_autocov(0, hurst)
            }
        }
    }

    /// Upper bound on `sum_{|j| > cut} |acf(j)|^m`, when available in closed form.
    pub fn tail_bound(&self, m: u32, cut: usize) -> Option<f64> {
        let mf = m as f64;
        match *self {
            Autocorrelation::Independent => Some(0.0),
            Autocorrelation::Geometric { r } => {
                let q = r.abs().powi(m as i32);
                (q < 1.0).then(|| 2.0 * q.powi(cut as i32 + 1) / (1.0 - q))
            }
            Autocorrelation::Polynomial { c, beta } => {
                let e = mf * beta;
                // sum_{j > cut} (1+j)^{-e} <= int_{cut}^inf (1+x)^{-e} dx
                (e > 1.0).then(|| 2.0 * c.abs().powf(mf) * (1.0 + cut as f64).powf(1.0 - e) / (e - 1.0))
            }
            Autocorrelation::FbmIncrement { hurst } | Autocorrelation::FbmSecondDifference { hurst } => {
                // |acf(j)| <= C |j|^{2H-2} (first differences) or |j|^{2H-4}
                let d = if matches!(self, Autocorrelation::FbmIncrement { .. }) { 2.0 } else { 4.0 };
                let e = mf * (d - 2.0 * hurst);
                if e <= 1.0 || cut == 0 {
                    return None;
                }
                let c = (1..=3)
                    .map(|k| {
                        let j = (cut + k) as i64;
                        self.at(j).abs() / (j as f64).powf(2.0 * hurst - d)
                    })
                    .fold(0.0, f64::max)
                    * 1.05;
                Some(2.0 * c.powf(mf) * (cut as f64).powf(1.0 - e) / (e - 1.0))
            }
        }
    }
}

/// Sliding windows `Y(k) = (X(k), ..., X(k+nu-1))` of a stationary scalar
/// sequence. `window = 1` is the scalar process itself. The independent
/// kind is special: its `window` coordinates are mutually independent
/// rather than overlapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryModel {
    #[serde(flatten)]
    pub acf: Autocorrelation,
    #[serde(default = "one")]
    pub window: usize,
}

fn one() -> usize {
    1
}

impl StationaryModel {
    pub fn new(acf: Autocorrelation, window: usize) -> Self {
        StationaryModel { acf, window }
    }

    pub fn independent(nu: usize) -> Self {
        // windows of white noise are white noise in R^nu
        StationaryModel {
            acf: Autocorrelation::Independent,
            window: nu,
        }
    }

    pub fn geometric(r: f64) -> Self {
        Self::new(Autocorrelation::Geometric { r }, 1)
    }

    pub fn block(&self, lag: i64) -> DMatrix<f64> {
        let nu = self.window;
        if self.acf == Autocorrelation::Independent {
            return if lag == 0 { DMatrix::identity(nu, nu) } else { DMatrix::zeros(nu, nu) };
        }
        DMatrix::from_fn(nu, nu, |p, q| self.acf.at(lag + p as i64 - q as i64))
    }
}

impl CovarianceModel for StationaryModel {
    fn nu(&self) -> usize {
        self.window
    }

    fn id(&self) -> String {
        let base = match &self.acf {
            Autocorrelation::Independent => "independent".to_string(),
            Autocorrelation::Geometric { r } => format!("geometric(r={r})"),
            Autocorrelation::Polynomial { c, beta } => format!("polynomial(c={c},beta={beta})"),
            Autocorrelation::FbmIncrement { hurst } => format!("fbm_increment(H={hurst})"),
            Autocorrelation::FbmSecondDifference { hurst } => format!("fbm_second_difference(H={hurst})"),
        };
        if self.window == 1 {
            base
        } else {
            format!("{base}[window={}]", self.window)
        }
    }

    fn cross_cov(&self, _n: usize, j: usize, k: usize, p: usize, q: usize) -> f64 {
        if self.acf == Autocorrelation::Independent {
            return if j == k && p == q { 1.0 } else { 0.0 };
        }
        self.acf.at(j as i64 + p as i64 - k as i64 - q as i64)
    }

    fn is_stationary(&self) -> bool {
        true
    }

    fn envelope(&self, lag: i64) -> Option<f64> {
        if lag == 0 {
            return Some(1.0);
        }
        if self.acf == Autocorrelation::Independent {
            return Some(0.0);
        }
        let w = self.window as i64;
        Some(((1 - w)..w).map(|d| self.acf.at(lag + d).abs()).fold(0.0, f64::max))
    }

    fn envelope_tail(&self, m: u32, cut: usize) -> Option<f64> {
        // each envelope value is a max over 2w-1 shifted lags
        if self.acf == Autocorrelation::Independent {
            return Some(0.0);
        }
        let w = self.window;
        let shifted = cut.checked_sub(w - 1)?;
        Some((2 * w - 1) as f64 * self.acf.tail_bound(m, shifted)?)
    }

    fn tangent(&self, _tau: f64, lag: i64) -> Option<DMatrix<f64>> {
        Some(self.block(lag))
    }
}

/// Finite array given by an explicit `(n nu) x (n nu)` covariance matrix,
/// row index `t * nu + p`.
#[derive(Debug, Clone)]
pub struct ExplicitModel {
    pub nu: usize,
    pub cov: DMatrix<f64>,
    pub label: String,
}

impl ExplicitModel {
    pub fn new(nu: usize, cov: DMatrix<f64>) -> Self {
        ExplicitModel {
            nu,
            cov,
            label: "explicit".into(),
        }
    }

    pub fn len(&self) -> usize {
        self.cov.nrows() / self.nu
    }

    pub fn is_empty(&self) -> bool {
        self.cov.nrows() == 0
    }
}

impl CovarianceModel for ExplicitModel {
    fn nu(&self) -> usize {
        self.nu
    }

    fn id(&self) -> String {
        self.label.clone()
    }

    fn cross_cov(&self, _n: usize, j: usize, k: usize, p: usize, q: usize) -> f64 {
        self.cov[(j * self.nu + p, k * self.nu + q)]
    }
}

/// Stationary models are configured directly from JSON, e.g.
/// `{"kind": "geometric", "r": 0.5, "window": 1}`.
pub type ModelSpec = StationaryModel;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fgn_half_is_white() {
        assert_eq!(fgn_autocov(0, 0.5), 1.0);
        assert!(fgn_autocov(1, 0.5).abs() < 1e-15);
        assert!(fgn_autocov(3, 0.5).abs() < 1e-15);
    }

    #[test]
    fn second_difference_correlation_at_half() {
        assert!((fbm_second_diff_autocov(0, 0.5) - 2.0).abs() < 1e-14);
        assert!((fbm_second_diff_autocov(1, 0.5) + 1.0).abs() < 1e-14);
        assert!((Autocorrelation::FbmSecondDifference { hurst: 0.5 }.at(1) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn window_blocks_and_envelope() {
        let m = StationaryModel::new(Autocorrelation::Geometric { r: 0.5 }, 2);
        assert_eq!(m.cross_cov(10, 3, 3, 0, 1), 0.5);
        assert_eq!(m.cross_cov(10, 4, 3, 0, 1), 1.0);
        assert_eq!(m.envelope(1), Some(1.0));
        assert_eq!(m.envelope(2), Some(0.5));
    }

    #[test]
    fn spec_round_trip() {
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"geometric","r":0.5}"#).unwrap();
        assert_eq!(s, StationaryModel::geometric(0.5));
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"fbm_increment","hurst":0.7,"window":3}"#).unwrap();
        assert_eq!(s.nu(), 3);
    }

    #[test]
    fn tail_bounds_dominate() {
        let a = Autocorrelation::Polynomial { c: 0.8, beta: 0.9 };
        let exact: f64 = (11..200_000).map(|j| 2.0 * a.at(j).powi(2)).sum();
        assert!(a.tail_bound(2, 10).unwrap() >= exact);
        assert!(a.tail_bound(1, 10).is_none());
        let g = Autocorrelation::Geometric { r: 0.5 };
        let exact: f64 = (6..200).map(|j| 2.0 * g.at(j)).sum();
        assert!((g.tail_bound(1, 5).unwrap() - exact).abs() < 1e-14);
        let f = Autocorrelation::FbmIncrement { hurst: 0.7 };
        let exact: f64 = (21..400_000).map(|j| 2.0 * f.at(j).powi(2)).sum();
        assert!(f.tail_bound(2, 20).unwrap() >= exact);
    }
}
