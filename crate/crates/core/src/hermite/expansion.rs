use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::multi_index::MultiIndex;
use super::poly::{binomial, factorial, hermite_all, hermite_poly};
use super::quadrature::{QuadSpec, QuadratureRule};
use crate::error::{Error, Result};

/// Residuals more negative than this (relative to `max(1, E f^2)`) mean the
/// quadrature could not resolve the requested coefficients.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Default relative threshold for declaring a chaos level nonzero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// `H_k(x) = prod_u H_{k_u}(x_u)`.
pub fn product_hermite(k: &MultiIndex, x: &[f64]) -> Result<f64> {
    if k.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: x.len(),
        });
    }
    Ok(k
        .entries()
        .iter()
        .zip(x)
        .map(|(&e, &xi)| hermite_poly(e as usize, xi))
        .product())
}

/// `J_f(k) = E f(X) H_k(X)` by quadrature.
pub fn hermite_coefficient<F>(f: F, k: &MultiIndex, quad: &QuadSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let rule = quad.build(k.dim())?;
    let fx = (0..rule.len()).map(|i| f(rule.node(i))).collect::<Vec<_>>();
    if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue {
            node: rule.node(i).to_vec(),
            value: fx[i],
        });
    }
    let mut acc = 0.0;
    for (i, v) in fx.iter().enumerate() {
        acc += rule.weight(i) * v * product_hermite(k, rule.node(i))?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub k: MultiIndex,
    #[serde(rename = "J")]
    pub j: f64,
}

/// Truncated Hermite expansion `f ~ sum_{|k| <= N} J_f(k) H_k / k!`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteExpansion {
    nu: usize,
    #[serde(rename = "N")]
    order: usize,
    coeffs: Vec<Coefficient>,
    /// `E f^2 - sum J^2/k!`; `0` when built from coefficients alone.
    residual: f64,
}

impl HermiteExpansion {
    /// Build from explicit coefficients; missing indices are zero.
    pub fn from_coefficients(
        nu: usize,
        order: usize,
        given: impl IntoIterator<Item = (MultiIndex, f64)>,
        residual: f64,
    ) -> Result<Self> {
        let mut coeffs: Vec<Coefficient> = MultiIndex::up_to_order(nu, order)
            .into_iter()
            .map(|k| Coefficient { k, j: 0.0 })
            .collect();
        for (k, j) in given {
            if k.dim() != nu {
                return Err(Error::DimensionMismatch {
                    expected: nu,
                    got: k.dim(),
                });
            }
            if k.order() > order {
                return Err(Error::OutOfRange(format!(
                    "index {k} exceeds truncation order {order}"
                )));
            }
            let slot = coeffs.iter_mut().find(|c| c.k == k).expect("graded listing is complete");
            slot.j += j;
        }
        Ok(HermiteExpansion {
            nu,
            order,
            coeffs,
            residual,
        })
    }

    /// `c * H_k`, i.e. the single coefficient `J(k) = c k!`.
    pub fn monomial(k: MultiIndex, c: f64, order: usize) -> Result<Self> {
        let nu = k.dim();
        let j = c * k.factorial();
        Self::from_coefficients(nu, order.max(k.order()), [(k, j)], 0.0)
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Coefficient] {
        &self.coeffs
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn coefficient(&self, k: &MultiIndex) -> f64 {
        self.coeffs.iter().find(|c| &c.k == k).map_or(0.0, |c| c.j)
    }

    /// `J_f(0) = E f(X)`.
    pub fn mean(&self) -> f64 {
        self.coeffs.first().map_or(0.0, |c| c.j)
    }

    /// `sum_{|k| <= N} J^2 / k!`
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.j * c.j / c.k.factorial()).sum()
    }

    /// `E f^2` including the truncation residual.
    pub fn full_norm_sq(&self) -> f64 {
        self.l2_norm_sq() + self.residual.max(0.0)
    }

    /// `E f_(l)^2 = sum_{|k| = l} J^2 / k!`.
    pub fn level_mass(&self, level: usize) -> f64 {
        self.coeffs
            .iter()
            .filter(|c| c.k.order() == level)
            .map(|c| c.j * c.j / c.k.factorial())
            .sum()
    }

    /// Drop the constant term.
    pub fn centered(&self) -> Self {
        let mut out = self.clone();
        if let Some(c) = out.coeffs.first_mut() {
            c.j = 0.0;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            c.j *= s;
        }
        out.residual *= s * s;
        out
    }

    /// Keep only levels `<= n`; discarded mass moves into the residual.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.order);
        let dropped: f64 = (n + 1..=self.order).map(|l| self.level_mass(l)).sum();
        HermiteExpansion {
            nu: self.nu,
            order: n,
            coeffs: self.coeffs.iter().filter(|c| c.k.order() <= n).cloned().collect(),
            residual: self.residual + dropped,
        }
    }

    /// `(1 - w) self + w other`, coefficientwise. Residuals are combined
    /// by the triangle inequality in L^2 so they stay upper bounds.
    pub fn interpolate(&self, other: &Self, w: f64) -> Result<Self> {
        if self.nu != other.nu || self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                got: other.order,
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| Coefficient {
                k: a.k.clone(),
                j: (1.0 - w) * a.j + w * b.j,
            })
            .collect();
        let r = (1.0 - w) * self.residual.max(0.0).sqrt() + w * other.residual.max(0.0).sqrt();
        Ok(HermiteExpansion {
            nu: self.nu,
            order: self.order,
            coeffs,
            residual: r * r,
        })
    }

    /// Evaluate the truncated series at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut tables: Vec<Vec<f64>> = Vec::with_capacity(self.nu);
        for &xi in x {
            let mut h = Vec::new();
            hermite_all(self.order, xi, &mut h);
            tables.push(h);
        }
        self.coeffs
            .iter()
            .filter(|c| c.j != 0.0)
            .map(|c| {
                let h: f64 = c
                    .k
                    .entries()
                    .iter()
                    .zip(&tables)
                    .map(|(&e, t)| t[e as usize])
                    .product();
                c.j * h / c.k.factorial()
            })
            .sum()
    }

    /// Expansion of the pointwise product of the two truncated series, by
    /// `H_a H_b = sum_r r! C(a,r) C(b,r) H_{a+b-2r}` in each coordinate.
    /// The result is exact for the truncated inputs; residuals are not carried.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.nu != other.nu {
            return Err(Error::DimensionMismatch {
                expected: self.nu,
                got: other.nu,
            });
        }
        let nu = self.nu;
        let mut acc: std::collections::HashMap<Vec<u32>, f64> = std::collections::HashMap::new();
        for a in self.coeffs.iter().filter(|c| c.j != 0.0) {
            for b in other.coeffs.iter().filter(|c| c.j != 0.0) {
                let w = a.j * b.j / (a.k.factorial() * b.k.factorial());
                let mut k = vec![0u32; nu];
                linearize(a.k.entries(), b.k.entries(), 0, w, &mut k, &mut acc);
            }
        }
        let order = self.order + other.order;
        Self::from_coefficients(
            nu,
            order,
            acc.into_iter().map(|(k, v)| {
                let k = MultiIndex::new(k);
                let j = v * k.factorial();
                (k, j)
            }),
            0.0,
        )
    }

    /// Nonzero coefficients at exactly level `l`.
    pub fn level(&self, l: usize) -> impl Iterator<Item = &Coefficient> {
        self.coeffs.iter().filter(move |c| c.k.order() == l && c.j != 0.0)
    }
}

fn linearize(
    a: &[u32],
    b: &[u32],
    c: usize,
    w: f64,
    k: &mut Vec<u32>,
    acc: &mut std::collections::HashMap<Vec<u32>, f64>,
) {
    if c == a.len() {
        *acc.entry(k.clone()).or_insert(0.0) += w;
        return;
    }
    let (x, y) = (a[c] as usize, b[c] as usize);
    for r in 0..=x.min(y) {
        let m = factorial(r) * binomial(x, r) * binomial(y, r);
        k[c] = (x + y - 2 * r) as u32;
        linearize(a, b, c + 1, w * m, k, acc);
    }
}

/// Compute all `J_f(k)`, `|k| <= order`, from one pass of `f` over the nodes.
pub fn build_expansion<F>(f: F, nu: usize, order: usize, quad: &QuadSpec) -> Result<HermiteExpansion>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let rule = quad.build(nu)?;
    build_with_rule(&f, nu, order, &rule)
}

pub(crate) fn build_with_rule<F>(f: &F, nu: usize, order: usize, rule: &QuadratureRule) -> Result<HermiteExpansion>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if rule.nu() != nu {
        return Err(Error::DimensionMismatch {
            expected: nu,
            got: rule.nu(),
        });
    }
    let values: Vec<f64> = (0..rule.len()).into_par_iter().map(|i| f(rule.node(i))).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue {
            node: rule.node(i).to_vec(),
            value: values[i],
        });
    }
    // per node, per coordinate: H_0..H_order
    let stride = order + 1;
    let mut tables = vec![0.0; rule.len() * nu * stride];
    let mut buf = Vec::new();
    for i in 0..rule.len() {
        for (d, &x) in rule.node(i).iter().enumerate() {
            hermite_all(order, x, &mut buf);
            let off = (i * nu + d) * stride;
            tables[off..off + stride].copy_from_slice(&buf);
        }
    }
    let norm_sq: f64 = values.iter().zip(rule.weights()).map(|(v, w)| w * v * v).sum();
    let indices = MultiIndex::up_to_order(nu, order);
    let coeffs: Vec<Coefficient> = indices
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..rule.len() {
                let mut h = 1.0;
                for (d, &e) in k.entries().iter().enumerate() {
                    h *= tables[(i * nu + d) * stride + e as usize];
                }
                acc += rule.weight(i) * values[i] * h;
            }
            Coefficient { k, j: acc }
        })
        .collect();
    let mut e = HermiteExpansion {
        nu,
        order,
        coeffs,
        residual: 0.0,
    };
    let residual = norm_sq - e.l2_norm_sq();
    if residual < -RESIDUAL_TOLERANCE * norm_sq.max(1.0) {
        return Err(Error::NegativeResidual {
            residual,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    e.residual = residual.max(0.0);
    Ok(e)
}

/// Outcome of a rank scan. `rank` is `None` when every level up to `N`
/// is below tolerance, in which case only `rank >= at_least` is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: Option<usize>,
    pub at_least: usize,
    pub level_mass: f64,
    pub tolerance: f64,
}

impl RankReport {
    /// Certified `rank >= m`.
    pub fn at_least(&self, m: usize) -> bool {
        self.at_least >= m
    }
}

/// Smallest level whose mass exceeds `tol * max(E f^2, tiny)`.
pub fn hermite_rank(e: &HermiteExpansion, tol: f64) -> RankReport {
    let scale = e.full_norm_sq().max(f64::MIN_POSITIVE);
    let thr = tol * scale;
    for l in 0..=e.order() {
        let mass = e.level_mass(l);
        if mass > thr {
            return RankReport {
                rank: Some(l),
                at_least: l,
                level_mass: mass,
                tolerance: thr,
            };
        }
    }
    RankReport {
        rank: None,
        at_least: e.order() + 1,
        level_mass: 0.0,
        tolerance: thr,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosComponent {
    pub level: usize,
    pub coeffs: Vec<Coefficient>,
    pub second_moment: f64,
}

/// Projection `f_(l)` onto the `l`-th Wiener chaos.
pub fn chaos_component(e: &HermiteExpansion, level: usize) -> Result<ChaosComponent> {
    if level > e.order() {
        return Err(Error::OutOfRange(format!(
            "chaos level {level} exceeds truncation order {}",
            e.order()
        )));
    }
    let coeffs: Vec<Coefficient> = e.coeffs().iter().filter(|c| c.k.order() == level).cloned().collect();
    Ok(ChaosComponent {
        level,
        second_moment: e.level_mass(level),
        coeffs,
    })
}

/// Expansion of the pullback `x -> f(S x)` for a given `S = Sigma^{1/2}`.
pub fn pullback_expansion<F>(f: F, sqrt: &DMatrix<f64>, order: usize, quad: &QuadSpec) -> Result<HermiteExpansion>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let nu = sqrt.nrows();
    let g = |x: &[f64]| {
        let mut y = vec![0.0; nu];
        for (i, yi) in y.iter_mut().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                *yi += sqrt[(i, j)] * xj;
            }
        }
        f(&y)
    };
    build_expansion(g, nu, order, quad)
}

/// Generalized Hermite rank of `f` under `N(0, Sigma)`: the rank of the
/// pullback through the symmetric square root.
pub fn generalized_rank<F>(f: F, sigma: &DMatrix<f64>, order: usize, quad: &QuadSpec, tol: f64) -> Result<RankReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let s = crate::gaussian_model::matrix_sqrt(sigma)?;
    let e = pullback_expansion(f, &s, order, quad)?;
    Ok(hermite_rank(&e, tol))
}

/// A coefficient whose quadrature value disagrees with Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCoefficient {
    pub k: MultiIndex,
    pub quadrature: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
}

/// Re-estimate every coefficient of `e` by plain Monte Carlo and return
/// those off by more than `z` standard errors.
pub fn mc_cross_check<F>(f: F, e: &HermiteExpansion, samples: usize, seed: u64, z: f64) -> Vec<FlaggedCoefficient>
where
    F: Fn(&[f64]) -> f64,
{
    let nu = e.nu();
    let nk = e.coeffs().len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; nk];
    let mut sumsq = vec![0.0; nk];
    let mut x = vec![0.0; nu];
    let mut tables: Vec<Vec<f64>> = vec![Vec::new(); nu];
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = StandardNormal.sample(&mut rng);
        }
        for (d, t) in tables.iter_mut().enumerate() {
            hermite_all(e.order(), x[d], t);
        }
        let fx = f(&x);
        for (i, c) in e.coeffs().iter().enumerate() {
            let h: f64 = c.k.entries().iter().zip(&tables).map(|(&k, t)| t[k as usize]).product();
            let v = fx * h;
            sum[i] += v;
            sumsq[i] += v * v;
        }
    }
    let n = samples as f64;
    e.coeffs()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let mean = sum[i] / n;
            let var = (sumsq[i] / n - mean * mean).max(0.0) * n / (n - 1.0);
            let se = (var / n).sqrt();
            ((c.j - mean).abs() > z * se).then(|| FlaggedCoefficient {
                k: c.k.clone(),
                quadrature: c.j,
                monte_carlo: mean,
                std_error: se,
            })
        })
        .collect()
}
