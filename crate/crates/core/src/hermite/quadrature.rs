//! Quadrature rules for expectations under the standard Gaussian law on `R^nu`.
//!
//! Every rule stores its nodes and weights already normalized to the Gaussian
//! measure, so `sum_i w_i g(x_i) ~ E g(X)` with `X ~ N(0, I_nu)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss-Hermite rule for the probabilists' weight: nodes `x_i` and weights
/// summing to one, exact for polynomials of degree `< 2n`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    // physicists' nodes for weight e^{-z^2} by Newton on the orthonormal recurrence
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut z_nodes = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * z_nodes[0],
            3 => 1.91 * z - 0.91 * z_nodes[1],
            _ => 2.0 * z - z_nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-14 {
                break;
            }
        }
        z_nodes[i] = z;
        z_nodes[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let sqrt_pi = PI.sqrt();
    let x = z_nodes.iter().rev().map(|z| z * std::f64::consts::SQRT_2).collect();
    let w = w.iter().rev().map(|w| w / sqrt_pi).collect();
    (x, w)
}

/// How to integrate a function against the standard Gaussian law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadSpec {
    /// Tensorized Gauss-Hermite with a fixed node count per axis.
    TensorGaussHermite { nodes: usize },
    /// `nu = 1`: Gauss-Legendre on `[-half_width, half_width]` split at known kinks.
    PiecewiseLine {
        breakpoints: Vec<f64>,
        nodes_per_segment: usize,
        half_width: f64,
    },
    /// `nu = 2`: polar coordinates with the angular integral split at
    /// kink directions (functions that are smooth along rays).
    Polar {
        kink_angles: Vec<f64>,
        radial_nodes: usize,
        nodes_per_arc: usize,
        radius: f64,
    },
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec::TensorGaussHermite { nodes: 40 }
    }
}

impl QuadSpec {
    pub fn build(&self, nu: usize) -> Result<QuadratureRule> {
        match self {
            QuadSpec::TensorGaussHermite { nodes } => Ok(QuadratureRule::tensor_gauss_hermite(nu, *nodes)),
            QuadSpec::PiecewiseLine {
                breakpoints,
                nodes_per_segment,
                half_width,
            } => {
                if nu != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: nu });
                }
                Ok(QuadratureRule::piecewise_line(breakpoints, *nodes_per_segment, *half_width))
            }
            QuadSpec::Polar {
                kink_angles,
                radial_nodes,
                nodes_per_arc,
                radius,
            } => {
                if nu != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: nu });
                }
                Ok(QuadratureRule::polar(kink_angles, *radial_nodes, *nodes_per_arc, *radius))
            }
        }
    }

    /// The same rule with roughly twice the nodes.
    pub fn doubled(&self) -> QuadSpec {
        match self.clone() {
            QuadSpec::TensorGaussHermite { nodes } => QuadSpec::TensorGaussHermite { nodes: 2 * nodes },
            QuadSpec::PiecewiseLine {
                breakpoints,
                nodes_per_segment,
                half_width,
            } => QuadSpec::PiecewiseLine {
                breakpoints,
                nodes_per_segment: 2 * nodes_per_segment,
                half_width,
            },
            QuadSpec::Polar {
                kink_angles,
                radial_nodes,
                nodes_per_arc,
                radius,
            } => QuadSpec::Polar {
                kink_angles,
                radial_nodes: 2 * radial_nodes,
                nodes_per_arc: 2 * nodes_per_arc,
                radius,
            },
        }
    }
}

/// A concrete set of nodes (flattened, `nu` coordinates each) and weights.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nu: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn from_parts(nu: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), nu * weights.len());
        QuadratureRule { nu, nodes, weights }
    }

    pub fn tensor_gauss_hermite(nu: usize, nodes_per_axis: usize) -> Self {
        let (x1, w1) = gauss_hermite(nodes_per_axis);
        let total = nodes_per_axis.pow(nu as u32);
        let mut nodes = Vec::with_capacity(total * nu);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; nu];
        for _ in 0..total {
            let mut w = 1.0;
            for &i in &idx {
                nodes.push(x1[i]);
                w *= w1[i];
            }
            weights.push(w);
            for d in (0..nu).rev() {
                idx[d] += 1;
                if idx[d] < nodes_per_axis {
                    break;
                }
                idx[d] = 0;
            }
        }
        QuadratureRule { nu, nodes, weights }
    }

    pub fn piecewise_line(breakpoints: &[f64], nodes_per_segment: usize, half_width: f64) -> Self {
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|b| b.abs() < half_width)
            .collect();
        cuts.push(-half_width);
        cuts.push(half_width);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let (gx, gw) = gauss_legendre(nodes_per_segment);
        let norm = 1.0 / (2.0 * PI).sqrt();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in gx.iter().zip(&gw) {
                let t = mid + half * x;
                nodes.push(t);
                weights.push(w * half * norm * (-0.5 * t * t).exp());
            }
        }
        QuadratureRule { nu: 1, nodes, weights }
    }

    pub fn polar(kink_angles: &[f64], radial_nodes: usize, nodes_per_arc: usize, radius: f64) -> Self {
        let two_pi = 2.0 * PI;
        let mut cuts: Vec<f64> = kink_angles.iter().map(|a| a.rem_euclid(two_pi)).collect();
        if cuts.is_empty() {
            cuts.push(0.0);
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let first = cuts[0];
        cuts.push(first + two_pi);

        let (gx, gw) = gauss_legendre(radial_nodes);
        let radial: Vec<(f64, f64)> = gx
            .iter()
            .zip(&gw)
            .map(|(x, w)| {
                let r = 0.5 * radius * (x + 1.0);
                (r, w * 0.5 * radius * r * (-0.5 * r * r).exp())
            })
            .collect();
        let (ax, aw) = gauss_legendre(nodes_per_arc);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in ax.iter().zip(&aw) {
                let th = mid + half * x;
                let (s, c) = th.sin_cos();
                let wa = w * half / two_pi;
                for &(r, wr) in &radial {
                    nodes.push(r * c);
                    nodes.push(r * s);
                    weights.push(wa * wr);
                }
            }
        }
        QuadratureRule { nu: 2, nodes, weights }
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.nu..(i + 1) * self.nu]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E g(X)` under the rule; fails on a non-finite integrand value.
    pub fn expect<F: Fn(&[f64]) -> f64>(&self, g: F) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.len() {
            let v = g(self.node(i));
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    node: self.node(i).to_vec(),
                    value: v,
                });
            }
            acc += self.weights[i] * v;
        }
        Ok(acc)
    }
}
