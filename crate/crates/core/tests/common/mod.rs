//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

/// Monomial coefficients of `He_k`, from `He_{k+1} = x He_k - k He_{k-1}`.
pub fn he_coefficients(k: usize) -> Vec<i128> {
    let mut a: Vec<i128> = vec![1];
    let mut b: Vec<i128> = vec![0, 1];
    if k == 0 {
        return a;
    }
    for j in 1..k {
        let mut c = vec![0i128; j + 2];
        for (i, v) in b.iter().enumerate() {
            c[i + 1] += v;
        }
        for (i, v) in a.iter().enumerate() {
            c[i] -= j as i128 * v;
        }
        a = b;
        b = c;
    }
    b
}

/// `E prod_i Z_i^{a_i}` for a centered Gaussian vector with covariance `c`,
/// by Isserlis' recursion on the exponent vector.
pub fn gaussian_monomial_moment(a: &[usize], c: &[Vec<f64>]) -> f64 {
    fn rec(a: &mut Vec<usize>, c: &[Vec<f64>], memo: &mut HashMap<Vec<usize>, f64>) -> f64 {
        let Some(u) = a.iter().position(|&x| x > 0) else {
            return 1.0;
        };
        if a.iter().sum::<usize>() % 2 == 1 {
            return 0.0;
        }
        if let Some(v) = memo.get(a.as_slice()) {
            return *v;
        }
        let key = a.clone();
        a[u] -= 1;
        let mut total = 0.0;
        for v in 0..a.len() {
            if a[v] == 0 || c[u][v] == 0.0 {
                continue;
            }
            let mult = a[v] as f64;
            a[v] -= 1;
            total += mult * c[u][v] * rec(a, c, memo);
            a[v] += 1;
        }
        a[u] += 1;
        memo.insert(key, total);
        total
    }
    rec(&mut a.to_vec(), c, &mut HashMap::new())
}

/// `E prod_u prod_a He_{k_u[a]}(X_u^{(a)})` where the coordinates inside a row
/// are independent standard and `cov(u, v, a, b)` gives the cross terms.
pub fn isserlis_hermite_moment<C>(ks: &[Vec<u32>], cov: C) -> f64
where
    C: Fn(usize, usize, usize, usize) -> f64,
{
    let vars: Vec<(usize, usize, u32)> = ks
        .iter()
        .enumerate()
        .flat_map(|(u, k)| k.iter().enumerate().filter(|(_, &e)| e > 0).map(move |(a, &e)| (u, a, e)))
        .collect();
    let m = vars.len();
    let c: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let (u, a, _) = vars[i];
                    let (v, b, _) = vars[j];
                    if u == v {
                        (a == b) as u8 as f64
                    } else if u < v {
                        cov(u, v, a, b)
                    } else {
                        cov(v, u, b, a)
                    }
                })
                .collect()
        })
        .collect();
    let polys: Vec<Vec<i128>> = vars.iter().map(|&(_, _, e)| he_coefficients(e as usize)).collect();
    // expand the product of polynomials into monomials
    let mut total = 0.0;
    let mut pows = vec![0usize; m];
    fn walk(i: usize, w: f64, pows: &mut Vec<usize>, polys: &[Vec<i128>], c: &[Vec<f64>], total: &mut f64) {
        if i == polys.len() {
            *total += w * gaussian_monomial_moment(pows, c);
            return;
        }
        for (d, &coef) in polys[i].iter().enumerate() {
            if coef != 0 {
                pows[i] = d;
                walk(i + 1, w * coef as f64, pows, polys, c, total);
            }
        }
    }
    walk(0, 1.0, &mut pows, &polys, &c, &mut total);
    total
}

/// `E prod_u He_{k_u}(X)` for a single standard normal `X`, exactly.
pub fn single_variable_product(ks: &[u32]) -> i128 {
    let mut poly: Vec<i128> = vec![1];
    for &k in ks {
        let h = he_coefficients(k as usize);
        let mut next = vec![0i128; poly.len() + h.len() - 1];
        for (i, a) in poly.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        poly = next;
    }
    poly.iter()
        .enumerate()
        .filter(|(d, _)| d % 2 == 0)
        .map(|(d, c)| c * (1..=d as i128 / 2).map(|i| 2 * i - 1).product::<i128>())
        .sum()
}

/// Random correlation matrix `D^{-1/2} A A^T D^{-1/2}` of size `dim`.
pub fn random_correlation(rng: &mut impl rand::Rng, dim: usize) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..dim).map(|_| (0..dim + 2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let g: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum()).collect())
        .collect();
    (0..dim)
        .map(|i| (0..dim).map(|j| g[i][j] / (g[i][i] * g[j][j]).sqrt()).collect())
        .collect()
}
