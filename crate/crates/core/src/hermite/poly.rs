//! Probabilists' Hermite polynomials.

/// `H_k(x)` via the three-term recurrence `H_{k+1} = x H_k - k H_{k-1}`.
pub fn hermite_poly(k: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = x;
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[0..=kmax]` with `H_0(x), ..., H_kmax(x)`.
pub fn hermite_all(kmax: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if kmax == 0 {
        return;
    }
    out.push(x);
    for j in 1..kmax {
        let next = x * out[j] - j as f64 * out[j - 1];
        out.push(next);
    }
}

/// Integer monomial coefficients of `H_k`: `H_k(x) = sum_i c[i] x^i`.
pub fn hermite_monomial_coefficients(k: usize) -> Vec<i128> {
    let mut prev: Vec<i128> = vec![1];
    if k == 0 {
        return prev;
    }
    let mut cur: Vec<i128> = vec![0, 1];
    for j in 1..k {
        let mut next = vec![0i128; j + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= j as i128 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

pub fn factorial_u128(k: usize) -> u128 {
    (1..=k as u128).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(2j-1)!! = E X^{2j}` for a standard normal `X`.
pub fn double_factorial_odd(j: usize) -> i128 {
    (1..=j as i128).map(|i| 2 * i - 1).product()
}
