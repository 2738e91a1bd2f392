use std::collections::HashMap;

use super::table::{enumerate_diagrams, is_connected, rows_connected, DiagramTable};
use crate::error::{Error, Result};
use crate::hermite::{factorial, HermiteExpansion, MultiIndex};

/// Point cap for the multiplicity-based moment routines. These do not list
/// pairings one by one, so they tolerate larger tables than enumeration.
pub const MOMENT_POINT_LIMIT: usize = 32;

/// A group of interchangeable points: same row, same coordinate.
struct Node {
    row: usize,
    coord: usize,
    size: u32,
}

fn nodes_of(table: &DiagramTable) -> Vec<Node> {
    let mut out = Vec::new();
    for (u, k) in table.rows().iter().enumerate() {
        for (c, &e) in k.entries().iter().enumerate() {
            if e > 0 {
                out.push(Node { row: u, coord: c, size: e });
            }
        }
    }
    out
}

/// Sum over edge-multiplicity matrices `M` between nodes (no edges inside a
/// row, node degrees equal node sizes) of `prod C^M / M!`, optionally only
/// over `M` whose row graph is connected.
struct MultiplicitySum<'a> {
    nodes: &'a [Node],
    cov: Vec<f64>,
    p: usize,
    connected_only: bool,
    rem: Vec<u32>,
    chosen: Vec<(usize, usize, u32)>,
    total: f64,
}

impl MultiplicitySum<'_> {
    fn next_node(&mut self, acc: f64) {
        match self.rem.iter().position(|&r| r > 0) {
            None => self.leaf(acc),
            Some(i) => self.alloc(i, i + 1, acc),
        }
    }

    fn alloc(&mut self, i: usize, j: usize, acc: f64) {
        if self.rem[i] == 0 {
            self.next_node(acc);
            return;
        }
        let nn = self.nodes.len();
        let avail: u32 = (j..nn)
            .filter(|&l| self.nodes[l].row != self.nodes[i].row)
            .map(|l| self.rem[l])
            .sum();
        if avail < self.rem[i] {
            return;
        }
        let mut jj = j;
        while jj < nn && (self.nodes[jj].row == self.nodes[i].row || self.rem[jj] == 0) {
            jj += 1;
        }
        if jj == nn {
            return;
        }
        let c = self.cov[i * nn + jj];
        let top = self.rem[i].min(self.rem[jj]);
        let mut w = acc;
        for m in 0..=top {
            if m > 0 {
                w *= c / m as f64;
                if w == 0.0 {
                    break;
                }
            }
            self.rem[i] -= m;
            self.rem[jj] -= m;
            if m > 0 {
                self.chosen.push((self.nodes[i].row, self.nodes[jj].row, m));
            }
            self.alloc(i, jj + 1, w);
            if m > 0 {
                self.chosen.pop();
            }
            self.rem[i] += m;
            self.rem[jj] += m;
        }
    }

    fn leaf(&mut self, acc: f64) {
        if self.connected_only {
            let chosen = &self.chosen;
            let ok = rows_connected(self.p, |u, v| {
                chosen.iter().any(|&(a, b, _)| (a == u && b == v) || (a == v && b == u))
            });
            if !ok {
                return;
            }
        }
        self.total += acc;
    }
}

fn diagram_sum<C>(table: &DiagramTable, cov: C, connected_only: bool) -> Result<f64>
where
    C: Fn(usize, usize, usize, usize) -> f64,
{
    table.check_limit(MOMENT_POINT_LIMIT)?;
    if table.total_points() % 2 == 1 {
        return Ok(0.0);
    }
    let nodes = nodes_of(table);
    let nn = nodes.len();
    let mut cm = vec![0.0; nn * nn];
    for i in 0..nn {
        for j in 0..nn {
            cm[i * nn + j] = cov(nodes[i].row, nodes[j].row, nodes[i].coord, nodes[j].coord);
        }
    }
    let mut s = MultiplicitySum {
        nodes: &nodes,
        cov: cm,
        p: table.p(),
        connected_only,
        rem: nodes.iter().map(|n| n.size).collect(),
        chosen: Vec::new(),
        total: 0.0,
    };
    s.next_node(1.0);
    let scale: f64 = nodes.iter().map(|n| factorial(n.size as usize)).product();
    Ok(s.total * scale)
}

/// `E[H_{k_1}(X_{t_1}) ... H_{k_p}(X_{t_p})]` by the diagram formula.
/// `cov(u, v, a, b)` is `E X_{t_u}^{(a)} X_{t_v}^{(b)}`; it is only queried for `u != v`.
pub fn hermite_moment<C>(ks: &[MultiIndex], cov: C) -> Result<f64>
where
    C: Fn(usize, usize, usize, usize) -> f64,
{
    diagram_sum(&DiagramTable::new(ks.to_vec())?, cov, false)
}

/// Joint cumulant of `H_{k_1}(X_{t_1}), ..., H_{k_p}(X_{t_p})`: the diagram
/// sum restricted to connected diagrams.
pub fn hermite_cumulant<C>(ks: &[MultiIndex], cov: C) -> Result<f64>
where
    C: Fn(usize, usize, usize, usize) -> f64,
{
    diagram_sum(&DiagramTable::new(ks.to_vec())?, cov, true)
}

/// Same as [`hermite_moment`], by walking every diagram explicitly.
pub fn hermite_moment_enumerated<C>(ks: &[MultiIndex], cov: C) -> Result<f64>
where
    C: Fn(usize, usize, usize, usize) -> f64,
{
    enumerated(ks, cov, false)
}

/// Same as [`hermite_cumulant`], by walking every diagram explicitly.
pub fn hermite_cumulant_enumerated<C>(ks: &[MultiIndex], cov: C) -> Result<f64>
where
    C: Fn(usize, usize, usize, usize) -> f64,
{
    enumerated(ks, cov, true)
}

fn enumerated<C>(ks: &[MultiIndex], cov: C, connected_only: bool) -> Result<f64>
where
    C: Fn(usize, usize, usize, usize) -> f64,
{
    let table = DiagramTable::new(ks.to_vec())?;
    let mut total = 0.0;
    for d in enumerate_diagrams(&table)? {
        if connected_only && !is_connected(&d) {
            continue;
        }
        total += d
            .edges
            .iter()
            .map(|&(a, b)| cov(table.row_of(a), table.row_of(b), table.coord_of(a), table.coord_of(b)))
            .product::<f64>();
    }
    Ok(total)
}

/// Exact integer version of the multiplicity sum on row lengths only.
fn count_impl(table: &DiagramTable, connected_only: bool) -> Result<u128> {
    table.check_limit(super::table::POINT_LIMIT)?;
    if table.total_points() % 2 == 1 {
        return Ok(0);
    }
    let lens: Vec<u32> = (0..table.p()).map(|u| table.row_len(u) as u32).collect();
    let p = lens.len();
    let mut rem = lens.clone();
    let mut chosen: Vec<(usize, usize, u32)> = Vec::new();
    let numer: u128 = lens.iter().map(|&l| crate::hermite::poly::factorial_u128(l as usize)).product();
    let mut total = 0u128;
    count_rec(&mut rem, &mut chosen, p, connected_only, numer, &mut total);
    Ok(total)
}

fn count_rec(
    rem: &mut [u32],
    chosen: &mut Vec<(usize, usize, u32)>,
    p: usize,
    connected_only: bool,
    numer: u128,
    total: &mut u128,
) {
    let Some(i) = rem.iter().position(|&r| r > 0) else {
        if connected_only {
            let ok = rows_connected(p, |u, v| chosen.iter().any(|&(a, b, _)| (a == u && b == v) || (a == v && b == u)));
            if !ok {
                return;
            }
        }
        let denom: u128 = chosen
            .iter()
            .map(|&(_, _, m)| crate::hermite::poly::factorial_u128(m as usize))
            .product();
        *total += numer / denom;
        return;
    };
    count_alloc(rem, chosen, p, connected_only, numer, total, i, i + 1);
}

#[allow(clippy::too_many_arguments)]
fn count_alloc(
    rem: &mut [u32],
    chosen: &mut Vec<(usize, usize, u32)>,
    p: usize,
    connected_only: bool,
    numer: u128,
    total: &mut u128,
    i: usize,
    j: usize,
) {
    if rem[i] == 0 {
        count_rec(rem, chosen, p, connected_only, numer, total);
        return;
    }
    if rem[j.min(rem.len())..].iter().sum::<u32>() < rem[i] {
        return;
    }
    let mut jj = j;
    while jj < rem.len() && rem[jj] == 0 {
        jj += 1;
    }
    if jj == rem.len() {
        return;
    }
    for m in 0..=rem[i].min(rem[jj]) {
        rem[i] -= m;
        rem[jj] -= m;
        if m > 0 {
            chosen.push((i, jj, m));
        }
        count_alloc(rem, chosen, p, connected_only, numer, total, i, jj + 1);
        if m > 0 {
            chosen.pop();
        }
        rem[i] += m;
        rem[jj] += m;
    }
}

/// `|Gamma(T)|`
pub fn count_diagrams(table: &DiagramTable) -> Result<u128> {
    count_impl(table, false)
}

/// `|Gamma_c(T)|`
pub fn count_connected(table: &DiagramTable) -> Result<u128> {
    count_impl(table, true)
}

/// `(p nu - 1)^{sum |k_u| / 2} * prod sqrt(k_u!)`
pub fn taqqu_diagram_bound(ks: &[MultiIndex], nu: usize, p: usize) -> f64 {
    let total: usize = ks.iter().map(|k| k.order()).sum();
    let base = (p * nu) as f64 - 1.0;
    base.powf(total as f64 / 2.0) * ks.iter().map(|k| k.factorial().sqrt()).product::<f64>()
}

/// `E[f_1(X_{t_1}) ... f_p(X_{t_p})]` for truncated expansions `f_u`,
/// summing the diagram formula over all coefficient tuples at once.
/// `cov(u, v, a, b)` as in [`hermite_moment`].
pub fn product_expectation<C>(exps: &[&HermiteExpansion], cov: C) -> Result<f64>
where
    C: Fn(usize, usize, usize, usize) -> f64,
{
    let p = exps.len();
    if p == 0 {
        return Ok(1.0);
    }
    let nu = exps[0].nu();
    if let Some(e) = exps.iter().find(|e| e.nu() != nu) {
        return Err(Error::DimensionMismatch {
            expected: nu,
            got: e.nu(),
        });
    }
    let tables: Vec<HashMap<Vec<u32>, f64>> = exps
        .iter()
        .map(|e| {
            e.coeffs()
                .iter()
                .filter(|c| c.j != 0.0)
                .map(|c| (c.k.entries().to_vec(), c.j))
                .collect()
        })
        .collect();
    if tables.iter().any(|t| t.is_empty()) {
        return Ok(0.0);
    }
    // node (u, a) has index u * nu + a
    let mut pairs = Vec::new();
    for u in 0..p {
        for v in u + 1..p {
            for a in 0..nu {
                for b in 0..nu {
                    pairs.push((u * nu + a, v * nu + b, cov(u, v, a, b)));
                }
            }
        }
    }
    let mut last_pair = vec![None; p];
    for (idx, &(i, j, _)) in pairs.iter().enumerate() {
        last_pair[i / nu] = Some(idx);
        last_pair[j / nu] = Some(idx);
    }
    let mut finalize_at: Vec<Vec<usize>> = vec![Vec::new(); pairs.len()];
    let mut base = 1.0;
    for u in 0..p {
        match last_pair[u] {
            Some(idx) => finalize_at[idx].push(u),
            None => base *= tables[u].get(&vec![0; nu]).copied().unwrap_or(0.0),
        }
    }
    if base == 0.0 {
        return Ok(0.0);
    }
    let mut st = ProductState {
        nu,
        pairs: &pairs,
        finalize_at: &finalize_at,
        tables: &tables,
        row_cap: exps.iter().map(|e| e.order() as u32).collect(),
        row_used: vec![0; p],
        deg: vec![0; p * nu],
        total: 0.0,
    };
    st.rec(0, base);
    Ok(st.total)
}

struct ProductState<'a> {
    nu: usize,
    pairs: &'a [(usize, usize, f64)],
    finalize_at: &'a [Vec<usize>],
    tables: &'a [HashMap<Vec<u32>, f64>],
    row_cap: Vec<u32>,
    row_used: Vec<u32>,
    deg: Vec<u32>,
    total: f64,
}

impl ProductState<'_> {
    fn rec(&mut self, idx: usize, acc: f64) {
        if idx == self.pairs.len() {
            self.total += acc;
            return;
        }
        let (i, j, c) = self.pairs[idx];
        let (u, v) = (i / self.nu, j / self.nu);
        let top = (self.row_cap[u] - self.row_used[u]).min(self.row_cap[v] - self.row_used[v]);
        let mut w = acc;
        for m in 0..=top {
            if m > 0 {
                w *= c / m as f64;
                if w == 0.0 {
                    break;
                }
            }
            self.deg[i] += m;
            self.deg[j] += m;
            self.row_used[u] += m;
            self.row_used[v] += m;
            let mut w2 = w;
            for &r in &self.finalize_at[idx] {
                let k = &self.deg[r * self.nu..(r + 1) * self.nu];
                w2 *= self.tables[r].get(k).copied().unwrap_or(0.0);
                if w2 == 0.0 {
                    break;
                }
            }
            if w2 != 0.0 {
                self.rec(idx + 1, w2);
            }
            self.deg[i] -= m;
            self.deg[j] -= m;
            self.row_used[u] -= m;
            self.row_used[v] -= m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{build_expansion, QuadSpec};

    fn s(k: u32) -> MultiIndex {
        MultiIndex::scalar(k)
    }

    #[test]
    fn moment_examples() {
        let rho = 0.37;
        let c = |_: usize, _: usize, _: usize, _: usize| rho;
        assert!((hermite_moment(&[s(1), s(1)], c).unwrap() - rho).abs() < 1e-15);
        assert!((hermite_moment(&[s(2), s(2)], c).unwrap() - 2.0 * rho * rho).abs() < 1e-15);
        let r = [[1.0, 0.2, 0.3], [0.2, 1.0, -0.4], [0.3, -0.4, 1.0]];
        let c3 = |u: usize, v: usize, _: usize, _: usize| r[u][v];
        let want = 2.0 * 0.3 * -0.4;
        assert!((hermite_moment(&[s(1), s(1), s(2)], c3).unwrap() - want).abs() < 1e-15);
        assert!((hermite_moment_enumerated(&[s(1), s(1), s(2)], c3).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn cumulant_examples() {
        let r = [[1.0, 0.2, 0.3], [0.2, 1.0, -0.4], [0.3, -0.4, 1.0]];
        let c3 = |u: usize, v: usize, _: usize, _: usize| r[u][v];
        let want = 8.0 * 0.2 * 0.3 * -0.4;
        assert!((hermite_cumulant(&[s(2), s(2), s(2)], c3).unwrap() - want).abs() < 1e-15);
        let c2 = |_: usize, _: usize, _: usize, _: usize| 0.3;
        let ks = [s(3), s(3)];
        assert_eq!(hermite_cumulant(&ks, c2).unwrap(), hermite_moment(&ks, c2).unwrap());
        let block = |u: usize, v: usize, _: usize, _: usize| if u / 2 == v / 2 { 0.5 } else { 0.0 };
        assert_eq!(hermite_cumulant(&[s(2), s(2), s(2), s(2)], block).unwrap(), 0.0);
    }

    #[test]
    fn counts() {
        let t = |l: &[u32]| DiagramTable::scalar(l);
        assert_eq!(count_diagrams(&t(&[1, 1])).unwrap(), 1);
        assert_eq!(count_connected(&t(&[1, 1])).unwrap(), 1);
        assert_eq!(count_diagrams(&t(&[2, 2])).unwrap(), 2);
        assert_eq!(count_connected(&t(&[2, 2])).unwrap(), 2);
        assert_eq!(count_diagrams(&t(&[2, 2, 2])).unwrap(), 8);
        assert_eq!(count_diagrams(&t(&[2, 2, 2, 2])).unwrap(), 60);
        // 60 minus the three ways of splitting into two 2-row blocks (2 * 2 each)
        assert_eq!(count_connected(&t(&[2, 2, 2, 2])).unwrap(), 48);
        let t = t(&[3, 1, 2, 2]);
        assert_eq!(
            count_connected(&t).unwrap() as usize,
            enumerate_diagrams(&t).unwrap().filter(is_connected).count()
        );
    }

    #[test]
    fn taqqu_examples() {
        assert!((taqqu_diagram_bound(&[s(1), s(1)], 1, 2) - 1.0).abs() < 1e-14);
        assert!((taqqu_diagram_bound(&[s(2), s(2)], 1, 2) - 2.0).abs() < 1e-14);
        let k = MultiIndex::new(vec![1, 1]);
        assert!((taqqu_diagram_bound(&[k.clone(), k], 2, 2) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn product_expectation_matches_pairwise() {
        let quad = QuadSpec::default();
        let f = build_expansion(|x| x[0].powi(3) + x[0] * x[0] - 1.0, 1, 4, &quad).unwrap();
        let g = build_expansion(|x| x[0].powi(2) + 0.5 * x[0], 1, 4, &quad).unwrap();
        let rho = 0.3;
        let got = product_expectation(&[&f, &g], |_, _, _, _| rho).unwrap();
        // E[(X^3 + X^2 - 1)(Y^2 + Y/2)] by Isserlis: X^3 Y^2 -> 0, X^3 Y -> 3 rho,
        // X^2 Y^2 -> 1 + 2 rho^2, X^2 Y -> 0, -Y^2 -> -1
        let want = 0.5 * 3.0 * rho + 1.0 + 2.0 * rho * rho - 1.0;
        assert!((got - want).abs() < 1e-12, "{got} {want}");
    }
}
