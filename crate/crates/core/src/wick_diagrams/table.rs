use std::fmt;

use crate::error::{Error, Result};
use crate::hermite::MultiIndex;

/// Default cap on the number of table points for explicit enumeration.
pub const POINT_LIMIT: usize = 16;

/// A table with `p` rows; row `u` has `|k_u|` points, the first `k_u^(1)`
/// labelled with coordinate 0, the next `k_u^(2)` with coordinate 1, etc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramTable {
    rows: Vec<MultiIndex>,
    /// `(row, coordinate)` for each point, row-major.
    points: Vec<(usize, usize)>,
}

impl DiagramTable {
    pub fn new(rows: Vec<MultiIndex>) -> Result<Self> {
        if let Some(first) = rows.first() {
            if let Some(bad) = rows.iter().find(|k| k.dim() != first.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    got: bad.dim(),
                });
            }
        }
        let mut points = Vec::new();
        for (u, k) in rows.iter().enumerate() {
            for (c, &e) in k.entries().iter().enumerate() {
                points.extend(std::iter::repeat_n((u, c), e as usize));
            }
        }
        Ok(DiagramTable { rows, points })
    }

    /// Table with scalar rows of the given lengths.
    pub fn scalar(lengths: &[u32]) -> Self {
        Self::new(lengths.iter().map(|&l| MultiIndex::scalar(l)).collect()).unwrap()
    }

    pub fn rows(&self) -> &[MultiIndex] {
        &self.rows
    }

    pub fn p(&self) -> usize {
        self.rows.len()
    }

    pub fn total_points(&self) -> usize {
        self.points.len()
    }

    pub fn row_of(&self, point: usize) -> usize {
        self.points[point].0
    }

    pub fn coord_of(&self, point: usize) -> usize {
        self.points[point].1
    }

    pub fn row_len(&self, u: usize) -> usize {
        self.rows[u].order()
    }

    pub(crate) fn check_limit(&self, limit: usize) -> Result<()> {
        if self.total_points() > limit {
            return Err(Error::SizeLimit {
                what: "table points",
                size: self.total_points(),
                limit,
            });
        }
        Ok(())
    }
}

/// A perfect pairing of table points with no edge inside a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagram {
    /// Point pairs `(a, b)` with `a < b`, sorted by `a`.
    pub edges: Vec<(usize, usize)>,
    /// `ell[u][v]`: number of edges between rows `u` and `v`.
    pub ell: Vec<Vec<u32>>,
}

impl Diagram {
    pub fn from_edges(table: &DiagramTable, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = table.total_points();
        let mut seen = vec![false; n];
        let p = table.p();
        let mut ell = vec![vec![0u32; p]; p];
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            let (a, b) = *e;
            if b >= n || seen[a] || seen[b] || a == b {
                return Err(Error::Precondition(format!("edge ({a},{b}) is not part of a pairing")));
            }
            seen[a] = true;
            seen[b] = true;
            let (u, v) = (table.row_of(a), table.row_of(b));
            if u == v {
                return Err(Error::Precondition(format!("edge ({a},{b}) lies inside row {u}")));
            }
            ell[u][v] += 1;
            ell[v][u] += 1;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Precondition("pairing does not cover every point".into()));
        }
        edges.sort_unstable();
        Ok(Diagram { edges, ell })
    }

    pub fn p(&self) -> usize {
        self.ell.len()
    }

    /// Row degree `sum_{v != u} ell_uv`.
    pub fn degree(&self, u: usize) -> u32 {
        self.ell[u].iter().sum()
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Connectivity of the graph on `p` rows with an edge wherever `adj(u, v)`.
pub(crate) fn rows_connected(p: usize, adj: impl Fn(usize, usize) -> bool) -> bool {
    if p <= 1 {
        return true;
    }
    let mut seen = vec![false; p];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..p {
            if !seen[v] && adj(u, v) {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Whether the row graph of `d` is connected.
pub fn is_connected(d: &Diagram) -> bool {
    rows_connected(d.p(), |u, v| d.ell[u][v] > 0)
}

/// Lazy depth-first enumeration: the first unpaired point is matched with
/// each admissible later point in increasing order.
pub struct DiagramIter<'a> {
    table: &'a DiagramTable,
    mate: Vec<Option<usize>>,
    stack: Vec<(usize, usize)>,
    started: bool,
    done: bool,
}

impl<'a> DiagramIter<'a> {
    fn next_partner(&self, i: usize, after: usize) -> Option<usize> {
        let row = self.table.row_of(i);
        (after + 1..self.mate.len()).find(|&j| self.mate[j].is_none() && self.table.row_of(j) != row)
    }

    fn push(&mut self, i: usize, j: usize) {
        self.mate[i] = Some(j);
        self.mate[j] = Some(i);
        self.stack.push((i, j));
    }

    /// Complete the current partial pairing greedily; false on a dead end.
    fn descend(&mut self) -> bool {
        loop {
            let Some(i) = self.mate.iter().position(|m| m.is_none()) else {
                return true;
            };
            match self.next_partner(i, i) {
                Some(j) => self.push(i, j),
                None => return false,
            }
        }
    }

    fn backtrack(&mut self) -> bool {
        while let Some((i, j)) = self.stack.pop() {
            self.mate[i] = None;
            self.mate[j] = None;
            if let Some(j2) = self.next_partner(i, j) {
                self.push(i, j2);
                if self.descend() {
                    return true;
                }
            }
        }
        false
    }

    fn current(&self) -> Diagram {
        let p = self.table.p();
        let mut ell = vec![vec![0u32; p]; p];
        for &(a, b) in &self.stack {
            let (u, v) = (self.table.row_of(a), self.table.row_of(b));
            ell[u][v] += 1;
            ell[v][u] += 1;
        }
        Diagram {
            edges: self.stack.clone(),
            ell,
        }
    }
}

impl Iterator for DiagramIter<'_> {
    type Item = Diagram;

    fn next(&mut self) -> Option<Diagram> {
        if self.done {
            return None;
        }
        let ok = if !self.started {
            self.started = true;
            self.table.total_points() % 2 == 0 && (self.descend() || self.backtrack())
        } else {
            self.backtrack()
        };
        if ok {
            Some(self.current())
        } else {
            self.done = true;
            None
        }
    }
}

/// All diagrams over `table`; empty for an odd number of points.
pub fn enumerate_diagrams(table: &DiagramTable) -> Result<DiagramIter<'_>> {
    enumerate_diagrams_with_limit(table, POINT_LIMIT)
}

pub fn enumerate_diagrams_with_limit(table: &DiagramTable, limit: usize) -> Result<DiagramIter<'_>> {
    table.check_limit(limit)?;
    Ok(DiagramIter {
        table,
        mate: vec![None; table.total_points()],
        stack: Vec::new(),
        started: false,
        done: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(lengths: &[u32]) -> usize {
        enumerate_diagrams(&DiagramTable::scalar(lengths)).unwrap().count()
    }

    #[test]
    fn small_counts() {
        assert_eq!(count(&[1, 1]), 1);
        assert_eq!(count(&[2, 2]), 2);
        assert_eq!(count(&[2, 2, 2]), 8);
        assert_eq!(count(&[2, 2, 2, 2]), 60);
        assert_eq!(count(&[1, 2]), 0);
        assert_eq!(count(&[3, 1]), 0);
        assert_eq!(count(&[]), 1);
    }

    #[test]
    fn diagrams_are_distinct_and_valid() {
        let t = DiagramTable::scalar(&[2, 1, 3, 2]);
        let all: Vec<Diagram> = enumerate_diagrams(&t).unwrap().collect();
        let mut edges: Vec<_> = all.iter().map(|d| d.edges.clone()).collect();
        edges.sort();
        edges.dedup();
        assert_eq!(edges.len(), all.len());
        for d in &all {
            for u in 0..t.p() {
                assert_eq!(d.degree(u) as usize, t.row_len(u));
            }
            assert_eq!(&Diagram::from_edges(&t, d.edges.clone()).unwrap(), d);
        }
    }

    #[test]
    fn connectivity_examples() {
        let t = DiagramTable::scalar(&[1, 1]);
        let d = enumerate_diagrams(&t).unwrap().next().unwrap();
        assert!(is_connected(&d));

        let t = DiagramTable::scalar(&[2, 2, 2, 2]);
        let split = Diagram::from_edges(&t, vec![(0, 2), (1, 3), (4, 6), (5, 7)]).unwrap();
        assert!(!is_connected(&split));

        let t = DiagramTable::scalar(&[1, 2, 1]);
        let chain = Diagram::from_edges(&t, vec![(0, 1), (2, 3)]).unwrap();
        assert!(is_connected(&chain));
    }

    #[test]
    fn rejects_bad_pairings() {
        let t = DiagramTable::scalar(&[2, 2]);
        assert!(Diagram::from_edges(&t, vec![(0, 1), (2, 3)]).is_err());
        assert!(Diagram::from_edges(&t, vec![(0, 2)]).is_err());
    }

    #[test]
    fn size_limit() {
        let t = DiagramTable::scalar(&[9, 9]);
        assert!(matches!(enumerate_diagrams(&t), Err(Error::SizeLimit { .. })));
    }
}
