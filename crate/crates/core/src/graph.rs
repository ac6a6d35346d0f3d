//! Immutable simple undirected graphs stored as sorted CSR adjacency.
//!
//! Vertex ids are compacted to `0..n` on load; the original labels are kept so
//! that released subsets can be reported in the input's namespace.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("line {line}: self-loop on vertex {label}")]
    SelfLoop { line: usize, label: u64 },

    #[error("graph has no edges")]
    Empty,

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("subset must contain at least 2 vertices, got {0}")]
    SubsetTooSmall(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Input ids start at 1; a 0 id is rejected.
    pub one_indexed: bool,
    /// Silently drop `u u` lines instead of failing.
    pub drop_self_loops: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    labels: Vec<u64>,
}

impl Graph {
    /// Builds a graph on vertices `0..n` from an undirected edge list.
    /// Duplicate edges (in either orientation) are merged.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut pairs = Vec::new();
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop {
                    line: 0,
                    label: u as u64,
                });
            }
            pairs.push((u.min(v) as u32, u.max(v) as u32));
        }
        Ok(Self::from_canonical_pairs(n, pairs, (0..n as u64).collect()))
    }

    fn from_canonical_pairs(n: usize, mut pairs: Vec<(u32, u32)>, labels: Vec<u64>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();

        let mut degree = vec![0usize; n];
        for &(u, v) in &pairs {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0u32; 2 * pairs.len()];
        // Pairs are sorted by (u, v): every row first receives its smaller
        // neighbours in ascending order, then its larger ones, so rows come
        // out sorted without a second pass.
        for &(u, v) in &pairs {
            targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            targets[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        debug_assert!((0..n).all(|i| targets[offsets[i]..offsets[i + 1]]
            .windows(2)
            .all(|w| w[0] < w[1])));
        Self {
            offsets,
            targets,
            labels,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// Original label of compacted vertex `i`.
    pub fn label(&self, i: usize) -> u64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    /// `y = A x`. Each row is summed in neighbour order, so the result does not
    /// depend on how rows are split across threads.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n());
        assert_eq!(y.len(), self.n());
        y.par_iter_mut()
            .with_min_len(2048)
            .enumerate()
            .for_each(|(i, yi)| {
                *yi = self.neighbors(i).iter().map(|&j| x[j as usize]).sum();
            });
    }

    /// Full structural check: sorted duplicate-free rows, no self-loops,
    /// symmetric adjacency, and `Σ deg = 2m`.
    pub fn check_invariants(&self) -> bool {
        let n = self.n();
        if self.labels.len() != n || *self.offsets.last().unwrap() != self.targets.len() {
            return false;
        }
        (0..n).all(|i| {
            let row = self.neighbors(i);
            row.windows(2).all(|w| w[0] < w[1])
                && row.iter().all(|&j| {
                    let j = j as usize;
                    j < n && j != i && self.has_edge(j, i)
                })
        })
    }

    /// Connected component id per vertex, numbered in order of first vertex.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &w in self.neighbors(u) {
                    let w = w as usize;
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |c| c + 1)
    }

    /// Writes one `label label` line per undirected edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j) in self.edges() {
            writeln!(out, "{} {}", self.labels[i], self.labels[j])?;
        }
        Ok(())
    }
}

/// Parses a whitespace-separated edge list.
///
/// Lines starting with `#` or `%` and blank lines are skipped. Duplicate edges
/// are merged; labels are compacted to `0..n` in ascending label order.
pub fn load_edge_list<R: BufRead>(reader: R, opts: &LoadOptions) -> Result<Graph> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(GraphError::Malformed {
                    line: lineno,
                    reason: format!("expected two vertex ids, got {trimmed:?}"),
                })
            }
        };
        let parse = |tok: &str| -> Result<u64> {
            let id: u64 = tok.parse().map_err(|_| GraphError::Malformed {
                line: lineno,
                reason: format!("invalid vertex id {tok:?}"),
            })?;
            if opts.one_indexed && id == 0 {
                return Err(GraphError::Malformed {
                    line: lineno,
                    reason: "vertex id 0 in one-indexed input".into(),
                });
            }
            Ok(id)
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if u == v {
            if opts.drop_self_loops {
                continue;
            }
            return Err(GraphError::SelfLoop {
                line: lineno,
                label: u,
            });
        }
        raw.push((u, v));
    }
    if raw.is_empty() {
        return Err(GraphError::Empty);
    }

    let mut labels: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    labels.sort_unstable();
    labels.dedup();
    let index = |label: u64| labels.binary_search(&label).unwrap() as u32;
    let pairs = raw
        .iter()
        .map(|&(u, v)| {
            let (a, b) = (index(u), index(v));
            (a.min(b), a.max(b))
        })
        .collect();
    Ok(Graph::from_canonical_pairs(labels.len(), pairs, labels))
}

/// A sorted set of distinct vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct VertexSubset(Vec<usize>);

impl VertexSubset {
    pub fn new<I: IntoIterator<Item = usize>>(members: I) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn intersection_len(&self, other: &VertexSubset) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// The subset expressed in the graph's original labels.
    pub fn labels(&self, g: &Graph) -> Vec<u64> {
        self.0.iter().map(|&i| g.label(i)).collect()
    }
}

fn check_subset(g: &Graph, s: &VertexSubset) -> Result<()> {
    if s.len() < 2 {
        return Err(GraphError::SubsetTooSmall(s.len()));
    }
    if let Some(&last) = s.members().last() {
        if last >= g.n() {
            return Err(GraphError::VertexOutOfRange {
                vertex: last,
                n: g.n(),
            });
        }
    }
    Ok(())
}

/// `|E_S|`, counted by scanning the neighbour lists of members only.
pub fn induced_edge_count(g: &Graph, s: &VertexSubset) -> Result<usize> {
    check_subset(g, s)?;
    let count = s
        .members()
        .iter()
        .map(|&i| {
            g.neighbors(i)
                .iter()
                .filter(|&&j| (j as usize) > i && s.contains(j as usize))
                .count()
        })
        .sum();
    Ok(count)
}

/// `|E_S| / C(|S|, 2)`.
pub fn edge_density(g: &Graph, s: &VertexSubset) -> Result<f64> {
    let edges = induced_edge_count(g, s)?;
    let k = s.len() as f64;
    Ok(edges as f64 / (k * (k - 1.0) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, opts: LoadOptions) -> Result<Graph> {
        load_edge_list(text.as_bytes(), &opts)
    }

    #[test]
    fn triangle_loads() {
        let g = load("0 1\n1 2\n2 0", LoadOptions::default()).unwrap();
        assert_eq!((g.n(), g.m()), (3, 3));
        assert!(g.check_invariants());
    }

    #[test]
    fn duplicates_merge_and_loops_drop() {
        let opts = LoadOptions {
            drop_self_loops: true,
            ..Default::default()
        };
        let g = load("0 1\n1 0\n0 0", opts).unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
    }

    #[test]
    fn self_loop_is_error_without_flag() {
        let err = load("0 1\n2 2\n", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, GraphError::SelfLoop { line: 2, label: 2 }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load("# header\n0 1\n1 x\n", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, GraphError::Malformed { line: 3, .. }), "{err}");
        let err = load("0 1 2\n", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, GraphError::Malformed { line: 1, .. }));
    }

    #[test]
    fn comments_only_is_empty() {
        let err = load("# a\n% b\n\n", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, GraphError::Empty));
    }

    #[test]
    fn labels_are_compacted_in_order() {
        let g = load("10 30\n30 20\n", LoadOptions::default()).unwrap();
        assert_eq!(g.labels(), &[10, 20, 30]);
        assert!(g.has_edge(0, 2) && g.has_edge(1, 2) && !g.has_edge(0, 1));
    }

    #[test]
    fn one_indexed_rejects_zero() {
        let opts = LoadOptions {
            one_indexed: true,
            ..Default::default()
        };
        assert!(load("1 2\n2 3\n", opts).is_ok());
        assert!(matches!(
            load("1 2\n0 3\n", opts).unwrap_err(),
            GraphError::Malformed { line: 2, .. }
        ));
    }

    #[test]
    fn induced_counts() {
        let k5 = Graph::from_edges(5, (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j)))).unwrap();
        assert_eq!(induced_edge_count(&k5, &VertexSubset::new(0..5)).unwrap(), 10);
        let path = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(induced_edge_count(&path, &VertexSubset::new([0, 2])).unwrap(), 0);
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(edge_density(&tri, &VertexSubset::new([0, 1])).unwrap(), 1.0);
    }

    #[test]
    fn subset_errors() {
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(matches!(
            edge_density(&tri, &VertexSubset::new([1])),
            Err(GraphError::SubsetTooSmall(1))
        ));
        assert!(matches!(
            edge_density(&tri, &VertexSubset::new([1, 7])),
            Err(GraphError::VertexOutOfRange { vertex: 7, n: 3 })
        ));
    }

    #[test]
    fn components_of_two_edges() {
        let g = Graph::from_edges(5, [(0, 1), (3, 4)]).unwrap();
        assert_eq!(g.components(), vec![0, 0, 1, 2, 2]);
        assert_eq!(g.component_count(), 3);
    }

    #[test]
    fn matvec_of_path() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mut y = vec![0.0; 3];
        g.matvec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![2.0, 4.0, 2.0]);
    }
}
