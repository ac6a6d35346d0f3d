//! Synthetic graph families used by tests, benchmarks and the CLI.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::noise::RngStream;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic spec {spec:?}: {reason}")]
    Parse { spec: String, reason: String },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, SyntheticError>;

/// Uniform index in `0..len`.
fn below(rng: &mut RngStream, len: usize) -> usize {
    ((rng.next_u64() as u128 * len as u128) >> 64) as usize
}

pub fn complete(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
        .expect("complete graph is simple")
}

/// `K_{1,leaves}` with the centre at vertex 0.
pub fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|j| (0, j))).expect("star is simple")
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|j| (j - 1, j))).expect("path is simple")
}

/// `G(n, p)` by geometric skipping over the lower triangle, `O(n + m)`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SyntheticError::Params(format!("edge probability {p} not in [0, 1]")));
    }
    if p == 1.0 {
        return Ok(complete(n));
    }
    let mut edges = Vec::new();
    if p > 0.0 {
        let mut rng = RngStream::new(seed, 0);
        let log_q = (1.0 - p).ln();
        let (mut v, mut w): (usize, i64) = (1, -1);
        while v < n {
            let skip = ((1.0 - rng.uniform_open()).ln() / log_q).floor();
            w += 1 + skip.min(i64::MAX as f64 / 4.0) as i64;
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((v, w as usize));
            }
        }
    }
    Ok(Graph::from_edges(n, edges)?)
}

/// `G(n, p)` with a clique planted on `k` uniformly chosen vertices.
/// Returns the graph and the sorted clique members.
pub fn planted_clique(n: usize, p: f64, k: usize, seed: u64) -> Result<(Graph, Vec<usize>)> {
    if k > n {
        return Err(SyntheticError::Params(format!("clique size {k} exceeds n = {n}")));
    }
    let base = erdos_renyi(n, p, seed)?;
    let mut rng = RngStream::new(seed, 1);
    let mut ids: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + below(&mut rng, n - i);
        ids.swap(i, j);
    }
    let mut clique = ids[..k].to_vec();
    clique.sort_unstable();
    let extra = clique
        .iter()
        .enumerate()
        .flat_map(|(a, &u)| clique[a + 1..].iter().map(move |&v| (u, v)));
    let graph = Graph::from_edges(n, base.edges().chain(extra))?;
    Ok((graph, clique))
}

/// Uniform-ish random `d`-regular graph by sequential random pairing:
/// points are matched one random pair at a time, rejecting loops and repeated
/// edges, and the whole pairing restarts if it gets stuck.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(SyntheticError::Params(format!(
            "no simple {d}-regular graph on {n} vertices"
        )));
    }
    let mut rng = RngStream::new(seed, 0);
    'attempt: loop {
        let mut free: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(n * d / 2);
        let mut edges = Vec::with_capacity(n * d / 2);
        let mut failures = 0usize;
        while !free.is_empty() {
            let i = below(&mut rng, free.len());
            let j = below(&mut rng, free.len());
            let (u, v) = (free[i], free[j]);
            let key = (u.min(v), u.max(v));
            if i == j || u == v || seen.contains(&key) {
                failures += 1;
                if failures > 64 + 16 * free.len() {
                    if !has_admissible_pair(&free, &seen) {
                        continue 'attempt;
                    }
                    failures = 0;
                }
                continue;
            }
            failures = 0;
            seen.insert(key);
            edges.push(key);
            let (hi, lo) = (i.max(j), i.min(j));
            free.swap_remove(hi);
            free.swap_remove(lo);
        }
        return Ok(Graph::from_edges(n, edges)?);
    }
}

fn has_admissible_pair(free: &[usize], seen: &HashSet<(usize, usize)>) -> bool {
    let mut verts: Vec<usize> = free.to_vec();
    verts.sort_unstable();
    verts.dedup();
    verts.iter().enumerate().any(|(a, &u)| {
        verts[a + 1..]
            .iter()
            .any(|&v| !seen.contains(&(u.min(v), u.max(v))))
    })
}

/// A named synthetic family, parsed from `NAME:PARAMS`.
///
/// `complete:N`, `star:LEAVES`, `path:N`, `er:N,P[,SEED]`,
/// `planted:N,P,K[,SEED]`, `regular:N,D[,SEED]`. A missing seed falls back to
/// the caller's default.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticSpec {
    Complete(usize),
    Star(usize),
    Path(usize),
    ErdosRenyi { n: usize, p: f64, seed: Option<u64> },
    PlantedClique { n: usize, p: f64, k: usize, seed: Option<u64> },
    Regular { n: usize, d: usize, seed: Option<u64> },
}

impl SyntheticSpec {
    pub fn build(&self, default_seed: u64) -> Result<Graph> {
        Ok(match *self {
            Self::Complete(n) => complete(n),
            Self::Star(l) => star(l),
            Self::Path(n) => path(n),
            Self::ErdosRenyi { n, p, seed } => erdos_renyi(n, p, seed.unwrap_or(default_seed))?,
            Self::PlantedClique { n, p, k, seed } => {
                planted_clique(n, p, k, seed.unwrap_or(default_seed))?.0
            }
            Self::Regular { n, d, seed } => random_regular(n, d, seed.unwrap_or(default_seed))?,
        })
    }
}

impl FromStr for SyntheticSpec {
    type Err = SyntheticError;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| SyntheticError::Parse {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (name, params) = s.split_once(':').ok_or_else(|| err("expected NAME:PARAMS"))?;
        let fields: Vec<&str> = params.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<usize> {
            fields
                .get(i)
                .ok_or_else(|| err("missing parameter"))?
                .parse()
                .map_err(|_| err("expected an integer"))
        };
        let real = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .ok_or_else(|| err("missing parameter"))?
                .parse()
                .map_err(|_| err("expected a number"))
        };
        let seed = |i: usize| -> Result<Option<u64>> {
            fields
                .get(i)
                .map(|f| f.parse().map_err(|_| err("expected an integer seed")))
                .transpose()
        };
        let arity = |lo: usize, hi: usize| {
            if (lo..=hi).contains(&fields.len()) {
                Ok(())
            } else {
                Err(err("wrong number of parameters"))
            }
        };
        match name {
            "complete" => arity(1, 1).and_then(|_| Ok(Self::Complete(int(0)?))),
            "star" => arity(1, 1).and_then(|_| Ok(Self::Star(int(0)?))),
            "path" => arity(1, 1).and_then(|_| Ok(Self::Path(int(0)?))),
            "er" => arity(2, 3).and_then(|_| {
                Ok(Self::ErdosRenyi {
                    n: int(0)?,
                    p: real(1)?,
                    seed: seed(2)?,
                })
            }),
            "planted" => arity(3, 4).and_then(|_| {
                Ok(Self::PlantedClique {
                    n: int(0)?,
                    p: real(1)?,
                    k: int(2)?,
                    seed: seed(3)?,
                })
            }),
            "regular" => arity(2, 3).and_then(|_| {
                Ok(Self::Regular {
                    n: int(0)?,
                    d: int(1)?,
                    seed: seed(2)?,
                })
            }),
            _ => Err(err("unknown family")),
        }
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let seed = |s: &Option<u64>| s.map(|s| format!(",{s}")).unwrap_or_default();
        match self {
            Self::Complete(n) => write!(f, "complete:{n}"),
            Self::Star(l) => write!(f, "star:{l}"),
            Self::Path(n) => write!(f, "path:{n}"),
            Self::ErdosRenyi { n, p, seed: s } => write!(f, "er:{n},{p}{}", seed(s)),
            Self::PlantedClique { n, p, k, seed: s } => write!(f, "planted:{n},{p},{k}{}", seed(s)),
            Self::Regular { n, d, seed: s } => write!(f, "regular:{n},{d}{}", seed(s)),
        }
    }
}
