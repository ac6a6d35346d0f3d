//! Subset selection from a (possibly private) eigenvector.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{edge_density, Graph, GraphError, VertexSubset};
use crate::spectral::SpectralSummary;

#[derive(Debug, Error)]
pub enum SubsetError {
    #[error("k = {k} outside [2, {n}]")]
    KOutOfRange { k: usize, n: usize },

    #[error("vector has {vector} entries but graph has {graph} vertices")]
    LengthMismatch { vector: usize, graph: usize },

    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, SubsetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidate {
    TopK,
    BottomK,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetResult {
    pub subset: VertexSubset,
    /// `|vᵀx|` for the winning indicator `x`.
    pub objective: f64,
    pub candidate: Candidate,
    pub density: Option<f64>,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 || k > n {
        Err(SubsetError::KOutOfRange { k, n })
    } else {
        Ok(())
    }
}

/// Maximizes `|vᵀx|` over `k`-subset indicators `x`.
///
/// The optimum is either the `k` largest or the `k` smallest entries. Equal
/// values are ordered by vertex id, and a tie in `|sum|` goes to the largest
/// entries.
pub fn top_k_abs_subset(v: &[f64], k: usize) -> Result<SubsetResult> {
    check_k(k, v.len())?;
    let mut order: Vec<usize> = (0..v.len()).collect();

    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut top: Vec<usize> = order[..k].to_vec();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let mut bottom: Vec<usize> = order[..k].to_vec();
    top.sort_unstable();
    bottom.sort_unstable();

    // summed in id order so that equal sets give bit-identical objectives
    let total = |idx: &[usize]| idx.iter().map(|&i| v[i]).sum::<f64>().abs();
    let (top_obj, bottom_obj) = (total(&top), total(&bottom));
    let (members, objective, candidate) = if bottom_obj > top_obj {
        (bottom, bottom_obj, Candidate::BottomK)
    } else {
        (top, top_obj, Candidate::TopK)
    };
    Ok(SubsetResult {
        subset: VertexSubset::new(members),
        objective,
        candidate,
        density: None,
    })
}

/// Rank-1 densest-`k`-subgraph heuristic: [`top_k_abs_subset`] plus the
/// density of the chosen subgraph.
pub fn dks_extract(g: &Graph, v: &[f64], k: usize) -> Result<SubsetResult> {
    if v.len() != g.n() {
        return Err(SubsetError::LengthMismatch {
            vector: v.len(),
            graph: g.n(),
        });
    }
    let mut r = top_k_abs_subset(v, k)?;
    r.density = Some(edge_density(g, &r.subset)?);
    Ok(r)
}

/// Upper bound on the best edge density over `k`-subsets, from the
/// non-private spectrum:
/// `min{ λ₁(Σ_{i∈x̂} vᵢ)²/(k(k−1)) + |λ₂|/(k−1), |λ₁|/(k−1), 1 }`
/// with `x̂` the top-`k` selection on `v`.
pub fn dks_upper_bound(s: &SpectralSummary, g: &Graph, k: usize) -> Result<f64> {
    if s.n() != g.n() {
        return Err(SubsetError::LengthMismatch {
            vector: s.n(),
            graph: g.n(),
        });
    }
    let sel = top_k_abs_subset(&s.v, k)?;
    let kf = k as f64;
    let mass: f64 = sel.subset.members().iter().map(|&i| s.v[i]).sum();
    let rank1 = s.lambda1 * mass * mass / (kf * (kf - 1.0)) + s.lambda2.abs() / (kf - 1.0);
    Ok(rank1.min(s.lambda1.abs() / (kf - 1.0)).min(1.0))
}

/// `|a ∩ b| / |a ∪ b|`, or 1 when both are empty.
pub fn jaccard(a: &VertexSubset, b: &VertexSubset) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
