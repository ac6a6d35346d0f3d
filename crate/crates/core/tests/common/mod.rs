#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use privpc::graph::Graph;

pub fn dense_adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut a = DMatrix::zeros(n, n);
    for (i, j) in g.edges() {
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    a
}

/// Eigenpairs ordered by decreasing magnitude, with ties broken toward the
/// positive eigenvalue. Vectors follow the `Σ vᵢ ≥ 0` convention.
pub struct DenseSpectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn dense_spectrum(a: DMatrix<f64>) -> DenseSpectrum {
    let eig = SymmetricEigen::new(a);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&x, &y| {
        let (a, b) = (eig.eigenvalues[x], eig.eigenvalues[y]);
        b.abs().total_cmp(&a.abs()).then(b.total_cmp(&a))
    });
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            if v.iter().sum::<f64>() < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    DenseSpectrum { values, vectors }
}

pub fn graph_spectrum(g: &Graph) -> DenseSpectrum {
    dense_spectrum(dense_adjacency(g))
}

/// Sine of the angle between two unit vectors, ignoring sign.
pub fn angular_distance(u: &[f64], v: &[f64]) -> f64 {
    let c: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (1.0 - c * c).max(0.0).sqrt()
}

pub fn l2_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Exact best `k`-subset density by enumeration.
pub fn exact_dks_density(g: &Graph, k: usize) -> f64 {
    let n = g.n();
    let mut best = 0usize;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let mut count = 0;
        for a in 0..k {
            for b in a + 1..k {
                count += g.has_edge(subset[a], subset[b]) as usize;
            }
        }
        best = best.max(count);
        // next combination in lexicographic order
        let mut i = k;
        while i > 0 && subset[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        subset[i - 1] += 1;
        for j in i..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    best as f64 / (k * (k - 1) / 2) as f64
}

/// Largest `|Σ_{i∈S} vᵢ|` over all `k`-subsets `S`.
pub fn brute_force_abs_sum(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| v[i]).sum();
            best = best.max(s.abs());
        }
    }
    best
}
