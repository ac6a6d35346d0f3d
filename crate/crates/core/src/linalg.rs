//! Dense vector kernels with a fixed reduction order.
//!
//! Reductions split the input into `CHUNK`-sized blocks, sum each block
//! sequentially, then add the block sums left to right. The block layout does
//! not depend on the thread count, so results are bit-identical across runs.

use rayon::prelude::*;

const CHUNK: usize = 4096;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= CHUNK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn sum(a: &[f64]) -> f64 {
    if a.len() <= CHUNK {
        return a.iter().sum();
    }
    let partials: Vec<f64> = a.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partials.iter().sum()
}

pub fn scale(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Scales `a` to unit Euclidean norm and returns the norm it had.
pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm2(a);
    if n > 0.0 {
        scale(a, 1.0 / n);
    }
    n
}

/// Euclidean distance `‖a − b‖₂`.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `‖(I − u uᵀ) v‖₂` for unit `u` and `v`; the sine of the angle between them.
pub fn projection_residual(u: &[f64], v: &[f64]) -> f64 {
    let c = dot(u, v);
    (dot(v, v) - c * c).max(0.0).sqrt()
}
