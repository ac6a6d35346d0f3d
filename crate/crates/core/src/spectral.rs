//! Top-two eigenpairs of a graph adjacency matrix and the sensitivity
//! statistics built from them.
//!
//! The leading pair comes from power iteration on `A²`. Adjacency matrices are
//! nonnegative, so the magnitude-dominant eigenvalue is the Perron root
//! `λ₁ = ρ(A)`; when `−λ₁` is also an eigenvalue (bipartite components) the
//! `A²` iterate converges to a mix of both eigenvectors and `(A + λ₁I)x`
//! recovers the Perron component. The second eigenvalue by magnitude comes
//! from the same `B²` iteration on the deflated operator
//! `B x = A x − λ₁ (vᵀx) v`, which tolerates `±|λ₂|` ties.

use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::linalg::{axpy, dot, norm2, normalize, scale, sum};
use crate::noise::RngStream;

/// `2(√2 + 1)`: the smallest gap for which the distance bound applies.
pub const GAP_THRESHOLD: f64 = 2.0 * (std::f64::consts::SQRT_2 + 1.0);

/// `√2(√2 + 1)`: the smallest gap for which the local sensitivity bound applies.
pub const LS_GAP_THRESHOLD: f64 = std::f64::consts::SQRT_2 * (std::f64::consts::SQRT_2 + 1.0);

/// Hard cap on iterations of either phase.
pub const MAX_ITER_CAP: usize = 100_000;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("graph must have at least 2 vertices, got {0}")]
    TooSmall(usize),

    #[error("graph has no edges")]
    NoEdges,

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("leading eigenpair did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        partial: Box<SpectralSummary>,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative residual target, `‖Av − λv‖ ≤ tol·|λ₁|`.
    pub tol: f64,
    /// Iteration budget per phase; `None` derives it from the observed
    /// eigenvalue ratio as `10·⌈ln n / ln(λ₁/|λ₂|)⌉`, capped at
    /// [`MAX_ITER_CAP`].
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(skip)]
    pub v: Vec<f64>,
    pub gap: f64,
    pub c_pi: f64,
    pub iterations_used: usize,
    pub residual: f64,
    pub lambda2_iterations: usize,
    pub lambda2_residual: f64,
    /// False when the deflated phase stopped on its budget; `lambda2` is then
    /// the best estimate reached.
    pub lambda2_converged: bool,
    pub components: usize,
}

impl SpectralSummary {
    /// Builds a summary from an externally computed eigenpair, applying the
    /// sign convention and computing `gap` and `c_π`.
    pub fn from_parts(lambda1: f64, lambda2: f64, mut v: Vec<f64>) -> Self {
        fix_sign(&mut v);
        let c_pi = top_two_energy(&v);
        Self {
            lambda1,
            lambda2,
            gap: (lambda1.abs() - lambda2.abs()).max(0.0),
            c_pi,
            v,
            iterations_used: 0,
            residual: 0.0,
            lambda2_iterations: 0,
            lambda2_residual: 0.0,
            lambda2_converged: true,
            components: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }
}

fn fix_sign(v: &mut [f64]) {
    if sum(v) < 0.0 {
        scale(v, -1.0);
    }
}

/// `√(v_{π(1)}² + v_{π(2)}²)` over the two largest entries by signed value.
pub fn top_two_energy(v: &[f64]) -> f64 {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &x in v {
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    if second == f64::NEG_INFINITY {
        return first.abs();
    }
    first.hypot(second)
}

fn ratio_budget(n: usize, lambda1: f64, lambda2_abs: f64) -> usize {
    let ratio = lambda1.abs() / lambda2_abs;
    if !(ratio > 1.0) || !ratio.is_finite() {
        return if ratio.is_infinite() { 10 } else { MAX_ITER_CAP };
    }
    let steps = ((n as f64).ln() / ratio.ln()).ceil();
    ((10.0 * steps) as usize).clamp(10, MAX_ITER_CAP)
}

/// Top-two eigenpairs by magnitude.
///
/// Fails only when the leading pair does not reach the residual target; the
/// second eigenvalue is reported with its achieved residual when its phase
/// runs out of budget (this happens when `|λ₂| ≈ |λ₃|`).
pub fn top_two_eigenpairs(g: &Graph, opts: &SolverOptions) -> Result<SpectralSummary, SpectralError> {
    let n = g.n();
    if n < 2 {
        return Err(SpectralError::TooSmall(n));
    }
    if g.m() == 0 {
        return Err(SpectralError::NoEdges);
    }
    if !(opts.tol > 0.0) {
        return Err(SpectralError::InvalidTolerance(opts.tol));
    }

    let mut rng = RngStream::new(opts.seed, 0);
    let lead = leading_pair(g, opts, &mut rng);
    let second = second_eigenvalue(g, &lead.v, lead.lambda, opts, &mut rng);

    let mut summary = SpectralSummary::from_parts(lead.lambda, second.lambda, lead.v);
    summary.iterations_used = lead.iterations;
    summary.residual = lead.residual;
    summary.lambda2_iterations = second.iterations;
    summary.lambda2_residual = second.residual;
    summary.lambda2_converged = second.converged;
    summary.components = g.component_count();

    if !lead.converged {
        return Err(SpectralError::NotConverged {
            iterations: lead.iterations,
            residual: lead.residual,
            partial: Box::new(summary),
        });
    }
    Ok(summary)
}

struct LeadingPair {
    lambda: f64,
    v: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn leading_pair(g: &Graph, opts: &SolverOptions, rng: &mut RngStream) -> LeadingPair {
    let n = g.n();
    // Strictly positive start: it overlaps every Perron vector.
    let mut x: Vec<f64> = (0..n).map(|_| 1.0 + 0.5 * rng.uniform_open()).collect();
    normalize(&mut x);

    let budget = opts.max_iter.unwrap_or(MAX_ITER_CAP).max(1);
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];
    let (mut lambda, mut residual) = (0.0, f64::INFINITY);

    for it in 1..=budget {
        g.matvec(&x, &mut y);
        g.matvec(&y, &mut z);
        let mu = dot(&x, &z).max(0.0).sqrt();

        // v ∝ (A + μI)x and Av ∝ (A² + μA)x, both without another product.
        v.copy_from_slice(&y);
        axpy(mu, &x, &mut v);
        av.copy_from_slice(&z);
        axpy(mu, &y, &mut av);
        let c = normalize(&mut v);
        if c > 0.0 {
            scale(&mut av, 1.0 / c);
        }
        lambda = dot(&v, &av);
        axpy(-lambda, &v, &mut av);
        residual = norm2(&av);

        if residual <= opts.tol * lambda.abs() {
            return LeadingPair {
                lambda,
                v,
                iterations: it,
                residual,
                converged: true,
            };
        }
        if normalize(&mut z) == 0.0 {
            break;
        }
        std::mem::swap(&mut x, &mut z);
    }
    LeadingPair {
        lambda,
        v,
        iterations: budget,
        residual,
        converged: false,
    }
}

struct SecondEigenvalue {
    lambda: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn deflated_matvec(g: &Graph, v: &[f64], lambda1: f64, x: &[f64], out: &mut [f64]) {
    g.matvec(x, out);
    axpy(-lambda1 * dot(v, x), v, out);
}

fn orthogonalize(x: &mut [f64], v: &[f64]) {
    let c = dot(v, x);
    axpy(-c, v, x);
}

fn second_eigenvalue(
    g: &Graph,
    v: &[f64],
    lambda1: f64,
    opts: &SolverOptions,
    rng: &mut RngStream,
) -> SecondEigenvalue {
    let n = g.n();
    let mut x: Vec<f64> = (0..n).map(|_| rng.uniform_open() - 0.5).collect();
    orthogonalize(&mut x, v);
    if normalize(&mut x) == 0.0 {
        return SecondEigenvalue {
            lambda: 0.0,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }

    let target = opts.tol * lambda1 * lambda1;
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut r = vec![0.0; n];
    let (mut mu, mut residual);
    let mut it = 0;
    let mut converged = false;

    loop {
        it += 1;
        deflated_matvec(g, v, lambda1, &x, &mut y);
        deflated_matvec(g, v, lambda1, &y, &mut z);
        let mu2 = dot(&x, &z).max(0.0);
        mu = mu2.sqrt();
        r.copy_from_slice(&z);
        axpy(-mu2, &x, &mut r);
        residual = norm2(&r);
        if residual <= target {
            converged = true;
            break;
        }
        let budget = opts
            .max_iter
            .unwrap_or_else(|| ratio_budget(n, lambda1, mu))
            .max(1);
        if it >= budget {
            break;
        }
        orthogonalize(&mut z, v);
        if normalize(&mut z) == 0.0 {
            // The deflated operator is nilpotent on the start vector.
            mu = 0.0;
            residual = 0.0;
            converged = true;
            break;
        }
        std::mem::swap(&mut x, &mut z);
    }

    deflated_matvec(g, v, lambda1, &x, &mut y);
    let signed = if dot(&x, &y) < 0.0 { -mu } else { mu };
    SecondEigenvalue {
        lambda: signed,
        iterations: it,
        residual,
        converged,
    }
}

/// `2c_π / GAP` when `GAP > √2(√2+1)`; `None` when the bound does not apply.
pub fn local_sensitivity_bound(s: &SpectralSummary) -> Option<f64> {
    (s.gap > LS_GAP_THRESHOLD).then(|| 2.0 * s.c_pi / s.gap)
}

/// Upper bound on the local sensitivity of any graph within `dist` edge flips:
/// `(2/(GAP−d))·(2d/GAP + c_π)`.
///
/// Requires `GAP > 2(√2+1)` and `d < (1 − 1/√2)·GAP`.
pub fn theta_bound(s: &SpectralSummary, dist: u64) -> Option<f64> {
    let d = dist as f64;
    let gap = s.gap;
    if !(gap > GAP_THRESHOLD) || !(d < (1.0 - std::f64::consts::FRAC_1_SQRT_2) * gap) {
        return None;
    }
    Some(2.0 / (gap - d) * (2.0 * d / gap + s.c_pi))
}

/// β-smooth upper bound on the sensitivity of `v` for the Gaussian mechanism
/// at `(eps, delta)`, with `β = ε / (4(n + ln(2/δ)))` and `ν = √2/(√2−1)`:
/// `max{ (2√2/GAP)(2/ν + c_π), √2·e^{−β·GAP/ν} }`.
///
/// Report-only; the value sits near `√2` on large graphs. `None` unless
/// `GAP > √2·ν`.
pub fn smooth_sensitivity_diagnostic(s: &SpectralSummary, n: usize, eps: f64, delta: f64) -> Option<f64> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let nu = sqrt2 / (sqrt2 - 1.0);
    if !(s.gap > sqrt2 * nu) || !(eps > 0.0) || !(delta > 0.0) {
        return None;
    }
    let beta = eps / (4.0 * (n as f64 + (2.0 / delta).ln()));
    let local = 2.0 * sqrt2 / s.gap * (2.0 / nu + s.c_pi);
    let global = sqrt2 * (-beta * s.gap / nu).exp();
    Some(local.max(global))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn summary(g: &Graph) -> SpectralSummary {
        top_two_eigenpairs(g, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn complete_graph_spectrum() {
        let s = summary(&synthetic::complete(100));
        assert!((s.lambda1 - 99.0).abs() < 1e-8);
        assert!((s.lambda2 + 1.0).abs() < 1e-8);
        assert!((s.gap - 98.0).abs() < 1e-8);
        assert!(s.v.iter().all(|x| (x - 0.1).abs() < 1e-9));
    }

    #[test]
    fn star_has_zero_gap() {
        let s = summary(&synthetic::star(9));
        assert!((s.lambda1 - 3.0).abs() < 1e-8);
        assert!((s.lambda2.abs() - 3.0).abs() < 1e-8);
        assert!(s.gap < 1e-8);
        assert_eq!(local_sensitivity_bound(&s), None);
        // Perron vector: centre 1/√2, leaves 1/(3√2).
        assert!((s.v[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(s.v[1..].iter().all(|x| (x - 1.0 / (3.0 * 2f64.sqrt())).abs() < 1e-9));
    }

    #[test]
    fn single_edge_graph() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let s = summary(&g);
        assert!((s.lambda1 - 1.0).abs() < 1e-12);
        assert!((s.lambda2 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_input() {
        let g = Graph::from_edges(1, []).unwrap();
        assert!(matches!(
            top_two_eigenpairs(&g, &SolverOptions::default()),
            Err(SpectralError::TooSmall(1))
        ));
        let g = Graph::from_edges(3, []).unwrap();
        assert!(matches!(
            top_two_eigenpairs(&g, &SolverOptions::default()),
            Err(SpectralError::NoEdges)
        ));
        let opts = SolverOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            top_two_eigenpairs(&synthetic::complete(4), &opts),
            Err(SpectralError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn non_convergence_returns_partial_summary() {
        let g = synthetic::erdos_renyi(200, 0.05, 3).unwrap();
        let opts = SolverOptions {
            tol: 1e-14,
            max_iter: Some(2),
            seed: 0,
        };
        match top_two_eigenpairs(&g, &opts) {
            Err(SpectralError::NotConverged {
                iterations, partial, ..
            }) => {
                assert_eq!(iterations, 2);
                assert_eq!(partial.n(), 200);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let g = synthetic::erdos_renyi(300, 0.05, 11).unwrap();
        let a = summary(&g);
        let b = summary(&g);
        assert_eq!(a.lambda1.to_bits(), b.lambda1.to_bits());
        assert_eq!(a.lambda2.to_bits(), b.lambda2.to_bits());
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn sensitivity_formulas_on_complete_graph() {
        let s = summary(&synthetic::complete(100));
        let c = (2.0f64 / 100.0).sqrt();
        let ls = local_sensitivity_bound(&s).unwrap();
        assert!((ls - 2.0 * c / 98.0).abs() < 1e-12);
        assert!((ls - 2.886e-3).abs() < 1e-6);
        assert_eq!(theta_bound(&s, 0), Some(ls));
        let th = theta_bound(&s, 10).unwrap();
        assert!((th - 2.0 / 88.0 * (20.0 / 98.0 + c)).abs() < 1e-12);
        assert!((th - 7.852e-3).abs() < 1e-6);
        assert!(theta_bound(&s, 28).is_some());
        assert_eq!(theta_bound(&s, 29), None);
    }

    #[test]
    fn theta_increases_with_distance() {
        let s = summary(&synthetic::complete(100));
        let vals: Vec<f64> = (0..=28).map(|d| theta_bound(&s, d).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn smooth_bound_near_sqrt2_for_large_n() {
        let s = SpectralSummary {
            gap: 100.0,
            c_pi: 0.01,
            ..SpectralSummary::from_parts(1.0, 0.0, vec![1.0])
        };
        let nu = 2f64.sqrt() / (2f64.sqrt() - 1.0);
        let beta = 3.0 / (4.0 * (1e6 + (2.0f64 / 1e-6).ln()));
        let exponent = beta * 100.0 / nu;
        assert!((exponent - 2.2e-5).abs() < 1e-6);
        let got = smooth_sensitivity_diagnostic(&s, 1_000_000, 3.0, 1e-6).unwrap();
        assert!((got - 2f64.sqrt() * (-exponent).exp()).abs() < 1e-15);
        assert!((got - 1.41418).abs() < 1e-5);
    }

    #[test]
    fn smooth_bound_gap_condition() {
        let mut s = SpectralSummary::from_parts(10.0, 5.2, vec![0.6, 0.8]);
        assert!(s.gap < 4.828);
        assert_eq!(smooth_sensitivity_diagnostic(&s, 2, 3.0, 0.01), None);
        s.gap = 4.83;
        assert!(smooth_sensitivity_diagnostic(&s, 2, 3.0, 0.01).is_some());
    }

    #[test]
    fn smooth_bound_on_complete_graph_takes_larger_branch() {
        let s = summary(&synthetic::complete(100));
        let sqrt2 = 2f64.sqrt();
        let nu = sqrt2 / (sqrt2 - 1.0);
        let beta = 3.0 / (4.0 * (100.0 + (2.0f64 / 0.01).ln()));
        let local = 2.0 * sqrt2 / 98.0 * (2.0 / nu + (0.02f64).sqrt());
        let global = sqrt2 * (-beta * 98.0 / nu).exp();
        let got = smooth_sensitivity_diagnostic(&s, 100, 3.0, 0.01).unwrap();
        assert!((got - local.max(global)).abs() < 1e-12);
        assert!(global > local);
    }

    #[test]
    fn top_two_energy_uses_signed_order() {
        assert!((top_two_energy(&[0.1, -0.9, 0.3, 0.2]) - (0.09f64 + 0.04).sqrt()).abs() < 1e-15);
    }
}
