mod common;

use common::{angular_distance, graph_spectrum, l2_distance};
use privpc::graph::Graph;
use privpc::spectral::{
    local_sensitivity_bound, smooth_sensitivity_diagnostic, theta_bound, top_two_eigenpairs, SolverOptions,
    SpectralSummary,
};
use privpc::synthetic;

fn solve(g: &Graph) -> SpectralSummary {
    let opts = SolverOptions {
        max_iter: Some(100_000),
        ..SolverOptions::default()
    };
    top_two_eigenpairs(g, &opts).unwrap()
}

#[test]
fn matches_dense_oracle_on_mixed_families() {
    let graphs = vec![
        synthetic::complete(100),
        synthetic::star(9),
        synthetic::path(30),
        synthetic::erdos_renyi(150, 0.08, 1).unwrap(),
        synthetic::random_regular(120, 6, 2).unwrap(),
        synthetic::planted_clique(180, 0.03, 15, 3).unwrap().0,
    ];
    for g in &graphs {
        let s = solve(g);
        let d = graph_spectrum(g);
        assert!((s.lambda1.abs() - d.values[0].abs()).abs() < 1e-8, "λ₁ {} vs {}", s.lambda1, d.values[0]);
        assert!((s.lambda2.abs() - d.values[1].abs()).abs() < 1e-8, "λ₂ {} vs {}", s.lambda2, d.values[1]);
        assert!(angular_distance(&s.v, &d.vectors[0]) < 1e-6);
    }
}

#[test]
fn complete_graph_vector_is_uniform() {
    let s = solve(&synthetic::complete(100));
    assert!(s.v.iter().all(|x| (x - 0.1).abs() < 1e-9));
    assert!((s.gap - 98.0).abs() < 1e-8);
}

#[test]
fn star_gap_is_zero() {
    let s = solve(&synthetic::star(9));
    assert!((s.lambda1.abs() - 3.0).abs() < 1e-9);
    assert!((s.lambda2.abs() - 3.0).abs() < 1e-9);
    assert!(s.gap < 1e-9);
    assert_eq!(local_sensitivity_bound(&s), None);
}

#[test]
fn perron_vector_is_nonnegative_on_connected_graphs() {
    for seed in 0..10 {
        let g = synthetic::erdos_renyi(80, 0.1, seed).unwrap();
        if g.component_count() != 1 {
            continue;
        }
        let s = solve(&g);
        assert!(s.v.iter().all(|&x| x >= -1e-10));
        assert!(s.v.iter().sum::<f64>() >= 0.0);
    }
}

#[test]
fn theta_properties() {
    let s = solve(&synthetic::complete(100));
    assert_eq!(theta_bound(&s, 0), local_sensitivity_bound(&s));
    let t10 = theta_bound(&s, 10).unwrap();
    let expected = 2.0 / 88.0 * (20.0 / 98.0 + 0.02f64.sqrt());
    assert!((t10 - expected).abs() < 1e-9, "{t10} vs {expected}");
    assert!((t10 - 7.852e-3).abs() < 1e-6);
    assert_eq!(theta_bound(&s, 29), None);
    let values: Vec<f64> = (0..=28).map(|d| theta_bound(&s, d).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn smooth_diagnostic_examples() {
    let s = SpectralSummary {
        gap: 100.0,
        c_pi: 0.01,
        ..SpectralSummary::from_parts(150.0, 50.0, vec![1.0])
    };
    let v = smooth_sensitivity_diagnostic(&s, 1_000_000, 3.0, 1e-6).unwrap();
    let nu = 2f64.sqrt() / (2f64.sqrt() - 1.0);
    let beta = 3.0 / (4.0 * (1e6 + (2e6f64).ln()));
    let global = 2f64.sqrt() * (-beta * 100.0 / nu).exp();
    assert!((v - global).abs() < 1e-4);
    assert!((v - 1.41418).abs() < 1e-4);

    let k = solve(&synthetic::complete(100));
    let local = 2.0 * 2f64.sqrt() / k.gap * (2.0 / nu + k.c_pi);
    let beta = 3.0 / (4.0 * (100.0 + (200f64).ln()));
    let global = 2f64.sqrt() * (-beta * k.gap / nu).exp();
    let v = smooth_sensitivity_diagnostic(&k, 100, 3.0, 0.01).unwrap();
    assert!((v - local.max(global)).abs() < 1e-12);

    let small = SpectralSummary::from_parts(5.0, 0.5, vec![1.0]);
    assert_eq!(smooth_sensitivity_diagnostic(&small, 10, 1.0, 0.1), None);
}

#[test]
fn single_edge_flips_respect_local_bound() {
    let mut checked = 0;
    for seed in 0..40 {
        let g = synthetic::erdos_renyi(30, 0.35, seed).unwrap();
        if g.component_count() != 1 {
            continue;
        }
        let s = solve(&g);
        let Some(bound) = local_sensitivity_bound(&s) else { continue };
        let edges: Vec<(usize, usize)> = g.edges().collect();
        for i in 0..g.n() {
            for j in i + 1..g.n() {
                let flipped: Vec<(usize, usize)> = if g.has_edge(i, j) {
                    edges.iter().copied().filter(|&e| e != (i, j)).collect()
                } else {
                    edges.iter().copied().chain([(i, j)]).collect()
                };
                let h = Graph::from_edges(g.n(), flipped).unwrap();
                let d = graph_spectrum(&h);
                assert!(l2_distance(&s.v, &d.vectors[0]) <= bound + 1e-9);
            }
        }
        checked += 1;
        if checked == 3 {
            break;
        }
    }
    assert_eq!(checked, 3);
}

#[test]
fn solver_is_deterministic() {
    let g = synthetic::erdos_renyi(5000, 0.002, 9).unwrap();
    let a = solve(&g);
    let b = solve(&g);
    assert_eq!(a.v, b.v);
    assert_eq!(a.lambda2.to_bits(), b.lambda2.to_bits());
}
