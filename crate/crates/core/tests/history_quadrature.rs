use dgmem::analysis::error_norms;
use dgmem::cli::registry;
use dgmem::dg::{solve, HistoryQuadrature, SolverOptions, TimeMesh};
use dgmem::space_fem::SpaceMesh1D;

fn solve_with(id: &str, history: HistoryQuadrature) -> (Vec<f64>, f64) {
    let p = registry(id, None, 2.0).unwrap();
    let mesh = TimeMesh::uniform(2.0, 16, 1.0, 1).unwrap();
    let opts = SolverOptions {
        history,
        coercivity_check: false,
        ..SolverOptions::default()
    };
    let sol = solve(&p, &mesh, &SpaceMesh1D::uniform(16).unwrap(), 2, &opts).unwrap();
    let err = error_norms(&sol, p.exact().unwrap(), 3).unwrap().e_l2rho;
    let mut samples = Vec::new();
    for i in 1..=20 {
        for j in 0..=8 {
            samples.extend(sol.eval(0.1 * i as f64, j as f64 / 8.0).unwrap());
        }
    }
    (samples, err)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn fixed_and_adaptive_agree_for_smooth_kernel() {
    let (fixed, e_fixed) = solve_with("ex1", HistoryQuadrature::Fixed);
    let (adaptive, e_adaptive) = solve_with("ex1", HistoryQuadrature::Adaptive);
    let d = max_diff(&fixed, &adaptive);
    assert!(d < 1e-3 * e_fixed, "difference {d:e} against error {e_fixed:e}");
    assert!((e_fixed - e_adaptive).abs() < 1e-3 * e_fixed);
}

#[test]
fn auto_uses_adaptive_for_singular_kernel() {
    let (auto, _) = solve_with("ex2", HistoryQuadrature::Auto);
    let (adaptive, _) = solve_with("ex2", HistoryQuadrature::Adaptive);
    assert_eq!(auto, adaptive);
}
