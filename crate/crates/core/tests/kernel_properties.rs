mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn continuous_norm_decreases_in_rho(sh in shape(), rho in 0.0..6.0f64, step in 0.01..4.0f64) {
        check_monotone(&sh, rho, step)?;
    }

    #[test]
    fn continuous_operator_bound(sh in shape(), rho in 0.0..5.0f64, c in coef()) {
        check_continuous_bound(&sh, rho, &c)?;
    }

    #[test]
    fn conservative_norm_bounds_full_matrix_kernels(
        shapes in prop::collection::vec(shape(), 4),
        rho in 0.5..5.0f64,
        c in prop::collection::vec(coef(), 2),
    ) {
        check_conservative_bound(&shapes, rho, &c)?;
    }

    #[test]
    fn discrete_operator_bound(
        sh in smooth_shape(),
        rho in 0.0..5.0f64,
        m in 2usize..10,
        q in 0usize..3,
        seed in prop::collection::vec(-1.0..1.0f64, 30),
    ) {
        check_discrete_bound(&sh, rho, m, q, &seed)?;
    }

    #[test]
    fn history_operator_is_causal(sh in shape(), a in 0.2..1.8f64, frac in 0.05..1.0f64) {
        check_causal(&sh, a, frac)?;
    }
}
