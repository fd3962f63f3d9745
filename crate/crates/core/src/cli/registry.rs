//! Built-in problems on `(0, T) × (0, 1)`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dg::{identity, ExactSolution, Problem, Source};
use crate::kernel::KernelSpec;
use crate::space_fem::{Boundary, SpatialOperator};

use super::CliError;

pub const EXAMPLES: [&str; 5] = ["ex1", "ex2", "ex3", "zero", "custom"];

/// `u = (t + e^{-t}) sin(π x²)`, `v = cos(t) e^x`.
pub fn smooth_solution() -> ExactSolution {
    ExactSolution::new(
        2,
        Arc::new(|t, x, o| {
            o[0] = (t + (-t).exp()) * (PI * x * x).sin();
            o[1] = t.cos() * x.exp();
        }),
        Arc::new(|t, x, o| {
            o[0] = (1.0 - (-t).exp()) * (PI * x * x).sin();
            o[1] = -t.sin() * x.exp();
        }),
        Arc::new(|t, x, o| {
            o[0] = (t + (-t).exp()) * 2.0 * PI * x * (PI * x * x).cos();
            o[1] = t.cos() * x.exp();
        }),
    )
}

fn two_field(name: &str, kernel: KernelSpec, source: Source, t_end: f64) -> Problem {
    let x0 = match &source {
        Source::Manufactured(e) => e.initial_state(),
        _ => Arc::new(|x: f64, o: &mut [f64]| {
            o[0] = (2.0 * PI * x * x).sin();
            o[1] = 0.0;
        }),
    };
    Problem {
        name: name.into(),
        n: 2,
        m0: identity(2),
        m1: identity(2),
        kernel,
        operator: SpatialOperator::gradient_pair(0, 1),
        bcs: vec![Boundary::Dirichlet, Boundary::Natural],
        source,
        x0,
        gamma: 1.0,
        t_end,
    }
}

/// Builds a registered problem. `kernel` overrides the example's kernel;
/// `custom` requires one and uses the smooth manufactured solution.
pub fn registry(id: &str, kernel: Option<&str>, t_end: f64) -> Result<Problem, CliError> {
    let parsed = kernel.map(|k| KernelSpec::parse(k, 2)).transpose()?;
    let pick = |default: KernelSpec| parsed.clone().unwrap_or(default);
    let manufactured = || Source::Manufactured(Arc::new(smooth_solution()));
    Ok(match id {
        "ex1" => two_field("ex1", pick(KernelSpec::example1()), manufactured(), t_end),
        "ex2" => two_field("ex2", pick(KernelSpec::example2_3()), manufactured(), t_end),
        "ex3" => two_field(
            "ex3",
            pick(KernelSpec::example2_3()),
            Source::Direct(Arc::new(|_, _, o| o.fill(1.0))),
            t_end,
        ),
        "zero" => {
            let mut p = two_field(
                "zero",
                pick(KernelSpec::example1()),
                Source::Manufactured(Arc::new(ExactSolution::zero(2))),
                t_end,
            );
            p.x0 = Arc::new(|_, o| o.fill(0.0));
            p
        }
        "custom" => {
            let k = parsed.ok_or_else(|| CliError::Config("example 'custom' needs a kernel".into()))?;
            two_field("custom", k, manufactured(), t_end)
        }
        other => return Err(CliError::UnknownExample(other.into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn examples_are_well_formed() {
        for id in ["ex1", "ex2", "ex3", "zero"] {
            let p = registry(id, None, 2.0).unwrap();
            p.validate().unwrap();
            assert_eq!(p.n, 2);
            assert_eq!(p.m0, identity(2));
            assert_eq!(p.m1, identity(2));
            assert_eq!(p.gamma, 1.0);
        }
        assert_eq!(registry("ex1", None, 2.0).unwrap().kernel.name(), "example1");
        assert_eq!(registry("ex2", None, 2.0).unwrap().kernel.name(), "example2_3");
        assert!(registry("ex3", None, 2.0).unwrap().exact().is_none());
        assert!(registry("nope", None, 2.0).is_err());
        assert!(registry("custom", None, 2.0).is_err());
        assert!(registry("custom", Some("scalar_const(0.1)"), 2.0).is_ok());
    }

    #[test]
    fn smooth_solution_derivatives() {
        let e = smooth_solution();
        let (t, x, h) = (0.7, 0.4, 1e-6);
        let mut a = [0.0; 2];
        let mut b = [0.0; 2];
        let mut d = [0.0; 2];
        e.value(t + h, x, &mut a);
        e.value(t - h, x, &mut b);
        e.time_derivative(t, x, &mut d);
        for c in 0..2 {
            assert_abs_diff_eq!(d[c], (a[c] - b[c]) / (2.0 * h), epsilon = 1e-8);
        }
        e.value(t, x + h, &mut a);
        e.value(t, x - h, &mut b);
        e.space_derivative(t, x, &mut d);
        for c in 0..2 {
            assert_abs_diff_eq!(d[c], (a[c] - b[c]) / (2.0 * h), epsilon = 1e-8);
        }
        e.value(0.3, 0.0, &mut a);
        assert_eq!(a[0], 0.0);
    }
}
