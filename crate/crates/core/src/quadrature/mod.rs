//! Quadrature rules: exponentially weighted Gauss–Radau rules for the
//! time discretisation, Gauss–Legendre rules, and adaptive Gauss–Kronrod
//! integration for (weakly singular) memory-kernel integrals.

mod adaptive;
mod gauss;
mod radau;

pub use adaptive::{adaptive_integrate, adaptive_integrate_with, AdaptiveOptions, AdaptiveResult, Abscissa, SingularityHint};
pub use gauss::{gauss_legendre, GaussRule};
pub use radau::{
    build_radau, map_rule, radau_rule, weighted_moment_table, weighted_moments, MappedRule,
    RadauRule,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid Radau parameters q = {q}, a = {a}")]
    InvalidParameters { q: usize, a: f64 },
    #[error("orthogonal-polynomial recurrence lost positivity at degree {degree} (q = {q}, a = {a}); weight decay too strong for double precision")]
    LostPositivity { q: usize, a: f64, degree: usize },
    #[error("rule was built for a = {rule_a} but the interval requires rho * tau = {expected}")]
    WeightMismatch { rule_a: f64, expected: f64 },
    #[error("invalid interval ({start}, {end}]")]
    InvalidInterval { start: f64, end: f64 },
}
