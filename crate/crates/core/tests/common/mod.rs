//! Oracles and property checks shared by the property suites and the
//! acceptance binary.
#![allow(dead_code)]

use dgmem::dg::TimeMesh;
use dgmem::kernel::{apply_tk, norm_continuous, norm_discrete, KernelEntry, KernelSpec, NormOptions, NormReduction};
use dgmem::poly::LagrangeBasis;
use dgmem::quadrature::gauss_legendre;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const T_END: f64 = 2.0;

/// Scalar kernel shapes for which the entry norms bound the operator norm.
#[derive(Debug, Clone)]
pub enum Shape {
    Exp { c: f64, beta: f64 },
    Affine { c: f64, d: f64 },
    Power { c: f64, alpha: f64, decay: f64 },
}

impl Shape {
    pub fn entry(&self) -> KernelEntry {
        match *self {
            Shape::Exp { c, beta } => KernelEntry::convolution(move |l| c * (-beta * l).exp()),
            Shape::Affine { c, d } => KernelEntry::smooth(move |t, s| c * (1.0 + d * t * s)),
            Shape::Power { c, alpha, decay } => KernelEntry::power(c, alpha).unwrap().damped(decay),
        }
    }

    pub fn smooth(&self) -> bool {
        !matches!(self, Shape::Power { .. })
    }

    pub fn value(&self, t: f64, s: f64) -> f64 {
        match *self {
            Shape::Exp { c, beta } => c * (-beta * (t - s)).exp(),
            Shape::Affine { c, d } => c * (1.0 + d * t * s),
            Shape::Power { c, alpha, decay } => c * (t - s).powf(-alpha) * (-decay * (t - s)).exp(),
        }
    }

    /// `∫_lo^hi K(t,s) g(s) ds` with `hi <= t`, by composite Gauss–Legendre;
    /// power kernels are integrated in `u = (t-s)^{1-α}`, which removes the
    /// singularity.
    pub fn integrate(&self, t: f64, lo: f64, hi: f64, g: &dyn Fn(f64) -> f64) -> f64 {
        let gl = gauss_legendre(12);
        let panels = 16;
        match *self {
            Shape::Power { c, alpha, decay } => {
                let p = 1.0 - alpha;
                let (ua, ub) = ((t - hi).powf(p), (t - lo).powf(p));
                let h = (ub - ua) / panels as f64;
                let mut sum = 0.0;
                for i in 0..panels {
                    let a = ua + i as f64 * h;
                    for (u, w) in gl.mapped(a, a + h) {
                        let lag = u.powf(1.0 / p);
                        sum += w * c / p * (-decay * lag).exp() * g(t - lag);
                    }
                }
                sum
            }
            _ => {
                let h = (hi - lo) / panels as f64;
                let mut sum = 0.0;
                for i in 0..panels {
                    let a = lo + i as f64 * h;
                    for (s, w) in gl.mapped(a, a + h) {
                        sum += w * self.value(t, s) * g(s);
                    }
                }
                sum
            }
        }
    }
}

pub fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (-3.0..3.0f64, 0.0..4.0f64).prop_map(|(c, beta)| Shape::Exp { c, beta }),
        (-2.0..2.0f64, -1.0..1.0f64).prop_map(|(c, d)| Shape::Affine { c, d }),
        (0.1..2.0f64, 0.05..0.9f64, 0.0..2.0f64).prop_map(|(c, alpha, decay)| Shape::Power { c, alpha, decay }),
    ]
}

pub fn smooth_shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (-3.0..3.0f64, 0.0..4.0f64).prop_map(|(c, beta)| Shape::Exp { c, beta }),
        (-2.0..2.0f64, -1.0..1.0f64).prop_map(|(c, d)| Shape::Affine { c, d }),
    ]
}

pub fn opts() -> NormOptions {
    NormOptions {
        grid: 256,
        ..NormOptions::default()
    }
}

/// `‖g‖_{2,ρ}` on `[0, T]` by composite Gauss–Legendre.
pub fn weighted_l2(rho: f64, g: &dyn Fn(f64) -> f64) -> f64 {
    let gl = gauss_legendre(8);
    let panels = 48;
    let h = T_END / panels as f64;
    let mut sum = 0.0;
    for i in 0..panels {
        let a = i as f64 * h;
        for (t, w) in gl.mapped(a, a + h) {
            sum += w * (-2.0 * rho * t).exp() * g(t).powi(2);
        }
    }
    sum.sqrt()
}

/// Random trigonometric test function.
pub fn signal(coef: &[(f64, f64, f64)]) -> impl Fn(f64) -> f64 + '_ {
    move |t| coef.iter().map(|&(a, w, p)| a * (w * t + p).cos()).sum()
}


pub type Coef = Vec<(f64, f64, f64)>;

pub fn coef() -> impl Strategy<Value = Coef> {
    prop::collection::vec((-1.0..1.0f64, 0.0..8.0f64, 0.0..6.3f64), 1..4)
}

pub fn check_monotone(sh: &Shape, rho: f64, step: f64) -> Result<(), TestCaseError> {
    let k = KernelSpec::diagonal(1, sh.entry(), "k");
    let a = norm_continuous(&k, rho, T_END, &opts()).value;
    let b = norm_continuous(&k, rho + step, T_END, &opts()).value;
    prop_assert!(b <= a * (1.0 + 1e-9), "{b} > {a}");
    Ok(())
}

pub fn check_continuous_bound(sh: &Shape, rho: f64, coef: &Coef) -> Result<(), TestCaseError> {
    let k = KernelSpec::diagonal(1, sh.entry(), "k");
    let norm = norm_continuous(&k, rho, T_END, &opts()).value;
    let f = signal(coef);
    let tk = |t: f64| if t == 0.0 { 0.0 } else { sh.integrate(t, 0.0, t, &f) };
    let lhs = weighted_l2(rho, &tk);
    let rhs = norm * weighted_l2(rho, &f);
    prop_assert!(lhs <= (1.0 + 1e-6) * rhs, "{lhs} > {rhs}");
    Ok(())
}

pub fn check_conservative_bound(shapes: &[Shape], rho: f64, coef: &[Coef]) -> Result<(), TestCaseError> {
    let k = KernelSpec::new(2, shapes.iter().map(Shape::entry).collect(), "full").unwrap();
    let o = NormOptions {
        reduction: NormReduction::Conservative,
        ..opts()
    };
    let norm = norm_continuous(&k, rho, T_END, &o).value;
    let f: Vec<_> = coef.iter().map(|c| signal(c)).collect();
    let tk = |t: f64, a: usize| -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        (0..2).map(|b| shapes[a * 2 + b].integrate(t, 0.0, t, &f[b])).sum()
    };
    let lhs = (0..2).map(|a| weighted_l2(rho, &|t| tk(t, a)).powi(2)).sum::<f64>().sqrt();
    let fnorm = (0..2).map(|b| weighted_l2(rho, &f[b]).powi(2)).sum::<f64>().sqrt();
    prop_assert!(lhs <= (1.0 + 1e-6) * norm * fnorm, "{lhs} > {}", norm * fnorm);
    Ok(())
}

/// `‖T_K V‖_{Q,ρ} <= ‖K‖_Q ‖V‖_ρ` for a random piecewise polynomial `V`.
pub fn check_discrete_bound(sh: &Shape, rho: f64, m: usize, q: usize, seed: &[f64]) -> Result<(), TestCaseError> {
    let mesh = TimeMesh::uniform(T_END, m, rho, q).unwrap();
    let k = KernelSpec::diagonal(1, sh.entry(), "k");
    let norm = norm_discrete(&k, &mesh, &opts()).value;
    let pieces: Vec<(f64, f64, LagrangeBasis, Vec<f64>)> = (0..m)
        .map(|i| {
            let rule = mesh.rule(i);
            let basis = LagrangeBasis::new(&rule.nodes);
            let vals = (0..=q).map(|j| seed[(i * 3 + j) % seed.len()]).collect();
            (rule.start, rule.end, basis, vals)
        })
        .collect();
    let v_on = |i: usize, s: f64| -> f64 {
        let (_, _, b, vals) = &pieces[i];
        b.values_vec(s).iter().zip(vals).map(|(p, c)| p * c).sum()
    };
    let tk_at = |t: f64, upto: usize| -> f64 {
        (0..=upto)
            .map(|i| {
                let (a, b, _, _) = pieces[i];
                sh.integrate(t, a, b.min(t), &|s| v_on(i, s))
            })
            .sum()
    };
    let mut lhs2 = 0.0;
    for i in 0..m {
        let rule = mesh.rule(i);
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            lhs2 += w * (-2.0 * rho * rule.start).exp() * tk_at(t, i).powi(2);
        }
    }
    let gl = gauss_legendre(q + 4);
    let mut v2 = 0.0;
    for (i, (a, b, _, _)) in pieces.iter().enumerate() {
        for (s, w) in gl.mapped(*a, *b) {
            v2 += w * (-2.0 * rho * s).exp() * v_on(i, s).powi(2);
        }
    }
    prop_assert!(
        lhs2.sqrt() <= (1.0 + 1e-6) * norm * v2.sqrt(),
        "{} > {}",
        lhs2.sqrt(),
        norm * v2.sqrt()
    );
    Ok(())
}

/// Data vanishing on `[0, a)` gives `T_K f(t) = 0` exactly for `t < a`.
pub fn check_causal(sh: &Shape, a: f64, frac: f64) -> Result<(), TestCaseError> {
    let k = KernelSpec::diagonal(1, sh.entry(), "k");
    let r = apply_tk(
        &k,
        |s: f64, out: &mut [f64]| out[0] = if s < a { 0.0 } else { (s - a).sin() + 1.0 },
        frac * a,
        1e-10,
    );
    prop_assert_eq!(r.value[0], 0.0);
    Ok(())
}
