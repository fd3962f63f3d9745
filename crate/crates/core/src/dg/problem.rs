//! Problem data for `(∂t M0 + M1 + A + T_K) U = F`, `U(0) = x0`.

use std::fmt;
use std::sync::Arc;

use crate::kernel::KernelSpec;
use crate::space_fem::{Boundary, SpatialOperator};

use super::DgError;

/// `(t, x, out)` writing one value per component.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, &mut [f64]) + Send + Sync>;
/// `(x, out)` writing one value per component.
pub type SpaceFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Which one-sided value to take at a mesh point of a discontinuous field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Limit from the left (the value stored at a right interval end).
    Left,
    /// Limit from the right.
    Right,
}

/// A vector field on `[0, T] × [0, 1]` that can be sampled at many spatial
/// points for one time.
pub trait SpaceTimeField: Send + Sync {
    fn components(&self) -> usize;

    /// Writes `out[a * xs.len() + g]` = component `a` at `(t, xs[g])`.
    fn sample(&self, t: f64, side: Side, xs: &[f64], out: &mut [f64]);
}

/// Closed-form solution with its time and space derivatives.
#[derive(Clone)]
pub struct ExactSolution {
    n: usize,
    value: SpaceTimeFn,
    dt: SpaceTimeFn,
    dx: SpaceTimeFn,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactSolution(n = {})", self.n)
    }
}

impl ExactSolution {
    pub fn new(n: usize, value: SpaceTimeFn, dt: SpaceTimeFn, dx: SpaceTimeFn) -> Self {
        Self { n, value, dt, dx }
    }

    pub fn zero(n: usize) -> Self {
        let z: SpaceTimeFn = Arc::new(|_, _, out| out.fill(0.0));
        Self::new(n, z.clone(), z.clone(), z)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, t: f64, x: f64, out: &mut [f64]) {
        (self.value)(t, x, out)
    }

    pub fn time_derivative(&self, t: f64, x: f64, out: &mut [f64]) {
        (self.dt)(t, x, out)
    }

    pub fn space_derivative(&self, t: f64, x: f64, out: &mut [f64]) {
        (self.dx)(t, x, out)
    }

    pub fn initial_state(&self) -> SpaceFn {
        let v = self.value.clone();
        Arc::new(move |x, out| v(0.0, x, out))
    }
}

impl SpaceTimeField for ExactSolution {
    fn components(&self) -> usize {
        self.n
    }

    fn sample(&self, t: f64, _side: Side, xs: &[f64], out: &mut [f64]) {
        let mut buf = vec![0.0; self.n];
        for (g, &x) in xs.iter().enumerate() {
            self.value(t, x, &mut buf);
            for a in 0..self.n {
                out[a * xs.len() + g] = buf[a];
            }
        }
    }
}

/// The identically zero field.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField(pub usize);

impl SpaceTimeField for ZeroField {
    fn components(&self) -> usize {
        self.0
    }

    fn sample(&self, _t: f64, _side: Side, _xs: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Clone)]
pub enum Source {
    Zero,
    /// `F(t, x)` given directly.
    Direct(SpaceTimeFn),
    /// `F = M0 ∂t U + M1 U + A U + T_K U` for a prescribed exact `U`.
    Manufactured(Arc<ExactSolution>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Direct(_) => write!(f, "Direct(..)"),
            Self::Manufactured(e) => write!(f, "Manufactured({e:?})"),
        }
    }
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub n: usize,
    /// Row-major `n × n`, symmetric.
    pub m0: Vec<f64>,
    /// Row-major `n × n`.
    pub m1: Vec<f64>,
    pub kernel: KernelSpec,
    pub operator: SpatialOperator,
    pub bcs: Vec<Boundary>,
    pub source: Source,
    pub x0: SpaceFn,
    /// Coercivity constant of `ρ M0 + sym(M1)`.
    pub gamma: f64,
    pub t_end: f64,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m0", &self.m0)
            .field("m1", &self.m1)
            .field("kernel", &self.kernel)
            .field("operator", &self.operator)
            .field("bcs", &self.bcs)
            .field("source", &self.source)
            .field("gamma", &self.gamma)
            .field("t_end", &self.t_end)
            .finish()
    }
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for a in 0..n {
        m[a * n + a] = 1.0;
    }
    m
}

impl Problem {
    /// Homogeneous problem: zero source, zero initial state.
    pub fn zero(n: usize, kernel: KernelSpec) -> Self {
        Self {
            name: "zero".into(),
            n,
            m0: identity(n),
            m1: identity(n),
            kernel,
            operator: SpatialOperator::none(),
            bcs: vec![Boundary::Natural; n],
            source: Source::Zero,
            x0: Arc::new(|_, out| out.iter_mut().for_each(|v| *v = 0.0)),
            gamma: 1.0,
            t_end: 1.0,
        }
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        match &self.source {
            Source::Manufactured(e) => Some(e),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), DgError> {
        let n = self.n;
        let bad = |msg: String| Err(DgError::Problem(msg));
        if n == 0 {
            return bad("need at least one component".into());
        }
        if self.m0.len() != n * n || self.m1.len() != n * n {
            return bad("M0 and M1 must be n × n".into());
        }
        if self.kernel.n() != n {
            return bad(format!("kernel has {} components, problem has {n}", self.kernel.n()));
        }
        if self.bcs.len() != n {
            return bad("one boundary flag per component required".into());
        }
        if !(self.gamma > 0.0) {
            return bad(format!("coercivity constant must be positive, got {}", self.gamma));
        }
        if !(self.t_end > 0.0) {
            return bad(format!("end time must be positive, got {}", self.t_end));
        }
        if let Source::Manufactured(e) = &self.source {
            if e.n() != n {
                return bad("exact solution has the wrong number of components".into());
            }
        }
        Ok(())
    }

    /// Smallest eigenvalue of `ρ M0 + (M1 + M1ᵀ)/2`.
    pub fn coercivity(&self, rho: f64) -> f64 {
        let n = self.n;
        let sym = nalgebra::DMatrix::from_fn(n, n, |a, b| {
            rho * self.m0[a * n + b] + 0.5 * (self.m1[a * n + b] + self.m1[b * n + a])
        });
        sym.symmetric_eigenvalues().min()
    }

    /// Pointwise `F(t, x)`; manufactured sources integrate the memory term
    /// at this single point to tolerance `tol`. Returns `false` if that
    /// integration did not converge.
    pub fn source_at(&self, t: f64, x: f64, tol: f64, out: &mut [f64]) -> bool {
        match &self.source {
            Source::Zero => {
                out.iter_mut().for_each(|v| *v = 0.0);
                true
            }
            Source::Direct(f) => {
                f(t, x, out);
                true
            }
            Source::Manufactured(e) => {
                let xs = [x];
                let mut samples = vec![0.0; self.n];
                let ok = manufactured_samples(self, e, t, &xs, tol, &mut samples);
                out.copy_from_slice(&samples);
                ok
            }
        }
    }
}

/// `F_a(t, x_g)` for a manufactured source at all `xs`, laid out `[a][g]`.
pub(crate) fn manufactured_samples(
    problem: &Problem,
    exact: &ExactSolution,
    t: f64,
    xs: &[f64],
    tol: f64,
    out: &mut [f64],
) -> bool {
    let n = problem.n;
    let w = xs.len();
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut dt = vec![0.0; n];
    let mut au = vec![0.0; n];
    for (g, &x) in xs.iter().enumerate() {
        exact.value(t, x, &mut u);
        exact.time_derivative(t, x, &mut dt);
        exact.space_derivative(t, x, &mut du);
        problem.operator.apply_pointwise(&du, &mut au);
        for a in 0..n {
            let mut f = au[a];
            for b in 0..n {
                f += problem.m0[a * n + b] * dt[b] + problem.m1[a * n + b] * u[b];
            }
            out[a * w + g] = f;
        }
    }
    if problem.kernel.is_zero() {
        return true;
    }
    let memory = crate::kernel::apply_tk_field(
        &problem.kernel,
        w,
        |s, vals| exact.sample(s, Side::Left, xs, vals),
        t,
        tol,
    );
    for (o, m) in out.iter_mut().zip(&memory.value) {
        *o += m;
    }
    memory.converged
}
