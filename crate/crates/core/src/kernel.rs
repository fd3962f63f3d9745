//! Matrix-valued memory kernels `K(t, s)`, the Volterra operator
//! `(T_K f)(t) = ∫_0^t K(t, s) f(s) ds`, and the kernel norms that decide
//! well-posedness and coercivity of the discrete scheme.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::dg::TimeMesh;
use crate::poly::LagrangeBasis;
use crate::quadrature::{adaptive_integrate, gauss_legendre, Abscissa, SingularityHint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel evaluated outside its domain: t = {t}, s = {s}")]
    Domain { t: f64, s: f64 },
    #[error("power-kernel exponent must lie in [0, 1), got {0}")]
    Exponent(f64),
    #[error("kernel needs {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("unknown kernel '{0}'")]
    Unknown(String),
}

pub type SmoothFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type LagFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One scalar entry `K_ab(t, s)`.
#[derive(Clone)]
pub enum KernelEntry {
    Zero,
    /// Bounded entry given as a function of `(t, s)`.
    Smooth(SmoothFn),
    /// `c (t - s)^{-alpha} e^{-decay (t - s)}`, `0 <= alpha < 1`.
    Power { c: f64, alpha: f64, decay: f64 },
    /// Bounded convolution entry `ℓ(t - s)`.
    Convolution(LagFn),
}

impl fmt::Debug for KernelEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Smooth(_) => write!(f, "Smooth(..)"),
            Self::Power { c, alpha, decay } => write!(f, "Power(c={c}, alpha={alpha}, decay={decay})"),
            Self::Convolution(_) => write!(f, "Convolution(..)"),
        }
    }
}

impl KernelEntry {
    pub fn smooth<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::Smooth(Arc::new(f))
    }

    pub fn convolution<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::Convolution(Arc::new(f))
    }

    pub fn power(c: f64, alpha: f64) -> Result<Self, KernelError> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(KernelError::Exponent(alpha));
        }
        Ok(Self::Power { c, alpha, decay: 0.0 })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn hint(&self) -> SingularityHint {
        match *self {
            Self::Power { alpha, .. } => SingularityHint::endpoint_power(alpha),
            _ => SingularityHint::Smooth,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.hint(), SingularityHint::EndpointPower { .. })
    }

    /// Value at `(t, s)`; `lag = t - s` is passed separately so callers can
    /// supply it without cancellation.
    #[inline]
    pub fn value(&self, t: f64, s: f64, lag: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Smooth(f) => f(t, s),
            Self::Power { c, alpha, decay } => {
                let mut v = c * lag.powf(-alpha);
                if *decay != 0.0 {
                    v *= (-decay * lag).exp();
                }
                v
            }
            Self::Convolution(f) => f(lag),
        }
    }

    /// The entry multiplied by `e^{-rate (t - s)}`.
    pub fn damped(&self, rate: f64) -> Self {
        if rate == 0.0 {
            return self.clone();
        }
        match self {
            Self::Zero => Self::Zero,
            Self::Smooth(f) => {
                let f = f.clone();
                Self::Smooth(Arc::new(move |t, s| f(t, s) * (-rate * (t - s)).exp()))
            }
            Self::Power { c, alpha, decay } => Self::Power {
                c: *c,
                alpha: *alpha,
                decay: decay + rate,
            },
            Self::Convolution(f) => {
                let f = f.clone();
                Self::Convolution(Arc::new(move |lag| f(lag) * (-rate * lag).exp()))
            }
        }
    }
}

/// An `n × n` kernel stored row-major.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    n: usize,
    entries: Vec<KernelEntry>,
    name: String,
}

impl KernelSpec {
    pub fn new(n: usize, entries: Vec<KernelEntry>, name: impl Into<String>) -> Result<Self, KernelError> {
        if entries.len() != n * n {
            return Err(KernelError::Shape {
                expected: n * n,
                got: entries.len(),
            });
        }
        for e in &entries {
            if let KernelEntry::Power { alpha, .. } = e {
                if !(0.0..1.0).contains(alpha) {
                    return Err(KernelError::Exponent(*alpha));
                }
            }
        }
        Ok(Self {
            n,
            entries,
            name: name.into(),
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            entries: vec![KernelEntry::Zero; n * n],
            name: "zero".into(),
        }
    }

    /// `entry` on the diagonal of an `n × n` kernel.
    pub fn diagonal(n: usize, entry: KernelEntry, name: impl Into<String>) -> Self {
        let mut entries = vec![KernelEntry::Zero; n * n];
        for a in 0..n {
            entries[a * n + a] = entry.clone();
        }
        Self {
            n,
            entries,
            name: name.into(),
        }
    }

    pub fn scalar_const(c: f64) -> Self {
        Self::diagonal(1, KernelEntry::convolution(move |_| c), format!("scalar_const({c})"))
    }

    pub fn scalar_power(c: f64, alpha: f64) -> Result<Self, KernelError> {
        Ok(Self::diagonal(1, KernelEntry::power(c, alpha)?, format!("scalar_power({c},{alpha})")))
    }

    /// `K(t, s) = ((t - s, s), (t, (t - s)^2))`.
    pub fn example1() -> Self {
        Self {
            n: 2,
            entries: vec![
                KernelEntry::convolution(|lag| lag),
                KernelEntry::smooth(|_, s| s),
                KernelEntry::smooth(|t, _| t),
                KernelEntry::convolution(|lag| lag * lag),
            ],
            name: "example1".into(),
        }
    }

    /// `K(t, s) = diag((t - s)^{-3/4}, (t - s)^{-1/2})`.
    pub fn example2_3() -> Self {
        Self {
            n: 2,
            entries: vec![
                KernelEntry::Power { c: 1.0, alpha: 0.75, decay: 0.0 },
                KernelEntry::Zero,
                KernelEntry::Zero,
                KernelEntry::Power { c: 1.0, alpha: 0.5, decay: 0.0 },
            ],
            name: "example2_3".into(),
        }
    }

    /// Parses one of `example1`, `example2_3`, `zero`, `scalar_const(c)`,
    /// `scalar_power(c, alpha)`. Scalar kernels act diagonally when `n > 1`.
    pub fn parse(spec: &str, n: usize) -> Result<Self, KernelError> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let args = |prefix: &str| -> Option<Vec<f64>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            inner.split(',').map(|x| x.parse().ok()).collect()
        };
        let fixed = |k: Self| {
            if k.n == n {
                Ok(k)
            } else {
                Err(KernelError::Shape {
                    expected: n * n,
                    got: k.n * k.n,
                })
            }
        };
        match s.as_str() {
            "example1" => return fixed(Self::example1()),
            "example2_3" | "example2" | "example3" => return fixed(Self::example2_3()),
            "zero" => return Ok(Self::zero(n)),
            _ => {}
        }
        if let Some(v) = args("scalar_const") {
            if let [c] = v[..] {
                return Ok(Self::diagonal(n, KernelEntry::convolution(move |_| c), s.clone()));
            }
        }
        if let Some(v) = args("scalar_power") {
            if let [c, alpha] = v[..] {
                return Ok(Self::diagonal(n, KernelEntry::power(c, alpha)?, s.clone()));
            }
        }
        Err(KernelError::Unknown(spec.to_string()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entry(&self, a: usize, b: usize) -> &KernelEntry {
        &self.entries[a * self.n + b]
    }

    /// Nonzero entries as `(a, b, entry)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, &KernelEntry)> {
        let n = self.n;
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(move |(i, e)| (i / n, i % n, e))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(KernelEntry::is_zero)
    }

    pub fn is_singular(&self) -> bool {
        self.entries.iter().any(KernelEntry::is_singular)
    }

    /// Entry-wise evaluation, row-major.
    pub fn eval(&self, t: f64, s: f64) -> Result<Vec<f64>, KernelError> {
        if s > t || (s == t && self.is_singular()) {
            return Err(KernelError::Domain { t, s });
        }
        Ok(self.entries.iter().map(|e| e.value(t, s, t - s)).collect())
    }

    /// `e^{-rate (t - s)} K(t, s)`.
    pub fn damped(&self, rate: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|e| e.damped(rate)).collect(),
            name: if rate == 0.0 {
                self.name.clone()
            } else {
                format!("{}*exp(-{rate}(t-s))", self.name)
            },
        }
    }

    /// Nonzero entries grouped by singularity exponent, so entries sharing a
    /// change of variables can be integrated in a single adaptive pass.
    fn groups(&self) -> Vec<(SingularityHint, Vec<(usize, usize, &KernelEntry)>)> {
        let mut map: BTreeMap<u64, Vec<(usize, usize, &KernelEntry)>> = BTreeMap::new();
        for (a, b, e) in self.nonzero() {
            map.entry(e.hint().alpha().to_bits()).or_default().push((a, b, e));
        }
        map.into_iter()
            .map(|(bits, v)| {
                let alpha = f64::from_bits(bits);
                (SingularityHint::endpoint_power(alpha), v)
            })
            .collect()
    }
}

/// Output of a kernel integral: the estimate and whether every adaptive
/// integration met its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelIntegral {
    pub value: Vec<f64>,
    pub converged: bool,
}

/// `∫_0^t K(t, s) f(s) ds` for `f: [0, t] -> R^n`.
pub fn apply_tk<F>(kernel: &KernelSpec, f: F, t: f64, tol: f64) -> KernelIntegral
where
    F: FnMut(f64, &mut [f64]),
{
    apply_tk_field(kernel, 1, f, t, tol)
}

/// Like [`apply_tk`] for a field sampled at `width` points per component:
/// `f(s, out)` fills `out[b * width + p]`, and so does the result.
pub fn apply_tk_field<F>(kernel: &KernelSpec, width: usize, mut f: F, t: f64, tol: f64) -> KernelIntegral
where
    F: FnMut(f64, &mut [f64]),
{
    let n = kernel.n();
    let mut value = vec![0.0; n * width];
    let mut converged = true;
    if t <= 0.0 {
        return KernelIntegral { value, converged };
    }
    let mut fbuf = vec![0.0; n * width];
    for (hint, group) in kernel.groups() {
        let r = adaptive_integrate(
            group.len() * width,
            |x: Abscissa, out: &mut [f64]| {
                f(x.s, &mut fbuf);
                for (g, &(_, b, e)) in group.iter().enumerate() {
                    let k = e.value(t, x.s, x.gap);
                    let src = &fbuf[b * width..(b + 1) * width];
                    for (o, &v) in out[g * width..(g + 1) * width].iter_mut().zip(src) {
                        *o = k * v;
                    }
                }
            },
            0.0,
            t,
            tol,
            hint,
        );
        converged &= r.converged;
        for (g, &(a, _, _)) in group.iter().enumerate() {
            for p in 0..width {
                value[a * width + p] += r.value[g * width + p];
            }
        }
    }
    KernelIntegral { value, converged }
}

/// How the memory integrals `J_n` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentQuadrature {
    /// Gauss–Legendre with a fixed number of points.
    Fixed { points: usize },
    Adaptive { tol: f64 },
}

/// Moments of one source interval against its temporal Lagrange basis:
/// returns `G_j = ∫_{start}^{min(target, end)} K(target, s) φ_j(s) ds` for
/// each basis function `φ_j`, laid out as `[j][a][b]`.
pub fn history_moments(
    kernel: &KernelSpec,
    basis: &LagrangeBasis,
    start: f64,
    end: f64,
    target: f64,
    quad: MomentQuadrature,
) -> KernelIntegral {
    let n = kernel.n();
    let nb = basis.len();
    let mut value = vec![0.0; nb * n * n];
    let upper = target.min(end);
    if upper <= start || kernel.is_zero() {
        return KernelIntegral { value, converged: true };
    }
    // distance from the upper limit to the target time
    let offset = if target > end { target - end } else { 0.0 };
    let mut phi = vec![0.0; nb];
    match quad {
        MomentQuadrature::Fixed { points } => {
            let gl = gauss_legendre(points.max(1));
            for (s, w) in gl.mapped(start, upper) {
                basis.values(s, &mut phi);
                let lag = offset + (upper - s);
                for (a, b, e) in kernel.nonzero() {
                    let k = w * e.value(target, s, lag);
                    for j in 0..nb {
                        value[(j * n + a) * n + b] += k * phi[j];
                    }
                }
            }
            KernelIntegral { value, converged: true }
        }
        MomentQuadrature::Adaptive { tol } => {
            let mut converged = true;
            for (hint, group) in kernel.groups() {
                let hint = if offset > 0.0 { SingularityHint::Smooth } else { hint };
                let r = adaptive_integrate(
                    group.len() * nb,
                    |x: Abscissa, out: &mut [f64]| {
                        basis.values(x.s, &mut phi);
                        let lag = offset + x.gap;
                        for (g, &(_, _, e)) in group.iter().enumerate() {
                            let k = e.value(target, x.s, lag);
                            for j in 0..nb {
                                out[g * nb + j] = k * phi[j];
                            }
                        }
                    },
                    start,
                    upper,
                    tol,
                    hint,
                );
                converged &= r.converged;
                for (g, &(a, b, _)) in group.iter().enumerate() {
                    for j in 0..nb {
                        value[(j * n + a) * n + b] += r.value[g * nb + j];
                    }
                }
            }
            KernelIntegral { value, converged }
        }
    }
}

/// Reduction of per-entry scalar norms to one number for an `n × n` kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormReduction {
    /// Largest entry norm.
    EntryMax,
    /// `n` times the largest entry norm; bounds the induced operator norm.
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Uniform sampling points for the sup in `t` (and in `s`).
    pub grid: usize,
    pub tol: f64,
    pub reduction: NormReduction,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            grid: 512,
            tol: 1e-10,
            reduction: NormReduction::EntryMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    /// sup over t of `∫_0^t |K(t,s)| e^{-ρ(t-s)} ds`
    pub sup_t: f64,
    /// sup over s of the second (continuous or quadrature) term
    pub sup_s: f64,
    pub converged: bool,
}

fn uniform_grid(t_end: f64, n: usize, extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n.max(2))
        .map(|i| t_end * i as f64 / (n.max(2) - 1) as f64)
        .collect();
    g.extend_from_slice(extra);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn reduce(kernel: &KernelSpec, per_entry: &[(f64, f64)], red: NormReduction, converged: bool) -> NormEstimate {
    let sup_t = per_entry.iter().map(|e| e.0).fold(0.0, f64::max);
    let sup_s = per_entry.iter().map(|e| e.1).fold(0.0, f64::max);
    let scale = match red {
        NormReduction::EntryMax => 1.0,
        NormReduction::Conservative => kernel.n() as f64,
    };
    NormEstimate {
        value: scale * sup_t.max(sup_s),
        sup_t: scale * sup_t,
        sup_s: scale * sup_s,
        converged,
    }
}

/// sup over `t_grid` of `∫_0^t |K_e(t,s)| e^{-ρ(t-s)} ds` for one entry.
fn sup_first_term(e: &KernelEntry, rho: f64, t_grid: &[f64], tol: f64) -> (f64, bool) {
    let mut best = 0.0f64;
    let mut ok = true;
    for &t in t_grid {
        if t <= 0.0 {
            continue;
        }
        let r = adaptive_integrate(
            1,
            |x: Abscissa, out: &mut [f64]| out[0] = e.value(t, x.s, x.gap).abs() * (-rho * x.gap).exp(),
            0.0,
            t,
            tol,
            e.hint(),
        );
        ok &= r.converged;
        best = best.max(r.value[0]);
    }
    (best, ok)
}

/// Estimate of `‖K‖_{1,ρ,unif}` restricted to `[0, T]`.
///
/// Both ess-sups are replaced by maxima over a uniform grid, so the result
/// is a lower bound of the true norm.
pub fn norm_continuous(kernel: &KernelSpec, rho: f64, t_end: f64, opts: &NormOptions) -> NormEstimate {
    let grid = uniform_grid(t_end, opts.grid, &[]);
    let mut converged = true;
    let mut per_entry = Vec::new();
    for (_, _, e) in kernel.nonzero() {
        let (first, ok) = sup_first_term(e, rho, &grid, opts.tol);
        converged &= ok;
        let mut second = 0.0f64;
        for &s in &grid {
            let len = t_end - s;
            if len <= 0.0 {
                continue;
            }
            // integrate over t in (s, T]; the singular end t = s is mapped to
            // the upper limit of the reflected variable, so lag = gap.
            let r = adaptive_integrate(
                1,
                |x: Abscissa, out: &mut [f64]| {
                    out[0] = e.value(s + x.gap, s, x.gap).abs() * (-rho * x.gap).exp()
                },
                0.0,
                len,
                opts.tol,
                e.hint(),
            );
            converged &= r.converged;
            second = second.max(r.value[0]);
        }
        per_entry.push((first, second));
    }
    reduce(kernel, &per_entry, opts.reduction, converged)
}

/// Estimate of the semi-discrete norm `‖K‖_{Q,1,ρ,unif}` on `mesh`, whose
/// second term replaces the `t`-integral by the weighted Radau quadrature.
///
/// For weakly singular entries the quadrature sum is unbounded as `s`
/// approaches a quadrature node from below, so its ess-sup is infinite and
/// any sampled maximum only reflects how close samples fall to nodes. For
/// those entries the second term is sampled at the mesh points
/// `t_0, ..., t_{M-1}` only, where the node at `s` itself is skipped and the
/// sum is a proper quadrature of the continuous integral.
pub fn norm_discrete(kernel: &KernelSpec, mesh: &TimeMesh, opts: &NormOptions) -> NormEstimate {
    let rho = mesh.rho();
    let t_grid = uniform_grid(mesh.t_end(), opts.grid, mesh.points());
    let mesh_grid = &mesh.points()[..mesh.len()];
    let mut converged = true;
    let mut per_entry = Vec::new();
    for (_, _, e) in kernel.nonzero() {
        let (first, ok) = sup_first_term(e, rho, &t_grid, opts.tol);
        converged &= ok;
        let singular = e.is_singular();
        let s_grid: &[f64] = if singular { mesh_grid } else { &t_grid };
        let mut second = 0.0f64;
        for &s in s_grid {
            let mut sum = 0.0;
            for m in 0..mesh.len() {
                let rule = mesh.rule(m);
                if rule.end < s {
                    continue;
                }
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    if t < s || (singular && t == s) {
                        continue;
                    }
                    let lag = t - s;
                    let expo = -2.0 * rho * rule.start + rho * (t + s);
                    sum += w * expo.exp() * e.value(t, s, lag).abs();
                }
            }
            second = second.max(sum);
        }
        per_entry.push((first, second));
    }
    reduce(kernel, &per_entry, opts.reduction, converged)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelNormReport {
    pub rho: f64,
    pub continuous_norm: f64,
    pub discrete_norm: f64,
    /// Sample count of the quadrature-sum term (mesh points for singular kernels).
    pub s_grid_size: usize,
    pub t_grid_size: usize,
    pub gamma: f64,
    /// `discrete_norm <= gamma / 2`
    pub satisfied: bool,
    pub converged: bool,
}

pub fn kernel_norm_report(kernel: &KernelSpec, mesh: &TimeMesh, gamma: f64, opts: &NormOptions) -> KernelNormReport {
    let c = norm_continuous(kernel, mesh.rho(), mesh.t_end(), opts);
    let d = norm_discrete(kernel, mesh, opts);
    let grid = uniform_grid(mesh.t_end(), opts.grid, mesh.points()).len();
    KernelNormReport {
        rho: mesh.rho(),
        continuous_norm: c.value,
        discrete_norm: d.value,
        s_grid_size: if kernel.is_singular() { mesh.len() } else { grid },
        t_grid_size: grid,
        gamma,
        satisfied: d.value <= 0.5 * gamma,
        converged: c.converged && d.converged,
    }
}

/// First `ρ` in `candidates` (ascending) for which the discrete kernel norm
/// on a uniform `(T, M, q)` mesh satisfies `‖K‖_{Q} <= γ/2`.
pub fn rho_threshold(
    kernel: &KernelSpec,
    gamma: f64,
    t_end: f64,
    intervals: usize,
    q: usize,
    candidates: &[f64],
    opts: &NormOptions,
) -> Result<Option<f64>, crate::dg::DgError> {
    for &rho in candidates {
        let mesh = TimeMesh::uniform(t_end, intervals, rho, q)?;
        if norm_discrete(kernel, &mesh, opts).value <= 0.5 * gamma {
            return Ok(Some(rho));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn example_kernels_evaluate() {
        let k = KernelSpec::example1().eval(2.0, 1.0).unwrap();
        assert_eq!(k, vec![1.0, 1.0, 2.0, 1.0]);
        assert_eq!(KernelSpec::zero(2).eval(1.0, 0.5).unwrap(), vec![0.0; 4]);
        let k = KernelSpec::example2_3().eval(1.0, 0.75).unwrap();
        assert_relative_eq!(k[0], 4f64.powf(0.75), max_relative = 1e-15);
        assert_eq!(k[1], 0.0);
        assert_relative_eq!(k[3], 2.0, max_relative = 1e-15);
        assert!(matches!(
            KernelSpec::example2_3().eval(1.0, 1.0),
            Err(KernelError::Domain { .. })
        ));
    }

    #[test]
    fn parse_builtins() {
        assert_eq!(KernelSpec::parse("example1", 2).unwrap().n(), 2);
        assert!(KernelSpec::parse("example1", 1).is_err());
        let k = KernelSpec::parse("scalar_power(2, 0.5)", 1).unwrap();
        assert_relative_eq!(k.eval(1.0, 0.75).unwrap()[0], 4.0);
        let k = KernelSpec::parse("scalar_const(3)", 2).unwrap();
        assert_eq!(k.eval(1.0, 0.0).unwrap(), vec![3.0, 0.0, 0.0, 3.0]);
        assert!(KernelSpec::parse("scalar_power(1, 1.0)", 1).is_err());
        assert!(KernelSpec::parse("bogus", 1).is_err());
    }

    #[test]
    fn apply_examples() {
        let r = apply_tk(&KernelSpec::scalar_const(1.0), |_, o| o[0] = 1.0, 3.0, 1e-12);
        assert_abs_diff_eq!(r.value[0], 3.0, epsilon = 1e-12);
        let r = apply_tk(&KernelSpec::scalar_power(1.0, 0.5).unwrap(), |_, o| o[0] = 1.0, 1.0, 1e-12);
        assert!(r.converged);
        assert_abs_diff_eq!(r.value[0], 2.0, epsilon = 1e-12);
        let r = apply_tk(
            &KernelSpec::example1(),
            |_, o| {
                o[0] = 1.0;
                o[1] = 0.0
            },
            1.0,
            1e-12,
        );
        assert_abs_diff_eq!(r.value[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn apply_is_causal() {
        let f = |s: f64, o: &mut [f64]| {
            o[0] = if s > 0.6 { (s - 0.6).powi(2) } else { 0.0 };
            o[1] = o[0];
        };
        for t in [0.1, 0.3, 0.6] {
            let r = apply_tk(&KernelSpec::example2_3(), f, t, 1e-12);
            assert_eq!(r.value, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn moment_examples() {
        let one = LagrangeBasis::new(&[1.0]);
        let k = KernelSpec::scalar_const(1.0);
        let fixed = MomentQuadrature::Fixed { points: 1 };
        assert_abs_diff_eq!(history_moments(&k, &one, 0.0, 1.0, 2.0, fixed).value[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(history_moments(&k, &one, 0.0, 1.0, 0.5, fixed).value[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn singular_moments_against_oracle() {
        // basis on nodes {1/3, 1}: φ_0 = (3/2)(1 - s), φ_1 = (3s - 1)/2
        let basis = LagrangeBasis::new(&[1.0 / 3.0, 1.0]);
        let k = KernelSpec::scalar_power(1.0, 0.5).unwrap();
        let g = history_moments(&k, &basis, 0.0, 1.0, 1.0, MomentQuadrature::Adaptive { tol: 1e-13 });
        assert!(g.converged);
        // closed forms: ∫(1-s)^{1/2} = 2/3, ∫(1-s)^{-1/2} s = 4/3
        let oracle0 = 1.5 * (2.0 / 3.0);
        let oracle1 = 0.5 * (3.0 * 4.0 / 3.0 - 2.0);
        assert_abs_diff_eq!(g.value[0], oracle0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.value[1], oracle1, epsilon = 1e-12);
    }

    #[test]
    fn fixed_and_adaptive_agree_for_polynomial_kernels() {
        let basis = LagrangeBasis::new(&[0.2, 0.45, 0.5]);
        let k = KernelSpec::example1();
        let f = history_moments(&k, &basis, 0.25, 0.5, 0.8, MomentQuadrature::Fixed { points: 4 });
        let a = history_moments(&k, &basis, 0.25, 0.5, 0.8, MomentQuadrature::Adaptive { tol: 1e-14 });
        for (x, y) in f.value.iter().zip(&a.value) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn continuous_norm_examples() {
        let opts = NormOptions::default();
        let n = norm_continuous(&KernelSpec::scalar_const(1.0), 1.0, 2.0, &opts);
        assert_relative_eq!(n.value, 1.0 - (-2f64).exp(), max_relative = 1e-9);
        assert_eq!(norm_continuous(&KernelSpec::zero(2), 1.0, 2.0, &opts).value, 0.0);
        let n = norm_continuous(&KernelSpec::example1(), 4.0, 2.0, &opts);
        assert!(n.value <= 0.5, "{}", n.value);
        let c = norm_continuous(
            &KernelSpec::example1(),
            4.0,
            2.0,
            &NormOptions {
                reduction: NormReduction::Conservative,
                ..opts
            },
        );
        assert_relative_eq!(c.value, 2.0 * n.value, max_relative = 1e-12);
    }

    #[test]
    fn discrete_norm_examples() {
        let opts = NormOptions::default();
        let mesh = TimeMesh::uniform(2.0, 8, 0.0, 1).unwrap();
        assert_eq!(norm_discrete(&KernelSpec::zero(1), &mesh, &opts).value, 0.0);
        let n = norm_discrete(&KernelSpec::scalar_const(1.0), &mesh, &opts);
        assert_relative_eq!(n.sup_s, 2.0, max_relative = 1e-13);
        assert_relative_eq!(n.value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn threshold_examples() {
        let opts = NormOptions { grid: 64, ..Default::default() };
        let cands = [1.0, 2.0, 3.0];
        assert_eq!(rho_threshold(&KernelSpec::zero(1), 1.0, 2.0, 4, 0, &cands, &opts).unwrap(), Some(1.0));
        assert_eq!(
            rho_threshold(&KernelSpec::scalar_const(1e6), 1.0, 2.0, 4, 0, &cands, &opts).unwrap(),
            None
        );
    }
}
