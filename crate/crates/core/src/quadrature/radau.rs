//! Right-sided Gauss–Radau rules for the weight `e^{-a(s+1)}` on `(-1, 1]`.
//!
//! Mapped onto `I_m = (t_{m-1}, t_m]` with `a = ρ τ_m`, such a rule integrates
//! `p(t) e^{-2ρ(t - t_{m-1})}` exactly for every polynomial `p` of degree `2q`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, SymmetricEigen};

use super::gauss::gauss_legendre;
use super::QuadratureError;

/// Largest weight decay we try to resolve; beyond it the weight lives on a
/// layer of width `1/a` that double precision cannot describe reliably.
const MAX_DECAY: f64 = 1.0e5;

#[derive(Debug, Clone, PartialEq)]
pub struct RadauRule {
    pub q: usize,
    pub a: f64,
    pub ref_nodes: Vec<f64>,
    pub ref_weights: Vec<f64>,
}

impl RadauRule {
    pub fn len(&self) -> usize {
        self.ref_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ref_nodes.is_empty()
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.ref_nodes
            .iter()
            .zip(&self.ref_weights)
            .map(|(&s, &w)| w * f(s))
            .sum()
    }
}

/// `∫_{-1}^{1} s^j e^{-a(s+1)} ds`.
pub fn weighted_moments(j: usize, a: f64) -> f64 {
    weighted_moment_table(j, a)[j]
}

/// Moments `μ_0, ..., μ_jmax` of the weight `e^{-a(s+1)}` on `(-1, 1)`.
///
/// Integration by parts gives `a μ_j = j μ_{j-1} + (-1)^j - e^{-2a}`. The
/// forward direction is stable while `j ≤ a`; above that the recurrence is
/// run backwards from a far-away start value, where the start error is
/// damped by `∏ a/j`.
pub fn weighted_moment_table(jmax: usize, a: f64) -> Vec<f64> {
    assert!(a >= 0.0 && a.is_finite(), "weight decay must be finite and >= 0");
    if a == 0.0 {
        return (0..=jmax)
            .map(|j| if j % 2 == 0 { 2.0 / (j as f64 + 1.0) } else { 0.0 })
            .collect();
    }
    let e = (-2.0 * a).exp();
    // (-1)^j - e^{-2a}, computed without cancellation for even j.
    let boundary = |j: usize| if j % 2 == 0 { -(-2.0 * a).exp_m1() } else { -1.0 - e };
    let mut mu = vec![0.0; jmax + 1];
    mu[0] = -(-2.0 * a).exp_m1() / a;
    let split = (a.floor() as usize).min(jmax);
    for j in 1..=split {
        mu[j] = (j as f64 * mu[j - 1] + boundary(j)) / a;
    }
    if split < jmax {
        let start = jmax.max((2.0 * a).ceil() as usize) + 64;
        let mut m = 0.0;
        for j in (split + 2..=start).rev() {
            // μ_{j-1} = (a μ_j - boundary(j)) / j
            m = (a * m - boundary(j)) / j as f64;
            if j - 1 <= jmax {
                mu[j - 1] = m;
            }
        }
    }
    mu
}

/// Recurrence coefficients `α_k, β_k` (`k = 0..=n`) of the monic orthogonal
/// polynomials for `e^{-a(s+1)}`, via the Stieltjes procedure on a composite
/// Gauss–Legendre discretisation of the measure.
fn recurrence(n: usize, q: usize, a: f64) -> Result<(Vec<f64>, Vec<f64>), QuadratureError> {
    let (xs, ws) = discretise_weight(a, n);
    let mut alpha = vec![0.0; n + 1];
    let mut beta = vec![0.0; n + 1];
    let mut p_prev = vec![0.0; xs.len()];
    let mut p = vec![1.0; xs.len()];
    let mut norm_prev = 1.0;
    for k in 0..=n {
        let mut norm = 0.0;
        let mut first = 0.0;
        for ((&x, &w), &pk) in xs.iter().zip(&ws).zip(&p) {
            let wp2 = w * pk * pk;
            norm += wp2;
            first += x * wp2;
        }
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(QuadratureError::LostPositivity { q, a, degree: k });
        }
        alpha[k] = first / norm;
        beta[k] = if k == 0 { norm } else { norm / norm_prev };
        if !(beta[k] > 0.0 && beta[k].is_finite()) {
            return Err(QuadratureError::LostPositivity { q, a, degree: k });
        }
        for i in 0..xs.len() {
            let next = (xs[i] - alpha[k]) * p[i] - if k == 0 { 0.0 } else { beta[k] * p_prev[i] };
            p_prev[i] = p[i];
            p[i] = next;
        }
        norm_prev = norm;
    }
    Ok((alpha, beta))
}

/// Composite Gauss–Legendre discretisation of `e^{-a(s+1)} ds` on `[-1, 1]`.
/// Panels are graded towards `s = -1` so that `e^{-a(s+1)}` changes by at
/// most `e^{-4}` across each one.
fn discretise_weight(a: f64, degree: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre(degree + 16);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let max_width = if a > 0.0 { (4.0 / a).min(2.0) } else { 2.0 };
    let mut width = if a > 0.0 { (1.0 / a).min(2.0) } else { 2.0 };
    let mut u = 0.0;
    while u < 2.0 {
        let end = (u + width).min(2.0);
        for (x, w) in gl.mapped(u, end) {
            xs.push(x - 1.0);
            ws.push(w * (-a * x).exp());
        }
        u = end;
        width = (2.0 * width).min(max_width);
    }
    (xs, ws)
}

/// Builds the `(q+1)`-node right-sided Radau rule for the weight
/// `e^{-a(s+1)}`; the last node is exactly `+1`.
pub fn build_radau(q: usize, a: f64) -> Result<RadauRule, QuadratureError> {
    if !(a >= 0.0 && a.is_finite() && a <= MAX_DECAY) {
        return Err(QuadratureError::InvalidParameters { q, a });
    }
    let (alpha, beta) = recurrence(q, q, a)?;
    // Radau modification: the last diagonal entry is chosen so that +1 is
    // an eigenvalue of the Jacobi matrix.
    let (mut p_prev, mut p) = (0.0, 1.0);
    for k in 0..q {
        let next = (1.0 - alpha[k]) * p - if k == 0 { 0.0 } else { beta[k] * p_prev };
        p_prev = p;
        p = next;
    }
    let alpha_q = if q == 0 { 1.0 } else { 1.0 - beta[q] * p_prev / p };
    let n = q + 1;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..q {
        jac[(k, k)] = alpha[k];
        let off = beta[k + 1].sqrt();
        jac[(k, k + 1)] = off;
        jac[(k + 1, k)] = off;
    }
    jac[(q, q)] = alpha_q;
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], beta[0] * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let last = pairs[n - 1].0;
    if (last - 1.0).abs() > 1e-8 || pairs.iter().any(|&(_, w)| !(w > 0.0)) {
        return Err(QuadratureError::LostPositivity { q, a, degree: q });
    }
    pairs[n - 1].0 = 1.0;
    Ok(RadauRule {
        q,
        a,
        ref_nodes: pairs.iter().map(|p| p.0).collect(),
        ref_weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Cached [`build_radau`]; safe for concurrent readers.
pub fn radau_rule(q: usize, a: f64) -> Result<Arc<RadauRule>, QuadratureError> {
    type Cache = RwLock<HashMap<(usize, u64), Arc<RadauRule>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    let key = (q, a.to_bits());
    if let Some(r) = cache.read().expect("radau cache poisoned").get(&key) {
        return Ok(r.clone());
    }
    let rule = Arc::new(build_radau(q, a)?);
    Ok(cache
        .write()
        .expect("radau cache poisoned")
        .entry(key)
        .or_insert(rule)
        .clone())
}

/// A Radau rule transplanted onto `(start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedRule {
    pub start: f64,
    pub end: f64,
    pub rho: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MappedRule {
    pub fn tau(&self) -> f64 {
        self.end - self.start
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

pub fn map_rule(rule: &RadauRule, start: f64, end: f64, rho: f64) -> Result<MappedRule, QuadratureError> {
    if !(end > start) || !start.is_finite() || !end.is_finite() {
        return Err(QuadratureError::InvalidInterval { start, end });
    }
    let tau = end - start;
    let expected = rho * tau;
    if (rule.a - expected).abs() > 1e-12 * expected.abs().max(1.0) {
        return Err(QuadratureError::WeightMismatch {
            rule_a: rule.a,
            expected,
        });
    }
    let half = 0.5 * tau;
    let mut nodes: Vec<f64> = rule.ref_nodes.iter().map(|&s| start + half * (s + 1.0)).collect();
    *nodes.last_mut().expect("rule has at least one node") = end;
    Ok(MappedRule {
        start,
        end,
        rho,
        nodes,
        weights: rule.ref_weights.iter().map(|&w| half * w).collect(),
    })
}
