//! Temporal partitions with their weighted Radau rules.

use crate::poly::LagrangeBasis;
use crate::quadrature::{map_rule, radau_rule, MappedRule};

use super::DgError;

/// Partition `0 = t_0 < ... < t_M = T` with one weighted Radau rule of
/// `q + 1` nodes per interval, weight `e^{-2ρ(t - t_{m-1})}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    points: Vec<f64>,
    rho: f64,
    q: usize,
    rules: Vec<MappedRule>,
}

impl TimeMesh {
    pub fn uniform(t_end: f64, intervals: usize, rho: f64, q: usize) -> Result<Self, DgError> {
        if intervals == 0 || !(t_end > 0.0) || !t_end.is_finite() {
            return Err(DgError::Mesh(format!("need T > 0 and M >= 1, got T = {t_end}, M = {intervals}")));
        }
        let mut points: Vec<f64> = (0..=intervals).map(|i| t_end * i as f64 / intervals as f64).collect();
        points[intervals] = t_end;
        Self::build(points, rho, q, Some(t_end / intervals as f64))
    }

    pub fn from_points(points: Vec<f64>, rho: f64, q: usize) -> Result<Self, DgError> {
        Self::build(points, rho, q, None)
    }

    fn build(points: Vec<f64>, rho: f64, q: usize, nominal_tau: Option<f64>) -> Result<Self, DgError> {
        if points.len() < 2 || points[0] != 0.0 || !points.windows(2).all(|w| w[1] > w[0]) {
            return Err(DgError::Mesh("time points must increase strictly from 0".into()));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(DgError::Mesh(format!("weight parameter must be finite and >= 0, got {rho}")));
        }
        let shared = match nominal_tau {
            Some(tau) => Some(radau_rule(q, rho * tau)?),
            None => None,
        };
        let rules = points
            .windows(2)
            .map(|w| {
                let rule = match &shared {
                    Some(r) => r.clone(),
                    None => radau_rule(q, rho * (w[1] - w[0]))?,
                };
                map_rule(&rule, w[0], w[1], rho)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { points, rho, q, rules })
    }

    /// Same points, different degree.
    pub fn with_degree(&self, q: usize) -> Result<Self, DgError> {
        self.rebuild(self.rho, q)
    }

    /// Same points, different weight parameter.
    pub fn with_rho(&self, rho: f64) -> Result<Self, DgError> {
        self.rebuild(rho, self.q)
    }

    /// Same points with a new weight parameter and degree.
    pub fn rebuild(&self, rho: f64, q: usize) -> Result<Self, DgError> {
        let m = self.len();
        let tau = self.t_end() / m as f64;
        let uniform = self.points.iter().enumerate().all(|(i, &t)| t == self.t_end() * i as f64 / m as f64 || i == m);
        Self::build(self.points.clone(), rho, q, uniform.then_some(tau))
    }

    /// Interval count `M`.
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn t_end(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Bounds of interval `m` (zero-based), i.e. `(t_m, t_{m+1}]`.
    pub fn interval(&self, m: usize) -> (f64, f64) {
        (self.points[m], self.points[m + 1])
    }

    pub fn tau(&self, m: usize) -> f64 {
        self.points[m + 1] - self.points[m]
    }

    pub fn max_tau(&self) -> f64 {
        (0..self.len()).map(|m| self.tau(m)).fold(0.0, f64::max)
    }

    pub fn rule(&self, m: usize) -> &MappedRule {
        &self.rules[m]
    }

    pub fn rules(&self) -> &[MappedRule] {
        &self.rules
    }

    /// Interval index with `t` in `(t_m, t_{m+1}]` (left-closed at `t = 0`).
    pub fn locate(&self, t: f64) -> Option<usize> {
        if !(0.0..=self.t_end()).contains(&t) {
            return None;
        }
        let i = self.points.partition_point(|&p| p < t);
        Some(i.saturating_sub(1).min(self.len() - 1))
    }
}

/// Lagrange data of one interval: the basis on the Radau nodes,
/// `D[j][i] = φ_i'(t_j)` and left-end values `ℓ_i = φ_i(t_{m-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeData {
    pub basis: LagrangeBasis,
    /// Row-major `(q+1) × (q+1)`.
    pub diff: Vec<f64>,
    pub left: Vec<f64>,
}

impl LagrangeData {
    pub fn new(rule: &MappedRule) -> Self {
        let basis = LagrangeBasis::new(&rule.nodes);
        let nb = basis.len();
        let mut diff = vec![0.0; nb * nb];
        for (j, &t) in rule.nodes.iter().enumerate() {
            basis.derivatives(t, &mut diff[j * nb..(j + 1) * nb]);
        }
        let left = basis.values_vec(rule.start);
        Self { basis, diff, left }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_mesh_basics() {
        let m = TimeMesh::uniform(2.0, 8, 1.0, 2).unwrap();
        assert_eq!(m.len(), 8);
        assert_eq!(m.t_end(), 2.0);
        assert_eq!(m.rule(3).nodes[2], m.interval(3).1);
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.25), Some(0));
        assert_eq!(m.locate(0.2500001), Some(1));
        assert_eq!(m.locate(2.0), Some(7));
        assert_eq!(m.locate(2.1), None);
        assert!(TimeMesh::uniform(0.0, 8, 1.0, 0).is_err());
        assert!(TimeMesh::from_points(vec![0.0, 0.5, 0.5], 1.0, 0).is_err());
    }

    #[test]
    fn lagrange_data_invariants() {
        for q in 0..=4 {
            let mesh = TimeMesh::from_points(vec![0.0, 0.3, 1.1], 1.5, q).unwrap();
            for m in 0..2 {
                let lag = LagrangeData::new(mesh.rule(m));
                let nb = q + 1;
                for j in 0..nb {
                    let row: f64 = lag.diff[j * nb..(j + 1) * nb].iter().sum();
                    assert_abs_diff_eq!(row, 0.0, epsilon = 1e-12);
                }
                assert_abs_diff_eq!(lag.left.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }
}
