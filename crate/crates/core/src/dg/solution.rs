use std::sync::Arc;

use crate::space_fem::BlockSystem;

use super::{DgError, LagrangeData, Side, SolveDiagnostics, SpaceTimeField, TimeMesh};

/// Piecewise polynomial in time, continuous FE in space.
///
/// `coeffs[m][i]` holds the dof vector at the `i`-th Radau node of interval
/// `m`; the last node is the right interval end. Solutions of the unweighted
/// formulation carry a factor `e^{growth · t}` applied on evaluation.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub(super) mesh: TimeMesh,
    pub(super) system: Arc<BlockSystem>,
    pub(super) lagrange: Vec<LagrangeData>,
    pub(super) coeffs: Vec<Vec<Vec<f64>>>,
    pub(super) x0: Vec<f64>,
    pub(super) growth: f64,
    pub(super) rho: f64,
    pub(super) diagnostics: SolveDiagnostics,
}

impl DiscreteSolution {
    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn system(&self) -> &BlockSystem {
        &self.system
    }

    /// Weight parameter of the norms this solution is measured in.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn coeffs(&self, m: usize) -> &[Vec<f64>] {
        &self.coeffs[m]
    }

    pub fn x0_dofs(&self) -> &[f64] {
        &self.x0
    }

    pub fn diagnostics(&self) -> &SolveDiagnostics {
        &self.diagnostics
    }

    /// Dofs of the polynomial on interval `m` evaluated at `t`.
    pub fn dofs_on_interval(&self, m: usize, t: f64) -> Vec<f64> {
        let phi = self.lagrange[m].basis.values_vec(t);
        let scale = if self.growth == 0.0 { 1.0 } else { (self.growth * t).exp() };
        let mut out = vec![0.0; self.system.ndof()];
        for (c, p) in self.coeffs[m].iter().zip(&phi) {
            let w = scale * p;
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
        out
    }

    /// Dofs at `t`; at mesh points `side` picks the one-sided limit, and
    /// `t = 0` from the left gives the initial state.
    pub fn dofs_at(&self, t: f64, side: Side) -> Result<Vec<f64>, DgError> {
        let m = self.mesh.locate(t).ok_or(DgError::OutOfRange(t))?;
        let (start, end) = self.mesh.interval(m);
        match side {
            Side::Left if t == start => Ok(self.x0.clone()),
            Side::Right if t == end && m + 1 < self.mesh.len() => Ok(self.dofs_on_interval(m + 1, t)),
            _ => Ok(self.dofs_on_interval(m, t)),
        }
    }

    /// `U_h(t, x)` with the left-limit convention at mesh points.
    pub fn eval(&self, t: f64, x: f64) -> Result<Vec<f64>, DgError> {
        let dofs = self.dofs_at(t, Side::Left)?;
        Ok(self.system.eval(&dofs, x)?)
    }

    /// Samples the dof vector at spatial points, output `[a][g]`.
    pub fn sample_dofs(&self, dofs: &[f64], xs: &[f64], out: &mut [f64]) {
        let sys = &*self.system;
        let pos = sys.to_positions(dofs);
        let np = sys.npos();
        let mesh = sys.mesh();
        let basis = sys.component(0).reference_basis();
        let mut phi = vec![0.0; basis.len()];
        for (g, &x) in xs.iter().enumerate() {
            let c = mesh.locate(x.clamp(0.0, 1.0)).expect("clamped point inside mesh");
            let (a, b) = mesh.cell_bounds(c);
            basis.values((x - a) / (b - a), &mut phi);
            for comp in 0..sys.n() {
                out[comp * xs.len() + g] = sys.component(comp).cell_value(&pos[comp * np..(comp + 1) * np], c, &phi);
            }
        }
    }
}

impl SpaceTimeField for DiscreteSolution {
    fn components(&self) -> usize {
        self.system.n()
    }

    fn sample(&self, t: f64, side: Side, xs: &[f64], out: &mut [f64]) {
        let dofs = self
            .dofs_at(t.clamp(0.0, self.mesh.t_end()), side)
            .expect("clamped time inside mesh");
        self.sample_dofs(&dofs, xs, out);
    }
}
