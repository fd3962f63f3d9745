//! Continuous piecewise-polynomial Lagrange elements on `(0, 1)` and the
//! block matrices of a first-order system with gradient coupling.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::LagrangeBasis;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeError {
    #[error("mesh vertices must increase strictly from 0 to 1")]
    BadMesh,
    #[error("polynomial degree must be at least 1")]
    BadDegree,
    #[error("finite element space has no degrees of freedom")]
    EmptySpace,
    #[error("boundary condition violated: g({x}) = {value}")]
    BoundaryValue { x: f64, value: f64 },
    #[error("point {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("coefficient matrix must be symmetric")]
    NotSymmetric,
    #[error("expected {expected} components, got {got}")]
    Components { expected: usize, got: usize },
    #[error("gradient pair ({u}, {v}) is invalid: {reason}")]
    BadPair { u: usize, v: usize, reason: &'static str },
    #[error("dof vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
}

/// Partition `0 = x_0 < x_1 < ... < x_N = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceMesh1D {
    vertices: Vec<f64>,
}

impl SpaceMesh1D {
    pub fn uniform(cells: usize) -> Result<Self, FeError> {
        if cells == 0 {
            return Err(FeError::BadMesh);
        }
        let mut vertices: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        vertices[cells] = 1.0;
        Ok(Self { vertices })
    }

    pub fn new(vertices: Vec<f64>) -> Result<Self, FeError> {
        let ok = vertices.len() >= 2
            && vertices[0] == 0.0
            && *vertices.last().unwrap() == 1.0
            && vertices.windows(2).all(|w| w[1] > w[0]);
        if ok {
            Ok(Self { vertices })
        } else {
            Err(FeError::BadMesh)
        }
    }

    pub fn cells(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn cell_bounds(&self, c: usize) -> (f64, f64) {
        (self.vertices[c], self.vertices[c + 1])
    }

    /// Largest cell width.
    pub fn h(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Cell containing `x`; interior vertices belong to the cell on their right.
    pub fn locate(&self, x: f64) -> Result<usize, FeError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(FeError::OutOfDomain(x));
        }
        let c = self.vertices.partition_point(|&v| v <= x);
        Ok(c.saturating_sub(1).min(self.cells() - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// No essential condition.
    Natural,
    /// Homogeneous Dirichlet condition at both ends.
    Dirichlet,
}

/// Scalar continuous `P_k` space on a mesh.
///
/// "Positions" number all Lagrange nodes left to right (`N k + 1` of them);
/// dofs are the positions that survive the boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    mesh: SpaceMesh1D,
    k: usize,
    bc: Boundary,
    basis: LagrangeBasis,
}

impl FeSpace {
    pub fn new(mesh: SpaceMesh1D, k: usize, bc: Boundary) -> Result<Self, FeError> {
        if k == 0 {
            return Err(FeError::BadDegree);
        }
        let s = Self {
            mesh,
            k,
            bc,
            basis: LagrangeBasis::equispaced(k),
        };
        if s.ndof() == 0 {
            return Err(FeError::EmptySpace);
        }
        Ok(s)
    }

    pub fn mesh(&self) -> &SpaceMesh1D {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn bc(&self) -> Boundary {
        self.bc
    }

    /// Reference basis on `[0, 1]`.
    pub fn reference_basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn npos(&self) -> usize {
        self.mesh.cells() * self.k + 1
    }

    pub fn ndof(&self) -> usize {
        match self.bc {
            Boundary::Natural => self.npos(),
            Boundary::Dirichlet => self.npos().saturating_sub(2),
        }
    }

    pub fn dof_of_position(&self, p: usize) -> Option<usize> {
        match self.bc {
            Boundary::Natural => Some(p),
            Boundary::Dirichlet if p == 0 || p + 1 >= self.npos() => None,
            Boundary::Dirichlet => Some(p - 1),
        }
    }

    pub fn position_of_dof(&self, d: usize) -> usize {
        match self.bc {
            Boundary::Natural => d,
            Boundary::Dirichlet => d + 1,
        }
    }

    /// `(cell, local node)` of a position; shared vertices report the left cell.
    pub fn cell_of_position(&self, p: usize) -> (usize, usize) {
        if p == 0 {
            return (0, 0);
        }
        let c = (p - 1) / self.k;
        (c, p - c * self.k)
    }

    pub fn position_coordinate(&self, p: usize) -> f64 {
        let (c, l) = self.cell_of_position(p);
        let (a, b) = self.mesh.cell_bounds(c);
        if l == self.k {
            b
        } else {
            a + (b - a) * l as f64 / self.k as f64
        }
    }

    /// Expands dofs to all positions, zero on eliminated boundary nodes.
    pub fn to_positions(&self, dofs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.npos()];
        for (d, &v) in dofs.iter().enumerate() {
            out[self.position_of_dof(d)] = v;
        }
        out
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate<G: FnMut(f64) -> f64>(&self, mut g: G) -> Result<Vec<f64>, FeError> {
        let values: Vec<f64> = (0..self.npos()).map(|p| g(self.position_coordinate(p))).collect();
        if self.bc == Boundary::Dirichlet {
            let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (p, x) in [(0, 0.0), (self.npos() - 1, 1.0)] {
                if values[p].abs() > 1e-12 * scale {
                    return Err(FeError::BoundaryValue { x, value: values[p] });
                }
            }
        }
        Ok((0..self.ndof()).map(|d| values[self.position_of_dof(d)]).collect())
    }

    /// Value of a function given by positional coefficients at reference
    /// coordinate with basis values `phi` in `cell`.
    #[inline]
    pub fn cell_value(&self, positions: &[f64], cell: usize, phi: &[f64]) -> f64 {
        let base = cell * self.k;
        phi.iter().enumerate().map(|(l, v)| v * positions[base + l]).sum()
    }

    pub fn eval(&self, dofs: &[f64], x: f64) -> Result<f64, FeError> {
        if dofs.len() != self.ndof() {
            return Err(FeError::Length {
                expected: self.ndof(),
                got: dofs.len(),
            });
        }
        let c = self.mesh.locate(x)?;
        let (a, b) = self.mesh.cell_bounds(c);
        let phi = self.basis.values_vec((x - a) / (b - a));
        let base = c * self.k;
        Ok(phi
            .iter()
            .enumerate()
            .map(|(l, v)| v * self.dof_of_position(base + l).map_or(0.0, |d| dofs[d]))
            .sum())
    }
}

/// Symmetric-pattern band matrix over positions, half-bandwidth `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionBand {
    npos: usize,
    k: usize,
    data: Vec<f64>,
}

impl PositionBand {
    fn zeros(npos: usize, k: usize) -> Self {
        Self {
            npos,
            k,
            data: vec![0.0; npos * (2 * k + 1)],
        }
    }

    fn add(&mut self, p: usize, r: usize, v: f64) {
        let i = p * (2 * self.k + 1) + (r + self.k - p);
        self.data[i] += v;
    }

    #[inline]
    pub fn get(&self, p: usize, r: usize) -> f64 {
        if p.abs_diff(r) > self.k {
            0.0
        } else {
            self.data[p * (2 * self.k + 1) + (r + self.k - p)]
        }
    }

    /// Columns `r` with a structurally nonzero entry in row `p`.
    pub fn row_range(&self, p: usize) -> std::ops::RangeInclusive<usize> {
        p.saturating_sub(self.k)..=(p + self.k).min(self.npos - 1)
    }

    pub fn half_bandwidth(&self) -> usize {
        self.k
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (p, yp) in y.iter_mut().enumerate() {
            *yp = self.row_range(p).map(|r| self.get(p, r) * x[r]).sum();
        }
    }
}

/// First-order couplings `(A U)_u = ∂x U_v`, `(A U)_v = ∂x U_u`, one per
/// listed pair `(u, v)`; component `u` must carry the Dirichlet condition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpatialOperator {
    pairs: Vec<(usize, usize)>,
}

impl SpatialOperator {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn gradient_pair(u: usize, v: usize) -> Self {
        Self { pairs: vec![(u, v)] }
    }

    pub fn with_pair(mut self, u: usize, v: usize) -> Self {
        self.pairs.push((u, v));
        self
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Writes `A U` given values `u` and x-derivatives `du` of every component.
    pub fn apply_pointwise(&self, du: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(u, v) in &self.pairs {
            out[u] += du[v];
            out[v] += du[u];
        }
    }
}

/// Assembled spatial matrices of an `n`-component system.
///
/// Dofs are ordered component by component. Every component uses the same
/// mesh and degree, so all mass couplings share one positional mass matrix.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    components: Vec<FeSpace>,
    m0: Vec<f64>,
    m1: Vec<f64>,
    operator: SpatialOperator,
    offsets: Vec<usize>,
    mass: PositionBand,
    deriv: PositionBand,
    quad_points: Vec<f64>,
    quad_weights: Vec<f64>,
    quad_phi: Vec<f64>,
}

fn check_symmetric(n: usize, m: &[f64]) -> Result<(), FeError> {
    for a in 0..n {
        for b in 0..a {
            if (m[a * n + b] - m[b * n + a]).abs() > 1e-14 * (m[a * n + b].abs() + m[b * n + a].abs()).max(1e-300) {
                return Err(FeError::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// Assembles mass, coefficient and skew blocks with `k + 1`-point
/// Gauss–Legendre quadrature per cell.
pub fn assemble_block_system(
    mesh: &SpaceMesh1D,
    k: usize,
    bcs: &[Boundary],
    m0: &[f64],
    m1: &[f64],
    operator: &SpatialOperator,
) -> Result<BlockSystem, FeError> {
    let n = bcs.len();
    for m in [m0, m1] {
        if m.len() != n * n {
            return Err(FeError::Components {
                expected: n * n,
                got: m.len(),
            });
        }
    }
    check_symmetric(n, m0)?;
    for &(u, v) in operator.pairs() {
        if u >= n || v >= n || u == v {
            return Err(FeError::BadPair {
                u,
                v,
                reason: "components out of range or equal",
            });
        }
        if bcs[u] != Boundary::Dirichlet {
            return Err(FeError::BadPair {
                u,
                v,
                reason: "first component needs a Dirichlet condition",
            });
        }
    }
    let components = bcs
        .iter()
        .map(|&bc| FeSpace::new(mesh.clone(), k, bc))
        .collect::<Result<Vec<_>, _>>()?;
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for c in &components {
        offsets.push(offsets.last().unwrap() + c.ndof());
    }

    let npos = mesh.cells() * k + 1;
    let basis = LagrangeBasis::equispaced(k);
    let gl = gauss_legendre(k + 1);
    let mut mass = PositionBand::zeros(npos, k);
    let mut deriv = PositionBand::zeros(npos, k);
    let mut quad_points = Vec::new();
    let mut quad_weights = Vec::new();
    let mut quad_phi = Vec::new();
    let mut phi = vec![0.0; k + 1];
    let mut dphi = vec![0.0; k + 1];
    for &xi in &gl.nodes {
        basis.values(0.5 * (xi + 1.0), &mut phi);
        quad_phi.extend_from_slice(&phi);
    }
    for c in 0..mesh.cells() {
        let (a, b) = mesh.cell_bounds(c);
        let h = b - a;
        for (&xi, &wi) in gl.nodes.iter().zip(&gl.weights) {
            let ref_x = 0.5 * (xi + 1.0);
            let w = 0.5 * wi * h;
            basis.values(ref_x, &mut phi);
            basis.derivatives(ref_x, &mut dphi);
            quad_points.push(a + h * ref_x);
            quad_weights.push(w);
            for l in 0..=k {
                for r in 0..=k {
                    mass.add(c * k + l, c * k + r, w * phi[l] * phi[r]);
                    deriv.add(c * k + l, c * k + r, w * phi[l] * dphi[r] / h);
                }
            }
        }
    }
    Ok(BlockSystem {
        components,
        m0: m0.to_vec(),
        m1: m1.to_vec(),
        operator: operator.clone(),
        offsets,
        mass,
        deriv,
        quad_points,
        quad_weights,
        quad_phi,
    })
}

impl BlockSystem {
    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn ndof(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn npos(&self) -> usize {
        self.mass.npos
    }

    pub fn degree(&self) -> usize {
        self.components[0].degree()
    }

    pub fn mesh(&self) -> &SpaceMesh1D {
        self.components[0].mesh()
    }

    pub fn component(&self, a: usize) -> &FeSpace {
        &self.components[a]
    }

    pub fn offset(&self, a: usize) -> usize {
        self.offsets[a]
    }

    pub fn m0(&self) -> &[f64] {
        &self.m0
    }

    pub fn m1(&self) -> &[f64] {
        &self.m1
    }

    pub fn operator(&self) -> &SpatialOperator {
        &self.operator
    }

    /// Scalar positional mass matrix `∫ φ_p φ_r`.
    pub fn mass(&self) -> &PositionBand {
        &self.mass
    }

    /// Positional derivative coupling `∫ φ_p φ_r'`.
    pub fn derivative_coupling(&self) -> &PositionBand {
        &self.deriv
    }

    /// Global dof index of component `a` at position `p`, if free.
    #[inline]
    pub fn dof(&self, a: usize, p: usize) -> Option<usize> {
        self.components[a].dof_of_position(p).map(|d| self.offsets[a] + d)
    }

    /// Entry of the skew operator between `(a, p)` (test) and `(b, r)` (trial),
    /// before boundary elimination.
    #[inline]
    pub fn skew_entry(&self, a: usize, p: usize, b: usize, r: usize) -> f64 {
        let mut v = 0.0;
        for &(u, w) in self.operator.pairs() {
            if a == u && b == w {
                v += self.deriv.get(p, r);
            }
            if a == w && b == u {
                v -= self.deriv.get(r, p);
            }
        }
        v
    }

    /// Dense `coef ⊗ mass` restricted to free dofs.
    pub fn coupled_mass_dense(&self, coef: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(self.ndof(), self.ndof());
        for a in 0..n {
            for b in 0..n {
                let c = coef[a * n + b];
                if c == 0.0 {
                    continue;
                }
                for p in 0..self.npos() {
                    let Some(i) = self.dof(a, p) else { continue };
                    for r in self.mass.row_range(p) {
                        if let Some(j) = self.dof(b, r) {
                            m[(i, j)] += c * self.mass.get(p, r);
                        }
                    }
                }
            }
        }
        m
    }

    pub fn m0h_dense(&self) -> DMatrix<f64> {
        self.coupled_mass_dense(&self.m0)
    }

    pub fn m1h_dense(&self) -> DMatrix<f64> {
        self.coupled_mass_dense(&self.m1)
    }

    pub fn ah_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(self.ndof(), self.ndof());
        for a in 0..n {
            for b in 0..n {
                for p in 0..self.npos() {
                    let Some(i) = self.dof(a, p) else { continue };
                    for r in self.mass.row_range(p) {
                        if let Some(j) = self.dof(b, r) {
                            m[(i, j)] += self.skew_entry(a, p, b, r);
                        }
                    }
                }
            }
        }
        m
    }

    /// Positional expansion: `n` blocks of `npos` values.
    pub fn to_positions(&self, dofs: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() * self.npos());
        for (a, c) in self.components.iter().enumerate() {
            out.extend(c.to_positions(&dofs[self.offsets[a]..self.offsets[a + 1]]));
        }
        out
    }

    /// `y_a = Σ_b coef_ab · mass · x_b`, in dof space.
    pub fn apply_coupled_mass(&self, coef: &[f64], dofs: &[f64]) -> Vec<f64> {
        let n = self.n();
        let np = self.npos();
        let pos = self.to_positions(dofs);
        let mut mixed = vec![0.0; np];
        let mut tmp = vec![0.0; np];
        let mut out = vec![0.0; self.ndof()];
        for a in 0..n {
            mixed.iter_mut().for_each(|v| *v = 0.0);
            for b in 0..n {
                let c = coef[a * n + b];
                if c != 0.0 {
                    for (m, x) in mixed.iter_mut().zip(&pos[b * np..(b + 1) * np]) {
                        *m += c * x;
                    }
                }
            }
            self.mass.mul(&mixed, &mut tmp);
            for p in 0..np {
                if let Some(i) = self.dof(a, p) {
                    out[i] = tmp[p];
                }
            }
        }
        out
    }

    /// `xᵀ M0h x`.
    pub fn m0_energy(&self, dofs: &[f64]) -> f64 {
        let y = self.apply_coupled_mass(&self.m0, dofs);
        y.iter().zip(dofs).map(|(a, b)| a * b).sum()
    }

    /// Spatial quadrature points used for loads (all cells, `k + 1` each).
    pub fn quadrature_points(&self) -> &[f64] {
        &self.quad_points
    }

    /// Load vector `∫ f_a ψ` from samples `f_a(x_g)` laid out `[a][g]`.
    pub fn load_from_samples(&self, samples: &[f64]) -> Vec<f64> {
        let n = self.n();
        let k = self.degree();
        let nq = self.quad_points.len();
        let mut out = vec![0.0; self.ndof()];
        let per_cell = k + 1;
        for a in 0..n {
            let f = &samples[a * nq..(a + 1) * nq];
            for c in 0..self.mesh().cells() {
                for g in 0..per_cell {
                    let idx = c * per_cell + g;
                    let wf = self.quad_weights[idx] * f[idx];
                    if wf == 0.0 {
                        continue;
                    }
                    let phi = &self.quad_phi[g * per_cell..(g + 1) * per_cell];
                    for l in 0..=k {
                        if let Some(i) = self.dof(a, c * k + l) {
                            out[i] += wf * phi[l];
                        }
                    }
                }
            }
        }
        out
    }

    /// Load vector of `f(x, out)` which writes all `n` components.
    pub fn load<F: Fn(f64, &mut [f64])>(&self, f: F) -> Vec<f64> {
        let n = self.n();
        let nq = self.quad_points.len();
        let mut samples = vec![0.0; n * nq];
        let mut buf = vec![0.0; n];
        for (g, &x) in self.quad_points.iter().enumerate() {
            f(x, &mut buf);
            for a in 0..n {
                samples[a * nq + g] = buf[a];
            }
        }
        self.load_from_samples(&samples)
    }

    pub fn interpolate<G: Fn(f64, &mut [f64])>(&self, g: G) -> Result<Vec<f64>, FeError> {
        let n = self.n();
        let mut out = Vec::with_capacity(self.ndof());
        let mut buf = vec![0.0; n];
        for (a, c) in self.components.iter().enumerate() {
            out.extend(c.interpolate(|x| {
                g(x, &mut buf);
                buf[a]
            })?);
        }
        Ok(out)
    }

    pub fn eval(&self, dofs: &[f64], x: f64) -> Result<Vec<f64>, FeError> {
        if dofs.len() != self.ndof() {
            return Err(FeError::Length {
                expected: self.ndof(),
                got: dofs.len(),
            });
        }
        self.components
            .iter()
            .enumerate()
            .map(|(a, c)| c.eval(&dofs[self.offsets[a]..self.offsets[a + 1]], x))
            .collect()
    }
}
