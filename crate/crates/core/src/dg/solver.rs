use std::sync::Arc;

use rayon::prelude::*;

use crate::kernel::{history_moments, kernel_norm_report, KernelIntegral, KernelNormReport, KernelSpec, MomentQuadrature, NormOptions};
use crate::linalg::{BandMatrix, LinalgError};
use crate::quadrature::MappedRule;
use crate::space_fem::{assemble_block_system, BlockSystem, SpaceMesh1D};

use super::problem::manufactured_samples;
use super::{DgError, DiscreteSolution, LagrangeData, Problem, Source, TimeMesh};

/// Quadrature for the memory integrals over each source interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryQuadrature {
    /// Adaptive if any kernel entry is singular, fixed otherwise.
    Auto,
    Fixed,
    Adaptive,
}

/// How a manufactured source samples the memory term `T_K U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceEvaluation {
    /// One vector-valued integration per time node covering every spatial point.
    Field,
    /// A separate integration per time node and spatial point.
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub history: HistoryQuadrature,
    /// Gauss–Legendre points of the fixed rule; `None` means `q + 1`.
    pub fixed_points: Option<usize>,
    pub moment_tol: f64,
    pub source_tol: f64,
    pub source_evaluation: SourceEvaluation,
    /// Solve for `e^{-ρt} U` with an unweighted rule and transform back.
    pub reformulated: bool,
    pub coercivity_check: bool,
    pub norm: NormOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            history: HistoryQuadrature::Auto,
            fixed_points: None,
            moment_tol: 1e-12,
            source_tol: 1e-12,
            source_evaluation: SourceEvaluation::Field,
            reformulated: false,
            coercivity_check: true,
            norm: NormOptions::default(),
        }
    }
}

impl SolverOptions {
    pub fn moment_quadrature(&self, kernel: &KernelSpec, q: usize) -> MomentQuadrature {
        let adaptive = match self.history {
            HistoryQuadrature::Auto => kernel.is_singular(),
            HistoryQuadrature::Fixed => false,
            HistoryQuadrature::Adaptive => true,
        };
        if adaptive {
            MomentQuadrature::Adaptive { tol: self.moment_tol }
        } else {
            MomentQuadrature::Fixed {
                points: self.fixed_points.unwrap_or(q + 1),
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveDiagnostics {
    /// Adaptive integrations (source or memory) that missed their tolerance.
    pub unconverged_integrals: usize,
    /// Largest pivot magnitude ratio over all local factorizations.
    pub max_pivot_ratio: f64,
    pub coercivity: Option<KernelNormReport>,
    pub warnings: Vec<String>,
}

/// Time-component coupling of one local system, before the spatial
/// Kronecker structure is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBlocks {
    pub nodes: usize,
    pub n: usize,
    /// Quadrature weights `ŵ_j`, which also scale the skew operator.
    pub weights: Vec<f64>,
    /// `coef[((j * nodes + i) * n + a) * n + b]` multiplies the mass matrix
    /// between test `(j, a)` and trial `(i, b)`.
    pub coef: Vec<f64>,
    pub converged: bool,
}

impl LocalBlocks {
    #[inline]
    pub fn get(&self, j: usize, i: usize, a: usize, b: usize) -> f64 {
        self.coef[((j * self.nodes + i) * self.n + a) * self.n + b]
    }
}

/// `(ŵ_j D_ji + ℓ_j ℓ_i) M0 + δ_ij ŵ_j M1 + ŵ_j G_i(t_j)` where `G_i(t_j)` is
/// the memory moment of the current interval up to node `t_j`.
pub fn local_blocks(
    rule: &MappedRule,
    lag: &LagrangeData,
    m0: &[f64],
    m1: &[f64],
    kernel: &KernelSpec,
    quad: MomentQuadrature,
) -> LocalBlocks {
    let nb = lag.len();
    let n = kernel.n();
    let local: Vec<KernelIntegral> = if kernel.is_zero() {
        Vec::new()
    } else {
        (0..nb)
            .into_par_iter()
            .map(|j| history_moments(kernel, &lag.basis, rule.start, rule.end, rule.nodes[j], quad))
            .collect()
    };
    let mut coef = vec![0.0; nb * nb * n * n];
    for j in 0..nb {
        let w = rule.weights[j];
        for i in 0..nb {
            let time = w * lag.diff[j * nb + i] + lag.left[j] * lag.left[i];
            for a in 0..n {
                for b in 0..n {
                    let mut v = time * m0[a * n + b];
                    if i == j {
                        v += w * m1[a * n + b];
                    }
                    if let Some(g) = local.get(j) {
                        v += w * g.value[(i * n + a) * n + b];
                    }
                    coef[((j * nb + i) * n + a) * n + b] = v;
                }
            }
        }
    }
    LocalBlocks {
        nodes: nb,
        n,
        weights: rule.weights.clone(),
        coef,
        converged: local.iter().all(|g| g.converged),
    }
}

/// Memory contributions of the intervals before `m` to its local right-hand
/// side: for each node `j`, `-ŵ_j Σ_{s<m} Σ_i G_i^{(s)}(t_j) U_{s,i}` tested
/// against the spatial basis. `past[s][i]` holds positional values (see
/// [`BlockSystem::to_positions`]). Returns `[j][dof]` and the number of
/// unconverged moment integrals.
pub fn history_rhs(
    m: usize,
    mesh: &TimeMesh,
    lagrange: &[LagrangeData],
    past: &[Vec<Vec<f64>>],
    system: &BlockSystem,
    kernel: &KernelSpec,
    quad: MomentQuadrature,
) -> (Vec<f64>, usize) {
    let nb = mesh.q() + 1;
    let ndof = system.ndof();
    if m == 0 || kernel.is_zero() {
        return (vec![0.0; nb * ndof], 0);
    }
    let n = system.n();
    let np = system.npos();
    let rule = mesh.rule(m);
    let moments: Vec<KernelIntegral> = (0..nb * m)
        .into_par_iter()
        .map(|task| {
            let (j, s) = (task / m, task % m);
            let (a, b) = mesh.interval(s);
            history_moments(kernel, &lagrange[s].basis, a, b, rule.nodes[j], quad)
        })
        .collect();
    let bad = moments.iter().filter(|g| !g.converged).count();
    let parts: Vec<Vec<f64>> = (0..nb)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![0.0; n * np];
            for s in 0..m {
                let g = &moments[j * m + s].value;
                for i in 0..nb {
                    let pos = &past[s][i];
                    for a in 0..n {
                        for b in 0..n {
                            let c = g[(i * n + a) * n + b];
                            if c == 0.0 {
                                continue;
                            }
                            let dst = &mut acc[a * np..(a + 1) * np];
                            for (d, v) in dst.iter_mut().zip(&pos[b * np..(b + 1) * np]) {
                                *d += c * v;
                            }
                        }
                    }
                }
            }
            let mut out = vec![0.0; ndof];
            let mut tmp = vec![0.0; np];
            for a in 0..n {
                system.mass().mul(&acc[a * np..(a + 1) * np], &mut tmp);
                for (p, t) in tmp.iter().enumerate() {
                    if let Some(d) = system.dof(a, p) {
                        out[d] = -rule.weights[j] * t;
                    }
                }
            }
            out
        })
        .collect();
    (parts.concat(), bad)
}

/// Local system in interleaved order `((p * nodes + j) * n + a)`; rows of
/// eliminated boundary positions are identity rows.
fn assemble_local(system: &BlockSystem, blocks: &LocalBlocks) -> BandMatrix {
    let n = system.n();
    let np = system.npos();
    let nb = blocks.nodes;
    let k = system.degree();
    let z = |p: usize, j: usize, a: usize| (p * nb + j) * n + a;
    let bw = (k + 1) * nb * n - 1;
    let mut mat = BandMatrix::zeros(np * nb * n, bw, bw);
    let mass = system.mass();
    for p in 0..np {
        for j in 0..nb {
            for a in 0..n {
                let row = z(p, j, a);
                if system.dof(a, p).is_none() {
                    mat.add(row, row, 1.0);
                    continue;
                }
                for r in mass.row_range(p) {
                    let mpr = mass.get(p, r);
                    for i in 0..nb {
                        for b in 0..n {
                            if system.dof(b, r).is_none() {
                                continue;
                            }
                            let mut v = blocks.get(j, i, a, b) * mpr;
                            if i == j {
                                v += blocks.weights[j] * system.skew_entry(a, p, b, r);
                            }
                            if v != 0.0 {
                                mat.add(row, z(r, i, b), v);
                            }
                        }
                    }
                }
            }
        }
    }
    mat
}

/// Load vectors `∫ F(t_j) ψ` at every Radau node, in node order, scaled by
/// `e^{-growth t}`. Also returns the number of unconverged integrations.
fn source_loads(
    problem: &Problem,
    system: &BlockSystem,
    mesh: &TimeMesh,
    growth: f64,
    opts: &SolverOptions,
) -> (Vec<Vec<f64>>, usize) {
    let nodes: Vec<f64> = mesh.rules().iter().flat_map(|r| r.nodes.iter().copied()).collect();
    if matches!(problem.source, Source::Zero) {
        return (vec![vec![0.0; system.ndof()]; nodes.len()], 0);
    }
    let n = system.n();
    let xs = system.quadrature_points();
    let nq = xs.len();
    let results: Vec<(Vec<f64>, bool)> = nodes
        .par_iter()
        .map(|&t| {
            let mut samples = vec![0.0; n * nq];
            let mut buf = vec![0.0; n];
            let mut ok = true;
            match (&problem.source, opts.source_evaluation) {
                (Source::Manufactured(e), SourceEvaluation::Field) => {
                    ok = manufactured_samples(problem, e, t, xs, opts.source_tol, &mut samples);
                }
                _ => {
                    for (g, &x) in xs.iter().enumerate() {
                        ok &= problem.source_at(t, x, opts.source_tol, &mut buf);
                        for a in 0..n {
                            samples[a * nq + g] = buf[a];
                        }
                    }
                }
            }
            if growth != 0.0 {
                let s = (-growth * t).exp();
                samples.iter_mut().for_each(|v| *v *= s);
            }
            (system.load_from_samples(&samples), ok)
        })
        .collect();
    let bad = results.iter().filter(|r| !r.1).count();
    (results.into_iter().map(|r| r.0).collect(), bad)
}

/// Solves the problem on `mesh × space` with spatial degree `k`.
pub fn solve(
    problem: &Problem,
    mesh: &TimeMesh,
    space: &SpaceMesh1D,
    k: usize,
    opts: &SolverOptions,
) -> Result<DiscreteSolution, DgError> {
    problem.validate()?;
    let rho = mesh.rho();
    let q = mesh.q();
    let mut diagnostics = SolveDiagnostics::default();
    if problem.coercivity(rho) < problem.gamma * (1.0 - 1e-12) {
        diagnostics.warnings.push(format!(
            "rho M0 + sym(M1) has smallest eigenvalue {:.6e} < gamma = {}",
            problem.coercivity(rho),
            problem.gamma
        ));
    }
    if opts.coercivity_check && !problem.kernel.is_zero() {
        let report = kernel_norm_report(&problem.kernel, mesh, problem.gamma, &opts.norm);
        if !report.satisfied {
            diagnostics.warnings.push(format!(
                "discrete kernel norm {:.6e} exceeds gamma/2 = {}",
                report.discrete_norm,
                0.5 * problem.gamma
            ));
        }
        diagnostics.coercivity = Some(report);
    }

    let (work_mesh, m1, kernel, growth) = if opts.reformulated {
        let n = problem.n;
        let m1: Vec<f64> = problem.m1.iter().zip(&problem.m0).map(|(a, b)| a + rho * b).collect();
        debug_assert_eq!(m1.len(), n * n);
        (mesh.with_rho(0.0)?, m1, problem.kernel.damped(rho), rho)
    } else {
        (mesh.clone(), problem.m1.clone(), problem.kernel.clone(), 0.0)
    };

    let system = Arc::new(assemble_block_system(
        space,
        k,
        &problem.bcs,
        &problem.m0,
        &m1,
        &problem.operator,
    )?);
    let x0 = system.interpolate(|x, o| (problem.x0)(x, o))?;
    let (loads, bad_sources) = source_loads(problem, &system, &work_mesh, growth, opts);
    diagnostics.unconverged_integrals += bad_sources;
    let lagrange: Vec<LagrangeData> = work_mesh.rules().iter().map(LagrangeData::new).collect();
    let quad = opts.moment_quadrature(&kernel, q);

    let n = system.n();
    let np = system.npos();
    let nb = q + 1;
    let ndof = system.ndof();
    let z = |p: usize, j: usize, a: usize| (p * nb + j) * n + a;
    let mut coeffs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(work_mesh.len());
    let mut past: Vec<Vec<Vec<f64>>> = Vec::with_capacity(work_mesh.len());
    let mut prev = x0.clone();
    for m in 0..work_mesh.len() {
        let rule = work_mesh.rule(m);
        let lag = &lagrange[m];
        let blocks = local_blocks(rule, lag, &problem.m0, &m1, &kernel, quad);
        if !blocks.converged {
            diagnostics.unconverged_integrals += 1;
        }
        let lu = assemble_local(&system, &blocks).factor().map_err(|e| match e {
            LinalgError::Singular { column } => DgError::Singular {
                interval: m + 1,
                q,
                k,
                column,
            },
            LinalgError::Dimension { .. } => unreachable!("local matrix is square"),
        })?;
        diagnostics.max_pivot_ratio = diagnostics.max_pivot_ratio.max(lu.pivot_ratio());
        let jump = system.apply_coupled_mass(&problem.m0, &prev);
        let (hist, bad) = history_rhs(m, &work_mesh, &lagrange, &past, &system, &kernel, quad);
        diagnostics.unconverged_integrals += bad;
        let mut rhs = vec![0.0; np * nb * n];
        for p in 0..np {
            for j in 0..nb {
                for a in 0..n {
                    if let Some(d) = system.dof(a, p) {
                        rhs[z(p, j, a)] =
                            rule.weights[j] * loads[m * nb + j][d] + lag.left[j] * jump[d] + hist[j * ndof + d];
                    }
                }
            }
        }
        let x = lu.solve(&rhs).expect("right-hand side matches the local system");
        let mut node_dofs = vec![vec![0.0; ndof]; nb];
        let mut node_pos = vec![vec![0.0; n * np]; nb];
        for p in 0..np {
            for i in 0..nb {
                for a in 0..n {
                    if let Some(d) = system.dof(a, p) {
                        let v = x[z(p, i, a)];
                        node_dofs[i][d] = v;
                        node_pos[i][a * np + p] = v;
                    }
                }
            }
        }
        prev = node_dofs[nb - 1].clone();
        coeffs.push(node_dofs);
        past.push(node_pos);
    }
    if diagnostics.unconverged_integrals > 0 {
        diagnostics.warnings.push(format!(
            "{} adaptive integrations did not reach their tolerance",
            diagnostics.unconverged_integrals
        ));
    }
    Ok(DiscreteSolution {
        mesh: work_mesh,
        system,
        lagrange,
        coeffs,
        x0,
        growth,
        rho,
        diagnostics,
    })
}
