//! Error norms, convergence orders and mesh-hierarchy runs.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dg::{solve, DgError, DiscreteSolution, Problem, Side, SolverOptions, SpaceTimeField, TimeMesh};
use crate::kernel::KernelNormReport;
use crate::quadrature::gauss_legendre;
use crate::space_fem::{FeError, SpaceMesh1D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("error values must be positive, got {0}")]
    NonPositive(f64),
    #[error("levels must be nonempty and double at every step, got {0:?}")]
    Levels(Vec<usize>),
    #[error("problem '{0}' has no exact solution; use reference mode")]
    NoExactSolution(String),
    #[error("quadrature norm is defined only for weighted-formulation solutions")]
    Reformulated,
    #[error("level N = M = {level}: {source}")]
    Level { level: usize, source: DgError },
    #[error(transparent)]
    Solver(#[from] DgError),
    #[error(transparent)]
    Space(#[from] FeError),
}

/// Sup-in-time and weighted space-time error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    /// `max_t sqrt(⟨M0 e(t), e(t)⟩)` over the sampled times
    pub e_sup: f64,
    /// `‖e‖_ρ`
    pub e_l2rho: f64,
}

/// Spatial sampling grid: Gauss–Legendre points on every cell.
struct SpatialGrid {
    xs: Vec<f64>,
    ws: Vec<f64>,
}

impl SpatialGrid {
    fn new(mesh: &SpaceMesh1D, points: usize) -> Self {
        let gl = gauss_legendre(points);
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for c in 0..mesh.cells() {
            let (a, b) = mesh.cell_bounds(c);
            for (x, w) in gl.mapped(a, b) {
                xs.push(x);
                ws.push(w);
            }
        }
        Self { xs, ws }
    }
}

/// `∫ ⟨M0 e, e⟩ dx` for samples laid out `[a][g]`.
fn energy(m0: &[f64], n: usize, grid: &SpatialGrid, e: &[f64]) -> f64 {
    let w = grid.xs.len();
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            let c = m0[a * n + b];
            if c == 0.0 {
                continue;
            }
            let ea = &e[a * w..(a + 1) * w];
            let eb = &e[b * w..(b + 1) * w];
            s += c * ea.iter().zip(eb).zip(&grid.ws).map(|((x, y), g)| x * y * g).sum::<f64>();
        }
    }
    s
}

/// Errors of `sol` against `exact` in a weighted Radau rule of degree
/// `q + refinement` per interval and `k + refinement` Gauss points per cell.
///
/// The sup is taken over those time nodes plus the right limits at interval
/// starts, so it is a lower bound of the true supremum.
pub fn error_norms(
    sol: &DiscreteSolution,
    exact: &dyn SpaceTimeField,
    refinement: usize,
) -> Result<ErrorPair, AnalysisError> {
    let rho = sol.rho();
    let fine = sol.mesh().rebuild(rho, sol.mesh().q() + refinement)?;
    let sys = sol.system();
    let n = sys.n();
    let grid = SpatialGrid::new(sys.mesh(), sys.degree() + refinement);
    let w = grid.xs.len();
    let m0 = sys.m0().to_vec();
    let per_interval: Vec<(f64, f64)> = (0..fine.len())
        .into_par_iter()
        .map(|m| {
            let rule = fine.rule(m);
            let mut uh = vec![0.0; n * w];
            let mut ue = vec![0.0; n * w];
            let mut err = |t: f64, side: Side, dofs: Vec<f64>| {
                sol.sample_dofs(&dofs, &grid.xs, &mut uh);
                exact.sample(t, side, &grid.xs, &mut ue);
                for (h, e) in uh.iter_mut().zip(&ue) {
                    *h -= e;
                }
                energy(&m0, n, &grid, &uh)
            };
            let start = err(rule.start, Side::Right, sol.dofs_on_interval(m, rule.start));
            let mut sum = 0.0;
            let mut sup = start;
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let e = err(t, Side::Left, sol.dofs_on_interval(m, t));
                sum += wt * e;
                sup = sup.max(e);
            }
            ((-2.0 * rho * rule.start).exp() * sum, sup)
        })
        .collect();
    let l2 = per_interval.iter().map(|p| p.0).sum::<f64>();
    let sup = per_interval.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(ErrorPair {
        e_sup: sup.max(0.0).sqrt(),
        e_l2rho: l2.max(0.0).sqrt(),
    })
}

/// `‖U‖_{Q,ρ}` evaluated with the solver's own rules and the assembled mass.
pub fn quadrature_norm(sol: &DiscreteSolution) -> Result<f64, AnalysisError> {
    if sol.growth() != 0.0 {
        return Err(AnalysisError::Reformulated);
    }
    let mesh = sol.mesh();
    let sys = sol.system();
    let mut s = 0.0;
    for m in 0..mesh.len() {
        let rule = mesh.rule(m);
        let inner: f64 = rule
            .weights
            .iter()
            .zip(sol.coeffs(m))
            .map(|(w, c)| w * sys.m0_energy(c))
            .sum();
        s += (-2.0 * mesh.rho() * rule.start).exp() * inner;
    }
    Ok(s.sqrt())
}

/// `log2(e_i / e_{i+1})` for errors on successively doubled meshes.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if let Some(&e) = errors.iter().find(|&&e| !(e > 0.0)) {
        return Err(AnalysisError::NonPositive(e));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

fn rate(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    /// Against the problem's manufactured solution.
    Exact,
    /// Against a solve on twice the finest mesh with degrees `q + 1`, `k + 1`.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    pub solver: SolverOptions,
    pub rho: f64,
    pub t_end: f64,
    pub refinement: usize,
    pub mode: ErrorMode,
    /// Solve levels concurrently.
    pub parallel: bool,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            rho: 1.0,
            t_end: 2.0,
            refinement: 3,
            mode: ErrorMode::Exact,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub m: usize,
    pub e_sup: f64,
    pub rate_sup: Option<f64>,
    pub e_l2rho: f64,
    pub rate_l2rho: Option<f64>,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub k: usize,
    pub q: usize,
    pub mode: ErrorMode,
    pub rows: Vec<ConvergenceRow>,
    pub warnings: Vec<String>,
    pub coercivity: Option<KernelNormReport>,
}

impl ConvergenceReport {
    pub fn l2rho_rates(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.rate_l2rho).collect()
    }
}

/// Solves on `N = M = level` for every level and measures errors.
pub fn run_convergence(
    problem: &Problem,
    k: usize,
    q: usize,
    levels: &[usize],
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport, AnalysisError> {
    if levels.is_empty() || levels[0] == 0 || levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(AnalysisError::Levels(levels.to_vec()));
    }
    let mut warnings = Vec::new();
    let solve_level = |level: usize, q: usize, k: usize, solver: &SolverOptions| -> Result<(DiscreteSolution, f64), AnalysisError> {
        let start = Instant::now();
        let mesh = TimeMesh::uniform(opts.t_end, level, opts.rho, q).map_err(|source| AnalysisError::Level { level, source })?;
        let space = SpaceMesh1D::uniform(level)?;
        let sol = solve(problem, &mesh, &space, k, solver).map_err(|source| AnalysisError::Level { level, source })?;
        Ok((sol, start.elapsed().as_secs_f64()))
    };
    let reference: Arc<dyn SpaceTimeField> = match opts.mode {
        ErrorMode::Exact => match problem.exact() {
            Some(e) => Arc::new(e.clone()),
            None => return Err(AnalysisError::NoExactSolution(problem.name.clone())),
        },
        ErrorMode::Reference => {
            let finest = *levels.last().unwrap();
            let solver = SolverOptions {
                coercivity_check: false,
                ..opts.solver
            };
            let (r, _) = solve_level(2 * finest, q + 1, k + 1, &solver)?;
            warnings.push(format!(
                "errors measured against a reference solution (N = M = {}, k = {}, q = {}); rates are indicative only",
                2 * finest,
                k + 1,
                q + 1
            ));
            warnings.extend(r.diagnostics().warnings.iter().map(|w| format!("reference: {w}")));
            Arc::new(r)
        }
    };
    let run = |(idx, &level): (usize, &usize)| -> Result<(ErrorPair, f64, DiscreteSolution), AnalysisError> {
        // the coercivity report depends only on the mesh; compute it once
        let solver = SolverOptions {
            coercivity_check: opts.solver.coercivity_check && idx == 0,
            ..opts.solver
        };
        let (sol, secs) = solve_level(level, q, k, &solver)?;
        let e = error_norms(&sol, reference.as_ref(), opts.refinement)?;
        Ok((e, secs, sol))
    };
    let results: Vec<Result<_, AnalysisError>> = if opts.parallel {
        levels.par_iter().enumerate().map(run).collect()
    } else {
        levels.iter().enumerate().map(run).collect()
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    let mut coercivity = None;
    for (idx, (res, &level)) in results.into_iter().zip(levels).enumerate() {
        let (e, secs, sol) = res?;
        if idx == 0 {
            coercivity = sol.diagnostics().coercivity.clone();
        }
        warnings.extend(sol.diagnostics().warnings.iter().map(|w| format!("N = M = {level}: {w}")));
        let prev = rows.last();
        rows.push(ConvergenceRow {
            n: level,
            m: level,
            e_sup: e.e_sup,
            rate_sup: prev.and_then(|p| rate(p.e_sup, e.e_sup)),
            e_l2rho: e.e_l2rho,
            rate_l2rho: prev.and_then(|p| rate(p.e_l2rho, e.e_l2rho)),
            solve_seconds: secs,
        });
    }
    Ok(ConvergenceReport {
        k,
        q,
        mode: opts.mode,
        rows,
        warnings,
        coercivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{identity, ExactSolution, Source, ZeroField};
    use crate::kernel::KernelSpec;
    use crate::space_fem::{Boundary, SpatialOperator};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn quiet() -> SolverOptions {
        SolverOptions {
            coercivity_check: false,
            ..Default::default()
        }
    }

    #[test]
    fn eoc_examples() {
        assert_eq!(eoc(&[0.4, 0.1]).unwrap(), vec![2.0]);
        assert_eq!(eoc(&[8.0, 8.0]).unwrap(), vec![0.0]);
        let r = eoc(&[3.848e-01, 1.940e-01]).unwrap()[0];
        assert_abs_diff_eq!(r, 0.99, epsilon = 0.005);
        assert!(eoc(&[1.0, 0.0]).is_err());
        assert!(eoc(&[-1.0, 0.5]).is_err());
    }

    fn stationary() -> Problem {
        let exact = ExactSolution::new(
            2,
            Arc::new(|_, _, o| {
                o[0] = 0.0;
                o[1] = 1.0
            }),
            Arc::new(|_, _, o| o.fill(0.0)),
            Arc::new(|_, _, o| o.fill(0.0)),
        );
        Problem {
            name: "stationary".into(),
            n: 2,
            m0: identity(2),
            m1: identity(2),
            kernel: KernelSpec::zero(2),
            operator: SpatialOperator::gradient_pair(0, 1),
            bcs: vec![Boundary::Dirichlet, Boundary::Natural],
            x0: exact.initial_state(),
            source: Source::Manufactured(Arc::new(exact)),
            gamma: 1.0,
            t_end: 1.0,
        }
    }

    #[test]
    fn exact_solution_has_zero_error() {
        let p = stationary();
        let mesh = TimeMesh::uniform(1.0, 4, 1.0, 1).unwrap();
        let sol = solve(&p, &mesh, &SpaceMesh1D::uniform(4).unwrap(), 2, &quiet()).unwrap();
        let e = error_norms(&sol, p.exact().unwrap(), 3).unwrap();
        assert!(e.e_sup < 1e-9 && e.e_l2rho < 1e-9, "{e:?}");
    }

    #[test]
    fn refined_norm_matches_quadrature_norm() {
        let mut p = stationary();
        p.source = Source::Direct(Arc::new(|t, x, o| {
            o[0] = t * x;
            o[1] = (t + x).cos();
        }));
        p.kernel = KernelSpec::example1();
        for q in 0..=2 {
            let mesh = TimeMesh::uniform(1.0, 5, 1.0, q).unwrap();
            let sol = solve(&p, &mesh, &SpaceMesh1D::uniform(3).unwrap(), q + 1, &quiet()).unwrap();
            let a = error_norms(&sol, &ZeroField(2), 3).unwrap().e_l2rho;
            let b = quadrature_norm(&sol).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_problem_has_zero_errors() {
        let mut p = Problem::zero(2, KernelSpec::example1());
        p.source = Source::Manufactured(Arc::new(ExactSolution::zero(2)));
        let r = run_convergence(
            &p,
            1,
            0,
            &[2, 4],
            &ConvergenceOptions {
                solver: quiet(),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.rows.iter().all(|row| row.e_sup == 0.0 && row.e_l2rho == 0.0));
        assert_eq!(r.rows[1].rate_l2rho, None);
    }

    #[test]
    fn levels_must_double() {
        let p = stationary();
        let o = ConvergenceOptions::default();
        assert!(matches!(run_convergence(&p, 1, 0, &[4, 6], &o), Err(AnalysisError::Levels(_))));
        assert!(matches!(run_convergence(&p, 1, 0, &[], &o), Err(AnalysisError::Levels(_))));
        let mut nx = stationary();
        nx.source = Source::Zero;
        assert!(matches!(run_convergence(&nx, 1, 0, &[2], &o), Err(AnalysisError::NoExactSolution(_))));
    }
}
