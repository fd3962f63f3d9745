//! Batch driver: run configuration, kernel-norm report, convergence tables
//! and plot data.

mod registry;

pub use registry::{registry, smooth_solution, EXAMPLES};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::analysis::{run_convergence, AnalysisError, ConvergenceOptions, ConvergenceReport, ErrorMode};
use crate::dg::{solve, DgError, HistoryQuadrature, Problem, Side, SolverOptions, SourceEvaluation, SpaceTimeField, TimeMesh};
use crate::kernel::{norm_continuous, norm_discrete, rho_threshold, KernelError, NormOptions, NormReduction};
use crate::space_fem::{FeError, SpaceMesh1D};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown example '{0}' (expected one of ex1, ex2, ex3, zero, custom)")]
    UnknownExample(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] DgError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Space(#[from] FeError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMode {
    /// Manufactured sources for ex1/ex2/custom, direct data for ex3.
    Auto,
    /// Memory term of a manufactured source integrated once per time node.
    Field,
    /// Memory term integrated separately at every spatial point.
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefMode {
    /// Reference solution for problems without an exact solution.
    Auto,
    Exact,
    Reference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: String,
    pub k: usize,
    /// Defaults to `k - 1`.
    pub q: Option<usize>,
    pub levels: Vec<usize>,
    pub rho: f64,
    pub t_end: f64,
    pub kernel: Option<String>,
    pub source_mode: SourceMode,
    pub ref_mode: RefMode,
    pub quad_tol: f64,
    pub history_quad: HistoryQuadrature,
    pub reformulated: bool,
    pub refinement: usize,
    pub norm_grid: usize,
    pub norm_reduction: NormReduction,
    pub rho_candidates: Vec<f64>,
    pub plot: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            example: "ex1".into(),
            k: 1,
            q: None,
            levels: vec![8, 16, 32, 64],
            rho: 1.0,
            t_end: 2.0,
            kernel: None,
            source_mode: SourceMode::Auto,
            ref_mode: RefMode::Auto,
            quad_tol: 1e-12,
            history_quad: HistoryQuadrature::Auto,
            reformulated: false,
            refinement: 3,
            norm_grid: 512,
            norm_reduction: NormReduction::EntryMax,
            rho_candidates: (1..=8).map(f64::from).collect(),
            plot: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    pub fn degree_q(&self) -> usize {
        self.q.unwrap_or(self.k.saturating_sub(1))
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        let bad = || format!("invalid value '{v}' for '{key}'");
        match key.trim() {
            "example" => self.example = v.to_string(),
            "k" => self.k = v.parse().map_err(|_| bad())?,
            "q" => self.q = Some(v.parse().map_err(|_| bad())?),
            "levels" => self.levels = parse_list(v).ok_or_else(bad)?,
            "rho" => self.rho = v.parse().map_err(|_| bad())?,
            "T" | "t_end" => self.t_end = v.parse().map_err(|_| bad())?,
            "kernel" => self.kernel = (!v.is_empty() && v != "default").then(|| v.to_string()),
            "source_mode" => {
                self.source_mode = match v {
                    "auto" => SourceMode::Auto,
                    "field" | "manufactured" => SourceMode::Field,
                    "pointwise" => SourceMode::Pointwise,
                    _ => return Err(bad()),
                }
            }
            "ref_mode" => {
                self.ref_mode = match v {
                    "auto" => RefMode::Auto,
                    "exact" => RefMode::Exact,
                    "reference" => RefMode::Reference,
                    _ => return Err(bad()),
                }
            }
            "quad_tol" => self.quad_tol = v.parse().map_err(|_| bad())?,
            "history_quad" => {
                self.history_quad = match v {
                    "auto" => HistoryQuadrature::Auto,
                    "fixed" => HistoryQuadrature::Fixed,
                    "adaptive" => HistoryQuadrature::Adaptive,
                    _ => return Err(bad()),
                }
            }
            "reformulated" => self.reformulated = parse_bool(v).ok_or_else(bad)?,
            "refinement" => self.refinement = v.parse().map_err(|_| bad())?,
            "norm_grid" => self.norm_grid = v.parse().map_err(|_| bad())?,
            "norm_reduction" => {
                self.norm_reduction = match v {
                    "entry_max" => NormReduction::EntryMax,
                    "conservative" => NormReduction::Conservative,
                    _ => return Err(bad()),
                }
            }
            "rho_candidates" => self.rho_candidates = parse_list(v).ok_or_else(bad)?,
            "plot" => self.plot = parse_bool(v).ok_or_else(bad)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment and keys under
    /// `result.` (written to manifests) are ignored.
    pub fn parse_into(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Parse {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            if key.trim().starts_with("result.") {
                continue;
            }
            self.set(key, value).map_err(|message| CliError::Parse { line: i + 1, message })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut c = Self::default();
        c.parse_into(&text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.levels.is_empty() || self.levels[0] == 0 || self.levels.windows(2).any(|w| w[1] != 2 * w[0]) {
            return bad(format!("levels must be nonempty and doubling, got {:?}", self.levels));
        }
        if !(self.t_end > 0.0) {
            return bad(format!("T must be positive, got {}", self.t_end));
        }
        if !(self.rho >= 0.0) {
            return bad(format!("rho must be non-negative, got {}", self.rho));
        }
        if !(self.quad_tol > 0.0) {
            return bad(format!("quad_tol must be positive, got {}", self.quad_tol));
        }
        if self.rho_candidates.windows(2).any(|w| w[1] < w[0]) {
            return bad("rho_candidates must be ascending".into());
        }
        if !EXAMPLES.contains(&self.example.as_str()) {
            return Err(CliError::UnknownExample(self.example.clone()));
        }
        Ok(())
    }

    /// Every setting as `key = value` lines, rereadable by [`RunConfig::parse_into`].
    pub fn to_key_values(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("example", self.example.clone());
        kv("k", self.k.to_string());
        kv("q", self.degree_q().to_string());
        kv("levels", join(&self.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>()));
        kv("rho", format!("{:?}", self.rho));
        kv("T", format!("{:?}", self.t_end));
        kv("kernel", self.kernel.clone().unwrap_or_else(|| "default".into()));
        kv(
            "source_mode",
            match self.source_mode {
                SourceMode::Auto => "auto",
                SourceMode::Field => "field",
                SourceMode::Pointwise => "pointwise",
            }
            .into(),
        );
        kv(
            "ref_mode",
            match self.ref_mode {
                RefMode::Auto => "auto",
                RefMode::Exact => "exact",
                RefMode::Reference => "reference",
            }
            .into(),
        );
        kv("quad_tol", format!("{:e}", self.quad_tol));
        kv(
            "history_quad",
            match self.history_quad {
                HistoryQuadrature::Auto => "auto",
                HistoryQuadrature::Fixed => "fixed",
                HistoryQuadrature::Adaptive => "adaptive",
            }
            .into(),
        );
        kv("reformulated", self.reformulated.to_string());
        kv("refinement", self.refinement.to_string());
        kv("norm_grid", self.norm_grid.to_string());
        kv(
            "norm_reduction",
            match self.norm_reduction {
                NormReduction::EntryMax => "entry_max",
                NormReduction::Conservative => "conservative",
            }
            .into(),
        );
        kv(
            "rho_candidates",
            join(&self.rho_candidates.iter().map(|r| format!("{r:?}")).collect::<Vec<_>>()),
        );
        kv("plot", self.plot.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        s
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            history: self.history_quad,
            moment_tol: self.quad_tol,
            source_tol: self.quad_tol,
            source_evaluation: match self.source_mode {
                SourceMode::Pointwise => SourceEvaluation::Pointwise,
                _ => SourceEvaluation::Field,
            },
            reformulated: self.reformulated,
            norm: self.norm_options(),
            ..SolverOptions::default()
        }
    }

    pub fn norm_options(&self) -> NormOptions {
        NormOptions {
            grid: self.norm_grid,
            reduction: self.norm_reduction,
            ..NormOptions::default()
        }
    }

    pub fn error_mode(&self, problem: &Problem) -> ErrorMode {
        match self.ref_mode {
            RefMode::Exact => ErrorMode::Exact,
            RefMode::Reference => ErrorMode::Reference,
            RefMode::Auto if problem.exact().is_some() => ErrorMode::Exact,
            RefMode::Auto => ErrorMode::Reference,
        }
    }
}

/// Scientific notation with four significant digits and a two-digit
/// exponent, e.g. `9.477e-02`.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.3e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

pub fn rate_str(r: Option<f64>) -> String {
    r.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

pub const CSV_HEADER: &str = "k,q,N,M,E_sup,rate,L2rho,rate";

pub fn report_csv(r: &ConvergenceReport) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.k,
            r.q,
            row.n,
            row.m,
            sci(row.e_sup),
            rate_str(row.rate_sup),
            sci(row.e_l2rho),
            rate_str(row.rate_l2rho)
        );
    }
    s
}

pub fn report_markdown(title: &str, r: &ConvergenceReport) -> String {
    let mut s = format!("## {title}\n\n| (k,q) | N | M | E_sup | rate | L2rho | rate |\n|---|---|---|---|---|---|---|\n");
    for row in &r.rows {
        let _ = writeln!(
            s,
            "| ({},{}) | {} | {} | {} | {} | {} | {} |",
            r.k,
            r.q,
            row.n,
            row.m,
            sci(row.e_sup),
            rate_str(row.rate_sup),
            sci(row.e_l2rho),
            rate_str(row.rate_l2rho)
        );
    }
    if !r.warnings.is_empty() {
        s.push_str("\nWarnings:\n\n");
        for w in &r.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
    s
}

/// Kernel norms on the finest mesh plus a scan over the candidate ρ values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSummary {
    pub rho: f64,
    pub continuous: f64,
    pub discrete: f64,
    pub gamma: f64,
    pub satisfied: bool,
    pub threshold: Option<f64>,
    /// `(ρ, continuous norm, discrete norm)` for each candidate.
    pub sweep: Vec<(f64, f64, f64)>,
    pub converged: bool,
}

pub fn kernel_summary(config: &RunConfig, problem: &Problem) -> Result<KernelSummary, CliError> {
    let opts = config.norm_options();
    let q = config.degree_q();
    let finest = *config.levels.last().expect("validated levels");
    let mesh = TimeMesh::uniform(config.t_end, finest, config.rho, q)?;
    let c = norm_continuous(&problem.kernel, config.rho, config.t_end, &opts);
    let d = norm_discrete(&problem.kernel, &mesh, &opts);
    let threshold = rho_threshold(
        &problem.kernel,
        problem.gamma,
        config.t_end,
        finest,
        q,
        &config.rho_candidates,
        &opts,
    )?;
    let mut converged = c.converged && d.converged;
    let mut sweep = Vec::new();
    for &r in &config.rho_candidates {
        let m = TimeMesh::uniform(config.t_end, finest, r, q)?;
        let cc = norm_continuous(&problem.kernel, r, config.t_end, &opts);
        let dd = norm_discrete(&problem.kernel, &m, &opts);
        converged &= cc.converged && dd.converged;
        sweep.push((r, cc.value, dd.value));
    }
    Ok(KernelSummary {
        rho: config.rho,
        continuous: c.value,
        discrete: d.value,
        gamma: problem.gamma,
        satisfied: d.value <= 0.5 * problem.gamma,
        threshold,
        sweep,
        converged,
    })
}

pub fn kernel_report_text(k: &KernelSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "rho = {:?}", k.rho);
    let _ = writeln!(s, "continuous_norm = {:e}", k.continuous);
    let _ = writeln!(s, "discrete_norm = {:e}", k.discrete);
    let _ = writeln!(s, "gamma = {:?}", k.gamma);
    let _ = writeln!(s, "satisfied = {}", k.satisfied);
    let _ = writeln!(
        s,
        "rho_threshold = {}",
        k.threshold.map_or_else(|| "none".into(), |r| format!("{r:?}"))
    );
    let _ = writeln!(s, "quadrature_converged = {}", k.converged);
    let _ = writeln!(s, "\n# rho sweep: rho, continuous, discrete");
    for (r, c, d) in &k.sweep {
        let _ = writeln!(s, "{r:?}, {}, {}", sci(*c), sci(*d));
    }
    s
}

/// `t,x,u_1..u_n` on a `64 × 64` grid of `(0, T] × [0, 1]`.
pub fn plot_grid(field: &dyn SpaceTimeField, t_end: f64, size: usize) -> String {
    let n = field.components();
    let xs: Vec<f64> = (0..size).map(|i| i as f64 / (size - 1) as f64).collect();
    let mut s = String::from("t,x");
    for a in 0..n {
        let _ = write!(s, ",u{}", a + 1);
    }
    s.push('\n');
    let mut vals = vec![0.0; n * size];
    for j in 1..=size {
        let t = t_end * j as f64 / size as f64;
        field.sample(t, Side::Left, &xs, &mut vals);
        for (g, x) in xs.iter().enumerate() {
            let _ = write!(s, "{t:.6e},{x:.6e}");
            for a in 0..n {
                let _ = write!(s, ",{:.9e}", vals[a * size + g]);
            }
            s.push('\n');
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: ConvergenceReport,
    pub kernel: KernelSummary,
    pub files: Vec<PathBuf>,
    pub seconds: f64,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn execute(config: &RunConfig, files: &mut Vec<PathBuf>) -> Result<(ConvergenceReport, KernelSummary), CliError> {
    let problem = registry(&config.example, config.kernel.as_deref(), config.t_end)?;
    let q = config.degree_q();
    let dir = &config.out_dir;

    let kernel = kernel_summary(config, &problem)?;
    let path = dir.join("kernel_norms.txt");
    write(&path, &kernel_report_text(&kernel))?;
    files.push(path);

    let opts = ConvergenceOptions {
        solver: SolverOptions {
            coercivity_check: false,
            ..config.solver_options()
        },
        rho: config.rho,
        t_end: config.t_end,
        refinement: config.refinement,
        mode: config.error_mode(&problem),
        parallel: true,
    };
    let report = run_convergence(&problem, config.k, q, &config.levels, &opts)?;
    let path = dir.join("results.csv");
    write(&path, &report_csv(&report))?;
    files.push(path);
    let title = format!("{} (k,q) = ({},{})", config.example, config.k, q);
    let path = dir.join("results.md");
    write(&path, &report_markdown(&title, &report))?;
    files.push(path);

    if config.plot {
        let finest = *config.levels.last().expect("validated levels");
        let mesh = TimeMesh::uniform(config.t_end, finest, config.rho, q)?;
        let sol = solve(&problem, &mesh, &SpaceMesh1D::uniform(finest)?, config.k, &opts.solver)?;
        let path = dir.join("plot_grid.csv");
        write(&path, &plot_grid(&sol, config.t_end, 64))?;
        files.push(path);
    }
    Ok((report, kernel))
}

/// Runs a configuration and writes its artifacts into `config.out_dir`.
///
/// A manifest is always written. On failure it records the error and a
/// `FAILED` marker file is left next to any partial artifacts.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    config.validate()?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let marker = dir.join("FAILED");
    if marker.exists() {
        let _ = fs::remove_file(&marker);
    }
    let start = Instant::now();
    let mut files = Vec::new();
    let outcome = execute(config, &mut files);
    let seconds = start.elapsed().as_secs_f64();

    let mut manifest = config.to_key_values();
    let _ = writeln!(manifest, "result.version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "result.seconds = {seconds:.3}");
    match &outcome {
        Ok((report, _)) => {
            let _ = writeln!(manifest, "result.status = ok");
            for row in &report.rows {
                let _ = writeln!(manifest, "result.level_{}.solve_seconds = {:.3}", row.n, row.solve_seconds);
                let _ = writeln!(manifest, "result.level_{}.e_sup = {:e}", row.n, row.e_sup);
                let _ = writeln!(manifest, "result.level_{}.e_l2rho = {:e}", row.n, row.e_l2rho);
            }
            let _ = writeln!(manifest, "result.warnings = {}", report.warnings.len());
        }
        Err(e) => {
            let _ = writeln!(manifest, "result.status = failed");
            let _ = writeln!(manifest, "result.error = {}", e.to_string().replace('\n', " "));
        }
    }
    let path = dir.join("manifest.txt");
    write(&path, &manifest)?;
    files.push(path);

    match outcome {
        Ok((report, kernel)) => Ok(RunSummary {
            report,
            kernel,
            files,
            seconds,
        }),
        Err(e) => {
            write(&marker, &format!("{e}\n"))?;
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_format() {
        assert_eq!(sci(9.477e-02), "9.477e-02");
        assert_eq!(sci(0.09477123), "9.477e-02");
        assert_eq!(sci(1.331e-08), "1.331e-08");
        assert_eq!(sci(12346.0), "1.235e+04");
        assert_eq!(sci(0.0), "0.000e+00");
        assert_eq!(rate_str(Some(0.994)), "0.99");
        assert_eq!(rate_str(None), "-");
    }

    #[test]
    fn key_values_round_trip() {
        let mut c = RunConfig {
            example: "ex2".into(),
            k: 3,
            q: Some(2),
            levels: vec![4, 8],
            rho: 0.5,
            kernel: Some("scalar_power(1,0.5)".into()),
            history_quad: HistoryQuadrature::Adaptive,
            reformulated: true,
            plot: false,
            ..RunConfig::default()
        };
        c.rho_candidates = vec![0.5, 2.0];
        let mut back = RunConfig::default();
        back.parse_into(&c.to_key_values()).unwrap();
        assert_eq!(back, c);
        back.parse_into("result.status = ok\n# note\n").unwrap();
        assert!(back.parse_into("nonsense").is_err());
        assert!(back.parse_into("k = x").is_err());
        assert!(back.parse_into("bogus = 1").is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let c = RunConfig {
            levels: vec![8, 12],
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            example: "ex9".into(),
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(CliError::UnknownExample(_))));
        assert_eq!(RunConfig { k: 3, ..RunConfig::default() }.degree_q(), 2);
    }

    #[test]
    fn csv_layout() {
        use crate::analysis::ConvergenceRow;
        let r = ConvergenceReport {
            k: 1,
            q: 0,
            mode: ErrorMode::Exact,
            rows: vec![
                ConvergenceRow {
                    n: 8,
                    m: 8,
                    e_sup: 3.848e-1,
                    rate_sup: None,
                    e_l2rho: 9.477e-2,
                    rate_l2rho: None,
                    solve_seconds: 0.0,
                },
                ConvergenceRow {
                    n: 16,
                    m: 16,
                    e_sup: 1.94e-1,
                    rate_sup: Some(0.988),
                    e_l2rho: 4.698e-2,
                    rate_l2rho: Some(1.012),
                    solve_seconds: 0.0,
                },
            ],
            warnings: vec![],
            coercivity: None,
        };
        assert_eq!(
            report_csv(&r),
            "k,q,N,M,E_sup,rate,L2rho,rate\n1,0,8,8,3.848e-01,-,9.477e-02,-\n1,0,16,16,1.940e-01,0.99,4.698e-02,1.01\n"
        );
    }
}
