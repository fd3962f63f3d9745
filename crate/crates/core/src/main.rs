use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dgmem::cli::{run, RunConfig};

/// Space-time dG/FEM solver for evolutionary equations with memory.
#[derive(Debug, Parser)]
#[command(name = "dgmem", version)]
struct Args {
    /// key = value configuration file (a previous run's manifest works too)
    #[arg(long)]
    config: Option<PathBuf>,
    /// ex1 | ex2 | ex3 | zero | custom
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// temporal degree (default k - 1)
    #[arg(long)]
    q: Option<usize>,
    /// comma-separated N = M values, each double the previous
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// example1 | example2_3 | zero | scalar_const(c) | scalar_power(c,alpha)
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// auto | field | pointwise
    #[arg(long)]
    source_mode: Option<String>,
    /// auto | exact | reference
    #[arg(long)]
    ref_mode: Option<String>,
    #[arg(long)]
    quad_tol: Option<f64>,
    /// auto | fixed | adaptive
    #[arg(long)]
    history_quad: Option<String>,
    /// solve the unweighted reformulation instead
    #[arg(long)]
    reformulated: bool,
    /// skip the plot grid export
    #[arg(long)]
    no_plot: bool,
}

fn config(args: &Args) -> Result<RunConfig, String> {
    let mut c = match &args.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    let mut set = |k: &str, v: Option<String>| -> Result<(), String> {
        match v {
            Some(v) => c.set(k, &v),
            None => Ok(()),
        }
    };
    set("example", args.example.clone())?;
    set("k", args.k.map(|v| v.to_string()))?;
    set("q", args.q.map(|v| v.to_string()))?;
    set("levels", args.levels.clone())?;
    set("rho", args.rho.map(|v| v.to_string()))?;
    set("T", args.t_end.map(|v| v.to_string()))?;
    set("kernel", args.kernel.clone())?;
    set("out_dir", args.out_dir.as_ref().map(|p| p.display().to_string()))?;
    set("source_mode", args.source_mode.clone())?;
    set("ref_mode", args.ref_mode.clone())?;
    set("quad_tol", args.quad_tol.map(|v| v.to_string()))?;
    set("history_quad", args.history_quad.clone())?;
    if args.reformulated {
        c.reformulated = true;
    }
    if args.no_plot {
        c.plot = false;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match config(&args).and_then(|c| c.validate().map(|_| c).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            print!("{}", dgmem::cli::report_csv(&summary.report));
            for w in &summary.report.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "wrote {} files to {} in {:.1}s",
                summary.files.len(),
                cfg.out_dir.display(),
                summary.seconds
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
