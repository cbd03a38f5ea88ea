use std::path::PathBuf;

use clap::{ArgGroup, Args};
use fsmf_core::io::write_matrix;
use fsmf_core::iterative::{default_grid, grid_search, run_iterative, IterativeConfig, Method, Projection};
use fsmf_core::{solve_direct, FactorPair, ProblemInstance, SolveMode, SolveReport};

use crate::report::{write_atomic, ReportJson};
use crate::{ensure_dir, load_matrix, load_supports, CliError, CliResult, EXIT_DIVERGED, EXIT_IO};

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("rate").args(["lr", "grid"])))]
pub struct SolveArgs {
    /// Target matrix file.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    /// direct, gd, momentum, adam or palm.
    #[arg(long, default_value = "direct")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Fixed learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Try every rate of the default grid and keep the fastest to converge.
    #[arg(long)]
    pub grid: bool,
    /// Solve uncertified supports heuristically instead of refusing.
    #[arg(long)]
    pub best_effort: bool,
    /// PALM only: keep the `KX` and `KY` largest entries of each factor
    /// instead of projecting onto the supports.
    #[arg(long, num_args = 2, value_names = ["KX", "KY"])]
    pub hard_threshold: Option<Vec<usize>>,
    /// Report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for X.txt and Y.txt.
    #[arg(long)]
    pub factors: Option<PathBuf>,
    /// Leave the loss trace out of the report.
    #[arg(long)]
    pub no_trace: bool,
}

pub fn parse_method(s: &str) -> CliResult<Option<Method>> {
    if s == "direct" {
        return Ok(None);
    }
    Method::parse(s).map(Some).map_err(CliError::from)
}

/// Runs the requested solver. Returns the factors, the report and the seed
/// that was used (iterative methods only).
pub fn solve(
    inst: &ProblemInstance,
    method: Option<Method>,
    args: &SolveArgs,
) -> CliResult<(FactorPair, SolveReport, Option<u64>)> {
    let Some(m) = method else {
        let mode = if args.best_effort { SolveMode::BestEffort } else { SolveMode::Strict };
        let (f, r) = solve_direct(inst, mode)?;
        return Ok((f, r, None));
    };
    let mut c = IterativeConfig::new(m, args.lr.unwrap_or(IterativeConfig::default().learning_rate));
    c.max_iters = args.max_iters;
    c.seed = args.seed;
    if let Some(k) = &args.hard_threshold {
        if m != Method::Palm {
            return Err(CliError::new(EXIT_IO, "--hard-threshold requires --method palm"));
        }
        c.projection = Projection::HardThreshold { kx: k[0], ky: k[1] };
    }
    let o = if args.grid && m != Method::Palm {
        grid_search(inst, &c, &default_grid(), true)?.best
    } else {
        run_iterative(inst, &c)?
    };
    Ok((o.factors, o.report, Some(args.seed)))
}

pub fn run(args: &SolveArgs) -> CliResult<()> {
    let method = parse_method(&args.method)?;
    let a = load_matrix(&args.matrix)?;
    let s = load_supports(&args.left, &args.right)?;
    let inst = ProblemInstance::new(a, s)?;
    let (f, rep, seed) = solve(&inst, method, args)?;
    let json = ReportJson::from_report(&rep, seed, !args.no_trace).to_json();
    match &args.out {
        Some(p) => write_atomic(p, &json)?,
        None => println!("{json}"),
    }
    if let Some(dir) = &args.factors {
        ensure_dir(dir)?;
        write_matrix(dir.join("X.txt"), &f.x)?;
        write_matrix(dir.join("Y.txt"), &f.y)?;
    }
    eprintln!(
        "{}: loss {:.6e}, log10 error {:.3}, {} iterations, {:.3e} s",
        rep.method_tag,
        rep.final_loss,
        rep.log10_frobenius_error(),
        rep.iterations,
        rep.wall_time
    );
    if rep.diverged {
        return Err(CliError::new(EXIT_DIVERGED, format!("{} diverged", rep.method_tag)));
    }
    Ok(())
}
