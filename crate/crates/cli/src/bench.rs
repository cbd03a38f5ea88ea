use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fsmf_core::generators::{gen_kron1, gen_kron2, hadamard};
use fsmf_core::iterative::{default_grid, grid_search, run_iterative, IterativeConfig, Method};
use fsmf_core::{solve_direct, ProblemInstance, SolveMode, SolveReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{write_atomic, JsonF64, ReportJson};
use crate::solve::parse_method;
use crate::{ensure_dir, CliError, CliResult, EXIT_IO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KronFamily {
    Kron1,
    Kron2,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "kron1")]
    pub family: KronFamily,
    #[arg(long, default_value_t = 3)]
    pub n_min: u32,
    #[arg(long, default_value_t = 6)]
    pub n_max: u32,
    /// Comma-separated list from direct, gd, momentum, adam, palm.
    #[arg(long, value_delimiter = ',', default_value = "direct,gd,momentum,adam")]
    pub methods: Vec<String>,
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
    /// Cells run concurrently.
    #[arg(long, env = "FSMF_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Timed repetitions per cell; the minimum is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave loss traces out of the per-cell reports.
    #[arg(long)]
    pub no_trace: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub level: u32,
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub learning_rate: Option<JsonF64>,
    pub log10_frobenius_error: JsonF64,
    pub wall_time_s: JsonF64,
}

fn min_wall(repeats: usize, mut f: impl FnMut() -> CliResult<f64>) -> CliResult<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        best = best.min(f()?);
    }
    Ok(best)
}

fn run_cell(inst: &ProblemInstance, method: Option<Method>, args: &BenchArgs) -> CliResult<SolveReport> {
    let Some(m) = method else {
        let (_, mut rep) = solve_direct(inst, SolveMode::Strict)?;
        rep.wall_time = min_wall(args.repeats, || Ok(solve_direct(inst, SolveMode::Strict)?.1.wall_time))?;
        return Ok(rep);
    };
    let mut c = IterativeConfig::new(m, 0.0);
    c.max_iters = args.max_iters;
    c.seed = args.seed;
    let mut rep = if m == Method::Palm {
        run_iterative(inst, &c)?.report
    } else {
        grid_search(inst, &c, &default_grid(), false)?.best.report
    };
    if rep.converged {
        c.learning_rate = rep.learning_rate.unwrap_or(0.0);
        rep.wall_time = min_wall(args.repeats, || Ok(run_iterative(inst, &c)?.report.wall_time))?;
    }
    Ok(rep)
}

pub fn format_summary(rows: &[SummaryRow], repeats: usize) -> String {
    let mut out = String::new();
    writeln!(out, "{:<4} {:<10} {:<10} {:>8} {:>10} {:>10} {:>12}", "N", "method", "converged", "iters", "lr", "log10 err", "time (s)").unwrap();
    for r in rows {
        let lr = r.learning_rate.map_or("-".to_string(), |v| format!("{:.0e}", v.0));
        writeln!(
            out,
            "{:<4} {:<10} {:<10} {:>8} {:>10} {:>10.3} {:>12.3e}",
            r.level,
            r.method,
            if r.converged { "yes" } else { "NO" },
            r.iterations,
            lr,
            r.log10_frobenius_error.0,
            r.wall_time_s.0
        )
        .unwrap();
    }
    let levels: std::collections::BTreeSet<u32> = rows.iter().map(|r| r.level).collect();
    for level in levels {
        let at: Vec<&SummaryRow> = rows.iter().filter(|r| r.level == level).collect();
        if let Some(d) = at.iter().find(|r| r.method == "direct") {
            let faster = at
                .iter()
                .filter(|r| r.method != "direct" && r.converged)
                .all(|r| d.wall_time_s.0 < r.wall_time_s.0);
            writeln!(out, "N={level}: direct fastest among converged methods: {}", if faster { "yes" } else { "no" }).unwrap();
        }
    }
    writeln!(
        out,
        "times are the minimum over {repeats} repeats at the selected learning rate; tuning time is excluded"
    )
    .unwrap();
    out
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    if args.n_min < 1 || args.n_min > args.n_max {
        return Err(CliError::new(EXIT_IO, "need 1 <= n-min <= n-max"));
    }
    let methods: Vec<(String, Option<Method>)> = args
        .methods
        .iter()
        .map(|s| Ok((s.clone(), parse_method(s)?)))
        .collect::<CliResult<_>>()?;
    ensure_dir(&args.out)?;
    let cells: Vec<(u32, usize)> = (args.n_min..=args.n_max)
        .flat_map(|l| (0..methods.len()).map(move |i| (l, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
    let results: Vec<CliResult<SummaryRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(level, mi)| {
                let (name, method) = &methods[mi];
                let s = match args.family {
                    KronFamily::Kron1 => gen_kron1(level)?,
                    KronFamily::Kron2 => gen_kron2(level)?,
                };
                let inst = ProblemInstance::new(hadamard(level)?, s)?;
                let rep = run_cell(&inst, *method, args)?;
                let json = ReportJson::from_report(&rep, method.map(|_| args.seed), !args.no_trace);
                write_atomic(&args.out.join(format!("N{level}_{name}.json")), &json.to_json())?;
                Ok(SummaryRow {
                    level,
                    method: name.clone(),
                    converged: rep.converged,
                    iterations: rep.iterations,
                    learning_rate: rep.learning_rate.map(JsonF64),
                    log10_frobenius_error: JsonF64(rep.log10_frobenius_error()),
                    wall_time_s: JsonF64(rep.wall_time),
                })
            })
            .collect()
    });
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let table = format_summary(&rows, args.repeats);
    write_atomic(&args.out.join("summary.txt"), &table)?;
    write_atomic(
        &args.out.join("summary.json"),
        &serde_json::to_string_pretty(&rows).expect("serializes"),
    )?;
    print!("{table}");
    Ok(())
}
