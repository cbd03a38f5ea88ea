//! Command-line front end: file I/O, experiment orchestration and reports.

pub mod analyze;
pub mod bench;
pub mod gen;
pub mod probe;
pub mod report;
pub mod solve;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use fsmf_core::io::{read_matrix, read_support};
use fsmf_core::{FsmfError, SupportPair};

pub const EXIT_IO: u8 = 1;
pub const EXIT_CERTIFICATE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<FsmfError> for CliError {
    fn from(e: FsmfError) -> Self {
        let code = match e {
            FsmfError::CertificateMismatch(_) => EXIT_CERTIFICATE,
            _ => EXIT_IO,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_IO, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fsmf", version, about = "Fixed-support matrix factorization toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the class table and tractability certificate of a support pair.
    Analyze(analyze::AnalyzeArgs),
    /// Factorize a target under fixed supports.
    Solve(solve::SolveArgs),
    /// Write structured supports and targets to disk.
    Gen(gen::GenArgs),
    /// Time-to-threshold benchmark on Hadamard targets.
    Bench(bench::BenchArgs),
    /// Landscape curves and constructions.
    Probe(probe::ProbeArgs),
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(a) => analyze::run(&a),
        Command::Solve(a) => solve::run(&a),
        Command::Gen(a) => gen::run(&a),
        Command::Bench(a) => bench::run(&a),
        Command::Probe(a) => probe::run(&a),
    }
}

fn with_path<T>(path: &Path, r: fsmf_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

pub(crate) fn load_supports(left: &Path, right: &Path) -> CliResult<SupportPair> {
    let l = with_path(left, read_support(left))?;
    let r = with_path(right, read_support(right))?;
    Ok(SupportPair::new(l, r)?)
}

pub(crate) fn load_matrix(path: &Path) -> CliResult<fsmf_core::DenseMatrix> {
    with_path(path, read_matrix(path))
}

pub(crate) fn ensure_dir(dir: &PathBuf) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", dir.display())))
}
