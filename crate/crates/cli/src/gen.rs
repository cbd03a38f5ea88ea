use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fsmf_core::generators::*;
use fsmf_core::io::{read_support, write_matrix, write_support};
use fsmf_core::reduction::mcp_to_fsmf;
use fsmf_core::{DenseMatrix, SupportPair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{ensure_dir, load_matrix, CliError, CliResult, EXIT_IO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Full,
    Lu,
    Kron1,
    Kron2,
    Hodlr,
    Hadamard,
    Mcp,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Rows (full).
    #[arg(long)]
    pub m: Option<usize>,
    /// Columns (full) or size (lu).
    #[arg(long)]
    pub n: Option<usize>,
    /// Rank (full).
    #[arg(long)]
    pub r: Option<usize>,
    /// Level N (kron1, kron2, hodlr, hadamard).
    #[arg(long)]
    pub level: Option<u32>,
    /// Observation mask (mcp).
    #[arg(long)]
    pub w: Option<PathBuf>,
    /// Matrix to carry through the mcp construction.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Also write a random target A.txt.
    #[arg(long)]
    pub random_target: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn need<T: Copy>(v: Option<T>, flag: &str, family: Family) -> CliResult<T> {
    v.ok_or_else(|| CliError::new(EXIT_IO, format!("--{flag} is required for {family:?}")))
}

/// Builds the supports and target that `gen` would write.
pub fn generate(args: &GenArgs) -> CliResult<(Option<SupportPair>, Option<DenseMatrix>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let f = args.family;
    let (supports, target) = match f {
        Family::Full => {
            let (m, n, r) = (need(args.m, "m", f)?, need(args.n, "n", f)?, need(args.r, "r", f)?);
            let a = args.random_target.then(|| random_matrix(m, n, &mut rng));
            (Some(gen_full(m, n, r)), a)
        }
        Family::Lu => {
            let n = need(args.n, "n", f)?;
            let a = args.random_target.then(|| random_matrix(n, n, &mut rng));
            (Some(gen_lu(n)), a)
        }
        Family::Kron1 | Family::Kron2 => {
            let level = need(args.level, "level", f)?;
            let s = if f == Family::Kron1 { gen_kron1(level)? } else { gen_kron2(level)? };
            let a = args.random_target.then(|| random_matrix(s.m(), s.n(), &mut rng));
            (Some(s), a)
        }
        Family::Hodlr => {
            let level = need(args.level, "level", f)?;
            let a = if args.random_target {
                Some(random_hodlr_matrix(level, &mut rng)?)
            } else {
                None
            };
            (Some(gen_hodlr(level)?), a)
        }
        Family::Hadamard => (None, Some(hadamard(need(args.level, "level", f)?)?)),
        Family::Mcp => {
            let path = args
                .w
                .as_ref()
                .ok_or_else(|| CliError::new(EXIT_IO, "--w is required for Mcp"))?;
            let w = read_support(path)?;
            let red = mcp_to_fsmf(&w);
            let a = match &args.matrix {
                Some(p) => Some(red.fsmf_target(&load_matrix(p)?)?),
                None => None,
            };
            (Some(red.supports), a)
        }
    };
    Ok((supports, target))
}

pub fn run(args: &GenArgs) -> CliResult<()> {
    let (supports, target) = generate(args)?;
    ensure_dir(&args.out_dir)?;
    if let Some(s) = &supports {
        write_support(args.out_dir.join("I.txt"), s.left())?;
        write_support(args.out_dir.join("J.txt"), s.right())?;
        eprintln!(
            "wrote I.txt ({}x{}, nnz {}) and J.txt ({}x{}, nnz {})",
            s.m(),
            s.rank(),
            s.left().nnz(),
            s.n(),
            s.rank(),
            s.right().nnz()
        );
    }
    if let Some(a) = &target {
        write_matrix(args.out_dir.join("A.txt"), a)?;
        eprintln!("wrote A.txt ({}x{})", a.rows(), a.cols());
    }
    Ok(())
}
