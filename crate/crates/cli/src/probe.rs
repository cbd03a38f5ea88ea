use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use fsmf_core::generators::gen_lu;
use fsmf_core::io::{write_matrix, write_support};
use fsmf_core::landscape::*;
use fsmf_core::{loss, masked_gradient, svd_fsmf2, FactorPair, ProblemInstance, SolveMode, SupportPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::report::write_atomic;
use crate::{ensure_dir, load_matrix, load_supports, CliError, CliResult, EXIT_IO};

pub const PLATEAU_BLOCK: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 2.0]];
pub const SWAP_BLOCK: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(subcommand)]
    pub what: Probe,
}

#[derive(Debug, Args)]
pub struct SupportSource {
    /// Support file for X; defaults to the lower-triangular pattern.
    #[arg(long, requires = "right")]
    pub left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    pub right: Option<PathBuf>,
    /// Size of the default lower-triangular pattern.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
}

impl SupportSource {
    fn load(&self) -> CliResult<SupportPair> {
        match (&self.left, &self.right) {
            (Some(l), Some(r)) => load_supports(l, r),
            _ => Ok(gen_lu(self.n)),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Probe {
    /// Slice infimum curves for the valley, plateau and swap blocks, as CSV.
    Gsigma {
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        max: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spurious valley instance, its two reference points and the straight
    /// path between them.
    Valley {
        #[command(flatten)]
        supports: SupportSource,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long, default_value = "valley-out")]
        out_dir: PathBuf,
    },
    /// Spurious local minimum instance built from `[[b, 0], [0, a]]`.
    Minimum {
        #[command(flatten)]
        supports: SupportSource,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value = "minimum-out")]
        out_dir: PathBuf,
    },
    /// Loss along the two-stage path from a random start to the optimum.
    Smartinit {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn gsigma_csv(min: f64, max: f64, step: f64) -> CliResult<String> {
    if !(step > 0.0 && min <= max && min.is_finite() && max.is_finite()) {
        return Err(CliError::new(EXIT_IO, "need min <= max and step > 0"));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize;
    let mut out = String::from("sigma,g1,g2,g3\n");
    for i in 0..=count {
        let s = min + i as f64 * step;
        writeln!(
            out,
            "{s:.10},{:.17e},{:.17e},{:.17e}",
            g_sigma(s),
            slice_infimum(PLATEAU_BLOCK, s),
            slice_infimum(SWAP_BLOCK, s)
        )
        .unwrap();
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => Ok(write_atomic(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_instance(dir: &Path, inst: &ProblemInstance) -> CliResult<()> {
    ensure_dir(&dir.to_path_buf())?;
    write_matrix(dir.join("A.txt"), inst.target())?;
    write_support(dir.join("I.txt"), inst.supports().left())?;
    write_support(dir.join("J.txt"), inst.supports().right())?;
    Ok(())
}

fn write_factors(dir: &Path, tag: &str, f: &FactorPair) -> CliResult<()> {
    write_matrix(dir.join(format!("X_{tag}.txt")), &f.x)?;
    write_matrix(dir.join(format!("Y_{tag}.txt")), &f.y)?;
    Ok(())
}

pub fn run(args: &ProbeArgs) -> CliResult<()> {
    match &args.what {
        Probe::Gsigma { min, max, step, out } => emit(out, &gsigma_csv(*min, *max, *step)?),
        Probe::Valley { supports, samples, out_dir } => {
            let v = build_spurious_valley_instance(&supports.load()?, None)?;
            write_instance(out_dir, &v.instance)?;
            write_factors(out_dir, "valley", &v.in_valley)?;
            write_factors(out_dir, "opt", &v.optimum)?;
            let path = linear_path(v.in_valley.clone(), v.optimum.clone())?;
            let mut csv = String::from("t,sigma,loss\n");
            for (t, f) in path.sample(*samples) {
                let l = loss(v.instance.target(), &f)?;
                writeln!(csv, "{t:.10},{:.17e},{l:.17e}", sigma_coordinate(&f, &v.embedding)).unwrap();
            }
            write_atomic(&out_dir.join("path.csv"), &csv)?;
            println!(
                "in-valley: sigma {}, loss {:.12} (g(5) = {:.12})",
                sigma_coordinate(&v.in_valley, &v.embedding),
                loss(v.instance.target(), &v.in_valley)?,
                g_sigma(5.0)
            );
            println!(
                "optimum: sigma {}, loss {:.3e}",
                sigma_coordinate(&v.optimum, &v.embedding),
                loss(v.instance.target(), &v.optimum)?
            );
            Ok(())
        }
        Probe::Minimum { supports, a, b, out_dir } => {
            let sm = build_spurious_minimum_instance(&supports.load()?, None, *a, *b)?;
            write_instance(out_dir, &sm.instance)?;
            write_factors(out_dir, "spurious", &sm.spurious)?;
            write_factors(out_dir, "opt", &sm.optimum)?;
            let g = masked_gradient(&sm.instance, &sm.spurious)?;
            println!(
                "spurious point: loss {:.12}, gradient norm {:.3e}; optimum loss {:.3e}",
                loss(sm.instance.target(), &sm.spurious)?,
                g.norm_sq().sqrt(),
                loss(sm.instance.target(), &sm.optimum)?
            );
            Ok(())
        }
        Probe::Smartinit { matrix, left, right, seed, samples, tol, out } => {
            let s = load_supports(left, right)?;
            let inst = ProblemInstance::new(load_matrix(matrix)?, s.clone())?;
            let opt = svd_fsmf2(inst.target(), &s, SolveMode::Strict)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let x0 = fsmf_core::DenseMatrix::from_fn(s.m(), s.rank(), |i, k| {
                if s.left().contains(i, k) {
                    rng.sample(StandardNormal)
                } else {
                    0.0
                }
            });
            let path = smart_init_path(&inst, &opt, &x0)?;
            let check = check_path(&path, &inst, *samples, *tol)?;
            let mut csv = String::from("t,loss\n");
            for (t, l) in &check.losses {
                writeln!(csv, "{t:.10},{l:.17e}").unwrap();
            }
            emit(out, &csv)?;
            eprintln!(
                "feasible: {}, monotone: {} (max increase {:.3e})",
                check.feasible, check.monotone, check.max_increase
            );
            Ok(())
        }
    }
}
