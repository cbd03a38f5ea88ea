use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use fsmf_core::{certify, Certificate, SupportPair};
use serde::Serialize;

use crate::{load_supports, CliResult};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Support file for X.
    #[arg(long)]
    pub left: PathBuf,
    /// Support file for Y.
    #[arg(long)]
    pub right: PathBuf,
    /// Print JSON instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
pub struct ClassJson {
    pub members: Vec<usize>,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub complete: bool,
}

#[derive(Debug, Serialize)]
pub struct AnalysisJson {
    pub certificate: String,
    pub summary: String,
    pub spurious_witness: Option<[usize; 5]>,
    pub classes: Vec<ClassJson>,
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

pub fn analysis_json(cert: &Certificate) -> AnalysisJson {
    AnalysisJson {
        certificate: cert.level.as_str().into(),
        summary: cert.summary(),
        spurious_witness: cert.spurious_witness.map(|w| {
            let (a, b, c, d, e) = w.one_based();
            [a, b, c, d, e]
        }),
        classes: cert
            .partition
            .classes
            .iter()
            .map(|c| ClassJson {
                members: one_based(&c.members),
                rows: one_based(&c.representative.rows),
                cols: one_based(&c.representative.cols),
                complete: c.is_complete,
            })
            .collect(),
    }
}

fn list(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

pub fn format_table(supports: &SupportPair, cert: &Certificate) -> String {
    let mut out = String::new();
    let j = analysis_json(cert);
    writeln!(out, "supports: {}x{}, rank {}", supports.m(), supports.n(), supports.rank()).unwrap();
    writeln!(out, "{:<6} {:<20} {:<20} {:<20} CEC", "class", "members", "R_P", "C_P").unwrap();
    for (i, c) in j.classes.iter().enumerate() {
        writeln!(
            out,
            "{:<6} {:<20} {:<20} {:<20} {}",
            i + 1,
            list(&c.members),
            list(&c.rows),
            list(&c.cols),
            if c.complete { "yes" } else { "no" }
        )
        .unwrap();
    }
    writeln!(out, "certificate: {}", j.summary).unwrap();
    out
}

pub fn run(args: &AnalyzeArgs) -> CliResult<()> {
    let s = load_supports(&args.left, &args.right)?;
    let cert = certify(&s);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&analysis_json(&cert)).expect("serializes"));
    } else {
        print!("{}", format_table(&s, &cert));
    }
    Ok(())
}
