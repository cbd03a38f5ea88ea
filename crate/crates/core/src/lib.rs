//! Fixed-support matrix factorization.
//!
//! Given a target `A` and binary patterns `I` (`m x r`) and `J` (`n x r`),
//! find `X`, `Y` with `supp(X) ⊆ I`, `supp(Y) ⊆ J` minimizing
//! `||A - X Y^T||_F^2`.

pub mod direct;
pub mod error;
pub mod generators;
pub mod io;
pub mod iterative;
pub mod landscape;
pub mod matrix;
pub mod model;
pub mod reduction;
pub mod support;
pub mod svd;

pub use direct::{
    check_optimality, exact_cec_completion, greedy_classwise, greedy_generic, solve_direct,
    svd_fsmf, svd_fsmf2, OptimalityVerdict, SolveMode,
};
pub use error::{FsmfError, Result};
pub use iterative::{grid_search, run_iterative, IterativeConfig, Method, Projection};
pub use matrix::{DenseMatrix, FactorPair, ProblemInstance, SupportMask, SupportPair};
pub use model::{loss, masked_gradient, project_to_support};
pub use support::{
    certify, is_cec_full_rank, partition_classes, rank_one_supports, taxonomy_split, Certificate,
    ClassPartition, RankOneSupport, SpuriousWitness, Taxonomy, TractabilityLevel,
};
pub use svd::{svd, truncated_svd};

/// Outcome of one solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub method_tag: String,
    pub final_loss: f64,
    /// `(iteration, loss)` pairs.
    pub loss_trace: Vec<(usize, f64)>,
    pub wall_time: f64,
    pub iterations: usize,
    pub learning_rate: Option<f64>,
    pub converged: bool,
    pub diverged: bool,
    pub certificate: Option<TractabilityLevel>,
    /// `(iteration, changes in supp X, changes in supp Y)`.
    pub support_change_trace: Option<Vec<(usize, usize, usize)>>,
}

impl SolveReport {
    pub fn log10_frobenius_error(&self) -> f64 {
        0.5 * self.final_loss.log10()
    }
}
