//! SVD-based direct solvers.

use std::time::Instant;

use crate::error::{FsmfError, Result};
use crate::matrix::{DenseMatrix, FactorPair, ProblemInstance, SupportMask, SupportPair};
use crate::model::loss;
use crate::support::{
    certify, partition_classes, Certificate, ClassPartition, RankOneSupport, TractabilityLevel,
};
use crate::svd::truncated_svd;
use crate::SolveReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolveMode {
    /// Refuse instances that are not certified.
    #[default]
    Strict,
    /// Return a feasible heuristic answer for uncertified instances.
    BestEffort,
}

/// Rank-`k` approximation of the residual restricted to `rect`, written into
/// `factor_cols` of `(x, y)` and subtracted from the residual.
fn deflate_block(
    residual: &mut DenseMatrix,
    rect: &RankOneSupport,
    factor_cols: &[usize],
    x: &mut DenseMatrix,
    y: &mut DenseMatrix,
) {
    if rect.is_empty() || factor_cols.is_empty() {
        return;
    }
    let block = residual.select(&rect.rows, &rect.cols);
    let k = factor_cols.len().min(rect.rows.len()).min(rect.cols.len());
    let (u, v) = truncated_svd(&block, k).expect("k bounded by block size");
    for (p, &col) in factor_cols.iter().take(k).enumerate() {
        for (a, &i) in rect.rows.iter().enumerate() {
            x[(i, col)] = u[(a, p)];
        }
        for (b, &j) in rect.cols.iter().enumerate() {
            y[(j, col)] = v[(b, p)];
        }
    }
    let approx = u.matmul_t(&v).expect("same inner dimension");
    for (a, &i) in rect.rows.iter().enumerate() {
        for (b, &j) in rect.cols.iter().enumerate() {
            residual[(i, j)] -= approx[(a, b)];
        }
    }
}

fn check_target(a: &DenseMatrix, m: usize, n: usize) -> Result<()> {
    if a.shape() != (m, n) {
        return Err(FsmfError::DimensionMismatch(format!(
            "target is {}x{}, supports imply {m}x{n}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

/// Column-by-column greedy: best rank-one fit of the residual on each `S_k`,
/// in the given order, subtracting as it goes.
pub fn greedy_generic(a: &DenseMatrix, supports: &[RankOneSupport]) -> Result<FactorPair> {
    let (m, n) = a.shape();
    let mut x = DenseMatrix::zeros(m, supports.len());
    let mut y = DenseMatrix::zeros(n, supports.len());
    let mut res = a.clone();
    for (k, s) in supports.iter().enumerate() {
        if s.rows.iter().any(|&i| i >= m) || s.cols.iter().any(|&j| j >= n) {
            return Err(FsmfError::DimensionMismatch(format!(
                "rank-one support {k} exceeds the {m}x{n} target"
            )));
        }
        deflate_block(&mut res, s, &[k], &mut x, &mut y);
    }
    FactorPair::new(x, y)
}

/// Class-by-class greedy: best rank-`|P|` fit of the residual on each class
/// representative, visiting classes in `order`.
pub fn greedy_classwise(
    a: &DenseMatrix,
    supports: &SupportPair,
    partition: &ClassPartition,
    order: &[usize],
) -> Result<FactorPair> {
    let (m, n, r) = (supports.m(), supports.n(), supports.rank());
    check_target(a, m, n)?;
    let mut x = DenseMatrix::zeros(m, r);
    let mut y = DenseMatrix::zeros(n, r);
    let mut res = a.clone();
    for &c in order {
        let class = partition.classes.get(c).ok_or_else(|| {
            FsmfError::InvalidParameter(format!("class index {c} out of range"))
        })?;
        deflate_block(&mut res, &class.representative, &class.members, &mut x, &mut y);
    }
    FactorPair::new(x, y)
}

/// Class-wise greedy in ascending order of smallest member column.
pub fn svd_fsmf(a: &DenseMatrix, supports: &SupportPair) -> Result<FactorPair> {
    let partition = partition_classes(supports);
    let order: Vec<usize> = (0..partition.classes.len()).collect();
    greedy_classwise(a, supports, &partition, &order)
}

/// Classes ordered by increasing representative size; containment implies a
/// strict size increase, so this also respects inclusion.
pub fn completion_order(partition: &ClassPartition) -> Vec<usize> {
    let mut order: Vec<usize> = (0..partition.classes.len()).collect();
    order.sort_by_key(|&c| partition.classes[c].representative.size());
    order
}

/// Exact factorization of `b` when `supp(b)` lies in the union of the
/// supports and every class is complete.
pub fn exact_cec_completion(b: &DenseMatrix, supports: &SupportPair) -> Result<FactorPair> {
    check_target(b, supports.m(), supports.n())?;
    let partition = partition_classes(supports);
    if let Some(c) = partition.classes.iter().find(|c| !c.is_complete) {
        return Err(FsmfError::PreconditionViolation(format!(
            "class of column {} is not complete",
            c.members[0]
        )));
    }
    let union = partition.complete_union(supports.m(), supports.n());
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            if b[(i, j)] != 0.0 && !union.contains(i, j) {
                return Err(FsmfError::PreconditionViolation(format!(
                    "target entry ({i}, {j}) lies outside the union of the supports"
                )));
            }
        }
    }
    greedy_classwise(b, supports, &partition, &completion_order(&partition))
}

fn mask_complement(a: &DenseMatrix, mask: &SupportMask) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        if mask.contains(i, j) {
            0.0
        } else {
            a[(i, j)]
        }
    })
}

/// Solves a certified instance exactly: complete classes first, then the
/// reduced rectangles outside them.
pub fn svd_fsmf2(a: &DenseMatrix, supports: &SupportPair, mode: SolveMode) -> Result<FactorPair> {
    let cert = certify(supports);
    svd_fsmf2_with(a, supports, &cert, mode)
}

pub fn svd_fsmf2_with(
    a: &DenseMatrix,
    supports: &SupportPair,
    cert: &Certificate,
    mode: SolveMode,
) -> Result<FactorPair> {
    check_target(a, supports.m(), supports.n())?;
    if !cert.level.is_certified() && mode == SolveMode::Strict {
        let why = match &cert.spurious_witness {
            Some(w) => format!("supports are not certified; spurious condition met at {w}"),
            None => "supports are not certified".to_string(),
        };
        return Err(FsmfError::CertificateMismatch(why));
    }
    if cert.level == TractabilityLevel::DisjointClasses {
        let order: Vec<usize> = (0..cert.partition.classes.len()).collect();
        return greedy_classwise(a, supports, &cert.partition, &order);
    }
    let Ok(tax) = cert.taxonomy(supports) else {
        return svd_fsmf(a, supports);
    };
    let inside = a.masked(&tax.complete_union)?;
    let outside = mask_complement(a, &tax.complete_union);
    let t_part = greedy_classwise_all(&inside, &tax.complete_supports(), true)?;
    let r_part = greedy_classwise_all(&outside, &tax.reduced_supports(), false)?;
    FactorPair::new(t_part.x.add(&r_part.x)?, t_part.y.add(&r_part.y)?)
}

fn greedy_classwise_all(a: &DenseMatrix, s: &SupportPair, by_size: bool) -> Result<FactorPair> {
    let partition = partition_classes(s);
    let order = if by_size {
        completion_order(&partition)
    } else {
        (0..partition.classes.len()).collect()
    };
    greedy_classwise(a, s, &partition, &order)
}

#[derive(Clone, Debug, PartialEq)]
pub enum OptimalityVerdict {
    Optimal,
    NotOptimal(String),
}

impl OptimalityVerdict {
    pub fn is_optimal(&self) -> bool {
        matches!(self, Self::Optimal)
    }
}

pub const OPTIMALITY_TOL: f64 = 1e-8;

/// Checks both optimality conditions on a certified instance: the residual
/// vanishes on the complete part, and the reduced factors attain the optimum
/// of the reduced problem.
pub fn check_optimality(instance: &ProblemInstance, factors: &FactorPair) -> Result<OptimalityVerdict> {
    let supports = instance.supports();
    supports.check_feasible(factors)?;
    let cert = certify(supports);
    if !cert.level.is_certified() {
        return Err(FsmfError::CertificateMismatch(
            "optimality can only be checked on certified supports".into(),
        ));
    }
    let tax = cert.taxonomy(supports)?;
    let a = instance.target();
    let norm_a = a.frobenius_norm();
    let res = a.sub(&factors.product())?;
    let on_t = res.masked(&tax.complete_union)?.frobenius_norm();
    if on_t > OPTIMALITY_TOL * norm_a {
        return Ok(OptimalityVerdict::NotOptimal(format!(
            "residual on the complete part is {on_t:.3e}"
        )));
    }
    let reduced_target = mask_complement(a, &tax.complete_union);
    let reduced = FactorPair::new(
        factors.x.masked(&tax.i_reduced)?,
        factors.y.masked(&tax.j_reduced)?,
    )?;
    let got = loss(&reduced_target, &reduced)?;
    let best = loss(
        &reduced_target,
        &greedy_classwise_all(&reduced_target, &tax.reduced_supports(), false)?,
    )?;
    let tol = OPTIMALITY_TOL * best + OPTIMALITY_TOL * OPTIMALITY_TOL * norm_a * norm_a;
    if (got - best).abs() > tol {
        return Ok(OptimalityVerdict::NotOptimal(format!(
            "reduced loss {got:.6e} differs from the reduced optimum {best:.6e}"
        )));
    }
    Ok(OptimalityVerdict::Optimal)
}

/// Certifies and solves, with timing.
pub fn solve_direct(instance: &ProblemInstance, mode: SolveMode) -> Result<(FactorPair, SolveReport)> {
    let start = Instant::now();
    let cert = certify(instance.supports());
    let factors = svd_fsmf2_with(instance.target(), instance.supports(), &cert, mode)?;
    let wall_time = start.elapsed().as_secs_f64();
    let final_loss = loss(instance.target(), &factors)?;
    let tag = if cert.level == TractabilityLevel::Unknown {
        "direct-best-effort"
    } else {
        "direct"
    };
    let report = SolveReport {
        method_tag: tag.into(),
        final_loss,
        loss_trace: vec![(0, final_loss)],
        wall_time,
        iterations: 0,
        learning_rate: None,
        converged: true,
        diverged: false,
        certificate: Some(cert.level),
        support_change_trace: None,
    };
    Ok((factors, report))
}
