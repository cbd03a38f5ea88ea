//! Reduction from weighted rank-one completion to the fixed-support problem.

use crate::error::{FsmfError, Result};
use crate::matrix::{DenseMatrix, FactorPair, SupportMask, SupportPair};

/// `||(A - x y^T) ⊙ W||_F^2`.
pub fn mcp_loss(a: &DenseMatrix, w: &SupportMask, x: &[f64], y: &[f64]) -> Result<f64> {
    if a.shape() != w.shape() || x.len() != a.rows() || y.len() != a.cols() {
        return Err(FsmfError::DimensionMismatch(
            "completion target, mask and vectors disagree".into(),
        ));
    }
    Ok(w
        .entries()
        .iter()
        .map(|&(i, j)| (a[(i, j)] - x[i] * y[j]).powi(2))
        .sum())
}

/// Fixed-support instance built from a mask `W`. When `W` has fewer rows
/// than columns, the construction runs on `W^T` and the target is
/// transposed accordingly.
#[derive(Clone, Debug)]
pub struct McpReduction {
    pub mask: SupportMask,
    pub transposed: bool,
    pub supports: SupportPair,
}

pub fn mcp_to_fsmf(w: &SupportMask) -> McpReduction {
    let transposed = w.rows() < w.cols();
    let wt = if transposed { w.transpose() } else { w.clone() };
    let (m, n) = wt.shape();
    let left = SupportMask::from_fn(m, n + 1, |i, j| j == n || !wt.contains(i, j));
    let right = SupportMask::from_fn(n, n + 1, |i, j| j == i || j == n);
    McpReduction {
        mask: w.clone(),
        transposed,
        supports: SupportPair::new(left, right).expect("both have n + 1 columns"),
    }
}

impl McpReduction {
    /// Target of the fixed-support instance.
    pub fn fsmf_target(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_target(a)?;
        Ok(if self.transposed { a.transpose() } else { a.clone() })
    }

    fn check_target(&self, a: &DenseMatrix) -> Result<()> {
        if a.shape() != self.mask.shape() {
            return Err(FsmfError::DimensionMismatch(format!(
                "target {}x{} vs mask {}x{}",
                a.rows(),
                a.cols(),
                self.mask.rows(),
                self.mask.cols()
            )));
        }
        Ok(())
    }

    /// Lifts a completion pair to factors with the same loss.
    pub fn map_mcp_solution(&self, a: &DenseMatrix, x: &[f64], y: &[f64]) -> Result<FactorPair> {
        self.check_target(a)?;
        if x.len() != a.rows() || y.len() != a.cols() {
            return Err(FsmfError::DimensionMismatch("vector lengths".into()));
        }
        let b = self.fsmf_target(a)?;
        let (u, v) = if self.transposed { (y, x) } else { (x, y) };
        let (m, n) = b.shape();
        let mut fx = DenseMatrix::zeros(m, n + 1);
        let mut fy = DenseMatrix::zeros(n, n + 1);
        for i in 0..m {
            fx[(i, n)] = u[i];
            for j in 0..n {
                if self.supports.left().contains(i, j) {
                    fx[(i, j)] = b[(i, j)] - u[i] * v[j];
                }
            }
        }
        for j in 0..n {
            fy[(j, j)] = 1.0;
            fy[(j, n)] = v[j];
        }
        FactorPair::new(fx, fy)
    }

    /// Reads the completion pair off the last factor column; its loss never
    /// exceeds the factorization loss.
    pub fn map_fsmf_solution(&self, f: &FactorPair) -> Result<(Vec<f64>, Vec<f64>)> {
        self.supports.check_feasible(f)?;
        let last = self.supports.rank() - 1;
        let u = f.x.column(last);
        let v = f.y.column(last);
        Ok(if self.transposed { (v, u) } else { (u, v) })
    }
}
