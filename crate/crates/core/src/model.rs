//! Objective, gradient and projection for the fixed-support problem.

use crate::error::{FsmfError, Result};
use crate::matrix::{DenseMatrix, FactorPair, ProblemInstance, SupportPair};

/// `||A - X Y^T||_F^2`.
pub fn loss(target: &DenseMatrix, factors: &FactorPair) -> Result<f64> {
    Ok(residual(target, factors)?.frobenius_norm_sq())
}

/// `A - X Y^T`.
pub fn residual(target: &DenseMatrix, factors: &FactorPair) -> Result<DenseMatrix> {
    if factors.x.rows() != target.rows() || factors.y.rows() != target.cols() {
        return Err(FsmfError::DimensionMismatch(format!(
            "target {}x{} vs factors {}x{} / {}x{}",
            target.rows(),
            target.cols(),
            factors.x.rows(),
            factors.x.cols(),
            factors.y.rows(),
            factors.y.cols()
        )));
    }
    target.sub(&factors.product())
}

/// Gradient of the loss with respect to `(X, Y)`, zeroed outside `(I, J)`.
pub fn masked_gradient(instance: &ProblemInstance, factors: &FactorPair) -> Result<FactorPair> {
    let s = instance.supports();
    if factors.x.shape() != s.left().shape() || factors.y.shape() != s.right().shape() {
        return Err(FsmfError::DimensionMismatch(
            "factor shapes do not match the supports".into(),
        ));
    }
    let r = residual(instance.target(), factors)?;
    let gx = r.matmul(&factors.y)?.scale(-2.0).masked(s.left())?;
    let gy = r.transpose().matmul(&factors.x)?.scale(-2.0).masked(s.right())?;
    FactorPair::new(gx, gy)
}

/// Zeroes every entry outside the supports.
pub fn project_to_support(factors: &FactorPair, supports: &SupportPair) -> Result<FactorPair> {
    FactorPair::new(
        factors.x.masked(supports.left())?,
        factors.y.masked(supports.right())?,
    )
}
