//! One-sided Jacobi singular value decomposition.
//!
//! Singular values come out in nonincreasing order (ties keep the original
//! column order) and each left singular vector is signed so that its
//! largest-magnitude entry is positive. Left vectors for zero singular values
//! are zero.

use crate::error::{FsmfError, Result};
use crate::matrix::{dot, DenseMatrix};

const MAX_SWEEPS: usize = 80;

#[derive(Clone, Debug)]
pub struct Svd {
    /// `m x p`, `p = min(m, n)`.
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    /// `n x p`.
    pub v: DenseMatrix,
}

impl Svd {
    /// Number of singular values above `rel_tol * s_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rel_tol * smax).count()
    }
}

pub fn svd(a: &DenseMatrix) -> Svd {
    let (m, n) = a.shape();
    if m >= n {
        let cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        let (u, s, v) = jacobi_columns(cols, m);
        finish(u, s, v, m, n)
    } else {
        let cols: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
        let (ut, s, vt) = jacobi_columns(cols, n);
        finish(vt, s, ut, m, n)
    }
}

/// Orthogonalizes the given columns (each of length `len`) by plane rotations.
/// Returns (orthogonal columns, their norms, accumulated rotation columns).
fn jacobi_columns(mut b: Vec<Vec<f64>>, len: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let p = b.len();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (len.max(1) as f64).sqrt();
    let mut norms: Vec<f64> = b.iter().map(|c| dot(c, c)).collect();
    // Columns below this are roundoff; rotating them never settles.
    let floor = norms.iter().sum::<f64>() * (f64::EPSILON * len.max(1) as f64).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(&b[i], &b[j]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = b.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, s);
                norms[i] = dot(&b[i], &b[i]);
                norms[j] = dot(&b[j], &b[j]);
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = b
        .iter()
        .map(|c| dot(c, c))
        .map(|n2| if n2 <= floor { 0.0 } else { n2.sqrt() })
        .collect();
    for (col, &sv) in b.iter_mut().zip(&s) {
        if sv > 0.0 {
            col.iter_mut().for_each(|x| *x /= sv);
        } else {
            col.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    (b, s, v)
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (p, q) = (*a, *b);
        *a = c * p - s * q;
        *b = s * p + c * q;
    }
}

fn finish(u: Vec<Vec<f64>>, s: Vec<f64>, v: Vec<Vec<f64>>, m: usize, n: usize) -> Svd {
    let p = s.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let mut um = DenseMatrix::zeros(m, p);
    let mut vm = DenseMatrix::zeros(n, p);
    let mut sv = Vec::with_capacity(p);
    for (k, &src) in order.iter().enumerate() {
        let uc = &u[src];
        let mut best = 0;
        for i in 1..uc.len() {
            if uc[i].abs() > uc[best].abs() {
                best = i;
            }
        }
        let sign = if uc.get(best).copied().unwrap_or(0.0) < 0.0 {
            -1.0
        } else {
            1.0
        };
        for i in 0..m {
            um[(i, k)] = sign * uc[i];
        }
        for i in 0..n {
            vm[(i, k)] = sign * v[src][i];
        }
        sv.push(s[src]);
    }
    Svd { u: um, s: sv, v: vm }
}

/// Best rank-`k` approximation `U V^T` of `a`, with `sqrt(s)` split evenly
/// between the two factors.
pub fn truncated_svd(a: &DenseMatrix, k: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = a.shape();
    let max = m.min(n);
    if k > max {
        return Err(FsmfError::RankOutOfRange { k, max });
    }
    let d = svd(a);
    let u = DenseMatrix::from_fn(m, k, |i, j| d.u[(i, j)] * d.s[j].sqrt());
    let v = DenseMatrix::from_fn(n, k, |i, j| d.v[(i, j)] * d.s[j].sqrt());
    Ok((u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(d: &Svd) -> DenseMatrix {
        let us = DenseMatrix::from_fn(d.u.rows(), d.u.cols(), |i, j| d.u[(i, j)] * d.s[j]);
        us.matmul_t(&d.v).unwrap()
    }

    #[test]
    fn reconstructs_wide_and_tall() {
        for a in [
            DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]]).unwrap(),
            DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.5]]).unwrap(),
        ] {
            let d = svd(&a);
            let err = reconstruct(&d).sub(&a).unwrap().max_abs();
            assert!(err < 1e-13, "{err}");
            assert!(d.s[0] >= d.s[1]);
        }
    }

    #[test]
    fn known_singular_values() {
        // Frozen: diag(3, 2) rotated on both sides has singular values 3, 2.
        let (c, s) = (0.6, 0.8);
        let a = DenseMatrix::from_rows(&[[3.0 * c, -2.0 * s], [3.0 * s, 2.0 * c]]).unwrap();
        let d = svd(&a);
        assert!((d.s[0] - 3.0).abs() < 1e-14 && (d.s[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sign_convention() {
        let a = DenseMatrix::from_rows(&[[-5.0, 0.0], [1.0, 0.0]]).unwrap();
        let d = svd(&a);
        assert!(d.u[(0, 0)] > 0.0);
        assert_eq!(d.s[1], 0.0);
        assert_eq!(d.u[(0, 1)], 0.0);
    }

    #[test]
    fn rank_out_of_range() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            truncated_svd(&a, 3),
            Err(FsmfError::RankOutOfRange { k: 3, max: 2 })
        ));
        let (u, v) = truncated_svd(&a, 0).unwrap();
        assert_eq!((u.shape(), v.shape()), ((2, 0), (3, 0)));
    }
}
