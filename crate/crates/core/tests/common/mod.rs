//! Independent reference computations for the test suites.
#![allow(dead_code)]

use fsmf_core::{DenseMatrix, FactorPair, SupportMask, SupportPair};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations.
pub fn symmetric_eigenvalues(s: &[Vec<f64>]) -> Vec<f64> {
    let n = s.len();
    let mut a: Vec<Vec<f64>> = s.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-34 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values from the eigenvalues of `[[0, A], [A^T, 0]]`, descending.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let (m, n) = a.shape();
    let d = m + n;
    let mut s = vec![vec![0.0; d]; d];
    for i in 0..m {
        for j in 0..n {
            s[i][m + j] = a[(i, j)];
            s[m + j][i] = a[(i, j)];
        }
    }
    let ev = symmetric_eigenvalues(&s);
    ev.into_iter().take(m.min(n)).map(|v| v.max(0.0)).collect()
}

/// Sum of squared singular values beyond the first `r`.
pub fn tail_energy(a: &DenseMatrix, r: usize) -> f64 {
    singular_values(a).iter().skip(r).map(|s| s * s).sum()
}

/// Smallest squared eigenvalue magnitude of a symmetric `2 x 2` matrix,
/// from one Jacobi rotation.
pub fn min_eig_sq_sym2(a: f64, b: f64, c: f64) -> f64 {
    let (l1, l2) = if b == 0.0 {
        (a, c)
    } else {
        let tau = (c - a) / (2.0 * b);
        let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
        let t = if tau == 0.0 { 1.0 } else { t };
        (a - t * b, c + t * b)
    };
    l1.abs().min(l2.abs()).powi(2)
}

/// Loss by explicit summation.
pub fn naive_loss(a: &DenseMatrix, x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    let mut total = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let mut p = 0.0;
            for k in 0..x.cols() {
                p += x[(i, k)] * y[(j, k)];
            }
            total += (a[(i, j)] - p).powi(2);
        }
    }
    total
}

/// Central finite-difference gradient on the supports.
pub fn finite_difference_gradient(
    a: &DenseMatrix,
    f: &FactorPair,
    s: &SupportPair,
    h: f64,
) -> FactorPair {
    let mut gx = DenseMatrix::zeros(f.x.rows(), f.x.cols());
    let mut gy = DenseMatrix::zeros(f.y.rows(), f.y.cols());
    for &(i, k) in s.left().entries() {
        let mut p = f.x.clone();
        p[(i, k)] += h;
        let mut q = f.x.clone();
        q[(i, k)] -= h;
        gx[(i, k)] = (naive_loss(a, &p, &f.y) - naive_loss(a, &q, &f.y)) / (2.0 * h);
    }
    for &(j, k) in s.right().entries() {
        let mut p = f.y.clone();
        p[(j, k)] += h;
        let mut q = f.y.clone();
        q[(j, k)] -= h;
        gy[(j, k)] = (naive_loss(a, &f.x, &p) - naive_loss(a, &f.x, &q)) / (2.0 * h);
    }
    FactorPair { x: gx, y: gy }
}

pub fn gaussian_matrix(rng: &mut impl Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.sample(rand_distr::StandardNormal))
}

pub fn random_mask(rng: &mut impl Rng, m: usize, n: usize, density: f64) -> SupportMask {
    SupportMask::from_fn(m, n, |_, _| rng.random::<f64>() < density)
}

pub fn random_supports(rng: &mut impl Rng, m: usize, n: usize, r: usize, density: f64) -> SupportPair {
    SupportPair::new(random_mask(rng, m, r, density), random_mask(rng, n, r, density)).unwrap()
}

/// Random factors restricted to the supports.
pub fn random_feasible(rng: &mut impl Rng, s: &SupportPair) -> FactorPair {
    let x = DenseMatrix::from_fn(s.m(), s.rank(), |i, k| {
        if s.left().contains(i, k) {
            rng.sample(rand_distr::StandardNormal)
        } else {
            0.0
        }
    });
    let y = DenseMatrix::from_fn(s.n(), s.rank(), |j, k| {
        if s.right().contains(j, k) {
            rng.sample(rand_distr::StandardNormal)
        } else {
            0.0
        }
    });
    FactorPair { x, y }
}

/// Supports with pairwise disjoint rank-one supports: each column picks a
/// block of rows and a block of columns from a random grid partition, and
/// some columns are duplicated.
pub fn random_disjoint_supports(rng: &mut impl Rng, m: usize, n: usize) -> SupportPair {
    let row_cut = rng.random_range(1..=m);
    let col_cut = rng.random_range(1..=n);
    let blocks = [
        ((0..row_cut).collect::<Vec<_>>(), (0..col_cut).collect::<Vec<_>>()),
        ((row_cut..m).collect(), (col_cut..n).collect()),
    ];
    let mut cols = Vec::new();
    for (rows, cs) in blocks.iter() {
        if rows.is_empty() || cs.is_empty() {
            continue;
        }
        let mult = rng.random_range(1..=3);
        for _ in 0..mult {
            cols.push((rows.clone(), cs.clone()));
        }
    }
    let r = cols.len();
    let left = SupportMask::from_pairs(
        m,
        r,
        cols.iter().enumerate().flat_map(|(k, (rs, _))| rs.iter().map(move |&i| (i, k))),
    )
    .unwrap();
    let right = SupportMask::from_pairs(
        n,
        r,
        cols.iter().enumerate().flat_map(|(k, (_, cs))| cs.iter().map(move |&j| (j, k))),
    )
    .unwrap();
    SupportPair::new(left, right).unwrap()
}

/// Four-column instance: two complete singleton classes and two incomplete
/// columns whose supports outside the complete part are disjoint rectangles.
pub fn reducible_supports() -> SupportPair {
    // 1-based: col1 R={1,2} C={1,2}; col2 R={1} C={1,2,3}; col3 R={3} C={3,4};
    // col4 R={3,4} C={3,4}.
    let left = SupportMask::from_pairs(4, 4, [(0, 0), (1, 0), (0, 1), (2, 2), (2, 3), (3, 3)]).unwrap();
    let right = SupportMask::from_pairs(
        4,
        4,
        [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (2, 2), (3, 2), (2, 3), (3, 3)],
    )
    .unwrap();
    SupportPair::new(left, right).unwrap()
}
