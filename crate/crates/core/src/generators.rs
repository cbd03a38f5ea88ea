//! Support families and structured targets.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{FsmfError, Result};
use crate::matrix::{DenseMatrix, FactorPair, ProblemInstance, SupportMask, SupportPair};

pub fn gen_full(m: usize, n: usize, r: usize) -> SupportPair {
    SupportPair::full(m, n, r)
}

/// Lower-triangular `n x n` patterns on both sides.
pub fn gen_lu(n: usize) -> SupportPair {
    let l = SupportMask::from_fn(n, n, |i, j| j <= i);
    SupportPair::new(l.clone(), l).expect("square patterns")
}

fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (p, q) = b.shape();
    DenseMatrix::from_fn(a.rows() * p, a.cols() * q, |i, j| {
        a[(i / p, j / q)] * b[(i % p, j % q)]
    })
}

fn ones(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |_, _| 1.0)
}

fn kron_supports(a: u32, b: u32) -> SupportPair {
    let (pa, pb) = (1usize << a, 1usize << b);
    let left = kron(&ones(pa), &DenseMatrix::identity(pb)).support();
    let right = kron(&DenseMatrix::identity(pa), &ones(pb)).support();
    SupportPair::new(left, right).expect("square patterns")
}

fn check_level(level: u32, min: u32) -> Result<()> {
    if level < min || level > 20 {
        return Err(FsmfError::InvalidParameter(format!(
            "level must lie in {min}..=20, got {level}"
        )));
    }
    Ok(())
}

/// `I = 1 ⊗ Id`, `J = Id ⊗ 1` with the split `ceil(N/2)`, `floor(N/2)`.
pub fn gen_kron1(level: u32) -> Result<SupportPair> {
    check_level(level, 1)?;
    Ok(kron_supports(level.div_ceil(2), level / 2))
}

/// `I = 1_2 ⊗ Id`, `J = Id_2 ⊗ 1` with blocks of size `2^(N-1)`.
pub fn gen_kron2(level: u32) -> Result<SupportPair> {
    check_level(level, 1)?;
    Ok(kron_supports(1, level - 1))
}

/// Sylvester Hadamard matrix of order `2^N`.
pub fn hadamard(level: u32) -> Result<DenseMatrix> {
    check_level(level, 0)?;
    let h1 = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]]).expect("literal");
    let mut h = DenseMatrix::identity(1);
    for _ in 0..level {
        h = kron(&h1, &h);
    }
    Ok(h)
}

/// Exact sparse factors of the Hadamard matrix on the first Kronecker family.
pub fn hadamard_kron1_factors(level: u32) -> Result<FactorPair> {
    check_level(level, 1)?;
    let (a, b) = (level.div_ceil(2), level / 2);
    let x = kron(&hadamard(a)?, &DenseMatrix::identity(1 << b));
    let y = kron(&DenseMatrix::identity(1 << a), &hadamard(b)?.transpose());
    FactorPair::new(x, y)
}

fn hodlr_masks(level: u32) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    if level == 0 {
        return (vec![vec![true]], vec![vec![true]]);
    }
    let (pi, pj) = hodlr_masks(level - 1);
    let h = 1usize << (level - 1);
    let sub = pi[0].len();
    let width = 2 + 2 * sub;
    let mut left = vec![vec![false; width]; 2 * h];
    let mut right = vec![vec![false; width]; 2 * h];
    for i in 0..h {
        left[i][0] = true;
        left[h + i][1] = true;
        right[i][1] = true;
        right[h + i][0] = true;
        for c in 0..sub {
            left[i][2 + c] = pi[i][c];
            left[h + i][2 + sub + c] = pi[i][c];
            right[i][2 + c] = pj[i][c];
            right[h + i][2 + sub + c] = pj[i][c];
        }
    }
    (left, right)
}

/// Hierarchical off-diagonal low-rank pattern of size `2^N x (3 * 2^N - 2)`.
pub fn gen_hodlr(level: u32) -> Result<SupportPair> {
    check_level(level, 1)?;
    let (l, r) = hodlr_masks(level);
    let mk = |m: &Vec<Vec<bool>>| SupportMask::from_fn(m.len(), m[0].len(), |i, j| m[i][j]);
    SupportPair::new(mk(&l), mk(&r))
}

/// Random matrix with rank-one off-diagonal blocks at every level, built
/// from standard normal draws.
pub fn random_hodlr_matrix<R: Rng + ?Sized>(level: u32, rng: &mut R) -> Result<DenseMatrix> {
    check_level(level, 0)?;
    Ok(random_hodlr_rec(level, rng))
}

fn random_hodlr_rec<R: Rng + ?Sized>(level: u32, rng: &mut R) -> DenseMatrix {
    if level == 0 {
        return DenseMatrix::from_fn(1, 1, |_, _| rng.sample(StandardNormal));
    }
    let h = 1usize << (level - 1);
    let mut vec = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.sample(StandardNormal)).collect() };
    let (u1, v1, u2, v2) = (vec(h), vec(h), vec(h), vec(h));
    let top = random_hodlr_rec(level - 1, rng);
    let bottom = random_hodlr_rec(level - 1, rng);
    DenseMatrix::from_fn(2 * h, 2 * h, |i, j| match (i < h, j < h) {
        (true, true) => top[(i, j)],
        (true, false) => u1[i] * v1[j - h],
        (false, true) => u2[i - h] * v2[j],
        (false, false) => bottom[(i - h, j - h)],
    })
}

/// Random dense target with full supports of rank `r`.
pub fn random_matrix<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

/// Instance whose infimum `0` is not attained.
pub fn unattained_lu_instance() -> ProblemInstance {
    let a = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).expect("literal");
    let p = SupportMask::from_pairs(2, 2, [(0, 0), (0, 1), (1, 1)]).expect("literal");
    let s = SupportPair::new(p.clone(), p).expect("same rank");
    ProblemInstance::new(a, s).expect("shapes agree")
}

/// Feasible sequence for [`unattained_lu_instance`]; the residual has
/// Frobenius norm `1 / k^2` while the largest entry is `k`.
pub fn unattained_lu_witness(k: f64) -> Result<FactorPair> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(FsmfError::InvalidParameter(format!("k must be positive, got {k}")));
    }
    FactorPair::new(
        DenseMatrix::from_rows(&[[-k, k], [0.0, 1.0 / k]])?,
        DenseMatrix::from_rows(&[[k, k], [0.0, 1.0 / k]])?,
    )
}
