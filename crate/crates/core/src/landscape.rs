//! Spurious valleys and minima, the slice infimum curve and feasible paths.

use std::sync::Arc;

use crate::error::{FsmfError, Result};
use crate::matrix::{DenseMatrix, FactorPair, ProblemInstance, SupportPair};
use crate::model::loss;
use crate::support::{spurious_witness, SpuriousWitness};
use crate::svd::{svd, truncated_svd};

/// Infimum of the loss on the slice `sigma = const` for the valley block
/// `[[1, 1], [1, 0]]`, in closed form.
pub fn g_sigma(sigma: f64) -> f64 {
    let p = sigma * sigma + 3.0;
    let q = (sigma + 1.0) * (sigma + 1.0);
    let disc = (p * p - 4.0 * q).max(0.0);
    2.0 * q / (p + disc.sqrt())
}

/// Infimum of the loss on the slice for an arbitrary `2 x 2` block: the
/// smallest squared singular value of `block - sigma * e2 e2^T`.
pub fn slice_infimum(block: [[f64; 2]; 2], sigma: f64) -> f64 {
    let m = DenseMatrix::from_rows(&[
        [block[0][0], block[0][1]],
        [block[1][0], block[1][1] - sigma],
    ])
    .expect("finite block");
    let s = svd(&m).s[1];
    s * s
}

/// Where the canonical `2 x 2` problem sits inside a larger one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Embedding {
    pub rows: [usize; 2],
    pub cols: [usize; 2],
    /// Factor column `k` of the witness, then a second column whose support
    /// also contains `(i2, j2)`.
    pub factor_cols: [usize; 2],
}

impl Embedding {
    pub fn from_witness(supports: &SupportPair, w: &SpuriousWitness) -> Result<Self> {
        let inside = |k: usize, i: usize, j: usize| {
            supports.left().contains(i, k) && supports.right().contains(j, k)
        };
        for (i, j) in [(w.i1, w.j1), (w.i1, w.j2), (w.i2, w.j1), (w.i2, w.j2)] {
            if !inside(w.k, i, j) {
                return Err(FsmfError::PreconditionViolation(format!(
                    "({i}, {j}) is not in the rank-one support of column {}",
                    w.k
                )));
            }
        }
        let l = (0..supports.rank())
            .find(|&l| l != w.k && inside(l, w.i2, w.j2))
            .ok_or_else(|| {
                FsmfError::PreconditionViolation(
                    "no second rank-one support contains (i2, j2)".into(),
                )
            })?;
        for (i, j) in [(w.i1, w.j1), (w.i1, w.j2), (w.i2, w.j1)] {
            if (0..supports.rank()).any(|p| p != w.k && inside(p, i, j)) {
                return Err(FsmfError::PreconditionViolation(format!(
                    "({i}, {j}) is covered by more than one rank-one support"
                )));
            }
        }
        Ok(Self {
            rows: [w.i1, w.i2],
            cols: [w.j1, w.j2],
            factor_cols: [w.k, l],
        })
    }

    fn target(&self, m: usize, n: usize, block: [[f64; 2]; 2]) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(m, n);
        for p in 0..2 {
            for q in 0..2 {
                a[(self.rows[p], self.cols[q])] = block[p][q];
            }
        }
        a
    }

    /// Places `2 x 2` factor blocks at the embedded rows and factor columns.
    fn factors(&self, m: usize, n: usize, r: usize, x: [[f64; 2]; 2], y: [[f64; 2]; 2]) -> FactorPair {
        let mut fx = DenseMatrix::zeros(m, r);
        let mut fy = DenseMatrix::zeros(n, r);
        for p in 0..2 {
            for q in 0..2 {
                fx[(self.rows[p], self.factor_cols[q])] = x[p][q];
                fy[(self.cols[p], self.factor_cols[q])] = y[p][q];
            }
        }
        FactorPair { x: fx, y: fy }
    }
}

/// `sum_{p != k} X[i2, p] Y[j2, p]`.
pub fn sigma_coordinate(f: &FactorPair, e: &Embedding) -> f64 {
    let (i2, j2, k) = (e.rows[1], e.cols[1], e.factor_cols[0]);
    (0..f.x.cols())
        .filter(|&p| p != k)
        .map(|p| f.x[(i2, p)] * f.y[(j2, p)])
        .sum()
}

#[derive(Clone, Debug)]
pub struct SpuriousValley {
    pub instance: ProblemInstance,
    pub embedding: Embedding,
    /// Point with `sigma = 5` and loss `g(5)`.
    pub in_valley: FactorPair,
    /// Zero-loss point with `sigma = -1`.
    pub optimum: FactorPair,
}

pub const VALLEY_BLOCK: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, 0.0]];

fn resolve_witness(supports: &SupportPair, witness: Option<SpuriousWitness>) -> Result<SpuriousWitness> {
    witness.or_else(|| spurious_witness(supports)).ok_or_else(|| {
        FsmfError::PreconditionViolation("supports admit no spurious witness".into())
    })
}

/// Embeds the valley block; the in-valley point pins `sigma = 5` and fits
/// column `k` optimally, so it sits at the bottom of its slice.
pub fn build_spurious_valley_instance(
    supports: &SupportPair,
    witness: Option<SpuriousWitness>,
) -> Result<SpuriousValley> {
    let w = resolve_witness(supports, witness)?;
    let e = Embedding::from_witness(supports, &w)?;
    let (m, n, r) = (supports.m(), supports.n(), supports.rank());
    let instance = ProblemInstance::new(e.target(m, n, VALLEY_BLOCK), supports.clone())?;
    let sigma = 5.0;
    let shifted = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, -sigma]])?;
    let (u, v) = truncated_svd(&shifted, 1)?;
    let in_valley = e.factors(
        m,
        n,
        r,
        [[u[(0, 0)], 0.0], [u[(1, 0)], 1.0]],
        [[v[(0, 0)], 0.0], [v[(1, 0)], sigma]],
    );
    let optimum = e.factors(m, n, r, [[1.0, 0.0], [1.0, 1.0]], [[1.0, 0.0], [1.0, -1.0]]);
    Ok(SpuriousValley {
        instance,
        embedding: e,
        in_valley,
        optimum,
    })
}

#[derive(Clone, Debug)]
pub struct SpuriousMinimum {
    pub instance: ProblemInstance,
    pub embedding: Embedding,
    /// Loss `b^2`, zero masked gradient.
    pub spurious: FactorPair,
    pub optimum: FactorPair,
}

/// Embeds `[[b, 0], [0, a]]` with `a > b > 0`.
pub fn build_spurious_minimum_instance(
    supports: &SupportPair,
    witness: Option<SpuriousWitness>,
    a: f64,
    b: f64,
) -> Result<SpuriousMinimum> {
    if !(a > b && b > 0.0 && a.is_finite()) {
        return Err(FsmfError::InvalidParameter(format!(
            "need a > b > 0, got a = {a}, b = {b}"
        )));
    }
    let w = resolve_witness(supports, witness)?;
    let e = Embedding::from_witness(supports, &w)?;
    let (m, n, r) = (supports.m(), supports.n(), supports.rank());
    let instance = ProblemInstance::new(e.target(m, n, [[b, 0.0], [0.0, a]]), supports.clone())?;
    let spurious = e.factors(m, n, r, [[0.0, 0.0], [a, 0.0]], [[0.0, 0.0], [1.0, 0.0]]);
    let optimum = e.factors(m, n, r, [[b, 0.0], [0.0, a]], [[1.0, 0.0], [0.0, 1.0]]);
    Ok(SpuriousMinimum {
        instance,
        embedding: e,
        spurious,
        optimum,
    })
}

type PathFn = dyn Fn(f64) -> FactorPair + Send + Sync;

/// Continuous map `[0, 1] -> (X, Y)`.
#[derive(Clone)]
pub struct FeasiblePath {
    f: Arc<PathFn>,
}

impl FeasiblePath {
    pub fn new(f: impl Fn(f64) -> FactorPair + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn at(&self, t: f64) -> FactorPair {
        (self.f)(t.clamp(0.0, 1.0))
    }

    /// `samples + 1` equispaced points including both ends.
    pub fn sample(&self, samples: usize) -> Vec<(f64, FactorPair)> {
        let s = samples.max(1);
        (0..=s)
            .map(|i| {
                let t = i as f64 / s as f64;
                (t, self.at(t))
            })
            .collect()
    }
}

fn lerp(a: &DenseMatrix, b: &DenseMatrix, t: f64) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| (1.0 - t) * a[(i, j)] + t * b[(i, j)])
}

/// Straight segment between two factor pairs.
pub fn linear_path(from: FactorPair, to: FactorPair) -> Result<FeasiblePath> {
    if from.x.shape() != to.x.shape() || from.y.shape() != to.y.shape() {
        return Err(FsmfError::DimensionMismatch("path endpoints differ in shape".into()));
    }
    Ok(FeasiblePath::new(move |t| FactorPair {
        x: lerp(&from.x, &to.x, t),
        y: lerp(&from.y, &to.y, t),
    }))
}

/// With `Y` held at zero, move `X` from `start_x` to `X*`; then grow `Y`
/// linearly from zero to `Y*`.
pub fn smart_init_path(
    instance: &ProblemInstance,
    optimum: &FactorPair,
    start_x: &DenseMatrix,
) -> Result<FeasiblePath> {
    let s = instance.supports();
    s.check_feasible(optimum)?;
    s.check_feasible(&FactorPair::new(start_x.clone(), optimum.y.scale(0.0))?)?;
    let x0 = start_x.clone();
    let xs = optimum.x.clone();
    let ys = optimum.y.clone();
    Ok(FeasiblePath::new(move |t| {
        if t <= 0.5 {
            FactorPair {
                x: lerp(&x0, &xs, 2.0 * t),
                y: ys.scale(0.0),
            }
        } else {
            FactorPair {
                x: xs.clone(),
                y: ys.scale(2.0 * t - 1.0),
            }
        }
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathCheck {
    pub feasible: bool,
    pub monotone: bool,
    /// Largest increase of the loss between consecutive samples.
    pub max_increase: f64,
    pub losses: Vec<(f64, f64)>,
}

/// Samples the path and checks feasibility and monotone loss within `tol`.
pub fn check_path(
    path: &FeasiblePath,
    instance: &ProblemInstance,
    samples: usize,
    tol: f64,
) -> Result<PathCheck> {
    let mut feasible = true;
    let mut losses = Vec::with_capacity(samples + 1);
    for (t, f) in path.sample(samples) {
        feasible &= instance.supports().is_feasible(&f);
        losses.push((t, loss(instance.target(), &f)?));
    }
    let max_increase = losses
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PathCheck {
        feasible,
        monotone: max_increase <= tol,
        max_increase,
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_lu;

    #[test]
    fn g_sigma_frozen_values() {
        assert_eq!(g_sigma(-1.0), 0.0);
        assert!((g_sigma(1.0) - 2.0).abs() < 1e-15);
        // 72 / (28 + sqrt(640))
        assert!((g_sigma(5.0) - 1.350_889_359_326_483).abs() < 1e-14);
    }

    #[test]
    fn lu_valley_points() {
        let v = build_spurious_valley_instance(&gen_lu(2), None).unwrap();
        assert_eq!(sigma_coordinate(&v.in_valley, &v.embedding), 5.0);
        assert_eq!(sigma_coordinate(&v.optimum, &v.embedding), -1.0);
        assert_eq!(loss(v.instance.target(), &v.optimum).unwrap(), 0.0);
        let l = loss(v.instance.target(), &v.in_valley).unwrap();
        assert!((l - g_sigma(5.0)).abs() < 1e-12);
    }

    #[test]
    fn minimum_requires_ordered_parameters() {
        assert!(build_spurious_minimum_instance(&gen_lu(2), None, 1.0, 2.0).is_err());
    }
}
