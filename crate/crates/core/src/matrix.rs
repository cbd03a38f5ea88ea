use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{FsmfError, Result};

/// Row-major dense matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FsmfError::DimensionMismatch(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(FsmfError::NonFinite {
                row: p / cols.max(1),
                col: p % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(FsmfError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|v| v * s).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(FsmfError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        ))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(FsmfError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for p in 0..self.cols {
                let a = self[(i, p)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(p);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`.
    pub fn matmul_t(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(FsmfError::DimensionMismatch(format!(
                "cannot form {}x{} times transpose of {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a, other.row(j));
            }
        }
        Ok(out)
    }

    /// Entrywise product with a 0/1 pattern.
    pub fn masked(&self, mask: &SupportMask) -> Result<Self> {
        if self.shape() != mask.shape() {
            return Err(FsmfError::DimensionMismatch(format!(
                "matrix {}x{} vs mask {}x{}",
                self.rows,
                self.cols,
                mask.rows(),
                mask.cols()
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            if mask.contains(i, j) {
                self[(i, j)]
            } else {
                0.0
            }
        }))
    }

    /// Submatrix with the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |a, b| self[(rows[a], cols[b])])
    }

    pub fn support(&self) -> SupportMask {
        SupportMask::from_fn(self.rows, self.cols, |i, j| self[(i, j)] != 0.0)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Binary pattern over an `rows x cols` grid.
///
/// Entries are kept as a sorted coordinate list together with per-column
/// bitsets, so membership tests and column scans are both cheap.
#[derive(Clone, PartialEq, Eq)]
pub struct SupportMask {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
    col_rows: Vec<Vec<usize>>,
    col_bits: Vec<Vec<u64>>,
}

impl SupportMask {
    /// Builds a mask from explicit `(row, col)` pairs; duplicates are rejected.
    pub fn from_pairs(
        rows: usize,
        cols: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let words = rows.div_ceil(64);
        let mut col_bits = vec![vec![0u64; words]; cols];
        let mut entries = Vec::new();
        for (i, j) in pairs {
            if i >= rows || j >= cols {
                return Err(FsmfError::IndexOutOfRange {
                    row: i,
                    col: j,
                    rows,
                    cols,
                });
            }
            let w = &mut col_bits[j][i / 64];
            let bit = 1u64 << (i % 64);
            if *w & bit != 0 {
                return Err(FsmfError::DuplicateEntry { row: i, col: j });
            }
            *w |= bit;
            entries.push((i, j));
        }
        entries.sort_unstable();
        let mut col_rows = vec![Vec::new(); cols];
        for &(i, j) in &entries {
            col_rows[j].push(i);
        }
        Ok(Self {
            rows,
            cols,
            entries,
            col_rows,
            col_bits,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut pairs = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    pairs.push((i, j));
                }
            }
        }
        Self::from_pairs(rows, cols, pairs).expect("generated pairs are unique and in range")
    }

    /// Builds a mask from rows of 0/1 flags.
    pub fn from_binary_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut pairs = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(FsmfError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            for (j, &v) in r.iter().enumerate() {
                match v {
                    0 => {}
                    1 => pairs.push((i, j)),
                    _ => {
                        return Err(FsmfError::InvalidParameter(format!(
                            "mask entry ({i}, {j}) is {v}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Self::from_pairs(rows.len(), cols, pairs)
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| false)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols && self.col_bits[j][i / 64] & (1u64 << (i % 64)) != 0
    }

    /// Sorted row indices present in column `j`.
    pub fn column(&self, j: usize) -> &[usize] {
        &self.col_rows[j]
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| {
            if self.contains(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn to_binary_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.contains(i, j) as u8).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_pairs(self.cols, self.rows, self.entries.iter().map(|&(i, j)| (j, i)))
            .expect("transpose of a valid mask is valid")
    }

    /// Keeps only the listed columns, renumbered in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let pairs = cols
            .iter()
            .enumerate()
            .flat_map(|(new, &old)| self.col_rows[old].iter().map(move |&i| (i, new)));
        Self::from_pairs(self.rows, cols.len(), pairs).expect("column selection is valid")
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.entries.iter().all(|&(i, j)| other.contains(i, j))
    }
}

impl fmt::Debug for SupportMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SupportMask {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: String = (0..self.cols)
                .map(|j| if self.contains(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}

/// Left and right support patterns `(I, J)` sharing the rank dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportPair {
    left: SupportMask,
    right: SupportMask,
}

impl SupportPair {
    pub fn new(left: SupportMask, right: SupportMask) -> Result<Self> {
        if left.cols() != right.cols() {
            return Err(FsmfError::DimensionMismatch(format!(
                "left support has {} columns, right support has {}",
                left.cols(),
                right.cols()
            )));
        }
        Ok(Self { left, right })
    }

    pub fn full(m: usize, n: usize, r: usize) -> Self {
        Self {
            left: SupportMask::full(m, r),
            right: SupportMask::full(n, r),
        }
    }

    pub fn left(&self) -> &SupportMask {
        &self.left
    }

    pub fn right(&self) -> &SupportMask {
        &self.right
    }

    pub fn m(&self) -> usize {
        self.left.rows()
    }

    pub fn n(&self) -> usize {
        self.right.rows()
    }

    pub fn rank(&self) -> usize {
        self.left.cols()
    }

    pub fn transpose(&self) -> Self {
        Self {
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }

    /// Checks that `(x, y)` has the right shapes and respects both patterns.
    pub fn check_feasible(&self, f: &FactorPair) -> Result<()> {
        if f.x.shape() != self.left.shape() || f.y.shape() != self.right.shape() {
            return Err(FsmfError::DimensionMismatch(format!(
                "factors {}x{} / {}x{} vs supports {}x{} / {}x{}",
                f.x.rows(),
                f.x.cols(),
                f.y.rows(),
                f.y.cols(),
                self.left.rows(),
                self.left.cols(),
                self.right.rows(),
                self.right.cols()
            )));
        }
        for (m, mask, name) in [(&f.x, &self.left, "X"), (&f.y, &self.right, "Y")] {
            for i in 0..m.rows() {
                for k in 0..m.cols() {
                    if m[(i, k)] != 0.0 && !mask.contains(i, k) {
                        return Err(FsmfError::PreconditionViolation(format!(
                            "{name}[{i},{k}] is nonzero outside its support"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_feasible(&self, f: &FactorPair) -> bool {
        self.check_feasible(f).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
}

impl FactorPair {
    pub fn new(x: DenseMatrix, y: DenseMatrix) -> Result<Self> {
        if x.cols() != y.cols() {
            return Err(FsmfError::DimensionMismatch(format!(
                "X has {} columns, Y has {}",
                x.cols(),
                y.cols()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn zeros(m: usize, n: usize, r: usize) -> Self {
        Self {
            x: DenseMatrix::zeros(m, r),
            y: DenseMatrix::zeros(n, r),
        }
    }

    pub fn product(&self) -> DenseMatrix {
        self.x.matmul_t(&self.y).expect("factor ranks agree")
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.frobenius_norm_sq() + self.y.frobenius_norm_sq()
    }
}

/// Target matrix together with its admissible supports.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    target: DenseMatrix,
    supports: SupportPair,
}

impl ProblemInstance {
    pub fn new(target: DenseMatrix, supports: SupportPair) -> Result<Self> {
        if target.rows() != supports.m() || target.cols() != supports.n() {
            return Err(FsmfError::DimensionMismatch(format!(
                "target is {}x{} but supports imply {}x{}",
                target.rows(),
                target.cols(),
                supports.m(),
                supports.n()
            )));
        }
        Ok(Self { target, supports })
    }

    pub fn target(&self) -> &DenseMatrix {
        &self.target
    }

    pub fn supports(&self) -> &SupportPair {
        &self.supports
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.supports.m(), self.supports.n(), self.supports.rank())
    }
}
