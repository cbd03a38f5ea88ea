//! Rank-one supports, equivalence classes, complete classes and the
//! tractability certificate.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{FsmfError, Result};
use crate::matrix::{DenseMatrix, FactorPair, ProblemInstance, SupportMask, SupportPair};
use crate::svd::svd;

/// Relative threshold on singular values used for numerical rank.
pub const RANK_TOL: f64 = 1e-9;

/// Rectangle `rows x cols` covered by one factor column.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RankOneSupport {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl RankOneSupport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }

    pub fn size(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows.binary_search(&i).is_ok() && self.cols.binary_search(&j).is_ok()
    }

    pub fn intersects(&self, other: &Self) -> bool {
        !self.is_empty()
            && !other.is_empty()
            && self.rows.iter().any(|i| other.rows.binary_search(i).is_ok())
            && self.cols.iter().any(|j| other.cols.binary_search(j).is_ok())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.is_empty()
            || (self.rows.iter().all(|i| other.rows.binary_search(i).is_ok())
                && self.cols.iter().all(|j| other.cols.binary_search(j).is_ok()))
    }

    pub fn to_mask(&self, m: usize, n: usize) -> SupportMask {
        if self.is_empty() {
            return SupportMask::empty(m, n);
        }
        SupportMask::from_pairs(
            m,
            n,
            self.rows
                .iter()
                .flat_map(|&i| self.cols.iter().map(move |&j| (i, j))),
        )
        .expect("rectangle inside the grid")
    }
}

/// `S_k = supp(I[:, k]) x supp(J[:, k])` for every column `k`.
pub fn rank_one_supports(supports: &SupportPair) -> Vec<RankOneSupport> {
    (0..supports.rank())
        .map(|k| RankOneSupport {
            rows: supports.left().column(k).to_vec(),
            cols: supports.right().column(k).to_vec(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceClass {
    /// Columns sharing this rank-one support, ascending.
    pub members: Vec<usize>,
    /// Shared support; empty for columns whose rank-one support is empty.
    pub representative: RankOneSupport,
    pub is_complete: bool,
}

impl EquivalenceClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassPartition {
    /// Ordered by smallest member column.
    pub classes: Vec<EquivalenceClass>,
    /// `class_of[k]` is the index in `classes` of column `k`.
    pub class_of: Vec<usize>,
}

impl ClassPartition {
    /// Columns belonging to a complete equivalence class (the set T).
    pub fn complete_columns(&self) -> Vec<usize> {
        (0..self.class_of.len())
            .filter(|&k| self.classes[self.class_of[k]].is_complete)
            .collect()
    }

    pub fn incomplete_columns(&self) -> Vec<usize> {
        (0..self.class_of.len())
            .filter(|&k| !self.classes[self.class_of[k]].is_complete)
            .collect()
    }

    pub fn is_complete_column(&self, k: usize) -> bool {
        self.classes[self.class_of[k]].is_complete
    }

    /// Union of the representatives of all complete classes, as an `m x n` pattern.
    pub fn complete_union(&self, m: usize, n: usize) -> SupportMask {
        let grid = self.complete_grid(m, n);
        SupportMask::from_fn(m, n, |i, j| grid[i * n + j])
    }

    fn complete_grid(&self, m: usize, n: usize) -> Vec<bool> {
        let mut grid = vec![false; m * n];
        for c in self.classes.iter().filter(|c| c.is_complete) {
            for &i in &c.representative.rows {
                for &j in &c.representative.cols {
                    grid[i * n + j] = true;
                }
            }
        }
        grid
    }
}

/// Groups columns by identical rank-one support. All columns with an empty
/// rank-one support form one class, which counts as complete.
pub fn partition_classes(supports: &SupportPair) -> ClassPartition {
    let s = rank_one_supports(supports);
    let mut index: HashMap<RankOneSupport, usize> = HashMap::new();
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    let mut class_of = Vec::with_capacity(s.len());
    for (k, sk) in s.into_iter().enumerate() {
        let key = if sk.is_empty() {
            RankOneSupport::default()
        } else {
            sk
        };
        let c = *index.entry(key.clone()).or_insert_with(|| {
            classes.push(EquivalenceClass {
                members: Vec::new(),
                representative: key,
                is_complete: false,
            });
            classes.len() - 1
        });
        classes[c].members.push(k);
        class_of.push(c);
    }
    for c in &mut classes {
        let rep = &c.representative;
        c.is_complete = rep.is_empty() || c.members.len() >= rep.rows.len().min(rep.cols.len());
    }
    ClassPartition { classes, class_of }
}

/// `S'_k = S_k \ S_T` for a column outside the complete classes.
#[derive(Clone, Debug, PartialEq)]
pub struct OutsideSupport {
    pub column: usize,
    pub indices: Vec<(usize, usize)>,
    pub rectangular: bool,
    /// `R_k` and `C_k` (empty when `indices` is empty).
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl OutsideSupport {
    pub fn rectangle(&self) -> RankOneSupport {
        RankOneSupport {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
        }
    }
}

/// Split of `(I, J)` into the complete part, the reduced part and the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct Taxonomy {
    /// `S_T` as an `m x n` pattern.
    pub complete_union: SupportMask,
    pub i_t: SupportMask,
    pub j_t: SupportMask,
    pub i_reduced: SupportMask,
    pub j_reduced: SupportMask,
    pub i_rest: SupportMask,
    pub j_rest: SupportMask,
    pub outside: BTreeMap<usize, OutsideSupport>,
}

impl Taxonomy {
    pub fn complete_supports(&self) -> SupportPair {
        SupportPair::new(self.i_t.clone(), self.j_t.clone()).expect("same rank dimension")
    }

    pub fn reduced_supports(&self) -> SupportPair {
        SupportPair::new(self.i_reduced.clone(), self.j_reduced.clone())
            .expect("same rank dimension")
    }
}

/// Computes every `S'_k` for columns outside the complete classes.
pub fn outside_supports(
    supports: &SupportPair,
    partition: &ClassPartition,
) -> BTreeMap<usize, OutsideSupport> {
    let n = supports.n();
    let st = partition.complete_grid(supports.m(), n);
    let mut out = BTreeMap::new();
    for k in partition.incomplete_columns() {
        let rows_k = supports.left().column(k);
        let cols_k = supports.right().column(k);
        let mut indices = Vec::new();
        for &i in rows_k {
            for &j in cols_k {
                if !st[i * n + j] {
                    indices.push((i, j));
                }
            }
        }
        let mut rows: Vec<usize> = indices.iter().map(|p| p.0).collect();
        rows.dedup();
        let mut cols: Vec<usize> = indices.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        cols.dedup();
        let rectangular = indices.len() == rows.len() * cols.len();
        out.insert(
            k,
            OutsideSupport {
                column: k,
                indices,
                rectangular,
                rows,
                cols,
            },
        );
    }
    out
}

pub fn taxonomy_split(supports: &SupportPair, partition: &ClassPartition) -> Result<Taxonomy> {
    let outside = outside_supports(supports, partition);
    if let Some(bad) = outside.values().find(|o| !o.rectangular) {
        return Err(FsmfError::NonRectangularOutsideSupport {
            column: bad.column,
            indices: bad.indices.clone(),
        });
    }
    let split = |mask: &SupportMask, pick: &dyn Fn(&OutsideSupport) -> &Vec<usize>| {
        let mut t = Vec::new();
        let mut red = Vec::new();
        let mut rest = Vec::new();
        for &(i, k) in mask.entries() {
            match outside.get(&k) {
                None => t.push((i, k)),
                Some(o) if pick(o).binary_search(&i).is_ok() => red.push((i, k)),
                Some(_) => rest.push((i, k)),
            }
        }
        let (rows, cols) = mask.shape();
        (
            SupportMask::from_pairs(rows, cols, t).expect("subset of a valid mask"),
            SupportMask::from_pairs(rows, cols, red).expect("subset of a valid mask"),
            SupportMask::from_pairs(rows, cols, rest).expect("subset of a valid mask"),
        )
    };
    let (i_t, i_reduced, i_rest) = split(supports.left(), &|o| &o.rows);
    let (j_t, j_reduced, j_rest) = split(supports.right(), &|o| &o.cols);
    Ok(Taxonomy {
        complete_union: partition.complete_union(supports.m(), supports.n()),
        i_t,
        j_t,
        i_reduced,
        j_reduced,
        i_rest,
        j_rest,
        outside,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TractabilityLevel {
    Unknown,
    ReducibleOutsideCEC,
    DisjointClasses,
}

impl TractabilityLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DisjointClasses => "DisjointClasses",
            Self::ReducibleOutsideCEC => "ReducibleOutsideCEC",
            Self::Unknown => "Unknown",
        }
    }

    pub fn is_certified(&self) -> bool {
        *self != Self::Unknown
    }
}

impl fmt::Display for TractabilityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Indices `(i1, j1, i2, j2, k)`, zero-based, witnessing the local-minimum
/// construction: `(i2, j2)` lies in `S_k` and in at least one other rank-one
/// support, while `(i1, j1)`, `(i2, j1)`, `(i1, j2)` lie in `S_k` only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpuriousWitness {
    pub i1: usize,
    pub j1: usize,
    pub i2: usize,
    pub j2: usize,
    pub k: usize,
}

impl SpuriousWitness {
    pub fn one_based(&self) -> (usize, usize, usize, usize, usize) {
        (self.i1 + 1, self.j1 + 1, self.i2 + 1, self.j2 + 1, self.k + 1)
    }
}

impl fmt::Display for SpuriousWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b, c, d, e) = self.one_based();
        write!(f, "({a},{b},{c},{d},{e})")
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub level: TractabilityLevel,
    pub partition: ClassPartition,
    pub outside: BTreeMap<usize, OutsideSupport>,
    pub spurious_witness: Option<SpuriousWitness>,
}

impl Certificate {
    /// Full split of the supports; fails when some `S'_k` is not rectangular.
    pub fn taxonomy(&self, supports: &SupportPair) -> Result<Taxonomy> {
        taxonomy_split(supports, &self.partition)
    }

    pub fn spurious_condition_met(&self) -> bool {
        self.spurious_witness.is_some()
    }

    pub fn summary(&self) -> String {
        match (&self.level, &self.spurious_witness) {
            (TractabilityLevel::Unknown, Some(w)) => {
                format!("Unknown; spurious condition met at {w}")
            }
            (TractabilityLevel::DisjointClasses, _) if self.partition.classes.len() == 1 => {
                "DisjointClasses (single class)".into()
            }
            (level, _) => level.to_string(),
        }
    }
}

/// Classifies the supports and searches for a spurious-point witness.
pub fn certify(supports: &SupportPair) -> Certificate {
    let partition = partition_classes(supports);
    let outside = outside_supports(supports, &partition);
    let reps: Vec<&RankOneSupport> = partition
        .classes
        .iter()
        .map(|c| &c.representative)
        .filter(|r| !r.is_empty())
        .collect();
    let disjoint = pairwise(&reps, |a, b| !a.intersects(b));
    let level = if disjoint {
        TractabilityLevel::DisjointClasses
    } else if outside.values().all(|o| o.rectangular) {
        let rects: Vec<RankOneSupport> = outside
            .values()
            .map(|o| o.rectangle())
            .filter(|r| !r.is_empty())
            .collect();
        let refs: Vec<&RankOneSupport> = rects.iter().collect();
        if pairwise(&refs, |a, b| a == b || !a.intersects(b)) {
            TractabilityLevel::ReducibleOutsideCEC
        } else {
            TractabilityLevel::Unknown
        }
    } else {
        TractabilityLevel::Unknown
    };
    Certificate {
        level,
        partition,
        outside,
        spurious_witness: spurious_witness(supports),
    }
}

fn pairwise<T>(items: &[&T], ok: impl Fn(&T, &T) -> bool) -> bool {
    for a in 0..items.len() {
        for b in a + 1..items.len() {
            if !ok(items[a], items[b]) {
                return false;
            }
        }
    }
    true
}

/// First witness in lexicographic order of `(k, i2, j2, i1, j1)`.
pub fn spurious_witness(supports: &SupportPair) -> Option<SpuriousWitness> {
    let (m, n, r) = (supports.m(), supports.n(), supports.rank());
    let mut cover = vec![0u32; m * n];
    for k in 0..r {
        for &i in supports.left().column(k) {
            for &j in supports.right().column(k) {
                cover[i * n + j] += 1;
            }
        }
    }
    let only = |i: usize, j: usize| cover[i * n + j] == 1;
    for k in 0..r {
        let rows = supports.left().column(k);
        let cols = supports.right().column(k);
        if rows.len() < 2 || cols.len() < 2 {
            continue;
        }
        for &i2 in rows {
            for &j2 in cols {
                if cover[i2 * n + j2] < 2 {
                    continue;
                }
                for &i1 in rows.iter().filter(|&&i| i != i2) {
                    if !only(i1, j2) {
                        continue;
                    }
                    for &j1 in cols.iter().filter(|&&j| j != j2) {
                        if only(i1, j1) && only(i2, j1) {
                            return Some(SpuriousWitness { i1, j1, i2, j2, k });
                        }
                    }
                }
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassRank {
    pub class_index: usize,
    pub left_rank: usize,
    pub right_rank: usize,
    pub rows: usize,
    pub cols: usize,
}

impl ClassRank {
    pub fn is_full(&self) -> bool {
        self.left_rank == self.rows && self.right_rank == self.cols
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CecRankReport {
    pub per_class: Vec<ClassRank>,
}

impl CecRankReport {
    pub fn all_full(&self) -> bool {
        self.per_class.iter().all(ClassRank::is_full)
    }
}

/// Checks that `X[R_P, P]` and `Y[C_P, P]` have full row rank for every
/// complete class `P`.
pub fn cec_full_rank(
    instance: &ProblemInstance,
    factors: &FactorPair,
    partition: &ClassPartition,
) -> Result<CecRankReport> {
    instance.supports().check_feasible(factors)?;
    let mut per_class = Vec::new();
    for (ci, c) in partition.classes.iter().enumerate() {
        if !c.is_complete {
            continue;
        }
        let rank = |m: &DenseMatrix, idx: &[usize]| {
            if idx.is_empty() {
                0
            } else {
                svd(&m.select(idx, &c.members)).rank(RANK_TOL)
            }
        };
        per_class.push(ClassRank {
            class_index: ci,
            left_rank: rank(&factors.x, &c.representative.rows),
            right_rank: rank(&factors.y, &c.representative.cols),
            rows: c.representative.rows.len(),
            cols: c.representative.cols.len(),
        });
    }
    Ok(CecRankReport { per_class })
}

pub fn is_cec_full_rank(
    instance: &ProblemInstance,
    factors: &FactorPair,
    partition: &ClassPartition,
) -> Result<bool> {
    Ok(cec_full_rank(instance, factors, partition)?.all_full())
}
