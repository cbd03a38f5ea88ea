//! First-order baselines: GD, momentum, ADAM and PALM.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{FsmfError, Result};
use crate::matrix::{DenseMatrix, FactorPair, ProblemInstance, SupportPair};
use crate::SolveReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Gd,
    Momentum,
    Adam,
    Palm,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gd => "gd",
            Self::Momentum => "momentum",
            Self::Adam => "adam",
            Self::Palm => "palm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(Self::Gd),
            "momentum" => Ok(Self::Momentum),
            "adam" => Ok(Self::Adam),
            "palm" => Ok(Self::Palm),
            other => Err(FsmfError::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Feasible set enforced after each update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// Zero everything outside `(I, J)`.
    FixedSupport,
    /// Keep the `kx` (resp. `ky`) largest magnitudes of `X` (resp. `Y`);
    /// ties go to the lower row-major index.
    HardThreshold { kx: usize, ky: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterativeConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop once `log10 ||A - X Y^T||_F` is at or below this value.
    pub stop_log10: f64,
    pub momentum: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// PALM step is `1 / (gamma * L)` with `L = 2 ||other factor||_op^2`.
    pub palm_gamma: f64,
    pub palm_max_step: f64,
    pub divergence_threshold: f64,
    pub projection: Projection,
}

impl Default for IterativeConfig {
    fn default() -> Self {
        Self {
            method: Method::Gd,
            learning_rate: 1e-2,
            max_iters: 10_000,
            seed: 0,
            stop_log10: -10.0,
            momentum: 0.9,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            palm_gamma: 1.01,
            palm_max_step: 1e6,
            divergence_threshold: 1e15,
            projection: Projection::FixedSupport,
        }
    }
}

impl IterativeConfig {
    pub fn new(method: Method, learning_rate: f64) -> Self {
        Self {
            method,
            learning_rate,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.method != Method::Palm && !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
        {
            return Err(FsmfError::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.palm_gamma > 1.0) {
            return Err(FsmfError::InvalidParameter("palm_gamma must exceed 1".into()));
        }
        Ok(())
    }
}

/// Learning rates `{5 * 10^-k, 10^-k : k = 1..4}`, largest first.
pub fn default_grid() -> Vec<f64> {
    let mut g = Vec::new();
    for k in 1..=4 {
        let p = 10f64.powi(-k);
        g.push(5.0 * p);
        g.push(p);
    }
    g
}

/// Random feasible start: on the support, column `k` of `X` is drawn from
/// `N(0, 1 / |I[:, k]|)` and likewise for `Y`.
pub fn init_factors(supports: &SupportPair, seed: u64) -> FactorPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |mask: &crate::SupportMask| {
        let mut m = DenseMatrix::zeros(mask.rows(), mask.cols());
        for k in 0..mask.cols() {
            let rows = mask.column(k);
            if rows.is_empty() {
                continue;
            }
            let normal = Normal::new(0.0, 1.0 / (rows.len() as f64).sqrt()).expect("positive std");
            for &i in rows {
                m[(i, k)] = normal.sample(&mut rng);
            }
        }
        m
    };
    let x = draw(supports.left());
    let y = draw(supports.right());
    FactorPair { x, y }
}

/// Read-only view of the current iterate handed to observers.
pub struct IterateView<'a> {
    pub iteration: usize,
    pub loss: f64,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub rank: usize,
}

impl IterateView<'_> {
    pub fn x(&self, i: usize, k: usize) -> f64 {
        self.x[i * self.rank + k]
    }

    pub fn y(&self, j: usize, k: usize) -> f64 {
        self.y[j * self.rank + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(self.y).fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct IterativeOutcome {
    pub factors: FactorPair,
    pub report: SolveReport,
}

/// Sparse column structure of one factor: the rows allowed in each column.
struct Pattern {
    cols: Vec<Vec<usize>>,
}

struct Workspace<'a> {
    a: &'a DenseMatrix,
    n: usize,
    r: usize,
    px: Pattern,
    py: Pattern,
    res: Vec<f64>,
}

impl Workspace<'_> {
    /// Recomputes `A - X Y^T` and returns its squared norm.
    fn residual(&mut self, x: &[f64], y: &[f64]) -> f64 {
        let (n, r) = (self.n, self.r);
        self.res.copy_from_slice(self.a.as_slice());
        for k in 0..r {
            for &i in &self.px.cols[k] {
                let xi = x[i * r + k];
                if xi == 0.0 {
                    continue;
                }
                let row = &mut self.res[i * n..(i + 1) * n];
                for &j in &self.py.cols[k] {
                    row[j] -= xi * y[j * r + k];
                }
            }
        }
        self.res.iter().map(|v| v * v).sum()
    }

    /// Masked `dL/dX = -2 R Y` into `g`.
    fn grad_x(&self, y: &[f64], g: &mut [f64]) {
        let (n, r) = (self.n, self.r);
        for k in 0..r {
            for &i in &self.px.cols[k] {
                let row = &self.res[i * n..(i + 1) * n];
                let mut s = 0.0;
                for &j in &self.py.cols[k] {
                    s += row[j] * y[j * r + k];
                }
                g[i * r + k] = -2.0 * s;
            }
        }
    }

    /// Masked `dL/dY = -2 R^T X` into `g`.
    fn grad_y(&self, x: &[f64], g: &mut [f64]) {
        let (n, r) = (self.n, self.r);
        for k in 0..r {
            for &j in &self.py.cols[k] {
                let mut s = 0.0;
                for &i in &self.px.cols[k] {
                    s += self.res[i * n + j] * x[i * r + k];
                }
                g[j * r + k] = -2.0 * s;
            }
        }
    }
}

/// Largest eigenvalue of `F^T F` by power iteration, warm-started from `v`.
fn spectral_norm_sq(f: &[f64], rows: usize, r: usize, v: &mut Vec<f64>) -> f64 {
    let mut gram = vec![0.0; r * r];
    for i in 0..rows {
        let row = &f[i * r..(i + 1) * r];
        for a in 0..r {
            if row[a] == 0.0 {
                continue;
            }
            for b in 0..r {
                gram[a * r + b] += row[a] * row[b];
            }
        }
    }
    if gram.iter().all(|&g| g == 0.0) {
        return 0.0;
    }
    if v.len() != r || v.iter().all(|&x| x == 0.0) {
        *v = (0..r).map(|i| 1.0 + 0.1 * i as f64 / r as f64).collect();
    }
    let mut lambda = 0.0;
    let mut w = vec![0.0; r];
    for it in 0..1000 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        for a in 0..r {
            w[a] = (0..r).map(|b| gram[a * r + b] * v[b]).sum();
        }
        let next: f64 = v.iter().zip(&w).map(|(p, q)| p * q).sum();
        std::mem::swap(v, &mut w);
        if it >= 2 && (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Guard against a start vector orthogonal to the top eigenvector.
    let trace: f64 = (0..r).map(|a| gram[a * r + a]).sum();
    lambda.max(trace / r as f64)
}

/// PALM step for one block given the other factor `f`.
pub fn palm_step(other: &DenseMatrix, gamma: f64, max_step: f64) -> f64 {
    let mut v = Vec::new();
    let l = 2.0 * spectral_norm_sq(other.as_slice(), other.rows(), other.cols(), &mut v);
    step_from_lipschitz(l, gamma, max_step)
}

fn step_from_lipschitz(l: f64, gamma: f64, max_step: f64) -> f64 {
    if l <= 0.0 {
        max_step
    } else {
        (1.0 / (gamma * l)).min(max_step)
    }
}

/// Zeroes all but the `k` largest magnitudes; ties keep the lower index.
pub fn hard_threshold(v: &mut [f64], k: usize) {
    if k >= v.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    for &i in &idx[k..] {
        v[i] = 0.0;
    }
}

fn support_changes(before: &[f64], after: &[f64]) -> usize {
    before
        .iter()
        .zip(after)
        .filter(|(a, b)| (**a != 0.0) != (**b != 0.0))
        .count()
}

pub fn run_iterative(instance: &ProblemInstance, config: &IterativeConfig) -> Result<IterativeOutcome> {
    let init = init_factors(instance.supports(), config.seed);
    run_from(instance, config, init, |_| {})
}

/// Runs from a given start; `observe` sees every iterate at which the loss is
/// evaluated.
pub fn run_from(
    instance: &ProblemInstance,
    config: &IterativeConfig,
    init: FactorPair,
    mut observe: impl FnMut(&IterateView<'_>),
) -> Result<IterativeOutcome> {
    config.validate()?;
    let start = Instant::now();
    let supports = instance.supports();
    let (m, n, r) = instance.shape();
    if init.x.shape() != (m, r) || init.y.shape() != (n, r) {
        return Err(FsmfError::DimensionMismatch(
            "initial factors do not match the instance".into(),
        ));
    }
    let pattern = |mask: &crate::SupportMask, rows: usize| match config.projection {
        Projection::FixedSupport => Pattern {
            cols: (0..r).map(|k| mask.column(k).to_vec()).collect(),
        },
        Projection::HardThreshold { .. } => Pattern {
            cols: (0..r).map(|_| (0..rows).collect()).collect(),
        },
    };
    let mut ws = Workspace {
        a: instance.target(),
        n,
        r,
        px: pattern(supports.left(), m),
        py: pattern(supports.right(), n),
        res: vec![0.0; m * n],
    };
    let mut x = init.x.into_vec();
    let mut y = init.y.into_vec();
    match config.projection {
        Projection::FixedSupport => {
            mask_in_place(&mut x, &ws.px, r);
            mask_in_place(&mut y, &ws.py, r);
        }
        Projection::HardThreshold { kx, ky } => {
            hard_threshold(&mut x, kx);
            hard_threshold(&mut y, ky);
        }
    }
    let mut gx = vec![0.0; m * r];
    let mut gy = vec![0.0; n * r];
    let mut state_x = vec![0.0; m * r];
    let mut state_y = vec![0.0; n * r];
    let mut second_x = vec![0.0; m * r];
    let mut second_y = vec![0.0; n * r];
    let mut warm_x = Vec::new();
    let mut warm_y = Vec::new();
    let mut prev_x = x.clone();
    let mut prev_y = y.clone();
    let track_support = config.method == Method::Palm;
    let mut changes = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut done = 0usize;
    let lr = config.learning_rate;
    let thr = config.divergence_threshold;

    loop {
        let l = ws.residual(&x, &y);
        trace.push((done, l));
        if !l.is_finite() || l > thr {
            diverged = true;
            x.copy_from_slice(&prev_x);
            y.copy_from_slice(&prev_y);
            break;
        }
        observe(&IterateView {
            iteration: done,
            loss: l,
            x: &x,
            y: &y,
            rank: r,
        });
        if 0.5 * l.log10() <= config.stop_log10 {
            converged = true;
            break;
        }
        if done == config.max_iters {
            break;
        }
        prev_x.copy_from_slice(&x);
        prev_y.copy_from_slice(&y);
        let t = (done + 1) as f64;
        match config.method {
            Method::Gd => {
                ws.grad_x(&y, &mut gx);
                ws.grad_y(&x, &mut gy);
                axpy(&mut x, -lr, &gx);
                axpy(&mut y, -lr, &gy);
            }
            Method::Momentum => {
                ws.grad_x(&y, &mut gx);
                ws.grad_y(&x, &mut gy);
                let beta = config.momentum;
                for (b, g) in state_x.iter_mut().zip(&gx) {
                    *b = beta * *b + g;
                }
                for (b, g) in state_y.iter_mut().zip(&gy) {
                    *b = beta * *b + g;
                }
                axpy(&mut x, -lr, &state_x);
                axpy(&mut y, -lr, &state_y);
            }
            Method::Adam => {
                ws.grad_x(&y, &mut gx);
                ws.grad_y(&x, &mut gy);
                adam_update(&mut x, &gx, &mut state_x, &mut second_x, t, config);
                adam_update(&mut y, &gy, &mut state_y, &mut second_y, t, config);
            }
            Method::Palm => {
                ws.grad_x(&y, &mut gx);
                let sx = step_from_lipschitz(
                    2.0 * spectral_norm_sq(&y, n, r, &mut warm_y),
                    config.palm_gamma,
                    config.palm_max_step,
                );
                axpy(&mut x, -sx, &gx);
                if let Projection::HardThreshold { kx, .. } = config.projection {
                    hard_threshold(&mut x, kx);
                }
                ws.residual(&x, &y);
                ws.grad_y(&x, &mut gy);
                let sy = step_from_lipschitz(
                    2.0 * spectral_norm_sq(&x, m, r, &mut warm_x),
                    config.palm_gamma,
                    config.palm_max_step,
                );
                axpy(&mut y, -sy, &gy);
                if let Projection::HardThreshold { ky, .. } = config.projection {
                    hard_threshold(&mut y, ky);
                }
            }
        }
        done += 1;
        if track_support {
            changes.push((
                done,
                support_changes(&prev_x, &x),
                support_changes(&prev_y, &y),
            ));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite() || v.abs() > thr) {
            diverged = true;
            x.copy_from_slice(&prev_x);
            y.copy_from_slice(&prev_y);
            trace.push((done, f64::INFINITY));
            break;
        }
    }

    let factors = FactorPair {
        x: DenseMatrix::from_raw(m, r, x),
        y: DenseMatrix::from_raw(n, r, y),
    };
    let final_loss = if diverged {
        f64::INFINITY
    } else {
        trace.last().map_or(0.0, |p| p.1)
    };
    let report = SolveReport {
        method_tag: config.method.as_str().into(),
        final_loss,
        loss_trace: trace,
        wall_time: start.elapsed().as_secs_f64(),
        iterations: done,
        learning_rate: (config.method != Method::Palm).then_some(lr),
        converged,
        diverged,
        certificate: None,
        support_change_trace: track_support.then_some(changes),
    };
    Ok(IterativeOutcome { factors, report })
}

fn mask_in_place(v: &mut [f64], p: &Pattern, r: usize) {
    let mut keep = vec![false; v.len()];
    for (k, rows) in p.cols.iter().enumerate() {
        for &i in rows {
            keep[i * r + k] = true;
        }
    }
    for (x, k) in v.iter_mut().zip(keep) {
        if !k {
            *x = 0.0;
        }
    }
}

fn axpy(x: &mut [f64], a: f64, g: &[f64]) {
    for (p, q) in x.iter_mut().zip(g) {
        *p += a * q;
    }
}

fn adam_update(
    x: &mut [f64],
    g: &[f64],
    m1: &mut [f64],
    m2: &mut [f64],
    t: f64,
    c: &IterativeConfig,
) {
    let (b1, b2) = (c.adam_beta1, c.adam_beta2);
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    for i in 0..x.len() {
        m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
        m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
        let mh = m1[i] / c1;
        let vh = m2[i] / c2;
        x[i] -= c.learning_rate * mh / (vh.sqrt() + c.adam_eps);
    }
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub best: IterativeOutcome,
    /// One report per learning rate, in grid order.
    pub runs: Vec<SolveReport>,
}

/// Runs every learning rate and keeps the converged run with the fewest
/// iterations; earlier grid entries win ties. If nothing converged, the run
/// with the lowest finite loss is returned.
pub fn grid_search(
    instance: &ProblemInstance,
    base: &IterativeConfig,
    rates: &[f64],
    parallel: bool,
) -> Result<GridResult> {
    if rates.is_empty() {
        return Err(FsmfError::InvalidParameter("empty learning-rate grid".into()));
    }
    let one = |&lr: &f64| {
        let mut c = base.clone();
        c.learning_rate = lr;
        run_iterative(instance, &c)
    };
    let outcomes: Vec<IterativeOutcome> = if parallel {
        rates.par_iter().map(one).collect::<Result<_>>()?
    } else {
        rates.iter().map(one).collect::<Result<_>>()?
    };
    let best = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.report.converged)
        .min_by_key(|(i, o)| (o.report.iterations, *i))
        .map(|(i, _)| i)
        .or_else(|| {
            outcomes
                .iter()
                .enumerate()
                .filter(|(_, o)| o.report.final_loss.is_finite())
                .min_by(|a, b| a.1.report.final_loss.total_cmp(&b.1.report.final_loss))
                .map(|(i, _)| i)
        })
        .unwrap_or(0);
    let runs = outcomes.iter().map(|o| o.report.clone()).collect();
    Ok(GridResult {
        best: outcomes[best].clone(),
        runs,
    })
}
