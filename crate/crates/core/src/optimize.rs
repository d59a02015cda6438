//! Maximization over the probability simplex: a deterministic grid scan
//! followed by pairwise line searches from the best grid points.
//!
//! Each refinement step moves mass from the support letter with the smallest
//! partial derivative to the letter with the largest one, stopping where the
//! directional derivative vanishes. The returned gap is the Frank-Wolfe gap
//! `max_i g_i - <p, g>`, an upper bound on the suboptimality of concave
//! objectives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::compositions;
use crate::info::Distribution;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Grid spacing is `1 / grid_resolution`.
    pub grid_resolution: usize,
    /// Number of best grid points refined.
    pub refine_starts: usize,
    /// Refinement stops once the pairwise derivative gap falls below this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Use the uniform input directly for modulo-additive channels.
    pub use_symmetry_shortcut: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid_resolution: 10,
            refine_starts: 5,
            tol: 1e-9,
            max_iterations: 2000,
            use_symmetry_shortcut: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("objective is not finite at {0:?}")]
    NonFiniteObjective(Vec<f64>),
}

/// A function on the simplex with a gradient known up to a common constant.
pub trait SimplexObjective<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn value(&self, p: &[T]) -> T;
    fn value_and_gradient(&self, p: &[T]) -> (T, Vec<T>);
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptimum<T = f64> {
    pub value: T,
    pub argmax: Distribution<T>,
    /// Frank-Wolfe gap at the argmax.
    pub gap: T,
}

/// All points of the simplex in `n` letters with coordinates in `(1/g) Z`,
/// plus the uniform point when it is not on the grid.
pub fn simplex_grid<T: Scalar>(n: usize, g: usize) -> Vec<Vec<T>> {
    let gs = T::count(g);
    let mut pts: Vec<Vec<T>> = compositions(g as u32, n)
        .into_iter()
        .map(|c| c.into_iter().map(|k| T::count(k as usize) / gs).collect())
        .collect();
    if !g.is_multiple_of(n) {
        pts.push(vec![T::one() / T::count(n); n]);
    }
    pts
}

/// `max_i g_i - <p, g>`.
pub fn frank_wolfe_gap<T: Scalar>(p: &[T], g: &[T]) -> T {
    let max = g.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::infinity() {
        return max;
    }
    max - p.iter().zip(g).filter(|(pi, _)| **pi > T::zero()).map(|(&a, &b)| a * b).sum::<T>()
}

fn best_pair<T: Scalar>(p: &[T], g: &[T]) -> (usize, usize) {
    let mut i = 0;
    let mut j = usize::MAX;
    for k in 0..p.len() {
        if g[k] > g[i] {
            i = k;
        }
        if p[k] > T::zero() && (j == usize::MAX || g[k] < g[j]) {
            j = k;
        }
    }
    (i, j)
}

fn shifted<T: Scalar>(p: &[T], i: usize, j: usize, t: T) -> Vec<T> {
    let mut q = p.to_vec();
    q[i] = q[i] + t;
    q[j] = (q[j] - t).max(T::zero());
    q
}

/// Local maximization from `start`. Returns `(value, point, gap)`.
pub fn refine<T: Scalar, F: SimplexObjective<T> + ?Sized>(f: &F, start: &[T], cfg: &OptimizerConfig) -> (T, Vec<T>, T) {
    let tol = T::tol(cfg.tol);
    let mut p = start.to_vec();
    let (mut val, mut grad) = f.value_and_gradient(&p);
    for _ in 0..cfg.max_iterations {
        let (i, j) = best_pair(&p, &grad);
        if i == j || !(grad[i] - grad[j] > tol) {
            break;
        }
        let t = line_search(f, &p, i, j);
        if !(t > T::zero()) {
            break;
        }
        let q = shifted(&p, i, j, t);
        let (qv, qg) = f.value_and_gradient(&q);
        if !(qv > val) {
            break;
        }
        p = q;
        val = qv;
        grad = qg;
    }
    let gap = frank_wolfe_gap(&p, &grad);
    (val, p, gap)
}

/// Step along `e_i - e_j` where the directional derivative changes sign.
fn line_search<T: Scalar, F: SimplexObjective<T> + ?Sized>(f: &F, p: &[T], i: usize, j: usize) -> T {
    let deriv = |t: T| {
        let (_, g) = f.value_and_gradient(&shifted(p, i, j, t));
        g[i] - g[j]
    };
    let hi = p[j];
    let dh = deriv(hi);
    if !(dh < T::zero()) {
        return hi;
    }
    let (mut a, mut b) = (T::zero(), hi);
    let (mut fa, mut fb) = (T::infinity(), dh);
    let mut side = 0i8;
    let width = T::tol(1e-15);
    for _ in 0..80 {
        // Illinois false position, falling back to bisection near an
        // infinite endpoint derivative.
        let mut c = if fa.is_finite() { (a * fb - b * fa) / (fb - fa) } else { (a + b) / T::lit(2.0) };
        if !(c > a && c < b) {
            c = (a + b) / T::lit(2.0);
        }
        let fc = deriv(c);
        if fc == T::zero() {
            return c;
        }
        if fc > T::zero() {
            a = c;
            fa = fc;
            if side == 1 {
                fb = fb / T::lit(2.0);
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 && fa.is_finite() {
                fa = fa / T::lit(2.0);
            }
            side = -1;
        }
        if b - a <= width * (T::one() + b) {
            break;
        }
    }
    a
}

fn lex_greater<T: Scalar>(a: &[T], b: &[T]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x > y;
        }
    }
    false
}

/// Grid scan plus refinement from the best `cfg.refine_starts` grid points
/// and from every point in `extra_starts`.
pub fn maximize_on_simplex<T: Scalar, F: SimplexObjective<T> + ?Sized>(
    f: &F,
    cfg: &OptimizerConfig,
    extra_starts: &[Vec<T>],
) -> Result<SimplexOptimum<T>, OptimizeError> {
    if cfg.grid_resolution == 0 {
        return Err(OptimizeError::InvalidConfig("grid resolution must be positive".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(OptimizeError::InvalidConfig("tolerance must be positive".into()));
    }
    let n = f.dim();
    if n == 1 {
        let (v, g) = f.value_and_gradient(&[T::one()]);
        return Ok(SimplexOptimum {
            value: v,
            argmax: Distribution::uniform(1),
            gap: frank_wolfe_gap(&[T::one()], &g),
        });
    }
    let grid = simplex_grid::<T>(n, cfg.grid_resolution);
    let values: Vec<T> = grid.par_iter().map(|p| f.value(p)).collect();
    if let Some(k) = values.iter().position(|v| v.is_nan()) {
        return Err(OptimizeError::NonFiniteObjective(grid[k].iter().map(|v| v.to_f64_lossy()).collect()));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    // Stable sort keeps grid (lexicographic) order among ties.
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("no NaN"));
    let mut starts: Vec<Vec<T>> = order.iter().take(cfg.refine_starts.max(1)).map(|&k| grid[k].clone()).collect();
    starts.extend(extra_starts.iter().cloned());
    let results: Vec<(T, Vec<T>, T)> = starts.par_iter().map(|s| refine(f, s, cfg)).collect();
    let mut best = 0;
    for k in 1..results.len() {
        let (v, ref p, _) = results[k];
        let (bv, ref bp, _) = results[best];
        if v > bv || (v == bv && lex_greater(p, bp)) {
            best = k;
        }
    }
    let (value, p, gap) = results.into_iter().nth(best).expect("at least one start");
    if !value.is_finite() {
        return Err(OptimizeError::NonFiniteObjective(p.iter().map(|v| v.to_f64_lossy()).collect()));
    }
    let argmax = Distribution::from_weights(p).expect("iterates stay on the simplex");
    Ok(SimplexOptimum { value, argmax, gap })
}
