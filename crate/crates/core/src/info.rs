//! Entropy, divergence, mutual information, the common-input deficit,
//! Poisson utilities and Blahut-Arimoto. All quantities are in nats.

use thiserror::Error;

use crate::channel::{binomial_extend, ChannelError, ChannelMatrix, Dmc};
use crate::combinatorics::ln_factorial;
use crate::scalar::Scalar;

/// Tolerance on the total mass of a [`Distribution`].
pub const DISTRIBUTION_SUM_TOL: f64 = 1e-12;
/// Entries this far below zero are treated as rounding and clamped.
pub const NEGATIVE_CLAMP: f64 = 1e-15;
/// Iteration cap for [`blahut_arimoto`].
pub const BA_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("hazard denominator for alpha={alpha}, d={d} is below 1e-300")]
    DegenerateDenominator { alpha: f64, d: usize },
    #[error("Blahut-Arimoto did not converge in {iterations} iterations (gap {gap})")]
    NoConvergence { iterations: usize, gap: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// A probability vector on a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T = f64> {
    probs: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    /// Validates `probs`: tiny negative entries are clamped to zero and the
    /// total must be one within [`DISTRIBUTION_SUM_TOL`].
    pub fn new(mut probs: Vec<T>) -> Result<Self, InfoError> {
        if probs.is_empty() {
            return Err(InfoError::InvalidDistribution("empty".into()));
        }
        let clamp = T::lit(NEGATIVE_CLAMP);
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -clamp {
                return Err(InfoError::InvalidDistribution(format!("entry {i} is {p}")));
            }
            if *p < T::zero() {
                *p = T::zero();
            }
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::tol(DISTRIBUTION_SUM_TOL) {
            return Err(InfoError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Distribution { probs })
    }

    /// Normalizes a nonnegative weight vector.
    pub fn from_weights(weights: Vec<T>) -> Result<Self, InfoError> {
        let sum: T = weights.iter().copied().sum();
        if !(sum > T::zero()) || weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(InfoError::InvalidDistribution("weights must be nonnegative with positive sum".into()));
        }
        Ok(Distribution { probs: weights.into_iter().map(|w| w / sum).collect() })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution on an empty alphabet");
        Distribution { probs: vec![T::one() / T::count(n); n] }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut probs = vec![T::zero(); n];
        probs[at] = T::one();
        Distribution { probs }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    /// Max-norm distance to another distribution on the same alphabet.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.probs.iter().zip(&other.probs).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.to_f64_lossy()).collect()
    }
}

/// `-sum p ln p` of a raw weight slice.
pub fn entropy_of<T: Scalar>(p: &[T]) -> T {
    -p.iter().map(|&v| v.xlogx()).sum::<T>()
}

pub fn entropy<T: Scalar>(p: &Distribution<T>) -> T {
    entropy_of(p.probs())
}

/// Binary entropy `h_b(p)` in nats.
pub fn binary_entropy<T: Scalar>(p: T) -> T {
    -(p.xlogx() + (T::one() - p).xlogx())
}

/// `D(p||q)`; `+inf` when `p` charges a letter `q` does not.
pub fn kl_divergence<T: Scalar>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T, InfoError> {
    if p.len() != q.len() {
        return Err(InfoError::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    Ok(kl_of(p.probs(), q.probs()))
}

fn kl_of<T: Scalar>(p: &[T], q: &[T]) -> T {
    let mut acc = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        if a > T::zero() {
            if b <= T::zero() {
                return T::infinity();
            }
            acc = acc + a * (a / b).ln();
        }
    }
    acc.max(T::zero())
}

/// Binary divergence `d_b(a||b)`.
pub fn binary_kl<T: Scalar>(a: T, b: T) -> T {
    kl_of(&[a, T::one() - a], &[b, T::one() - b])
}

/// Output law `sum_x p(x) V(.|x)`.
pub fn output_marginal<T: Scalar, C: ChannelMatrix<T> + ?Sized>(p: &[T], ch: &C) -> Vec<T> {
    let mut q = vec![T::zero(); ch.num_outputs()];
    for (x, &px) in p.iter().enumerate() {
        if px > T::zero() {
            for (qy, &v) in q.iter_mut().zip(ch.row(x)) {
                *qy = *qy + px * v;
            }
        }
    }
    q
}

fn check_dim<T: Scalar, C: ChannelMatrix<T> + ?Sized>(p: &[T], ch: &C) -> Result<(), InfoError> {
    if p.len() != ch.num_inputs() {
        return Err(InfoError::DimensionMismatch { expected: ch.num_inputs(), got: p.len() });
    }
    Ok(())
}

/// `I(P, V) = H(PV) - sum_x P(x) H(V(.|x))`.
pub fn mutual_information<T: Scalar, C: ChannelMatrix<T> + ?Sized>(
    p: &Distribution<T>,
    ch: &C,
) -> Result<T, InfoError> {
    check_dim(p.probs(), ch)?;
    Ok(mi_raw(p.probs(), ch))
}

pub(crate) fn mi_raw<T: Scalar, C: ChannelMatrix<T> + ?Sized>(p: &[T], ch: &C) -> T {
    let q = output_marginal(p, ch);
    let cond: T = p.iter().enumerate().filter(|(_, &px)| px > T::zero()).map(|(x, &px)| px * ch.row_entropy(x)).sum();
    (entropy_of(&q) - cond).max(T::zero())
}

/// Mutual information and its gradient in `P`, up to an additive constant
/// common to all coordinates (`D(V(.|x) || PV)` for each `x`).
pub fn mi_with_gradient<T: Scalar, C: ChannelMatrix<T> + ?Sized>(p: &[T], ch: &C) -> (T, Vec<T>) {
    let q = output_marginal(p, ch);
    let lnq: Vec<T> = q.iter().map(|&v| if v > T::zero() { v.ln() } else { T::neg_infinity() }).collect();
    let mut cond = T::zero();
    let grad: Vec<T> = (0..ch.num_inputs())
        .map(|x| {
            let hx = ch.row_entropy(x);
            if p[x] > T::zero() {
                cond = cond + p[x] * hx;
            }
            let mut cross = T::zero();
            for (&v, &l) in ch.row(x).iter().zip(&lnq) {
                if v > T::zero() {
                    if l == T::neg_infinity() {
                        return T::infinity();
                    }
                    cross = cross - v * l;
                }
            }
            cross - hx
        })
        .collect();
    let h: T = -q.iter().zip(&lnq).filter(|(v, _)| **v > T::zero()).map(|(&v, &l)| v * l).sum::<T>();
    ((h - cond).max(T::zero()), grad)
}

/// Common-input deficit `2 I(P, W^(+)d) - I(P, W^(+)2d)`.
pub fn cid<T: Scalar>(p: &Distribution<T>, w: &Dmc<T>, d: usize) -> Result<T, InfoError> {
    check_dim(p.probs(), w)?;
    let single = binomial_extend(w, d)?;
    let double = binomial_extend(w, 2 * d)?;
    Ok(T::lit(2.0) * mi_raw(p.probs(), &single) - mi_raw(p.probs(), &double))
}

/// `pi_alpha(d) = alpha^d e^-alpha / d!`, evaluated in the log domain.
pub fn poisson_pmf<T: Scalar>(alpha: T, d: usize) -> T {
    if d == 0 {
        return (-alpha).exp();
    }
    if alpha <= T::zero() {
        return T::zero();
    }
    (T::count(d) * alpha.ln() - alpha - T::lit(ln_factorial(d))).exp()
}

/// `P[D >= d]` for `D ~ Poisson(alpha)`, summed upward from `d`.
pub fn poisson_upper_tail<T: Scalar>(alpha: T, d: usize) -> T {
    if d == 0 {
        return T::one();
    }
    let mode = alpha.floor().to_usize().unwrap_or(0);
    if d <= mode {
        // Mass mostly above d: the complement is the smaller, stabler sum.
        let below: T = (0..d).map(|i| poisson_pmf(alpha, i)).sum();
        return (T::one() - below).max(T::zero());
    }
    let mut term = poisson_pmf(alpha, d);
    let mut acc = T::zero();
    let mut k = d;
    while term > acc * T::epsilon() * T::lit(1e-3) && term > T::zero() {
        acc = acc + term;
        k += 1;
        term = term * alpha / T::count(k);
    }
    acc
}

/// Hazard `pi_alpha(d) / P[D >= d]`.
pub fn poisson_hazard<T: Scalar>(alpha: T, d: usize) -> Result<T, InfoError> {
    if !(alpha > T::zero()) {
        return Err(InfoError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let tail = poisson_upper_tail(alpha, d);
    if tail.to_f64_lossy() < 1e-300 {
        return Err(InfoError::DegenerateDenominator { alpha: alpha.to_f64_lossy(), d });
    }
    Ok((poisson_pmf(alpha, d) / tail).min(T::one()))
}

/// Truncated Poisson law `pi_alpha(0..=dbar)` with its neglected mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonTail<T = f64> {
    pub alpha: T,
    pub pmf: Vec<T>,
    pub tail_mass: T,
}

impl<T: Scalar> PoissonTail<T> {
    pub fn new(alpha: T, dbar: usize) -> Result<Self, InfoError> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(InfoError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let pmf = (0..=dbar).map(|d| poisson_pmf(alpha, d)).collect();
        Ok(PoissonTail { alpha, pmf, tail_mass: poisson_upper_tail(alpha, dbar + 1) })
    }

    pub fn dbar(&self) -> usize {
        self.pmf.len() - 1
    }
}

/// Capacity and a capacity-achieving input of `ch`.
///
/// Stops once `max_x D(V_x||PV) - I(P, V) <= tol`, which bounds the distance
/// of the returned mutual information from capacity.
pub fn blahut_arimoto<T: Scalar, C: ChannelMatrix<T> + ?Sized>(
    ch: &C,
    tol: T,
) -> Result<(T, Distribution<T>), InfoError> {
    if !(tol > T::zero()) {
        return Err(InfoError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = ch.num_inputs();
    let mut p = vec![T::one() / T::count(n); n];
    let mut gap = T::infinity();
    for _ in 0..BA_MAX_ITERATIONS {
        let q = output_marginal(&p, ch);
        let div: Vec<T> = (0..n).map(|x| kl_of(ch.row(x), &q)).collect();
        let mean: T = p.iter().zip(&div).map(|(&a, &b)| a * b).sum();
        let max = div.iter().copied().fold(T::neg_infinity(), T::max);
        gap = max - mean;
        if gap <= tol {
            return Ok((mean, Distribution { probs: p }));
        }
        let weights: Vec<T> = p.iter().zip(&div).map(|(&a, &b)| a * (b - max).exp()).collect();
        let z: T = weights.iter().copied().sum();
        p = weights.into_iter().map(|v| v / z).collect();
    }
    Err(InfoError::NoConvergence { iterations: BA_MAX_ITERATIONS, gap: gap.to_f64_lossy() })
}
