//! Lower bounds on the reliability function of the DNA storage channel.
//!
//! The sampling state is summarized by `theta_d`, the fraction of molecules
//! drawn exactly `d` times. Its large-deviation cost is
//!
//! ```text
//! F(theta) = sum_d mu_d d_b(theta_d / mu_d || h_d),   mu_d = 1 - sum_{i<d} theta_i
//! ```
//!
//! with `h_d` the Poisson hazard. By the chain rule for divergence this is
//! `D(theta~ || pi~)`, where both laws are extended with one "more than dbar"
//! letter. The rate supported by a state is linear in `theta~`, so the
//! constrained minimum of `F` is an exponential tilt of `pi~`, found from a
//! one-dimensional concave dual.

use thiserror::Error;

use crate::bounds::{BoundsError, DnaParams};
use crate::channel::{binomial_extend, ChannelError, ChannelMatrix, Dmc, MergedChannel};
use crate::info::{binary_kl, mi_raw, mi_with_gradient, poisson_hazard, Distribution, InfoError, PoissonTail};
use crate::optimize::{maximize_on_simplex, OptimizeError, OptimizerConfig, SimplexObjective};
use crate::scalar::Scalar;

/// Conditional masses below this are treated as empty.
pub const EMPTY_MASS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReliabilityError {
    #[error("invalid theta vector: {0}")]
    InvalidTheta(String),
    #[error("conditional fraction theta_{d}/mu_{d} = {value} leaves [0, 1]")]
    DegenerateConditional { d: usize, value: f64 },
    #[error("rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("ideal sampling needs an integer coverage depth, got {0}")]
    NonIntegerAlpha(f64),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

/// Sub-distribution `theta_0..=theta_dbar` with total mass at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector<T = f64> {
    theta: Vec<T>,
}

impl<T: Scalar> ThetaVector<T> {
    pub fn new(theta: Vec<T>) -> Result<Self, ReliabilityError> {
        if theta.is_empty() {
            return Err(ReliabilityError::InvalidTheta("empty".into()));
        }
        if let Some(v) = theta.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(ReliabilityError::InvalidTheta(format!("entry {v} is negative or not finite")));
        }
        let sum: T = theta.iter().copied().sum();
        if sum > T::one() + T::tol(1e-12) {
            return Err(ReliabilityError::InvalidTheta(format!("total mass {sum} exceeds 1")));
        }
        Ok(ThetaVector { theta })
    }

    /// The truncated Poisson law itself.
    pub fn poisson(alpha: T, dbar: usize) -> Result<Self, ReliabilityError> {
        Ok(ThetaVector { theta: PoissonTail::new(alpha, dbar)?.pmf })
    }

    pub fn values(&self) -> &[T] {
        &self.theta
    }

    pub fn dbar(&self) -> usize {
        self.theta.len() - 1
    }

    /// Mass of molecules drawn more than `dbar` times.
    pub fn rest(&self) -> T {
        (T::one() - self.theta.iter().copied().sum::<T>()).max(T::zero())
    }
}

/// Large-deviation cost `F(theta)` of a sampling state, in nats per molecule.
pub fn exponent_objective<T: Scalar>(theta: &ThetaVector<T>, alpha: T) -> Result<T, ReliabilityError> {
    let mut mu = T::one();
    let mut total = T::zero();
    let slack = T::tol(1e-12);
    for (d, &t) in theta.values().iter().enumerate() {
        if mu < T::lit(EMPTY_MASS) {
            break;
        }
        let frac = t / mu;
        if frac > T::one() + slack {
            return Err(ReliabilityError::DegenerateConditional { d, value: frac.to_f64_lossy() });
        }
        total = total + mu * binary_kl(frac.min(T::one()), poisson_hazard(alpha, d)?);
        mu = mu - t;
    }
    Ok(total)
}

/// Rate `Gamma(theta) = sum_d theta_d I_d - (1 - theta_0) / beta` supported by a
/// sampling state, given `I_d = I(P, W^(+)d)` for `d = 1..=dbar` in `mi[d]`.
pub fn supported_rate_from_mi<T: Scalar>(theta: &[T], mi: &[T], beta: T) -> T {
    let gain: T = theta.iter().zip(mi).skip(1).map(|(&t, &i)| t * i).sum();
    gain - (T::one() - theta[0]) / beta
}

/// `Gamma(theta)` for input law `px` and the channel in `p`.
pub fn supported_rate<T: Scalar>(
    theta: &ThetaVector<T>,
    px: &Distribution<T>,
    p: &DnaParams<T>,
) -> Result<T, ReliabilityError> {
    if px.len() != p.w.num_inputs() {
        return Err(InfoError::DimensionMismatch { expected: p.w.num_inputs(), got: px.len() }.into());
    }
    let mi = mi_ladder(&p.w, px.probs(), theta.dbar())?;
    Ok(supported_rate_from_mi(theta.values(), &mi, p.beta))
}

fn mi_ladder<T: Scalar>(w: &Dmc<T>, px: &[T], dbar: usize) -> Result<Vec<T>, ChannelError> {
    let mut mi = vec![T::zero(); dbar + 1];
    for (d, slot) in mi.iter_mut().enumerate().skip(1) {
        *slot = mi_raw(px, &binomial_extend(w, d)?);
    }
    Ok(mi)
}

/// Minimizer of `F` over states supporting at most the target rate.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution<T = f64> {
    pub exponent: T,
    pub theta: ThetaVector<T>,
    /// Dual variable of the rate constraint; zero when it is inactive.
    pub lambda: T,
    pub supported_rate: T,
}

/// `min F(theta)` subject to `Gamma(theta) <= rate`, for fixed `I_d` values.
pub fn minimize_exponent<T: Scalar>(
    rate: T,
    mi: &[T],
    beta: T,
    poisson: &PoissonTail<T>,
) -> Result<InnerSolution<T>, ReliabilityError> {
    if !(rate >= T::zero()) {
        return Err(ReliabilityError::NegativeRate(rate.to_f64_lossy()));
    }
    let dbar = poisson.dbar();
    let inv = T::one() / beta;
    // Per-letter rate contributions over 0..=dbar and the overflow letter.
    let mut g: Vec<T> = (0..=dbar).map(|d| if d == 0 { T::zero() } else { mi[d] - inv }).collect();
    g.push(-inv);
    let mut pi = poisson.pmf.clone();
    pi.push(poisson.tail_mass);

    let tilt = |lambda: T| -> (Vec<T>, T) {
        // theta_lambda ∝ pi e^{-lambda g}; returns the law and ln of its normalizer.
        let shift = g
            .iter()
            .zip(&pi)
            .filter(|(_, &p)| p > T::zero())
            .map(|(&gi, _)| -lambda * gi)
            .fold(T::neg_infinity(), T::max);
        let w: Vec<T> = g.iter().zip(&pi).map(|(&gi, &p)| p * (-lambda * gi - shift).exp()).collect();
        let z: T = w.iter().copied().sum();
        (w.into_iter().map(|v| v / z).collect(), z.ln() + shift)
    };
    let mean = |th: &[T]| th.iter().zip(&g).map(|(&a, &b)| a * b).sum::<T>();

    let base_rate = mean(&pi);
    if base_rate <= rate {
        return Ok(InnerSolution {
            exponent: T::zero(),
            theta: ThetaVector { theta: poisson.pmf.clone() },
            lambda: T::zero(),
            supported_rate: supported_rate_from_mi(&poisson.pmf, mi, beta),
        });
    }
    // mean(theta_lambda) decreases from base_rate towards min g = -1/beta < 0 <= rate.
    let mut hi = T::one();
    while mean(&tilt(hi).0) > rate {
        hi = hi * T::lit(2.0);
        if hi > T::lit(1e12) {
            break;
        }
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean(&tilt(mid).0) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = hi;
    let (theta_full, log_z) = tilt(lambda);
    let exponent = (-lambda * rate - log_z).max(T::zero());
    let theta: Vec<T> = theta_full[..=dbar].to_vec();
    let supported = supported_rate_from_mi(&theta, mi, beta);
    Ok(InnerSolution { exponent, theta: ThetaVector { theta }, lambda, supported_rate: supported })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityResult<T = f64> {
    pub rate: T,
    pub exponent: T,
    pub argmax_px: Distribution<T>,
    pub inner: InnerSolution<T>,
    pub optimizer_gap: T,
}

/// Reliability-function lower bound for one channel, coverage depth and
/// truncation, reusable across rates and betas.
pub struct ReliabilityEvaluator<T = f64> {
    ladder: Vec<MergedChannel<T>>,
    poisson: PoissonTail<T>,
    num_inputs: usize,
}

impl<T: Scalar> ReliabilityEvaluator<T> {
    pub fn new(w: &Dmc<T>, alpha: T, dbar: usize) -> Result<Self, ReliabilityError> {
        if dbar == 0 {
            return Err(BoundsError::InvalidParams("dbar must be at least 1".into()).into());
        }
        let ladder = (1..=dbar).map(|d| binomial_extend(w, d)).collect::<Result<_, _>>()?;
        Ok(ReliabilityEvaluator { ladder, poisson: PoissonTail::new(alpha, dbar)?, num_inputs: w.num_inputs() })
    }

    pub fn poisson(&self) -> &PoissonTail<T> {
        &self.poisson
    }

    /// `I_d(px)` for `d = 0..=dbar` (with `I_0 = 0`).
    pub fn mutual_informations(&self, px: &[T]) -> Vec<T> {
        std::iter::once(T::zero()).chain(self.ladder.iter().map(|ch| mi_raw(px, ch))).collect()
    }

    /// Exponent at a fixed input law.
    pub fn at(&self, rate: T, beta: T, px: &Distribution<T>) -> Result<InnerSolution<T>, ReliabilityError> {
        if px.len() != self.num_inputs {
            return Err(InfoError::DimensionMismatch { expected: self.num_inputs, got: px.len() }.into());
        }
        minimize_exponent(rate, &self.mutual_informations(px.probs()), beta, &self.poisson)
    }

    /// Exponent maximized over input laws.
    pub fn maximize(&self, rate: T, beta: T, cfg: &OptimizerConfig) -> Result<ReliabilityResult<T>, ReliabilityError> {
        if !(rate >= T::zero()) {
            return Err(ReliabilityError::NegativeRate(rate.to_f64_lossy()));
        }
        let obj = ExponentObjective { ev: self, rate, beta };
        let opt = maximize_on_simplex(&obj, cfg, &[])?;
        let inner = self.at(rate, beta, &opt.argmax)?;
        Ok(ReliabilityResult { rate, exponent: inner.exponent, argmax_px: opt.argmax, inner, optimizer_gap: opt.gap })
    }
}

struct ExponentObjective<'a, T> {
    ev: &'a ReliabilityEvaluator<T>,
    rate: T,
    beta: T,
}

impl<T: Scalar> SimplexObjective<T> for ExponentObjective<'_, T> {
    fn dim(&self) -> usize {
        self.ev.num_inputs
    }
    fn value(&self, p: &[T]) -> T {
        minimize_exponent(self.rate, &self.ev.mutual_informations(p), self.beta, &self.ev.poisson)
            .map_or(T::nan(), |s| s.exponent)
    }
    fn value_and_gradient(&self, p: &[T]) -> (T, Vec<T>) {
        // Envelope theorem: dE/dP = lambda * sum_d theta_d dI_d/dP.
        let mut mi = vec![T::zero()];
        let mut grads = vec![Vec::new()];
        for ch in &self.ev.ladder {
            let (v, g) = mi_with_gradient(p, ch);
            mi.push(v);
            grads.push(g);
        }
        let Ok(s) = minimize_exponent(self.rate, &mi, self.beta, &self.ev.poisson) else {
            return (T::nan(), vec![T::zero(); p.len()]);
        };
        let mut grad = vec![T::zero(); p.len()];
        if s.lambda > T::zero() {
            for (d, &t) in s.theta.values().iter().enumerate().skip(1) {
                for (gx, &dg) in grad.iter_mut().zip(&grads[d]) {
                    *gx = *gx + s.lambda * t * dg;
                }
            }
        }
        (s.exponent, grad)
    }
}

/// Reliability lower bound at rate `rate`, maximized over input laws.
pub fn reliability_lower_bound<T: Scalar>(
    rate: T,
    p: &DnaParams<T>,
    cfg: &OptimizerConfig,
) -> Result<ReliabilityResult<T>, ReliabilityError> {
    ReliabilityEvaluator::new(&p.w, p.alpha, p.dbar)?.maximize(rate, p.beta, cfg)
}

/// Gallager's function `E_0(rho, P, V) = -ln sum_y (sum_x P(x) V(y|x)^{1/(1+rho)})^{1+rho}`.
pub fn gallager_e0<T: Scalar, C: ChannelMatrix<T> + ?Sized>(rho: T, px: &[T], ch: &C) -> T {
    let s = T::one() / (T::one() + rho);
    let mut total = T::zero();
    for y in 0..ch.num_outputs() {
        let a: T = px.iter().enumerate().filter(|(_, &p)| p > T::zero()).map(|(x, &p)| p * ch.row(x)[y].powf(s)).sum();
        if a > T::zero() {
            total = total + a.powf(T::one() + rho);
        }
    }
    -total.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdealExponent<T = f64> {
    pub exponent: T,
    /// Maximizing `rho` in `[0, 1]`.
    pub rho: T,
}

/// Error exponent when every molecule is read exactly `alpha` times:
///
/// ```text
/// min_Q D(Q || P x W^(+)alpha) + [D(Q_X || P) + I_Q(X; Y) - 1/beta - R]_+
/// ```
///
/// evaluated through its dual `max_{0<=rho<=1} E_0(rho, P, W^(+)alpha) - rho (R + 1/beta)`.
pub fn ideal_exponent<T: Scalar>(
    rate: T,
    px: &Distribution<T>,
    p: &DnaParams<T>,
) -> Result<IdealExponent<T>, ReliabilityError> {
    if !(rate >= T::zero()) {
        return Err(ReliabilityError::NegativeRate(rate.to_f64_lossy()));
    }
    let alpha = p.alpha;
    if alpha.fract() != T::zero() || alpha < T::one() {
        return Err(ReliabilityError::NonIntegerAlpha(alpha.to_f64_lossy()));
    }
    if px.len() != p.w.num_inputs() {
        return Err(InfoError::DimensionMismatch { expected: p.w.num_inputs(), got: px.len() }.into());
    }
    let ch = binomial_extend(&p.w, alpha.to_usize().expect("integer alpha"))?;
    let shift = rate + T::one() / p.beta;
    let f = |rho: T| gallager_e0(rho, px.probs(), &ch) - rho * shift;
    // E_0 is concave in rho, so golden-section search is exact up to tolerance.
    let phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (T::zero(), T::one());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    // E_0(0) = 0 exactly.
    let candidates =
        [(T::zero(), T::zero()), (T::one(), f(T::one())), ((a + b) / T::lit(2.0), f((a + b) / T::lit(2.0)))];
    let (rho, value) =
        candidates.into_iter().fold((T::zero(), T::neg_infinity()), |best, c| if c.1 > best.1 { c } else { best });
    Ok(IdealExponent { exponent: value.max(T::zero()), rho })
}
