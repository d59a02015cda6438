//! Capacity lower and upper bounds of the DNA storage channel and the
//! critical molecule-length parameter above which they coincide.
//!
//! With `pi_d` the Poisson(alpha) law of the number of draws of a molecule,
//! `I_d = I(P, W^(+)d)` and `Omega_d` the excess rate,
//!
//! ```text
//! LB(P) = sum_{d=1}^{dbar} pi_d I_d - (1 - pi_0) / beta
//! UB(P) = sum_{d=1}^{dbar} pi_d (I_d + Omega_d) - (1 - pi_0) / beta
//! ```
//!
//! Both are maximized over the input law `P`.

use std::sync::OnceLock;

use thiserror::Error;

use crate::channel::{binomial_extend, ChannelError, ChannelMatrix, Dmc, MergedChannel};
use crate::info::{binary_entropy, cid, mi_raw, mi_with_gradient, Distribution, InfoError, PoissonTail};
use crate::optimize::{maximize_on_simplex, OptimizeError, OptimizerConfig, SimplexObjective};
use crate::scalar::Scalar;
use crate::symmetry::is_modulo_additive;

/// Bracket searched for the critical beta.
pub const BETA_BRACKET: (f64, f64) = (1.000001, 1000.0);
/// Bisection tolerance on beta.
pub const BETA_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("the channel has a zero transition probability; the upper bound is unproven")]
    InfiniteNuMin,
    #[error("no sign change of beta*CID - 2 on [{lo}, {hi}] (residuals {r_lo}, {r_hi})")]
    NoFixedPointInRange { lo: f64, hi: f64, r_lo: f64, r_hi: f64 },
    #[error("channel is not modulo-additive")]
    NotModuloAdditive,
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

/// Coverage depth `alpha = N/M`, molecule-length parameter `beta = L / ln M`,
/// sequencing channel and truncation order.
#[derive(Debug, Clone, PartialEq)]
pub struct DnaParams<T = f64> {
    pub alpha: T,
    pub beta: T,
    pub w: Dmc<T>,
    pub dbar: usize,
}

impl<T: Scalar> DnaParams<T> {
    pub fn new(alpha: T, beta: T, w: Dmc<T>, dbar: usize) -> Result<Self, BoundsError> {
        check_alpha(alpha)?;
        check_beta(beta)?;
        if dbar == 0 {
            return Err(BoundsError::InvalidParams("dbar must be at least 1".into()));
        }
        Ok(DnaParams { alpha, beta, w, dbar })
    }
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<(), BoundsError> {
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(BoundsError::InvalidParams(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

fn check_beta<T: Scalar>(beta: T) -> Result<(), BoundsError> {
    if !(beta >= T::one() && beta.is_finite()) {
        return Err(BoundsError::InvalidParams(format!("beta must be at least 1, got {beta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult<T = f64> {
    /// Bound in nats per symbol.
    pub value: T,
    pub argmax_px: Distribution<T>,
    /// Mass of the neglected orders `d > dbar` times their largest possible
    /// contribution. Added to the upper bound; the lower bound is left as is.
    pub truncation_error: T,
    /// Frank-Wolfe gap of the returned input law.
    pub optimizer_gap: T,
}

/// `Omega = [min(1/beta, 2/beta - cid)]_+`.
pub fn omega_from_cid<T: Scalar>(cid: T, beta: T) -> T {
    let inv = T::one() / beta;
    inv.min(inv + inv - cid).max(T::zero())
}

/// `d`-order excess rate `Omega_d` at input law `px`.
pub fn excess_rate_omega<T: Scalar>(px: &Distribution<T>, w: &Dmc<T>, d: usize, beta: T) -> Result<T, BoundsError> {
    if !(beta > T::zero()) {
        return Err(BoundsError::InvalidParams(format!("beta must be positive, got {beta}")));
    }
    Ok(omega_from_cid(cid(px, w, d)?, beta))
}

/// Binomial extensions of one channel, indexed by order.
#[derive(Debug, Clone)]
pub struct ExtensionLadder<T = f64> {
    by_order: Vec<Option<MergedChannel<T>>>,
}

impl<T: Scalar> ExtensionLadder<T> {
    /// Orders `1..=dbar`, and `2d` for `d <= dbar` when `doubles` is set.
    pub fn new(w: &Dmc<T>, dbar: usize, doubles: bool) -> Result<Self, ChannelError> {
        let top = if doubles { 2 * dbar } else { dbar };
        let by_order = (0..=top)
            .map(|d| {
                let needed = d >= 1 && (d <= dbar || d % 2 == 0);
                needed.then(|| binomial_extend(w, d)).transpose()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExtensionLadder { by_order })
    }

    pub fn get(&self, d: usize) -> &MergedChannel<T> {
        self.by_order[d].as_ref().expect("order present in ladder")
    }

    pub fn has_doubles(&self, dbar: usize) -> bool {
        self.by_order.len() > 2 * dbar
    }
}

/// Per-order mutual information (and gradients) at one input law.
struct Terms<T> {
    mi: Vec<T>,
    grad: Vec<Vec<T>>,
}

/// Evaluates both bounds for one channel, coverage depth and truncation,
/// across many values of beta.
pub struct BoundsEvaluator<T = f64> {
    w: Dmc<T>,
    alpha: T,
    dbar: usize,
    poisson: PoissonTail<T>,
    ladder: ExtensionLadder<T>,
    cfg: OptimizerConfig,
    lb_argmax: OnceLock<Result<(Vec<T>, T), BoundsError>>,
}

impl<T: Scalar> BoundsEvaluator<T> {
    /// `with_upper` also builds the even orders up to `2 dbar` needed by the
    /// excess-rate terms.
    pub fn new(w: &Dmc<T>, alpha: T, dbar: usize, cfg: OptimizerConfig, with_upper: bool) -> Result<Self, BoundsError> {
        check_alpha(alpha)?;
        if dbar == 0 {
            return Err(BoundsError::InvalidParams("dbar must be at least 1".into()));
        }
        Ok(BoundsEvaluator {
            w: w.clone(),
            alpha,
            dbar,
            poisson: PoissonTail::new(alpha, dbar)?,
            ladder: ExtensionLadder::new(w, dbar, with_upper)?,
            cfg,
            lb_argmax: OnceLock::new(),
        })
    }

    pub fn from_params(p: &DnaParams<T>, cfg: OptimizerConfig, with_upper: bool) -> Result<Self, BoundsError> {
        Self::new(&p.w, p.alpha, p.dbar, cfg, with_upper)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn poisson(&self) -> &PoissonTail<T> {
        &self.poisson
    }

    pub fn channel(&self) -> &Dmc<T> {
        &self.w
    }

    pub fn dbar(&self) -> usize {
        self.dbar
    }

    fn penalty(&self, beta: T) -> T {
        (T::one() - self.poisson.pmf[0]) / beta
    }

    fn ln_inputs(&self) -> T {
        T::count(self.w.num_inputs()).ln()
    }

    fn terms(&self, p: &[T], upper: bool, gradient: bool) -> Terms<T> {
        let top = if upper { 2 * self.dbar } else { self.dbar };
        let mut mi = vec![T::zero(); top + 1];
        let mut grad = vec![Vec::new(); top + 1];
        for d in 1..=top {
            if d > self.dbar && d % 2 == 1 {
                continue;
            }
            let ch = self.ladder.get(d);
            if gradient {
                let (v, g) = mi_with_gradient(p, ch);
                mi[d] = v;
                grad[d] = g;
            } else {
                mi[d] = mi_raw(p, ch);
            }
        }
        Terms { mi, grad }
    }

    /// `sum pi_d I_d`, the part of the lower bound that depends on the input.
    fn lb_core(&self, t: &Terms<T>, n: usize, gradient: bool) -> (T, Vec<T>) {
        let mut v = T::zero();
        let mut g = vec![T::zero(); if gradient { n } else { 0 }];
        for d in 1..=self.dbar {
            let pi = self.poisson.pmf[d];
            v = v + pi * t.mi[d];
            if gradient {
                for (gx, &tx) in g.iter_mut().zip(&t.grad[d]) {
                    *gx = *gx + pi * tx;
                }
            }
        }
        (v, g)
    }

    fn ub_core(&self, t: &Terms<T>, n: usize, beta: T, gradient: bool) -> (T, Vec<T>) {
        let (mut v, mut g) = self.lb_core(t, n, gradient);
        let inv = T::one() / beta;
        for d in 1..=self.dbar {
            let pi = self.poisson.pmf[d];
            let c = T::lit(2.0) * t.mi[d] - t.mi[2 * d];
            let omega = omega_from_cid(c, beta);
            v = v + pi * omega;
            // Only the middle branch 2/beta - cid depends on the input.
            if gradient && omega > T::zero() && omega < inv {
                for (x, gx) in g.iter_mut().enumerate() {
                    let dc = T::lit(2.0) * t.grad[d][x] - t.grad[2 * d][x];
                    *gx = *gx - pi * dc;
                }
            }
        }
        (v, g)
    }

    /// Lower-bound objective at `px`, before clamping at zero.
    pub fn lb_objective(&self, px: &Distribution<T>, beta: T) -> Result<T, BoundsError> {
        self.check_px(px)?;
        let t = self.terms(px.probs(), false, false);
        Ok(self.lb_core(&t, px.len(), false).0 - self.penalty(beta))
    }

    /// Upper-bound objective at `px` over orders `1..=dbar`, without the
    /// truncation allowance.
    pub fn ub_objective(&self, px: &Distribution<T>, beta: T) -> Result<T, BoundsError> {
        self.check_px(px)?;
        self.require_doubles()?;
        let t = self.terms(px.probs(), true, false);
        Ok(self.ub_core(&t, px.len(), beta, false).0 - self.penalty(beta))
    }

    /// `Omega_d(px)` for `d = 1..=dbar`.
    pub fn omegas(&self, px: &Distribution<T>, beta: T) -> Result<Vec<T>, BoundsError> {
        self.check_px(px)?;
        self.require_doubles()?;
        let t = self.terms(px.probs(), true, false);
        Ok((1..=self.dbar).map(|d| omega_from_cid(T::lit(2.0) * t.mi[d] - t.mi[2 * d], beta)).collect())
    }

    fn check_px(&self, px: &Distribution<T>) -> Result<(), BoundsError> {
        if px.len() != self.w.num_inputs() {
            return Err(InfoError::DimensionMismatch { expected: self.w.num_inputs(), got: px.len() }.into());
        }
        Ok(())
    }

    fn require_doubles(&self) -> Result<(), BoundsError> {
        if !self.ladder.has_doubles(self.dbar) {
            return Err(BoundsError::InvalidParams("evaluator was built without upper-bound orders".into()));
        }
        Ok(())
    }

    fn lb_argmax(&self) -> Result<(Vec<T>, T), BoundsError> {
        self.lb_argmax
            .get_or_init(|| {
                let obj = LbObjective { ev: self };
                let n = self.w.num_inputs();
                if self.cfg.use_symmetry_shortcut && is_modulo_additive(&self.w) {
                    let u = vec![T::one() / T::count(n); n];
                    let (_, g) = obj.value_and_gradient(&u);
                    let gap = crate::optimize::frank_wolfe_gap(&u, &g);
                    return Ok((u, gap));
                }
                let opt = maximize_on_simplex(&obj, &self.cfg, &[])?;
                Ok((opt.argmax.into_vec(), opt.gap))
            })
            .clone()
    }

    /// Capacity lower bound at `beta`, clamped below at zero.
    pub fn lower_bound(&self, beta: T) -> Result<BoundResult<T>, BoundsError> {
        check_beta(beta)?;
        let (p, gap) = self.lb_argmax()?;
        let px = Distribution::from_weights(p)?;
        let value = self.lb_objective(&px, beta)?.max(T::zero());
        Ok(BoundResult {
            value,
            argmax_px: px,
            truncation_error: self.poisson.tail_mass * self.ln_inputs(),
            optimizer_gap: gap,
        })
    }

    /// Capacity upper bound at `beta`. Refuses channels with a zero entry
    /// unless `allow_unproven` is set.
    pub fn upper_bound(&self, beta: T, allow_unproven: bool) -> Result<BoundResult<T>, BoundsError> {
        check_beta(beta)?;
        self.require_doubles()?;
        if !allow_unproven && !self.w.nu_min().is_finite() {
            return Err(BoundsError::InfiniteNuMin);
        }
        let (lb_p, _) = self.lb_argmax()?;
        let obj = UbObjective { ev: self, beta };
        let opt = maximize_on_simplex(&obj, &self.cfg, &[lb_p])?;
        let truncation = self.poisson.tail_mass * (self.ln_inputs() + T::one() / beta);
        let value = (opt.value - self.penalty(beta) + truncation).max(T::zero());
        Ok(BoundResult { value, argmax_px: opt.argmax, truncation_error: truncation, optimizer_gap: opt.gap })
    }
}

struct LbObjective<'a, T> {
    ev: &'a BoundsEvaluator<T>,
}

impl<T: Scalar> SimplexObjective<T> for LbObjective<'_, T> {
    fn dim(&self) -> usize {
        self.ev.w.num_inputs()
    }
    fn value(&self, p: &[T]) -> T {
        self.ev.lb_core(&self.ev.terms(p, false, false), p.len(), false).0
    }
    fn value_and_gradient(&self, p: &[T]) -> (T, Vec<T>) {
        self.ev.lb_core(&self.ev.terms(p, false, true), p.len(), true)
    }
}

struct UbObjective<'a, T> {
    ev: &'a BoundsEvaluator<T>,
    beta: T,
}

impl<T: Scalar> SimplexObjective<T> for UbObjective<'_, T> {
    fn dim(&self) -> usize {
        self.ev.w.num_inputs()
    }
    fn value(&self, p: &[T]) -> T {
        self.ev.ub_core(&self.ev.terms(p, true, false), p.len(), self.beta, false).0
    }
    fn value_and_gradient(&self, p: &[T]) -> (T, Vec<T>) {
        self.ev.ub_core(&self.ev.terms(p, true, true), p.len(), self.beta, true)
    }
}

/// Lower-bound objective at `px`; may be negative.
pub fn lb_objective<T: Scalar>(px: &Distribution<T>, p: &DnaParams<T>) -> Result<T, BoundsError> {
    BoundsEvaluator::from_params(p, OptimizerConfig::default(), false)?.lb_objective(px, p.beta)
}

pub fn capacity_lower_bound<T: Scalar>(p: &DnaParams<T>, opt: &OptimizerConfig) -> Result<BoundResult<T>, BoundsError> {
    BoundsEvaluator::from_params(p, *opt, false)?.lower_bound(p.beta)
}

/// Upper bound; the channel must have no zero transition probability.
pub fn capacity_upper_bound<T: Scalar>(p: &DnaParams<T>, opt: &OptimizerConfig) -> Result<BoundResult<T>, BoundsError> {
    if !p.w.nu_min().is_finite() {
        return Err(BoundsError::InfiniteNuMin);
    }
    BoundsEvaluator::from_params(p, *opt, true)?.upper_bound(p.beta, false)
}

/// `2 / CID(uniform, W)` for a modulo-additive channel.
pub fn critical_beta_uniform<T: Scalar>(alpha: T, w: &Dmc<T>) -> Result<T, BoundsError> {
    check_alpha(alpha)?;
    if !is_modulo_additive(w) {
        return Err(BoundsError::NotModuloAdditive);
    }
    let c = cid(&Distribution::uniform(w.num_inputs()), w, 1)?;
    if !(c > T::zero()) {
        return Err(BoundsError::NoFixedPointInRange {
            lo: BETA_BRACKET.0,
            hi: BETA_BRACKET.1,
            r_lo: -2.0,
            r_hi: -2.0,
        });
    }
    Ok(T::lit(2.0) / c)
}

/// Threshold `2 / (ln 2 - h_b(4w))` from earlier work on the BSC, for `w < 1/8`.
pub fn prior_critical_beta_bsc<T: Scalar>(w: T) -> Result<T, BoundsError> {
    if !(w >= T::zero() && w < T::lit(0.125)) {
        return Err(BoundsError::InvalidParams(format!("crossover must lie in [0, 1/8), got {w}")));
    }
    Ok(T::lit(2.0) / (T::lit(2.0).ln() - binary_entropy(T::lit(4.0) * w)))
}

/// Smallest beta with `beta * CID(P*(beta), W) >= 2`, where `P*(beta)`
/// maximizes the upper-bound objective; found by bisection on the residual.
pub fn critical_beta<T: Scalar>(alpha: T, w: &Dmc<T>, dbar: usize, opt: &OptimizerConfig) -> Result<T, BoundsError> {
    check_alpha(alpha)?;
    if !w.nu_min().is_finite() {
        return Err(BoundsError::InfiniteNuMin);
    }
    let (lo, hi) = (T::lit(BETA_BRACKET.0), T::lit(BETA_BRACKET.1));
    if opt.use_symmetry_shortcut && is_modulo_additive(w) {
        return match critical_beta_uniform(alpha, w) {
            Ok(b) if b >= lo && b <= hi => Ok(b),
            Ok(b) => Err(BoundsError::NoFixedPointInRange {
                lo: BETA_BRACKET.0,
                hi: BETA_BRACKET.1,
                r_lo: (lo * T::lit(2.0) / b - T::lit(2.0)).to_f64_lossy(),
                r_hi: (hi * T::lit(2.0) / b - T::lit(2.0)).to_f64_lossy(),
            }),
            Err(e) => Err(e),
        };
    }
    let ev = BoundsEvaluator::new(w, alpha, dbar, *opt, true)?;
    let residual = |beta: T| -> Result<T, BoundsError> {
        let ub = ev.upper_bound(beta, false)?;
        Ok(beta * cid(&ub.argmax_px, w, 1)? - T::lit(2.0))
    };
    let (mut a, mut b) = (lo, hi);
    let (ra, rb) = (residual(a)?, residual(b)?);
    if ra >= T::zero() {
        return Ok(a);
    }
    if rb < T::zero() {
        return Err(BoundsError::NoFixedPointInRange {
            lo: BETA_BRACKET.0,
            hi: BETA_BRACKET.1,
            r_lo: ra.to_f64_lossy(),
            r_hi: rb.to_f64_lossy(),
        });
    }
    while b - a > T::tol(BETA_TOL) {
        let m = (a + b) / T::lit(2.0);
        if residual(m)? >= T::zero() {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}
