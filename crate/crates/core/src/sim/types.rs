use super::SimError;
use crate::combinatorics::{ln_factorial, multinomial};

/// Logarithms of the sampling type-class sizes of an amplification vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeClassSizes {
    /// `ln |T_q|`, duplicate vectors with amplification vector `q`: `M! / prod_d q_d!`.
    pub log_tq: f64,
    /// `ln |T_s|`, index vectors with a given duplicate vector: `N! / prod_d (d!)^{q_d}`.
    pub log_ts: f64,
    /// `ln |T_q^(2)| = ln |T_q| + ln |T_s|`, index vectors with amplification vector `q`.
    pub log_tq2: f64,
}

fn check(q: &[usize]) -> Result<(usize, usize), SimError> {
    if q.is_empty() {
        return Err(SimError::InvalidAmplificationVector("empty".into()));
    }
    let m: usize = q.iter().sum();
    let n: usize = q.iter().enumerate().map(|(d, c)| d * c).sum();
    if m == 0 {
        return Err(SimError::InvalidAmplificationVector("no molecules".into()));
    }
    if q.len() < n + 1 && q.iter().skip(n + 1).any(|&c| c > 0) {
        unreachable!("a molecule read more than N times");
    }
    Ok((m, n))
}

pub fn type_class_log_sizes(q: &[usize]) -> Result<TypeClassSizes, SimError> {
    let (m, n) = check(q)?;
    let log_tq = ln_factorial(m) - q.iter().map(|&c| ln_factorial(c)).sum::<f64>();
    let log_ts = ln_factorial(n) - q.iter().enumerate().map(|(d, &c)| c as f64 * ln_factorial(d)).sum::<f64>();
    Ok(TypeClassSizes { log_tq, log_ts, log_tq2: log_tq + log_ts })
}

/// Exact `(|T_q|, |T_s|, |T_q^(2)|)`, or `None` on `u128` overflow.
pub fn type_class_sizes_exact(q: &[usize]) -> Result<Option<(u128, u128, u128)>, SimError> {
    check(q)?;
    let counts: Vec<u32> = q.iter().map(|&c| c as u32).collect();
    let Some(tq) = multinomial(&counts) else { return Ok(None) };
    let parts: Vec<u32> = q.iter().enumerate().flat_map(|(d, &c)| std::iter::repeat_n(d as u32, c)).collect();
    let Some(ts) = multinomial(&parts) else { return Ok(None) };
    Ok(tq.checked_mul(ts).map(|t2| (tq, ts, t2)))
}
