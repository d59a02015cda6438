use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decoder::{candidates, decode_over, Codebook, DecoderConfig};
use super::sampling::{sample_channel, sample_indices, trial_rng, SamplingRealization};
use super::SimError;
use crate::bounds::DnaParams;
use crate::channel::{ChannelMatrix, Dmc};
use crate::info::Distribution;
use crate::reliability::{supported_rate_from_mi, ReliabilityEvaluator};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959964;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub errors: u64,
    pub trials: u64,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl MonteCarloEstimate {
    fn from_counts(errors: u64, trials: u64, seed: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(errors, trials, WILSON_Z);
        MonteCarloEstimate { errors, trials, error_rate: errors as f64 / trials as f64, ci_low, ci_high, seed }
    }
}

fn check_realization(r: &SamplingRealization) -> Result<(), SimError> {
    let m: usize = r.q.iter().sum();
    let n: usize = r.q.iter().enumerate().map(|(d, c)| d * c).sum();
    if m != r.num_molecules() || n != r.num_reads() {
        return Err(SimError::InvalidAmplificationVector(format!(
            "{:?} does not match M = {}, N = {}",
            r.q,
            r.num_molecules(),
            r.num_reads()
        )));
    }
    Ok(())
}

/// Codeword error rate of the universal decoder. Trial `t` draws its codeword
/// index, reads and noise from stream `t` of `seed`.
pub fn monte_carlo_error(
    codebook: &Codebook,
    w: &Dmc,
    reads: usize,
    px: &Distribution,
    cfg: &DecoderConfig,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, SimError> {
    if trials == 0 {
        return Err(SimError::InvalidParams("at least one trial is needed".into()));
    }
    if reads == 0 {
        return Err(SimError::InvalidParams("at least one read is needed".into()));
    }
    if px.len() != w.num_inputs() {
        return Err(SimError::InvalidParams(format!("px has {} letters, W has {} inputs", px.len(), w.num_inputs())));
    }
    if codebook.words().iter().flatten().flatten().any(|&a| a >= w.num_inputs()) {
        return Err(SimError::InvalidCodebook("codeword letter outside the channel input alphabet".into()));
    }
    let us = if codebook.len() > 1 { candidates(codebook.num_molecules(), reads, cfg)? } else { Vec::new() };
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let j = rng.gen_range(0..codebook.len());
            let (y, r) = sample_channel(&codebook.words()[j], w, reads, &mut rng)?;
            check_realization(&r)?;
            let decided = if codebook.len() == 1 { 0 } else { decode_over(&y, codebook, px, &us)? };
            Ok::<u64, SimError>(u64::from(decided != j))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(MonteCarloEstimate::from_counts(errors, trials, seed))
}

/// Parameters of a random-coding simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub alpha: f64,
    pub beta: f64,
    /// Molecules per codeword.
    pub m: usize,
    /// Target rate in nats per symbol.
    pub rate: f64,
    pub trials: u64,
    pub seed: u64,
    pub dbar: usize,
    pub enumeration_cap: u64,
}

impl SimulationSpec {
    /// `L = round(beta ln M)`, at least 1.
    pub fn molecule_length(&self) -> usize {
        ((self.beta * (self.m as f64).ln()).round() as usize).max(1)
    }

    /// `N = round(alpha M)`, at least 1.
    pub fn reads(&self) -> usize {
        ((self.alpha * self.m as f64).round() as usize).max(1)
    }

    /// `|C| = round(exp(R M L))`, at least 1.
    pub fn codebook_size(&self) -> Result<usize, SimError> {
        let size = (self.rate * (self.m * self.molecule_length()) as f64).exp().round();
        if !(size.is_finite() && size < 1e7) {
            return Err(SimError::InvalidParams(format!("codebook of size {size} is beyond desk scale")));
        }
        Ok((size as usize).max(1))
    }
}

/// Draws a random codebook from the uniform input law (stream `u64::MAX` of
/// the seed) and estimates its universal-decoder error rate.
pub fn simulate(w: &Dmc, spec: &SimulationSpec) -> Result<MonteCarloEstimate, SimError> {
    if spec.m == 0 {
        return Err(SimError::InvalidParams("M must be positive".into()));
    }
    if !(spec.alpha > 0.0 && spec.beta > 0.0 && spec.rate >= 0.0) {
        return Err(SimError::InvalidParams("alpha and beta must be positive and the rate nonnegative".into()));
    }
    let px = Distribution::uniform(w.num_inputs());
    let size = spec.codebook_size()?;
    let codebook = Codebook::random(spec.m, spec.molecule_length(), size, &px, &mut trial_rng(spec.seed, u64::MAX))?;
    let cfg = DecoderConfig { dbar: spec.dbar, enumeration_cap: spec.enumeration_cap };
    monte_carlo_error(&codebook, w, spec.reads(), &px, &cfg, spec.trials, spec.seed)
}

/// Fraction of sampling states whose supported rate `Gamma(q / M)` falls
/// below `rate`, with `N = round(alpha M)` reads. The reported counts are
/// outages, not decoding errors.
pub fn outage_probability(
    rate: f64,
    px: &Distribution,
    p: &DnaParams,
    m: usize,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, SimError> {
    if trials == 0 || m == 0 {
        return Err(SimError::InvalidParams("M and the trial count must be positive".into()));
    }
    let mi = ReliabilityEvaluator::new(&p.w, p.alpha, p.dbar)?.mutual_informations(px.probs());
    let n = ((p.alpha * m as f64).round() as usize).max(1);
    let outages: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let r = SamplingRealization::from_indices(sample_indices(m, n, &mut rng), m)?;
            check_realization(&r)?;
            let theta: Vec<f64> = (0..=p.dbar).map(|d| r.q.get(d).map_or(0.0, |&c| c as f64 / m as f64)).collect();
            Ok::<u64, SimError>(u64::from(supported_rate_from_mi(&theta, &mi, p.beta) < rate))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(MonteCarloEstimate::from_counts(outages, trials, seed))
}
