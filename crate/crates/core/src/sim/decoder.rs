use std::collections::HashMap;

use rand::Rng;

use super::sampling::draw_symbol;
use super::SimError;
use crate::channel::Dmc;
use crate::info::Distribution;

/// An `M x L` array of input letters; row `m` is molecule `m`.
pub type Codeword = Vec<Vec<usize>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    m: usize,
    l: usize,
    words: Vec<Codeword>,
}

impl Codebook {
    pub fn new(words: Vec<Codeword>) -> Result<Self, SimError> {
        let first = words.first().ok_or_else(|| SimError::InvalidCodebook("no codewords".into()))?;
        let m = first.len();
        let l = first.first().map_or(0, Vec::len);
        if m == 0 || l == 0 {
            return Err(SimError::InvalidCodebook("codewords need at least one molecule of one symbol".into()));
        }
        for (j, w) in words.iter().enumerate() {
            if w.len() != m || w.iter().any(|row| row.len() != l) {
                return Err(SimError::InvalidCodebook(format!("codeword {j} is not {m} x {l}")));
            }
            if words[..j].contains(w) {
                return Err(SimError::InvalidCodebook(format!("codeword {j} repeats an earlier one")));
            }
        }
        Ok(Codebook { m, l, words })
    }

    /// `size` distinct codewords with symbols drawn i.i.d. from `px`. A draw
    /// equal to an earlier word is replaced by a fresh one.
    pub fn random<R: Rng + ?Sized>(
        m: usize,
        l: usize,
        size: usize,
        px: &Distribution,
        rng: &mut R,
    ) -> Result<Self, SimError> {
        if m == 0 || l == 0 || size == 0 {
            return Err(SimError::InvalidCodebook("M, L and the codebook size must be positive".into()));
        }
        let support = px.probs().iter().filter(|&&p| p > 0.0).count() as f64;
        if (size as f64).ln() > (m * l) as f64 * support.ln() + 1e-9 {
            return Err(SimError::InvalidCodebook(format!(
                "{size} distinct words do not fit in {m} x {l} arrays over {support} letters"
            )));
        }
        let mut cdf = 0.0;
        let cdf: Vec<f64> = px
            .probs()
            .iter()
            .map(|&p| {
                cdf += p;
                cdf
            })
            .collect();
        let mut words: Vec<Codeword> = Vec::with_capacity(size);
        while words.len() < size {
            let w: Codeword = (0..m).map(|_| (0..l).map(|_| draw_symbol(&cdf, rng)).collect()).collect();
            if !words.contains(&w) {
                words.push(w);
            }
        }
        Ok(Codebook { m, l, words })
    }

    pub fn num_molecules(&self) -> usize {
        self.m
    }

    pub fn molecule_length(&self) -> usize {
        self.l
    }

    pub fn words(&self) -> &[Codeword] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `ln |C| / (M L)` nats per symbol.
    pub fn rate(&self) -> f64 {
        (self.words.len() as f64).ln() / (self.m * self.l) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderConfig {
    /// Candidates must keep every molecule below this many draws.
    pub dbar: usize,
    /// Largest `M^N` the decoder will enumerate.
    pub enumeration_cap: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { dbar: 20, enumeration_cap: 1_000_000 }
    }
}

fn check_shapes(x: &Codeword, y: &[Vec<usize>], u: &[usize]) -> Result<(), SimError> {
    if u.len() != y.len() {
        return Err(SimError::InconsistentCandidate(format!("{} indices for {} reads", u.len(), y.len())));
    }
    if let Some(&k) = u.iter().find(|&&k| k >= x.len()) {
        return Err(SimError::InconsistentCandidate(format!("index {k} out of range for M = {}", x.len())));
    }
    let l = x.first().map_or(0, Vec::len);
    if y.iter().any(|row| row.len() != l) {
        return Err(SimError::InconsistentCandidate(format!("reads must have length {l}")));
    }
    Ok(())
}

/// `D(P_A || px) + I(A; B)` of a joint type given by pair counts.
fn divergence_plus_mi(pairs: &HashMap<(usize, Vec<usize>), usize>, px: &[f64]) -> f64 {
    let total: usize = pairs.values().sum();
    let n = total as f64;
    let mut ca: HashMap<usize, usize> = HashMap::new();
    let mut cb: HashMap<&[usize], usize> = HashMap::new();
    for ((a, b), &c) in pairs {
        *ca.entry(*a).or_default() += c;
        *cb.entry(b.as_slice()).or_default() += c;
    }
    let mut div = 0.0;
    for (&a, &c) in &ca {
        let p = c as f64 / n;
        let target = px.get(a).copied().unwrap_or(0.0);
        if target <= 0.0 {
            return f64::INFINITY;
        }
        div += p * (p / target).ln();
    }
    let mut mi = 0.0;
    for ((a, b), &c) in pairs {
        let c = c as f64;
        mi += c / n * (c * n / (ca[a] as f64 * cb[b.as_slice()] as f64)).ln();
    }
    div + mi.max(0.0)
}

/// Penalized empirical mutual information of codeword `x` and reads `y` under
/// the candidate index vector `u`:
/// `-(M - q_0) ln M + sum_{d >= 0} q_d L [D(P^d_A || px) + I_{P^d}(A; B^d)]`.
///
/// `P^d` is the joint type of `(a, b)` over the `q_d L` symbol positions of
/// molecules drawn `d` times, `a` the molecule symbol and `b` the multiset of
/// the `d` read symbols at that position. For `d = 0`, `b` is empty and only
/// the divergence remains.
pub fn universal_metric(x: &Codeword, y: &[Vec<usize>], u: &[usize], px: &Distribution) -> Result<f64, SimError> {
    check_shapes(x, y, u)?;
    let m = x.len();
    let l = x[0].len();
    let mut reads: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (n, &k) in u.iter().enumerate() {
        reads[k].push(n);
    }
    let mut by_order: HashMap<usize, HashMap<(usize, Vec<usize>), usize>> = HashMap::new();
    for (k, rows) in reads.iter().enumerate() {
        let pairs = by_order.entry(rows.len()).or_default();
        for pos in 0..l {
            let mut b: Vec<usize> = rows.iter().map(|&n| y[n][pos]).collect();
            b.sort_unstable();
            *pairs.entry((x[k][pos], b)).or_default() += 1;
        }
    }
    let q0 = reads.iter().filter(|r| r.is_empty()).count();
    let mut metric = -((m - q0) as f64) * (m as f64).ln();
    for pairs in by_order.values() {
        // q_d L equals the number of symbol positions in the type.
        let positions: usize = pairs.values().sum();
        metric += positions as f64 * divergence_plus_mi(pairs, px.probs());
    }
    Ok(metric)
}

fn candidate_count(m: usize, n: usize, cap: u64) -> Result<u64, SimError> {
    let total = (m as f64).powi(n as i32);
    if total > cap as f64 {
        return Err(SimError::EnumerationCapExceeded { candidates: total, cap });
    }
    Ok((m as u64).pow(n as u32))
}

/// Index vectors in `[M]^N` whose duplicate counts all stay below `dbar`.
pub(crate) fn candidates(m: usize, n: usize, cfg: &DecoderConfig) -> Result<Vec<Vec<usize>>, SimError> {
    let total = candidate_count(m, n, cfg.enumeration_cap)?;
    let mut out = Vec::new();
    let mut counts = vec![0usize; m];
    for code in 0..total {
        let mut c = code;
        let u: Vec<usize> = (0..n)
            .map(|_| {
                let k = (c % m as u64) as usize;
                c /= m as u64;
                k
            })
            .collect();
        counts.iter_mut().for_each(|v| *v = 0);
        u.iter().for_each(|&k| counts[k] += 1);
        if counts.iter().all(|&s| s < cfg.dbar) {
            out.push(u);
        }
    }
    if out.is_empty() {
        return Err(SimError::EmptyCandidateSet { dbar: cfg.dbar });
    }
    Ok(out)
}

/// Relative slack under which two scores count as tied. Codewords that hold
/// the same molecules in another order, for instance, score identically up
/// to rounding.
pub const TIE_TOL: f64 = 1e-10;

/// Lowest index whose score is within `TIE_TOL` of the maximum.
fn argmax_lowest(scores: &[f64]) -> usize {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return scores.iter().position(|&v| v == max).unwrap_or(0);
    }
    let floor = max - TIE_TOL * max.abs().max(1.0);
    scores.iter().position(|&v| v >= floor).unwrap_or(0)
}

/// Codeword maximizing the best universal metric over admissible index
/// vectors; ties go to the lowest index.
pub fn decode_universal(
    y: &[Vec<usize>],
    codebook: &Codebook,
    px: &Distribution,
    cfg: &DecoderConfig,
) -> Result<usize, SimError> {
    if codebook.len() == 1 {
        return Ok(0);
    }
    let us = candidates(codebook.num_molecules(), y.len(), cfg)?;
    decode_over(y, codebook, px, &us)
}

pub(crate) fn decode_over(
    y: &[Vec<usize>],
    codebook: &Codebook,
    px: &Distribution,
    us: &[Vec<usize>],
) -> Result<usize, SimError> {
    let mut scores = Vec::with_capacity(codebook.len());
    for x in codebook.words() {
        let mut best = f64::NEG_INFINITY;
        for u in us {
            best = best.max(universal_metric(x, y, u, px)?);
        }
        scores.push(best);
    }
    Ok(argmax_lowest(&scores))
}

/// `ln P(y | x) = sum_n ln( (1/M) sum_m prod_l W(y_{n,l} | x_{m,l}) )`.
pub fn ml_log_likelihood(x: &Codeword, y: &[Vec<usize>], w: &Dmc) -> Result<f64, SimError> {
    let m = x.len() as f64;
    let mut total = 0.0;
    for row in y {
        let mut p = 0.0;
        for mol in x {
            if mol.len() != row.len() {
                return Err(SimError::InconsistentCandidate("read and molecule lengths differ".into()));
            }
            p += mol.iter().zip(row).map(|(&a, &b)| w.entry(a, b)).product::<f64>();
        }
        total += (p / m).ln();
    }
    Ok(total)
}

/// Maximum-likelihood decision with known `W`; ties go to the lowest index.
pub fn decode_ml(y: &[Vec<usize>], codebook: &Codebook, w: &Dmc) -> Result<usize, SimError> {
    let scores = codebook.words().iter().map(|x| ml_log_likelihood(x, y, w)).collect::<Result<Vec<_>, _>>()?;
    Ok(argmax_lowest(&scores))
}
