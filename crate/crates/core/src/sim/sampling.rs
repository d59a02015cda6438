use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::channel::{ChannelMatrix, Dmc};

/// Generator for one trial: the 64-bit seed picks the key, the trial index
/// picks the stream, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Which molecule each read came from, how often each molecule was read, and
/// how many molecules were read `d` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingRealization {
    /// Molecule index vector, one entry in `0..M` per read.
    pub u: Vec<usize>,
    /// Molecule duplicate vector: `s[m] = #{n : u[n] = m}`.
    pub s: Vec<usize>,
    /// Amplification vector: `q[d] = #{m : s[m] = d}`, for `d = 0..=N`.
    pub q: Vec<usize>,
}

impl SamplingRealization {
    pub fn from_indices(u: Vec<usize>, m: usize) -> Result<Self, SimError> {
        if m == 0 {
            return Err(SimError::InconsistentCandidate("no molecules".into()));
        }
        let mut s = vec![0usize; m];
        for &k in &u {
            if k >= m {
                return Err(SimError::InconsistentCandidate(format!("index {k} out of range for M = {m}")));
            }
            s[k] += 1;
        }
        let mut q = vec![0usize; u.len() + 1];
        for &c in &s {
            q[c] += 1;
        }
        Ok(SamplingRealization { u, s, q })
    }

    pub fn num_molecules(&self) -> usize {
        self.s.len()
    }

    pub fn num_reads(&self) -> usize {
        self.u.len()
    }
}

/// `n` reads drawn uniformly with replacement from `m` molecules.
pub fn sample_indices<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..m)).collect()
}

pub(crate) fn cumulative_rows(w: &Dmc) -> Vec<Vec<f64>> {
    (0..w.num_inputs())
        .map(|x| {
            let mut acc = 0.0;
            w.row(x)
                .iter()
                .map(|&v| {
                    acc += v;
                    acc
                })
                .collect()
        })
        .collect()
}

pub(crate) fn draw_symbol<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.gen();
    cdf.iter().position(|&c| r < c).unwrap_or(cdf.len() - 1)
}

/// Samples `n` molecules of codeword `x` (an `M x L` array) with replacement
/// and passes each through `W` symbol by symbol.
pub fn sample_channel<R: Rng + ?Sized>(
    x: &[Vec<usize>],
    w: &Dmc,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<Vec<usize>>, SamplingRealization), SimError> {
    if n == 0 {
        return Err(SimError::InvalidParams("at least one read is needed".into()));
    }
    let cdf = cumulative_rows(w);
    let u = sample_indices(x.len(), n, rng);
    let y = u.iter().map(|&m| x[m].iter().map(|&a| draw_symbol(&cdf[a], rng)).collect()).collect();
    Ok((y, SamplingRealization::from_indices(u, x.len())?))
}
