//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use dnastore::sim::{decode_universal, Codebook, Codeword, DecoderConfig};
use dnastore::{Distribution, Dmc};
use rayon::prelude::*;

/// Every vector in `[m]^n`, first coordinate fastest.
pub fn all_vectors(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| (0..m).map(move |k| [v.clone(), vec![k]].concat())).collect();
    }
    out
}

fn poisson(alpha: f64, d: usize) -> f64 {
    let mut v = (-alpha).exp();
    for i in 1..=d {
        v *= alpha / i as f64;
    }
    v
}

fn d_b(a: f64, b: f64) -> f64 {
    let t = |x: f64, y: f64| if x > 0.0 { x * (x / y).ln() } else { 0.0 };
    t(a, b) + t(1.0 - a, 1.0 - b)
}

/// Hazard-sum exponent over `d = 0, 1, 2`. Molecules drawn more often are
/// spread along the Poisson tail, where every further term vanishes.
fn hazard_exponent(theta: &[f64; 3], alpha: f64) -> f64 {
    let mut left = 1.0;
    let mut pi_left = 1.0;
    let mut total = 0.0;
    for (d, &t) in theta.iter().enumerate() {
        if left <= 1e-15 {
            break;
        }
        let pi = poisson(alpha, d);
        total += left * d_b((t / left).min(1.0), pi / pi_left);
        left -= t;
        pi_left -= pi;
    }
    total
}

pub fn lattice_exponent(alpha: f64, beta: f64, rate: f64, mi: [f64; 3], steps: usize) -> f64 {
    (0..=steps)
        .into_par_iter()
        .map(|a| {
            let mut best = f64::INFINITY;
            for b in 0..=steps - a {
                for c in 0..=steps - a - b {
                    let th = [a as f64 / steps as f64, b as f64 / steps as f64, c as f64 / steps as f64];
                    let gamma = th[1] * mi[1] + th[2] * mi[2] - (1.0 - th[0]) / beta;
                    if gamma <= rate {
                        best = best.min(hazard_exponent(&th, alpha));
                    }
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// `P(y | x)` by summing over all index vectors.
pub fn exact_likelihood(x: &Codeword, y: &[Vec<usize>], w: &Dmc) -> f64 {
    let m = x.len();
    all_vectors(m, y.len())
        .iter()
        .map(|u| {
            let mut p = (m as f64).powi(-(y.len() as i32));
            for (row, &k) in y.iter().zip(u) {
                for (&b, &a) in row.iter().zip(&x[k]) {
                    p *= w.entry(a, b);
                }
            }
            p
        })
        .sum()
}

pub fn reshape(flat: &[usize], rows: usize) -> Vec<Vec<usize>> {
    flat.chunks(flat.len() / rows).map(<[usize]>::to_vec).collect()
}

/// Average error probability of the universal decoder over uniform messages,
/// reads and channel outputs.
pub fn exact_error(book: &Codebook, w: &Dmc, n: usize) -> f64 {
    let px = Distribution::uniform(2);
    let cfg = DecoderConfig::default();
    let l = book.molecule_length();
    let mut err = 0.0;
    for flat in all_vectors(2, n * l) {
        let y = reshape(&flat, n);
        let decided = decode_universal(&y, book, &px, &cfg).unwrap();
        for (j, x) in book.words().iter().enumerate() {
            if j != decided {
                err += exact_likelihood(x, &y, w) / book.len() as f64;
            }
        }
    }
    err
}
