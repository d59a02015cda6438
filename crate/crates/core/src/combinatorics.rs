//! Factorials, multinomial coefficients and composition enumeration.

use std::sync::OnceLock;

const TABLE_LEN: usize = 4096;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        t.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..TABLE_LEN {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln n!`. Exact summation below 4096, Stirling series above.
pub fn ln_factorial(n: usize) -> f64 {
    if n < TABLE_LEN {
        return ln_factorial_table()[n];
    }
    let x = n as f64 + 1.0;
    // ln Gamma(x) with three correction terms; relative error far below 1e-15 here.
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(r)
}

/// Exact multinomial coefficient `(sum counts)! / prod counts!`, `None` on overflow.
pub fn multinomial(counts: &[u32]) -> Option<u128> {
    let mut total: u64 = 0;
    let mut r: u128 = 1;
    for &c in counts {
        total += c as u64;
        r = r.checked_mul(binomial(total, c as u64)?)?;
    }
    Some(r)
}

/// `ln` of the multinomial coefficient.
pub fn ln_multinomial(counts: &[u32]) -> f64 {
    let total: usize = counts.iter().map(|&c| c as usize).sum();
    ln_factorial(total) - counts.iter().map(|&c| ln_factorial(c as usize)).sum::<f64>()
}

/// All vectors of `parts` nonnegative integers summing to `total`, in
/// descending lexicographic order: `(total, 0, ..)` first, `(.., 0, total)` last.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    assert!(parts >= 1, "compositions need at least one part");
    let mut out = Vec::new();
    let mut current = vec![0u32; parts];
    fill(total, 0, &mut current, &mut out);
    out
}

fn fill(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for c in (0..=remaining).rev() {
        current[pos] = c;
        fill(remaining - c, pos + 1, current, out);
    }
}

/// Number of compositions of `total` into `parts` parts, `C(total + parts - 1, parts - 1)`.
pub fn composition_count(total: u32, parts: usize) -> Option<u128> {
    binomial(total as u64 + parts as u64 - 1, parts as u64 - 1)
}

/// Integer partitions of `n` into at most `max_parts` positive parts, returned
/// as occurrence vectors `q` of length `n + 1` with `q[0] = max_parts - (#parts)`.
///
/// With `max_parts = M` and `n = N` these are exactly the amplification
/// vectors: `sum q = M`, `sum d q_d = N`.
pub fn occupancy_vectors(max_parts: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut parts = Vec::new();
    partitions_rec(n, n.max(1), max_parts, &mut parts, &mut out);
    out
}

fn partitions_rec(
    remaining: usize,
    largest: usize,
    max_parts: usize,
    parts: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if remaining == 0 {
        let n: usize = parts.iter().sum();
        let mut q = vec![0usize; n + 1];
        q[0] = max_parts - parts.len();
        for &p in parts.iter() {
            q[p] += 1;
        }
        out.push(q);
        return;
    }
    if parts.len() == max_parts {
        return;
    }
    for p in (1..=largest.min(remaining)).rev() {
        parts.push(p);
        partitions_rec(remaining - p, p, max_parts, parts, out);
        parts.pop();
    }
}
