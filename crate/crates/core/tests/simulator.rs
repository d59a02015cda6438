use std::collections::HashMap;

use dnastore::bounds::{capacity_lower_bound, DnaParams};
use dnastore::combinatorics::occupancy_vectors;
use dnastore::optimize::OptimizerConfig;
use dnastore::reliability::reliability_lower_bound;
use dnastore::sim::{
    decode_ml, decode_universal, monte_carlo_error, outage_probability, trial_rng, type_class_sizes_exact,
    universal_metric, Codebook, Codeword, DecoderConfig, SamplingRealization,
};
use dnastore::{make_bsc, Distribution};

mod common;
use common::{all_vectors, exact_error, exact_likelihood, reshape};

#[test]
fn type_classes_partition_all_index_vectors() {
    for m in 1..=4 {
        for n in 0..=6 {
            let mut by_q: HashMap<Vec<usize>, u128> = HashMap::new();
            for u in all_vectors(m, n) {
                *by_q.entry(SamplingRealization::from_indices(u, m).unwrap().q).or_default() += 1;
            }
            let classes = occupancy_vectors(m, n);
            assert_eq!(classes.len(), by_q.len(), "M = {m}, N = {n}");
            let mut total = 0u128;
            for q in classes {
                let (_, _, t2) = type_class_sizes_exact(&q).unwrap().unwrap();
                assert_eq!(by_q[&q], t2, "q = {q:?}");
                total += t2;
            }
            assert_eq!(total, (m as u128).pow(n as u32));
        }
    }
}

/// The universal metric written out with output compositions as count
/// vectors over `Y`.
fn metric_oracle(x: &Codeword, y: &[Vec<usize>], u: &[usize], px: &[f64], ny: usize) -> f64 {
    let m = x.len();
    let l = x[0].len();
    let s: Vec<usize> = (0..m).map(|k| u.iter().filter(|&&v| v == k).count()).collect();
    let q0 = s.iter().filter(|&&c| c == 0).count();
    let mut total = -((m - q0) as f64) * (m as f64).ln();
    for d in 0..=u.len() {
        let mols: Vec<usize> = (0..m).filter(|&k| s[k] == d).collect();
        if mols.is_empty() {
            continue;
        }
        let mut joint: HashMap<(usize, Vec<usize>), f64> = HashMap::new();
        for &k in &mols {
            for pos in 0..l {
                let mut counts = vec![0usize; ny];
                for (n, &v) in u.iter().enumerate() {
                    if v == k {
                        counts[y[n][pos]] += 1;
                    }
                }
                *joint.entry((x[k][pos], counts)).or_default() += 1.0;
            }
        }
        let size = (mols.len() * l) as f64;
        let mut pa = vec![0.0; px.len()];
        let mut pb: HashMap<Vec<usize>, f64> = HashMap::new();
        for ((a, b), c) in &joint {
            pa[*a] += c / size;
            *pb.entry(b.clone()).or_default() += c / size;
        }
        let div: f64 = pa.iter().zip(px).filter(|(p, _)| **p > 0.0).map(|(p, t)| p * (p / t).ln()).sum();
        let mi: f64 = joint.iter().map(|((a, b), c)| c / size * ((c / size) / (pa[*a] * pb[b])).ln()).sum();
        total += size * (div + mi);
    }
    total
}

#[test]
fn universal_metric_matches_empirical_type_oracle() {
    let px = Distribution::new(vec![0.4, 0.6]).unwrap();
    let words = all_vectors(2, 4);
    let outputs = all_vectors(2, 4);
    for xw in words.iter().step_by(3) {
        let x: Codeword = vec![xw[..2].to_vec(), xw[2..].to_vec()];
        for yw in &outputs {
            let y = vec![yw[..2].to_vec(), yw[2..].to_vec()];
            for u in all_vectors(2, 2) {
                let got = universal_metric(&x, &y, &u, &px).unwrap();
                let want = metric_oracle(&x, &y, &u, px.probs(), 2);
                assert!((got - want).abs() < 1e-12, "x {x:?} y {y:?} u {u:?}: {got} vs {want}");
            }
        }
    }
}

fn best_metric(x: &Codeword, y: &[Vec<usize>], px: &Distribution) -> f64 {
    all_vectors(x.len(), y.len())
        .iter()
        .map(|u| universal_metric(x, y, u, px).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn noiseless_reads_covering_every_molecule_decode_correctly() {
    let words: Vec<Codeword> = vec![
        vec![vec![0, 0, 1], vec![1, 1, 0]],
        vec![vec![0, 1, 1], vec![1, 0, 0]],
        vec![vec![1, 1, 1], vec![0, 0, 0]],
        vec![vec![0, 1, 0], vec![0, 1, 0]],
    ];
    let book = Codebook::new(words).unwrap();
    let px = Distribution::uniform(2);
    let cfg = DecoderConfig::default();
    let mut wrong = Vec::new();
    for (j, x) in book.words().iter().enumerate() {
        for u in all_vectors(2, 3) {
            if !(u.contains(&0) && u.contains(&1)) {
                continue;
            }
            let y: Vec<Vec<usize>> = u.iter().map(|&k| x[k].clone()).collect();
            let decided = decode_universal(&y, &book, &px, &cfg).unwrap();
            if decided != j {
                wrong.push((j, u, decided));
            }
        }
    }
    assert!(wrong.is_empty(), "misdecoded (sent, u, decided): {wrong:?}");
}

// A candidate may declare a molecule unread. Its symbols then enter only
// through q_0 L D(P^0 || px), which a constant molecule maximizes, while the
// ordering penalty shrinks. Codeword ((1,1,1),(0,0,0)) explains the reads of
// ((0,0,1),(1,1,0)) better than the transmitted word does.
#[test]
fn unread_molecules_can_outscore_the_transmitted_word() {
    let px = Distribution::uniform(2);
    let sent: Codeword = vec![vec![0, 0, 1], vec![1, 1, 0]];
    let constant: Codeword = vec![vec![1, 1, 1], vec![0, 0, 0]];
    let y = vec![vec![0, 0, 1], vec![0, 0, 1], vec![1, 1, 0]];
    let ln2 = 2f64.ln();
    assert!((best_metric(&sent, &y, &px) - 4.0 * ln2).abs() < 1e-12);
    assert!((best_metric(&constant, &y, &px) - 5.0 * ln2).abs() < 1e-12);
    assert!((universal_metric(&constant, &y, &[0, 0, 0], &px).unwrap() - 5.0 * ln2).abs() < 1e-12);
}

#[test]
fn universal_decoder_mostly_agrees_with_maximum_likelihood() {
    let w = make_bsc(0.1).unwrap();
    let px = Distribution::uniform(2);
    let book = Codebook::random(2, 3, 4, &px, &mut trial_rng(2024, 0)).unwrap();
    let cfg = DecoderConfig::default();
    let mut agree = 0.0;
    let mut total = 0.0;
    for flat in all_vectors(2, 9) {
        let y = reshape(&flat, 3);
        let py: f64 = book.words().iter().map(|x| exact_likelihood(x, &y, &w)).sum::<f64>() / 4.0;
        let ml = decode_ml(&y, &book, &w).unwrap();
        let likelihoods: Vec<f64> = book.words().iter().map(|x| exact_likelihood(x, &y, &w)).collect();
        let top = likelihoods.iter().copied().fold(0.0, f64::max);
        assert!(likelihoods[ml] >= top * (1.0 - 1e-9));
        assert!(likelihoods[..ml].iter().all(|&v| v < top * (1.0 - 1e-12)));
        if decode_universal(&y, &book, &px, &cfg).unwrap() == ml {
            agree += py;
        }
        total += py;
    }
    assert!((total - 1.0).abs() < 1e-12);
    assert!(agree >= 0.9, "agreement {agree}");
}

#[test]
fn monte_carlo_brackets_exact_error() {
    let w = make_bsc(0.1).unwrap();
    let px = Distribution::uniform(2);
    let book = Codebook::random(2, 2, 2, &px, &mut trial_rng(77, 0)).unwrap();
    let exact = exact_error(&book, &w, 2);
    let est = monte_carlo_error(&book, &w, 2, &px, &DecoderConfig::default(), 20_000, 5).unwrap();
    assert!(est.ci_low <= exact && exact <= est.ci_high, "{exact} outside {est:?}");
}

#[test]
fn outage_tracks_reliability_bound() {
    let w = make_bsc(0.11).unwrap();
    let p = DnaParams::new(5.0, 4.0, w, 20).unwrap();
    let cfg = OptimizerConfig::default();
    let lb = capacity_lower_bound(&p, &cfg).unwrap().value;
    let rate = lb - 0.02;
    let bound = reliability_lower_bound(rate, &p, &cfg).unwrap().exponent;
    let est = outage_probability(rate, &Distribution::uniform(2), &p, 100, 100_000, 11).unwrap();
    assert!(est.errors > 0, "no outages observed");
    let measured = -est.error_rate.ln() / 100.0;
    assert!(measured >= bound / 2.0 && measured <= bound * 2.0, "measured {measured}, bound {bound}");
}

/// `min KL(theta || pi_alpha)` subject to `Gamma(theta) <= rate` and the
/// occupancy identity `sum_d d theta_d = alpha`, by its two-variable dual.
fn occupancy_outage_exponent(mi: &[f64], alpha: f64, beta: f64, rate: f64) -> f64 {
    let dmax = 80;
    let mut pi = vec![(-alpha).exp()];
    for d in 1..=dmax {
        pi.push(pi[d - 1] * alpha / d as f64);
    }
    let g: Vec<f64> =
        (0..=dmax).map(|d| if d == 0 { 0.0 } else { mi.get(d).copied().unwrap_or(0.0) - 1.0 / beta }).collect();
    let dual = |lam: f64, mu: f64| {
        let z: f64 = (0..=dmax).map(|d| pi[d] * (-lam * g[d] - mu * d as f64).exp()).sum();
        -lam * rate - mu * alpha - z.ln()
    };
    let golden = |f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64| {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..120 {
            let (c, d) = (b - r * (b - a), a + r * (b - a));
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        (a + b) / 2.0
    };
    let inner = |lam: f64| dual(lam, golden(&|mu| dual(lam, mu), -5.0, 5.0));
    inner(golden(&inner, 0.0, 50.0))
}

#[test]
fn outage_matches_occupancy_large_deviations() {
    let w = make_bsc(0.11).unwrap();
    let p = DnaParams::new(5.0, 4.0, w.clone(), 20).unwrap();
    let px = Distribution::uniform(2);
    let lb = capacity_lower_bound(&p, &OptimizerConfig::default()).unwrap().value;
    let rate = lb - 0.02;
    let mi: Vec<f64> =
        dnastore::reliability::ReliabilityEvaluator::new(&w, 5.0, 20).unwrap().mutual_informations(px.probs());
    let exponent = occupancy_outage_exponent(&mi, 5.0, 4.0, rate);
    let m = 100.0;
    let est = outage_probability(rate, &px, &p, 100, 100_000, 11).unwrap();
    let measured = -est.error_rate.ln() / m;
    // Finite-M prefactors only add positive O(ln M / M) terms.
    assert!(measured >= exponent && measured <= exponent + m.ln() / m, "measured {measured}, exponent {exponent}");
}
