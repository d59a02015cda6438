//! Discrete memoryless sequencing channels and their binomial extensions.
//!
//! A [`Dmc`] is a row-stochastic matrix `W(y|x)`. Its `d`-order binomial
//! extension feeds one input to `d` independent copies of `W`. Output
//! `d`-tuples with the same type have identical likelihoods under every
//! input, so they are merged into a single letter indexed by a
//! [`Composition`]; mutual information is unchanged and the output alphabet
//! grows only polynomially in `d`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::{compositions, ln_multinomial, multinomial};
use crate::scalar::Scalar;

/// Tolerance on row sums when a channel matrix is supplied from outside.
pub const INPUT_ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel matrix is empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1")]
    RowSumOutOfTolerance { row: usize, sum: f64 },
    #[error("extension order must be at least 1")]
    OrderZero,
    #[error("crossover probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid noise distribution: {0}")]
    InvalidDistribution(String),
    #[error("channel file: {0}")]
    Format(String),
}

/// Anything with a row-stochastic transition matrix.
pub trait ChannelMatrix<T: Scalar> {
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    fn row(&self, x: usize) -> &[T];

    /// Entropy of row `x` in nats.
    fn row_entropy(&self, x: usize) -> T {
        -self.row(x).iter().map(|&v| v.xlogx()).sum::<T>()
    }
}

/// A discrete memoryless channel `W: X -> Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc<T = f64> {
    rows: Vec<Vec<T>>,
    num_outputs: usize,
}

/// Validates a rectangular matrix as a channel and renormalizes each row to
/// sum to exactly one.
pub fn validate_dmc<T: Scalar>(matrix: &[Vec<T>]) -> Result<Dmc<T>, ChannelError> {
    let first = matrix.first().ok_or(ChannelError::Empty)?;
    let num_outputs = first.len();
    if num_outputs == 0 {
        return Err(ChannelError::Empty);
    }
    let tol = T::tol(INPUT_ROW_SUM_TOL);
    let mut rows = Vec::with_capacity(matrix.len());
    for (r, row) in matrix.iter().enumerate() {
        if row.len() != num_outputs {
            return Err(ChannelError::Ragged { row: r, len: row.len(), expected: num_outputs });
        }
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(ChannelError::NonFinite { row: r, col: c });
            }
            if v < T::zero() {
                return Err(ChannelError::NegativeEntry { row: r, col: c, value: v.to_f64_lossy() });
            }
        }
        let sum: T = row.iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(ChannelError::RowSumOutOfTolerance { row: r, sum: sum.to_f64_lossy() });
        }
        rows.push(row.iter().map(|&v| v / sum).collect());
    }
    Ok(Dmc { rows, num_outputs })
}

impl<T: Scalar> Dmc<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self, ChannelError> {
        validate_dmc(&rows)
    }

    /// Identity channel on `n` letters.
    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|x| (0..n).map(|y| if x == y { T::one() } else { T::zero() }).collect()).collect();
        Dmc { rows, num_outputs: n }
    }

    /// Channel whose every row is uniform: zero capacity.
    pub fn completely_noisy(num_inputs: usize, num_outputs: usize) -> Self {
        let v = T::one() / T::count(num_outputs);
        Dmc { rows: vec![vec![v; num_outputs]; num_inputs], num_outputs }
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn entry(&self, x: usize, y: usize) -> T {
        self.rows[x][y]
    }

    pub fn column(&self, y: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[y]).collect()
    }

    /// `max_{x,y} ln 1/W(y|x)`; infinite as soon as one transition is impossible.
    pub fn nu_min(&self) -> T {
        self.rows.iter().flatten().fold(T::neg_infinity(), |acc, &v| acc.max(-v.ln()))
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.rows.iter().flatten().all(|&v| v > T::zero())
    }

    pub fn cast<U: Scalar>(&self) -> Dmc<U> {
        let rows: Vec<Vec<U>> =
            self.rows.iter().map(|r| r.iter().map(|&v| U::lit(v.to_f64_lossy())).collect()).collect();
        Dmc { rows, num_outputs: self.num_outputs }
    }

    /// Parses the channel file format `{"rows": [[...], ...]}`.
    pub fn from_json(text: &str) -> Result<Self, ChannelError> {
        let file: ChannelFile = serde_json::from_str(text).map_err(|e| ChannelError::Format(e.to_string()))?;
        let rows: Vec<Vec<T>> = file.rows.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect();
        validate_dmc(&rows)
    }

    pub fn to_json(&self) -> String {
        let file =
            ChannelFile { rows: self.rows.iter().map(|r| r.iter().map(|v| v.to_f64_lossy()).collect()).collect() };
        serde_json::to_string(&file).expect("channel serializes")
    }
}

impl<T: Scalar> ChannelMatrix<T> for Dmc<T> {
    fn num_inputs(&self) -> usize {
        self.rows.len()
    }
    fn num_outputs(&self) -> usize {
        self.num_outputs
    }
    fn row(&self, x: usize) -> &[T] {
        &self.rows[x]
    }
}

/// On-disk channel description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub rows: Vec<Vec<f64>>,
}

/// `BSC(w)`: `[[1-w, w], [w, 1-w]]`.
pub fn make_bsc<T: Scalar>(w: T) -> Result<Dmc<T>, ChannelError> {
    if !(w >= T::zero() && w <= T::one()) {
        return Err(ChannelError::OutOfRange(w.to_f64_lossy()));
    }
    Ok(Dmc { rows: vec![vec![T::one() - w, w], vec![w, T::one() - w]], num_outputs: 2 })
}

/// Modulo-additive channel `Y = X + Z mod n` with `Z ~ noise`:
/// `W(y|x) = noise[(y - x) mod n]`.
pub fn make_modulo_additive<T: Scalar>(noise: &[T]) -> Result<Dmc<T>, ChannelError> {
    let n = noise.len();
    if n == 0 {
        return Err(ChannelError::InvalidDistribution("empty noise vector".into()));
    }
    if let Some(v) = noise.iter().find(|v| !(**v >= T::zero())) {
        return Err(ChannelError::InvalidDistribution(format!("negative or NaN mass {v}")));
    }
    let sum: T = noise.iter().copied().sum();
    if (sum - T::one()).abs() > T::tol(INPUT_ROW_SUM_TOL) {
        return Err(ChannelError::InvalidDistribution(format!("sums to {sum}")));
    }
    let rows = (0..n).map(|x| (0..n).map(|y| noise[(y + n - x) % n] / sum).collect()).collect();
    Ok(Dmc { rows, num_outputs: n })
}

/// An output type of a `d`-tuple over `Y` and the number of tuples sharing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub counts: Vec<u32>,
    /// `d! / prod counts!`, when it fits in 128 bits.
    pub multiplicity: Option<u128>,
    pub log_multiplicity: f64,
}

impl Composition {
    fn new(counts: Vec<u32>, order: u32) -> Self {
        let multiplicity = multinomial(&counts);
        let log_multiplicity = match multiplicity {
            Some(m) if order <= 20 => (m as f64).ln(),
            _ => ln_multinomial(&counts),
        };
        Composition { counts, multiplicity, log_multiplicity }
    }

    pub fn order(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// `W^{(+)d}` with type-merged outputs.
#[derive(Debug, Clone)]
pub struct MergedChannel<T = f64> {
    base: Dmc<T>,
    order: usize,
    outputs: Vec<Composition>,
    rows: Vec<Vec<T>>,
    row_entropies: Vec<T>,
}

/// Builds the `d`-order binomial extension of `w` over the merged output alphabet.
pub fn binomial_extend<T: Scalar>(w: &Dmc<T>, d: usize) -> Result<MergedChannel<T>, ChannelError> {
    if d == 0 {
        return Err(ChannelError::OrderZero);
    }
    let ny = w.num_outputs();
    let outputs: Vec<Composition> =
        compositions(d as u32, ny).into_iter().map(|c| Composition::new(c, d as u32)).collect();
    let rows: Vec<Vec<T>> = w
        .rows()
        .iter()
        .map(|base_row| {
            let logs: Vec<Option<T>> =
                base_row.iter().map(|&v| if v > T::zero() { Some(v.ln()) } else { None }).collect();
            outputs
                .iter()
                .map(|comp| {
                    let mut acc = T::lit(comp.log_multiplicity);
                    for (c, l) in comp.counts.iter().zip(&logs) {
                        if *c == 0 {
                            continue;
                        }
                        match l {
                            Some(l) => acc = acc + T::count(*c as usize) * *l,
                            None => return T::zero(),
                        }
                    }
                    acc.exp()
                })
                .collect()
        })
        .collect();
    let row_entropies = rows.iter().map(|r: &Vec<T>| -r.iter().map(|&v| v.xlogx()).sum::<T>()).collect();
    Ok(MergedChannel { base: w.clone(), order: d, outputs, rows, row_entropies })
}

impl<T: Scalar> MergedChannel<T> {
    pub fn base(&self) -> &Dmc<T> {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn outputs(&self) -> &[Composition] {
        &self.outputs
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    /// Index of the merged letter with the given counts.
    pub fn output_index(&self, counts: &[u32]) -> Option<usize> {
        self.outputs.iter().position(|c| c.counts == counts)
    }
}

impl<T: Scalar> ChannelMatrix<T> for MergedChannel<T> {
    fn num_inputs(&self) -> usize {
        self.rows.len()
    }
    fn num_outputs(&self) -> usize {
        self.outputs.len()
    }
    fn row(&self, x: usize) -> &[T] {
        &self.rows[x]
    }
    fn row_entropy(&self, x: usize) -> T {
        self.row_entropies[x]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn w0() -> Dmc {
        let rows = [[94., 2., 2., 2.], [2., 70., 25., 3.], [3., 2., 85., 10.], [10., 5., 5., 80.]];
        Dmc::new(rows.iter().map(|r| r.iter().map(|v| v / 100.0).collect()).collect()).unwrap()
    }

    #[test]
    fn validate_accepts_identity_and_w0() {
        let id = validate_dmc(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(id, Dmc::identity(2));
        let w = w0();
        assert_eq!((w.num_inputs(), w.num_outputs()), (4, 4));
    }

    #[test]
    fn validate_reports_bad_row() {
        let err = validate_dmc(&[vec![0.5, 0.5], vec![0.7, 0.2]]).unwrap_err();
        match err {
            ChannelError::RowSumOutOfTolerance { row, sum } => {
                assert_eq!(row, 1);
                assert_abs_diff_eq!(sum, 0.9, epsilon = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(validate_dmc(&[vec![1.5, -0.5]]), Err(ChannelError::NegativeEntry { row: 0, col: 1, .. })));
        assert!(matches!(validate_dmc::<f64>(&[]), Err(ChannelError::Empty)));
        assert!(matches!(validate_dmc(&[vec![1.0], vec![0.5, 0.5]]), Err(ChannelError::Ragged { row: 1, .. })));
    }

    #[test]
    fn validation_renormalizes_small_rounding() {
        let w = validate_dmc(&[vec![0.3333333333, 0.6666666667]]).unwrap();
        assert_eq!(w.row(0).iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn bsc_construction() {
        assert_eq!(make_bsc(0.0).unwrap(), Dmc::identity(2));
        assert_eq!(make_bsc(0.5).unwrap().rows(), &[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(make_bsc(0.05).unwrap().rows(), &[vec![0.95, 0.05], vec![0.05, 0.95]]);
        assert!(matches!(make_bsc(1.5), Err(ChannelError::OutOfRange(_))));
    }

    #[test]
    fn modulo_additive_construction() {
        assert_eq!(make_modulo_additive(&[1.0, 0.0]).unwrap(), Dmc::identity(2));
        assert_eq!(make_modulo_additive(&[0.9, 0.1]).unwrap(), make_bsc(0.1).unwrap());
        let c = make_modulo_additive(&[0.7, 0.2, 0.1]).unwrap();
        let expected = [[0.7, 0.2, 0.1], [0.1, 0.7, 0.2], [0.2, 0.1, 0.7]];
        for x in 0..3 {
            for y in 0..3 {
                assert_abs_diff_eq!(c.entry(x, y), expected[x][y], epsilon = 1e-15);
            }
        }
        assert!(make_modulo_additive(&[0.7, 0.2]).is_err());
    }

    #[test]
    fn nu_min_finite_only_for_positive_channels() {
        assert!(Dmc::<f64>::identity(2).nu_min().is_infinite());
        assert_abs_diff_eq!(make_bsc(0.1).unwrap().nu_min(), (10.0f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn bsc_order_three_has_four_letters() {
        let m = binomial_extend(&make_bsc(0.2).unwrap(), 3).unwrap();
        let counts: Vec<_> = m.outputs().iter().map(|c| c.counts.clone()).collect();
        assert_eq!(counts, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
        let mult: Vec<_> = m.outputs().iter().map(|c| c.multiplicity.unwrap()).collect();
        assert_eq!(mult, vec![1, 3, 3, 1]);
    }

    #[test]
    fn order_one_reproduces_base() {
        let w = w0();
        let m = binomial_extend(&w, 1).unwrap();
        assert_eq!(m.num_outputs(), 4);
        for x in 0..4 {
            for y in 0..4 {
                assert_abs_diff_eq!(m.row(x)[y], w.entry(x, y), epsilon = 1e-15);
            }
        }
        assert!(m.outputs().iter().all(|c| c.multiplicity == Some(1)));
    }

    #[test]
    fn bsc_order_two_rows_match_enumeration() {
        // Enumerate Y^2 for input 0 of BSC(0.1): 00 -> .81, 01/10 -> .09 each, 11 -> .01.
        let m = binomial_extend(&make_bsc(0.1).unwrap(), 2).unwrap();
        let expected = [0.81, 0.18, 0.01];
        for (v, e) in m.row(0).iter().zip(expected) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn order_zero_rejected() {
        assert_eq!(binomial_extend(&w0(), 0).unwrap_err(), ChannelError::OrderZero);
    }

    #[test]
    fn large_orders_stay_stochastic() {
        let m = binomial_extend(&w0(), 40).unwrap();
        assert_eq!(m.num_outputs(), 12341);
        assert!(m.outputs().iter().all(|c| c.order() == 40));
        for x in 0..4 {
            assert_abs_diff_eq!(m.row(x).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let w = w0();
        let back: Dmc = Dmc::from_json(&w.to_json()).unwrap();
        assert_eq!(back, w);
        assert!(matches!(Dmc::<f64>::from_json("{\"rows\": [[1.0, 0.0]"), Err(ChannelError::Format(_))));
        assert!(matches!(
            Dmc::<f64>::from_json("{\"rows\": [[0.5, 0.4]]}"),
            Err(ChannelError::RowSumOutOfTolerance { row: 0, .. })
        ));
    }

    #[test]
    fn f32_extension() {
        let m = binomial_extend(&make_bsc(0.1f32).unwrap(), 2).unwrap();
        assert!((m.row(0)[1] - 0.18).abs() < 1e-6);
    }
}
