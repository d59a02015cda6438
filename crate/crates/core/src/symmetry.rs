//! Symmetric, Gallager-symmetric and modulo-additive channel detection.
//!
//! A block of columns is doubly-permutation when its rows are permutations
//! of each other and its columns are permutations of each other. A channel
//! is symmetric in Gallager's sense when its output alphabet splits into
//! such blocks.
//!
//! Every block of a valid split holds columns that are permutations of one
//! another, so it sits inside one class of columns sharing a sorted
//! fingerprint. Rows of a union of blocks are again permutations of each
//! other, hence a split exists iff every fingerprint class is itself a
//! doubly-permutation block. The test is therefore exact and runs in
//! polynomial time; the column cap only bounds memory and runtime.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{binomial_extend, ChannelError, ChannelMatrix, Dmc};
use crate::scalar::Scalar;

/// Relative tolerance for treating two matrix entries as equal.
pub const ENTRY_REL_TOL: f64 = 1e-9;
/// Default cap on the number of output columns examined.
pub const DEFAULT_COLUMN_CAP: usize = 5000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("undecided: {columns} output columns exceed the cap of {cap}")]
    SearchBudgetExceeded { columns: usize, cap: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub is_doubly_permutation: bool,
    /// Output columns grouped into doubly-permutation blocks, when possible.
    pub gallager_partition: Option<Vec<Vec<usize>>>,
    pub is_modulo_additive: bool,
    /// Atom templates matching every sub-block, for channels with at most four inputs.
    pub atom_labels: Option<Vec<AtomLabel>>,
}

impl SymmetryReport {
    pub fn is_gallager_symmetric(&self) -> bool {
        self.gallager_partition.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomLabel {
    pub columns: Vec<usize>,
    pub label: String,
}

fn close<T: Scalar>(a: T, b: T) -> bool {
    a == b || (a - b).abs() <= T::lit(ENTRY_REL_TOL) * a.abs().max(b.abs())
}

fn sorted<T: Scalar>(v: impl Iterator<Item = T>) -> Vec<T> {
    let mut s: Vec<T> = v.collect();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite entries"));
    s
}

fn same_multiset<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| close(x, y))
}

fn rows_are_permutations<T: Scalar, R: AsRef<[T]>>(m: &[R], cols: &[usize]) -> bool {
    let first = sorted(cols.iter().map(|&c| m[0].as_ref()[c]));
    m.iter().skip(1).all(|r| same_multiset(&first, &sorted(cols.iter().map(|&c| r.as_ref()[c]))))
}

fn column_fingerprint<T: Scalar, R: AsRef<[T]>>(m: &[R], c: usize) -> Vec<T> {
    sorted(m.iter().map(|r| r.as_ref()[c]))
}

/// Rows are permutations of row 0 and columns are permutations of column 0.
pub fn is_doubly_permutation<T: Scalar, R: AsRef<[T]>>(m: &[R]) -> bool {
    let Some(first) = m.first() else { return true };
    let ncols = first.as_ref().len();
    if m.iter().any(|r| r.as_ref().len() != ncols) {
        return false;
    }
    let all: Vec<usize> = (0..ncols).collect();
    if !rows_are_permutations(m, &all) {
        return false;
    }
    let c0 = column_fingerprint(m, 0);
    (1..ncols).all(|c| same_multiset(&c0, &column_fingerprint(m, c)))
}

fn rows_of<T: Scalar, C: ChannelMatrix<T> + ?Sized>(ch: &C) -> Vec<&[T]> {
    (0..ch.num_inputs()).map(|x| ch.row(x)).collect()
}

/// Groups output columns by sorted fingerprint, in order of first appearance.
fn fingerprint_classes<T: Scalar>(rows: &[&[T]]) -> Vec<Vec<usize>> {
    let ncols = rows[0].len();
    let mut reps: Vec<Vec<T>> = Vec::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for c in 0..ncols {
        let fp = column_fingerprint(rows, c);
        match reps.iter().position(|r| same_multiset(r, &fp)) {
            Some(k) => classes[k].push(c),
            None => {
                reps.push(fp);
                classes.push(vec![c]);
            }
        }
    }
    classes
}

/// A split of the outputs into doubly-permutation blocks, or `None` when no
/// such split exists. Blocks are the coarsest possible ones.
pub fn gallager_partition<T: Scalar, C: ChannelMatrix<T> + ?Sized>(
    ch: &C,
    column_cap: usize,
) -> Result<Option<Vec<Vec<usize>>>, SymmetryError> {
    if ch.num_outputs() > column_cap {
        return Err(SymmetryError::SearchBudgetExceeded { columns: ch.num_outputs(), cap: column_cap });
    }
    let rows = rows_of(ch);
    let classes = fingerprint_classes(&rows);
    if classes.iter().all(|cls| rows_are_permutations(&rows, cls)) {
        Ok(Some(classes))
    } else {
        Ok(None)
    }
}

/// `W(y|x) = W((y - x) mod n | 0)` on a square alphabet.
pub fn is_modulo_additive<T: Scalar, C: ChannelMatrix<T> + ?Sized>(ch: &C) -> bool {
    let n = ch.num_inputs();
    if ch.num_outputs() != n {
        return false;
    }
    let r0 = ch.row(0);
    (1..n).all(|x| (0..n).all(|y| close(ch.row(x)[y], r0[(y + n - x) % n])))
}

pub fn symmetry_report<T: Scalar, C: ChannelMatrix<T> + ?Sized>(
    ch: &C,
    column_cap: usize,
) -> Result<SymmetryReport, SymmetryError> {
    let partition = gallager_partition(ch, column_cap)?;
    let rows = rows_of(ch);
    let atom_labels = match &partition {
        Some(blocks) if ch.num_inputs() <= 4 => Some(label_atoms(&rows, blocks)),
        _ => None,
    };
    Ok(SymmetryReport {
        num_inputs: ch.num_inputs(),
        num_outputs: ch.num_outputs(),
        is_doubly_permutation: is_doubly_permutation(&rows),
        gallager_partition: partition,
        is_modulo_additive: is_modulo_additive(ch),
        atom_labels,
    })
}

/// Symmetry report of the `d`-order binomial extension of `w`.
pub fn check_extension_symmetry<T: Scalar>(
    w: &Dmc<T>,
    d: usize,
    column_cap: usize,
) -> Result<SymmetryReport, SymmetryError> {
    if d == 0 {
        return Err(ChannelError::OrderZero.into());
    }
    let count = crate::combinatorics::composition_count(d as u32, w.num_outputs());
    if count.is_none_or(|c| c > column_cap as u128) {
        return Err(SymmetryError::SearchBudgetExceeded {
            columns: count.map_or(usize::MAX, |c| c.min(usize::MAX as u128) as usize),
            cap: column_cap,
        });
    }
    symmetry_report(&binomial_extend(w, d)?, column_cap)
}

type Template = (&'static str, &'static [&'static [u8]]);

// Small doubly-permutation atoms; digits are symbolic probabilities p_i.
const TEMPLATES: &[Template] = &[
    ("U(2,1)", &[&[0], &[0]]),
    ("U(2,2)", &[&[0, 1], &[1, 0]]),
    ("U(3,1)", &[&[0], &[0], &[0]]),
    ("U(3,3)", &[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1]]),
    ("U(4,1)", &[&[0], &[0], &[0], &[0]]),
    ("U(4,2)", &[&[0, 1], &[0, 1], &[1, 0], &[1, 0]]),
    ("U(4,4)A", &[&[0, 1, 2, 3], &[1, 0, 3, 2], &[2, 3, 0, 1], &[3, 2, 1, 0]]),
    ("U(4,4)B", &[&[0, 1, 2, 3], &[1, 0, 3, 2], &[2, 3, 1, 0], &[3, 2, 0, 1]]),
    ("U(4,4)C", &[&[0, 1, 2, 3], &[1, 2, 3, 0], &[2, 3, 0, 1], &[3, 0, 1, 2]]),
    ("U(4,4)D", &[&[0, 1, 2, 3], &[1, 3, 0, 2], &[2, 0, 3, 1], &[3, 2, 1, 0]]),
];

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Whether the `r x c` block equals `template` up to row and column
/// permutations, for some assignment of values to its symbols.
fn matches_template<T: Scalar>(block: &[Vec<T>], template: &[&[u8]]) -> bool {
    let (r, c) = (block.len(), block[0].len());
    if template.len() != r || template[0].len() != c {
        return false;
    }
    let col_perms = permutations(c);
    permutations(r).iter().any(|rp| {
        col_perms.iter().any(|cp| {
            let mut values: [Option<T>; 4] = [None; 4];
            (0..r).all(|i| {
                (0..c).all(|j| {
                    let v = block[rp[i]][cp[j]];
                    let slot = &mut values[template[i][j] as usize];
                    match slot {
                        Some(prev) => close(*prev, v),
                        None => {
                            *slot = Some(v);
                            true
                        }
                    }
                })
            })
        })
    })
}

/// Names of all templates the block is equivalent to, joined by `/`.
fn classify<T: Scalar>(rows: &[&[T]], cols: &[usize]) -> Option<String> {
    let block: Vec<Vec<T>> = rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
    if !is_doubly_permutation(&block) {
        return None;
    }
    let names: Vec<&str> =
        TEMPLATES.iter().filter(|(_, t)| matches_template(&block, t)).map(|(name, _)| *name).collect();
    (!names.is_empty()).then(|| names.join("/"))
}

fn subsets_with(first: usize, rest: &[usize], extra: usize) -> Vec<Vec<usize>> {
    if extra == 0 {
        return vec![vec![first]];
    }
    let mut out = Vec::new();
    for (i, &c) in rest.iter().enumerate() {
        for mut s in subsets_with(first, &rest[i + 1..], extra - 1) {
            s.push(c);
            out.push(s);
        }
    }
    out
}

/// Greedy split of each block into the smallest matching atoms.
fn label_atoms<T: Scalar>(rows: &[&[T]], blocks: &[Vec<usize>]) -> Vec<AtomLabel> {
    let mut labels = Vec::new();
    for block in blocks {
        let mut remaining = block.clone();
        'outer: while let Some(&first) = remaining.first() {
            let rest = &remaining[1..];
            for extra in 0..4.min(remaining.len()) {
                for mut cols in subsets_with(first, rest, extra) {
                    cols.sort_unstable();
                    if let Some(name) = classify(rows, &cols) {
                        remaining.retain(|c| !cols.contains(c));
                        labels.push(AtomLabel { columns: cols, label: name });
                        continue 'outer;
                    }
                }
            }
            labels.push(AtomLabel { columns: remaining.clone(), label: "unclassified".into() });
            break;
        }
    }
    labels
}
