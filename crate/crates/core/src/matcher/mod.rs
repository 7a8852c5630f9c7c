//! Matching scores between two finite collections under the four matching
//! constraints: 1:1, N:1, 1:N and N:N.

mod hungarian;

use serde::{Deserialize, Serialize};
use crate::error::{Error, Result};
use crate::sim::{normalize, Normalizer, OverlapTriple, SimScore};

/// Weights below this are treated as 0 when building witnesses.
pub const WITNESS_EPS: f64 = 1e-12;

/// Cardinality rule on a matching between predicted (rows) and reference
/// (columns) items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MatchConstraint {
    /// ↔: every row and every column is used at most once.
    #[default]
    OneToOne,
    /// →: every row is used at most once.
    ManyToOne,
    /// ←: every column is used at most once.
    OneToMany,
    /// ~: any relation.
    ManyToMany,
}

impl MatchConstraint {
    pub const ALL: [MatchConstraint; 4] = [
        MatchConstraint::OneToOne,
        MatchConstraint::ManyToOne,
        MatchConstraint::OneToMany,
        MatchConstraint::ManyToMany,
    ];

    /// Whether each row may be matched at most once.
    pub fn rows_unique(self) -> bool {
        matches!(self, MatchConstraint::OneToOne | MatchConstraint::ManyToOne)
    }

    /// Whether each column may be matched at most once.
    pub fn cols_unique(self) -> bool {
        matches!(self, MatchConstraint::OneToOne | MatchConstraint::OneToMany)
    }
}

/// Dense `|P| x |R|` matrix of nonnegative pair similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        WeightMatrix {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Precondition("ragged weight matrix".into()));
        }
        Self::try_from_fn(r, c, |i, j| Ok::<_, Error>(rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::try_from_fn(rows, cols, |i, j| Ok::<_, Error>(f(i, j)))
    }

    /// Builds the matrix from a fallible pair similarity.
    pub fn try_from_fn<E: From<Error>>(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Result<f64, E>,
    ) -> Result<Self, E> {
        let mut weights = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let w = f(i, j)?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Precondition(format!("weight ({i}, {j}) = {w} must be finite and >= 0")).into());
                }
                weights.push(w);
            }
        }
        Ok(WeightMatrix { rows, cols, weights })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, w: f64) {
        assert!(w.is_finite() && w >= 0.0, "weight must be finite and >= 0");
        self.weights[row * self.cols + col] = w;
    }

    /// Copy with one row removed.
    pub fn without_row(&self, row: usize) -> WeightMatrix {
        let mut weights = Vec::with_capacity((self.rows - 1) * self.cols);
        for i in (0..self.rows).filter(|&i| i != row) {
            weights.extend_from_slice(&self.weights[i * self.cols..(i + 1) * self.cols]);
        }
        WeightMatrix {
            rows: self.rows - 1,
            cols: self.cols,
            weights,
        }
    }

    pub fn transpose(&self) -> WeightMatrix {
        let mut weights = Vec::with_capacity(self.weights.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                weights.push(self.get(i, j));
            }
        }
        WeightMatrix {
            rows: self.cols,
            cols: self.rows,
            weights,
        }
    }
}

/// A set of matched `(row, col)` pairs and their total weight.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub score: f64,
}

impl Matching {
    /// Keeps pairs of positive weight, sorted, and sums their weights.
    pub fn from_pairs(w: &WeightMatrix, mut pairs: Vec<(usize, usize)>) -> Matching {
        pairs.retain(|&(i, j)| w.get(i, j) > WITNESS_EPS);
        pairs.sort_unstable();
        let score = pairs.iter().map(|&(i, j)| w.get(i, j)).sum();
        Matching { pairs, score }
    }

    /// Whether the pairs respect the constraint's row/column uniqueness.
    pub fn satisfies(&self, c: MatchConstraint) -> bool {
        let mut rows: Vec<usize> = self.pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<usize> = self.pairs.iter().map(|p| p.1).collect();
        rows.sort_unstable();
        cols.sort_unstable();
        let dup = |v: &[usize]| v.windows(2).any(|w| w[0] == w[1]);
        !(c.rows_unique() && dup(&rows)) && !(c.cols_unique() && dup(&cols))
    }
}

/// Maximum-weight matching of `w` under constraint `c`.
///
/// Zero-weight pairs never appear in the witness.
pub fn match_score(w: &WeightMatrix, c: MatchConstraint) -> Matching {
    let (rows, cols) = (w.rows(), w.cols());
    if rows == 0 || cols == 0 {
        return Matching::default();
    }
    let pairs = match c {
        MatchConstraint::OneToOne => hungarian::max_weight_assignment(rows, cols, |i, j| w.get(i, j))
            .into_iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect(),
        MatchConstraint::ManyToOne => (0..rows)
            .filter_map(|i| argmax((0..cols).map(|j| w.get(i, j))).map(|j| (i, j)))
            .collect(),
        MatchConstraint::OneToMany => (0..cols)
            .filter_map(|j| argmax((0..rows).map(|i| w.get(i, j))).map(|i| (i, j)))
            .collect(),
        MatchConstraint::ManyToMany => (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect(),
    };
    Matching::from_pairs(w, pairs)
}

/// First index of the maximum, if that maximum is positive.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.enumerate() {
        if v > WITNESS_EPS && best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// The result of matching two collections: the Σ triple and the witness.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlap {
    pub triple: OverlapTriple,
    pub matching: Matching,
}

/// Σ(P,R) under `c` together with the self-scores Σ_x inner(x,x).
pub fn try_overlap<T, E: From<Error>>(
    pred: &[T],
    gold: &[T],
    c: MatchConstraint,
    mut inner: impl FnMut(&T, &T) -> Result<f64, E>,
) -> Result<Overlap, E> {
    let w = WeightMatrix::try_from_fn(pred.len(), gold.len(), |i, j| inner(&pred[i], &gold[j]))?;
    let matching = match_score(&w, c);
    let mut sigma_pp = 0.0;
    for x in pred {
        sigma_pp += inner(x, x)?;
    }
    let mut sigma_rr = 0.0;
    for y in gold {
        sigma_rr += inner(y, y)?;
    }
    let triple = OverlapTriple::new(matching.score, sigma_pp, sigma_rr)?;
    Ok(Overlap { triple, matching })
}

/// Infallible form of [`try_overlap`].
pub fn overlap<T>(pred: &[T], gold: &[T], c: MatchConstraint, mut inner: impl FnMut(&T, &T) -> f64) -> Overlap {
    try_overlap::<T, Error>(pred, gold, c, |a, b| Ok(inner(a, b)))
        .expect("similarity values must be finite and nonnegative")
}

/// Matching similarity between two collections, normalized by `n` when given.
pub fn set_similarity<T, E: From<Error>>(
    pred: &[T],
    gold: &[T],
    inner: impl FnMut(&T, &T) -> Result<f64, E>,
    c: MatchConstraint,
    n: Option<Normalizer>,
) -> Result<SimScore, E> {
    let o = try_overlap(pred, gold, c, inner)?;
    Ok(match n {
        Some(n) => normalize(n, &o.triple),
        None => SimScore::unnormalized(o.triple.sigma_pr)?,
    })
}
