//! Order-preserving matching of sequences and partially ordered collections.
//!
//! For total orders the best monotone matching is a weighted longest common
//! subsequence, solved by dynamic programming. Partial orders and preorders
//! go through branch-and-bound with the pairwise monotonicity constraints
//! `m_uv + m_u'v' <= 1 + [u <= u' iff v <= v']`.

use serde::{Deserialize, Serialize};

use crate::bnb::{self, Evaluation, Search, DEFAULT_NODE_LIMIT};
use crate::error::{Error, Result};
use crate::matcher::{match_score, MatchConstraint, Matching, WeightMatrix, WITNESS_EPS};

const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Total,
    Partial,
    Preorder,
}

/// A reflexive, transitive relation over item indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Order {
    kind: OrderKind,
    leq: Vec<Vec<bool>>,
}

impl Order {
    /// The list order on `n` items.
    pub fn total(n: usize) -> Order {
        Order {
            kind: OrderKind::Total,
            leq: (0..n).map(|i| (0..n).map(|j| i <= j).collect()).collect(),
        }
    }

    /// Closes `pairs` reflexively and transitively. Total orders take no
    /// pairs; partial orders must be antisymmetric after closure.
    pub fn new(n: usize, kind: OrderKind, pairs: &[(usize, usize)]) -> Result<Order> {
        if kind == OrderKind::Total {
            if !pairs.is_empty() {
                return Err(Error::data("order", "a total order is given by list position and takes no pairs"));
            }
            return Ok(Order::total(n));
        }
        let mut leq: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::data(format!("order[{k}]"), format!("index out of range for {n} items")));
            }
            leq[i][j] = true;
        }
        for m in 0..n {
            for i in 0..n {
                if leq[i][m] {
                    for j in 0..n {
                        if leq[m][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        if kind == OrderKind::Partial {
            for i in 0..n {
                for j in i + 1..n {
                    if leq[i][j] && leq[j][i] {
                        return Err(Error::data(
                            "order",
                            format!("items {i} and {j} precede each other; not a partial order"),
                        ));
                    }
                }
            }
        }
        Ok(Order { kind, leq })
    }

    pub fn kind(&self) -> OrderKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.leq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leq.is_empty()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    /// The closed relation without its reflexive pairs.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.leq[i][j])
            .collect()
    }

    /// Relabels items so that old item `perm[k]` becomes item `k`.
    pub fn permute(&self, perm: &[usize]) -> Order {
        Order {
            kind: if self.kind == OrderKind::Total { OrderKind::Partial } else { self.kind },
            leq: perm.iter().map(|&a| perm.iter().map(|&b| self.leq[a][b]).collect()).collect(),
        }
    }
}

/// Items together with an order over them.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedCollection<T> {
    pub items: Vec<T>,
    pub order: Order,
}

impl<T> OrderedCollection<T> {
    pub fn total(items: Vec<T>) -> Self {
        let order = Order::total(items.len());
        OrderedCollection { items, order }
    }

    pub fn new(items: Vec<T>, kind: OrderKind, pairs: &[(usize, usize)]) -> Result<Self> {
        let order = Order::new(items.len(), kind, pairs)?;
        Ok(OrderedCollection { items, order })
    }
}

/// Whether two matched pairs may coexist under the monotonicity constraint,
/// checked in both orders of the pair-of-pairs.
pub fn compatible(p: &Order, r: &Order, (u, v): (usize, usize), (u2, v2): (usize, usize)) -> bool {
    p.leq(u, u2) == r.leq(v, v2) && p.leq(u2, u) == r.leq(v2, v)
}

/// Whether every pair of matched pairs satisfies the monotonicity condition.
pub fn is_monotone(p: &Order, r: &Order, pairs: &[(usize, usize)]) -> bool {
    pairs
        .iter()
        .enumerate()
        .all(|(k, &a)| pairs[k + 1..].iter().all(|&b| compatible(p, r, a, b)))
}

/// Best strictly monotone one-to-one matching between two sequences.
///
/// Among optimal matchings the lexicographically smallest pair list is
/// returned.
pub fn seq_match(w: &WeightMatrix) -> Matching {
    let (n, m) = (w.rows(), w.cols());
    // best[i][j]: optimum on the suffixes starting at i and j.
    let mut best = vec![vec![0.0f64; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            best[i][j] = best[i + 1][j].max(best[i][j + 1]).max(w.get(i, j) + best[i + 1][j + 1]);
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m && best[i][j] > WITNESS_EPS {
        let target = best[i][j] - TIE_TOL;
        let next = (i..n).flat_map(|a| (j..m).map(move |b| (a, b))).find(|&(a, b)| {
            let x = w.get(a, b);
            x > WITNESS_EPS && x + best[a + 1][b + 1] >= target
        });
        let Some((a, b)) = next else { break };
        pairs.push((a, b));
        i = a + 1;
        j = b + 1;
    }
    Matching::from_pairs(w, pairs)
}

/// [`seq_match`] on two sequences under an inner similarity.
pub fn seq_match_score<T>(p: &[T], r: &[T], mut inner: impl FnMut(&T, &T) -> f64) -> Matching {
    let w = WeightMatrix::from_fn(p.len(), r.len(), |i, j| inner(&p[i], &r[j]))
        .expect("similarity values must be finite and nonnegative");
    seq_match(&w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphOptions {
    pub node_limit: u64,
    /// Largest side accepted; the constraint set grows as n²m².
    pub max_items: usize,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            node_limit: DEFAULT_NODE_LIMIT,
            max_items: 50,
        }
    }
}

/// Best matching of `w` under `c` that is monotone with respect to both
/// orders.
pub fn graph_match(p: &Order, r: &Order, w: &WeightMatrix, c: MatchConstraint, opts: &GraphOptions) -> Result<Matching> {
    if p.len() != w.rows() || r.len() != w.cols() {
        return Err(Error::Precondition(format!(
            "weight matrix is {}x{} but orders have {} and {} items",
            w.rows(),
            w.cols(),
            p.len(),
            r.len()
        )));
    }
    if p.len() > opts.max_items || r.len() > opts.max_items {
        return Err(Error::Precondition(format!(
            "ordered matching is limited to {} items per side, got {} and {}",
            opts.max_items,
            p.len(),
            r.len()
        )));
    }
    let mut candidates: Vec<(usize, usize)> = (0..w.rows())
        .flat_map(|i| (0..w.cols()).map(move |j| (i, j)))
        .filter(|&(i, j)| w.get(i, j) > WITNESS_EPS)
        .collect();
    candidates.sort_by(|&a, &b| w.get(b.0, b.1).total_cmp(&w.get(a.0, a.1)).then(a.cmp(&b)));
    let k = candidates.len();
    let mut clash = vec![false; k * k];
    for a in 0..k {
        for b in 0..k {
            let (x, y) = (candidates[a], candidates[b]);
            let same_row = a != b && c.rows_unique() && x.0 == y.0;
            let same_col = a != b && c.cols_unique() && x.1 == y.1;
            clash[a * k + b] = same_row || same_col || (a != b && !compatible(p, r, x, y));
        }
    }
    let search = MonotoneSearch {
        w,
        c,
        candidates,
        clash,
    };
    let solved = bnb::maximize(&search, opts.node_limit)?;
    let pairs = solved.node.chosen.iter().map(|&a| search.candidates[a]).collect();
    Ok(Matching::from_pairs(w, pairs))
}

/// [`graph_match`] on two ordered collections under an inner similarity.
pub fn graph_match_score<T>(
    p: &OrderedCollection<T>,
    r: &OrderedCollection<T>,
    mut inner: impl FnMut(&T, &T) -> f64,
    c: MatchConstraint,
    opts: &GraphOptions,
) -> Result<Matching> {
    let w = WeightMatrix::from_fn(p.items.len(), r.items.len(), |i, j| inner(&p.items[i], &r.items[j]))?;
    graph_match(&p.order, &r.order, &w, c, opts)
}

struct MonotoneSearch<'a> {
    w: &'a WeightMatrix,
    c: MatchConstraint,
    /// Positive-weight pairs, heaviest first.
    candidates: Vec<(usize, usize)>,
    /// `clash[a * k + b]`: candidates `a` and `b` cannot both be chosen.
    clash: Vec<bool>,
}

#[derive(Debug, Clone)]
struct Pick {
    next: usize,
    chosen: Vec<usize>,
    score: f64,
}

impl MonotoneSearch<'_> {
    fn open(&self, node: &Pick) -> impl Iterator<Item = usize> + '_ {
        let k = self.candidates.len();
        let chosen = node.chosen.clone();
        (node.next..k).filter(move |&a| chosen.iter().all(|&b| !self.clash[a * k + b]))
    }
}

impl Search for MonotoneSearch<'_> {
    type Node = Pick;

    fn root(&self) -> Pick {
        Pick {
            next: 0,
            chosen: Vec::new(),
            score: 0.0,
        }
    }

    fn evaluate(&self, node: &Pick) -> Evaluation {
        let open: Vec<usize> = self.open(node).collect();
        if open.is_empty() {
            return Evaluation::Leaf(node.score);
        }
        // Any completion is a constrained matching over the open candidates.
        let mut rest = WeightMatrix::zeros(self.w.rows(), self.w.cols());
        for a in open {
            let (i, j) = self.candidates[a];
            rest.set(i, j, self.w.get(i, j));
        }
        Evaluation::Open(node.score + match_score(&rest, self.c).score)
    }

    fn branch(&self, node: &Pick) -> Vec<Pick> {
        let Some(a) = self.open(node).next() else {
            return Vec::new();
        };
        let (i, j) = self.candidates[a];
        let mut take = node.clone();
        take.next = a + 1;
        take.chosen.push(a);
        take.score += self.w.get(i, j);
        let mut skip = node.clone();
        skip.next = a + 1;
        vec![take, skip]
    }
}
