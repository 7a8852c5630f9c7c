//! Depth-first branch-and-bound driver shared by the latent-variable and
//! order-preserving matchers.

use crate::error::{Error, Result};

/// Default node budget for exact search.
pub const DEFAULT_NODE_LIMIT: u64 = 1_000_000;

const PRUNE_EPS: f64 = 1e-12;

/// Outcome of evaluating one search node.
pub enum Evaluation {
    /// The node is a complete solution with this objective value.
    Leaf(f64),
    /// The node still has free decisions; no completion exceeds the bound.
    Open(f64),
}

/// A maximization problem explored by [`maximize`].
pub trait Search {
    type Node: Clone;

    fn root(&self) -> Self::Node;

    fn evaluate(&self, node: &Self::Node) -> Evaluation;

    /// Children of an open node, most promising first.
    fn branch(&self, node: &Self::Node) -> Vec<Self::Node>;
}

/// Best leaf found, with the number of nodes evaluated.
#[derive(Debug, Clone)]
pub struct Solved<N> {
    pub value: f64,
    pub node: N,
    pub nodes: u64,
}

/// Exhaustive depth-first search with bound pruning.
///
/// Only strictly better leaves replace the incumbent, so among optimal
/// leaves the first one in branching order wins. Fails with
/// [`Error::Resource`] once more than `node_limit` nodes have been evaluated.
pub fn maximize<S: Search>(search: &S, node_limit: u64) -> Result<Solved<S::Node>> {
    let mut stack = vec![search.root()];
    let mut best: Option<(f64, S::Node)> = None;
    let mut nodes = 0u64;
    while let Some(node) = stack.pop() {
        nodes += 1;
        if nodes > node_limit {
            return Err(Error::Resource { limit: node_limit });
        }
        let incumbent = best.as_ref().map(|b| b.0);
        match search.evaluate(&node) {
            Evaluation::Leaf(v) => {
                if incumbent.is_none_or(|b| v > b + PRUNE_EPS) {
                    best = Some((v, node));
                }
            }
            Evaluation::Open(bound) => {
                if incumbent.is_some_and(|b| bound <= b + PRUNE_EPS) {
                    continue;
                }
                let mut children = search.branch(&node);
                children.reverse();
                stack.extend(children);
            }
        }
    }
    let (value, node) = best.ok_or_else(|| Error::Precondition("search space has no complete solution".into()))?;
    Ok(Solved { value, node, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 0/1 knapsack over a handful of items as a smoke test of the driver.
    struct Knapsack {
        values: Vec<f64>,
        weights: Vec<u32>,
        capacity: u32,
    }

    #[derive(Debug, Clone)]
    struct Partial {
        depth: usize,
        value: f64,
        used: u32,
        taken: Vec<usize>,
    }

    impl Search for Knapsack {
        type Node = Partial;

        fn root(&self) -> Partial {
            Partial {
                depth: 0,
                value: 0.0,
                used: 0,
                taken: vec![],
            }
        }

        fn evaluate(&self, n: &Partial) -> Evaluation {
            if n.depth == self.values.len() {
                Evaluation::Leaf(n.value)
            } else {
                Evaluation::Open(n.value + self.values[n.depth..].iter().sum::<f64>())
            }
        }

        fn branch(&self, n: &Partial) -> Vec<Partial> {
            let mut out = Vec::new();
            let i = n.depth;
            if n.used + self.weights[i] <= self.capacity {
                let mut take = n.clone();
                take.depth += 1;
                take.value += self.values[i];
                take.used += self.weights[i];
                take.taken.push(i);
                out.push(take);
            }
            let mut skip = n.clone();
            skip.depth += 1;
            out.push(skip);
            out
        }
    }

    fn problem() -> Knapsack {
        Knapsack {
            values: vec![6.0, 10.0, 12.0],
            weights: vec![1, 2, 3],
            capacity: 5,
        }
    }

    #[test]
    fn finds_knapsack_optimum() {
        let s = maximize(&problem(), 1_000).unwrap();
        assert_eq!(s.value, 22.0);
        assert_eq!(s.node.taken, vec![1, 2]);
    }

    #[test]
    fn node_limit_is_enforced() {
        assert_eq!(maximize(&problem(), 2).unwrap_err(), Error::Resource { limit: 2 });
    }
}
