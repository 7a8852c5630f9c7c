//! Matching of collections whose items mention latent variables.
//!
//! The variables of the two sides must be aligned one-to-one while the items
//! are matched; an item pair only counts if each of its variable-typed
//! fields is aligned. [`build_ilp`] writes the problem down as a 0/1 integer
//! program and [`solve_ilp`] solves it, either exactly by branch-and-bound
//! over variable-alignment decisions or heuristically by seeded hill
//! climbing. [`smatch`] instantiates this for AMR graphs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::bnb::{self, Evaluation, Search, DEFAULT_NODE_LIMIT};
use crate::error::{Error, Result};
use crate::matcher::{match_score, MatchConstraint, Matching, WeightMatrix, WITNESS_EPS};
use crate::report::Tally;
use crate::sim::OverlapTriple;

/// Opaque variable name, scoped to one side.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub String);

impl From<&str> for VarId {
    fn from(s: &str) -> Self {
        VarId(s.to_string())
    }
}

/// One side of a latent matching problem: its variables and, for each item,
/// the variable occupying each latent field (`None` when the field holds a
/// constant instead).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSide {
    vars: Vec<VarId>,
    slots: Vec<Vec<Option<usize>>>,
}

impl LatentSide {
    pub fn new(vars: Vec<VarId>, slots: Vec<Vec<Option<usize>>>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, v) in vars.iter().enumerate() {
            if seen.insert(v, i).is_some() {
                return Err(Error::schema(format!("vars[{i}]"), format!("duplicate variable {:?}", v.0)));
            }
        }
        let width = slots.first().map_or(0, Vec::len);
        for (u, item) in slots.iter().enumerate() {
            if item.len() != width {
                return Err(Error::schema(
                    format!("items[{u}]"),
                    format!("expected {width} latent fields, found {}", item.len()),
                ));
            }
            if let Some(bad) = item.iter().flatten().find(|&&x| x >= vars.len()) {
                return Err(Error::schema(format!("items[{u}]"), format!("variable index {bad} is not declared")));
            }
        }
        Ok(LatentSide { vars, slots })
    }

    /// Builds a side from variable names, declaring variables in order of
    /// first appearance.
    pub fn from_names<S: AsRef<str>>(items: &[Vec<Option<S>>]) -> Result<Self> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut vars = Vec::new();
        let slots = items
            .iter()
            .map(|item| {
                item.iter()
                    .map(|slot| {
                        slot.as_ref().map(|name| {
                            let name = name.as_ref();
                            *index.entry(name.to_string()).or_insert_with(|| {
                                vars.push(VarId(name.to_string()));
                                vars.len() - 1
                            })
                        })
                    })
                    .collect()
            })
            .collect();
        LatentSide::new(vars, slots)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn items(&self) -> usize {
        self.slots.len()
    }

    fn width(&self) -> usize {
        self.slots.first().map_or(0, Vec::len)
    }
}

/// Binary decision `m_uv`: item `pred` is matched to item `gold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemVar {
    pub pred: usize,
    pub gold: usize,
    /// Objective coefficient, the similarity assuming variables align.
    pub coef: f64,
}

/// Binary decision `m̃_xy`: variable `pred` is aligned to variable `gold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VarPair {
    pub pred: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarRef {
    Item(usize),
    Var(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintKind {
    /// `m_uv - m̃_xy <= 0` for a latent field.
    Implication,
    /// `Σ_y m̃_xy <= 1`.
    VarRow,
    /// `Σ_x m̃_xy <= 1`.
    VarCol,
    /// `Σ_v m_uv <= 1`.
    ItemRow,
    /// `Σ_u m_uv <= 1`.
    ItemCol,
}

/// `Σ coef * var <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub kind: ConstraintKind,
    pub terms: Vec<(VarRef, f64)>,
    pub rhs: f64,
}

/// A latent matching problem written as a 0/1 program. The objective puts
/// `coef` on each item variable and 0 on each variable-pair variable.
#[derive(Debug, Clone, PartialEq)]
pub struct IlpInstance {
    pub item_vars: Vec<ItemVar>,
    pub var_vars: Vec<VarPair>,
    pub constraints: Vec<LinearConstraint>,
    pub item_constraint: MatchConstraint,
    pred_items: usize,
    gold_items: usize,
    pred_vars: Vec<VarId>,
    gold_vars: Vec<VarId>,
    /// Variable-pair indices each item variable implies.
    links: Vec<Vec<usize>>,
}

impl IlpInstance {
    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind == kind).count()
    }

    /// `Σ_u max_v coef_uv`, an upper bound on the optimum.
    pub fn row_max_bound(&self) -> f64 {
        let mut best = vec![0.0f64; self.pred_items];
        for iv in &self.item_vars {
            best[iv.pred] = best[iv.pred].max(iv.coef);
        }
        best.iter().sum()
    }

    #[cfg(test)]
    fn var_pair_index(&self, x: usize, y: usize) -> usize {
        x * self.gold_vars.len() + y
    }

    /// Whether item variable `k` is compatible with a complete alignment.
    fn allowed_under(&self, k: usize, align: &[Option<usize>]) -> bool {
        self.links[k].iter().all(|&l| {
            let vp = self.var_vars[l];
            align[vp.pred] == Some(vp.gold)
        })
    }

    fn matching_under(&self, allowed: impl Fn(usize) -> bool) -> Matching {
        let mut w = WeightMatrix::zeros(self.pred_items, self.gold_items);
        for (k, iv) in self.item_vars.iter().enumerate() {
            if allowed(k) {
                w.set(iv.pred, iv.gold, iv.coef);
            }
        }
        match_score(&w, self.item_constraint)
    }

    /// Item matching value of a complete alignment.
    fn score_alignment(&self, align: &[Option<usize>]) -> Matching {
        self.matching_under(|k| self.allowed_under(k, align))
    }
}

/// Writes the latent matching problem as a 0/1 program.
///
/// `upper[u][v]` must be the similarity of items `u` and `v` assuming all
/// their variables are aligned. Pairs with zero coefficient, or whose
/// latent fields disagree on holding a variable, get no item variable.
pub fn build_ilp(pred: &LatentSide, gold: &LatentSide, upper: &WeightMatrix, c: MatchConstraint) -> Result<IlpInstance> {
    if upper.rows() != pred.items() || upper.cols() != gold.items() {
        return Err(Error::Precondition(format!(
            "similarity matrix is {}x{}, expected {}x{}",
            upper.rows(),
            upper.cols(),
            pred.items(),
            gold.items()
        )));
    }
    if pred.items() > 0 && gold.items() > 0 && pred.width() != gold.width() {
        return Err(Error::schema(
            "var_fields",
            format!("predicted items have {} latent fields, reference items {}", pred.width(), gold.width()),
        ));
    }
    let n_gold_vars = gold.vars.len();
    let var_vars: Vec<VarPair> = (0..pred.vars.len())
        .flat_map(|x| (0..n_gold_vars).map(move |y| VarPair { pred: x, gold: y }))
        .collect();

    let mut item_vars = Vec::new();
    let mut links = Vec::new();
    let mut constraints = Vec::new();
    for u in 0..pred.items() {
        'pairs: for v in 0..gold.items() {
            let coef = upper.get(u, v);
            if coef <= WITNESS_EPS {
                continue;
            }
            let mut implied = Vec::new();
            for (a, b) in pred.slots[u].iter().zip(&gold.slots[v]) {
                match (a, b) {
                    (Some(x), Some(y)) => implied.push(x * n_gold_vars + y),
                    (None, None) => {}
                    _ => continue 'pairs,
                }
            }
            implied.sort_unstable();
            implied.dedup();
            let k = item_vars.len();
            for &l in &implied {
                constraints.push(LinearConstraint {
                    kind: ConstraintKind::Implication,
                    terms: vec![(VarRef::Item(k), 1.0), (VarRef::Var(l), -1.0)],
                    rhs: 0.0,
                });
            }
            item_vars.push(ItemVar { pred: u, gold: v, coef });
            links.push(implied);
        }
    }

    for x in 0..pred.vars.len() {
        constraints.push(LinearConstraint {
            kind: ConstraintKind::VarRow,
            terms: (0..n_gold_vars).map(|y| (VarRef::Var(x * n_gold_vars + y), 1.0)).collect(),
            rhs: 1.0,
        });
    }
    for y in 0..n_gold_vars {
        constraints.push(LinearConstraint {
            kind: ConstraintKind::VarCol,
            terms: (0..pred.vars.len()).map(|x| (VarRef::Var(x * n_gold_vars + y), 1.0)).collect(),
            rhs: 1.0,
        });
    }
    if c.rows_unique() {
        for u in 0..pred.items() {
            constraints.push(LinearConstraint {
                kind: ConstraintKind::ItemRow,
                terms: item_vars
                    .iter()
                    .enumerate()
                    .filter(|(_, iv)| iv.pred == u)
                    .map(|(k, _)| (VarRef::Item(k), 1.0))
                    .collect(),
                rhs: 1.0,
            });
        }
    }
    if c.cols_unique() {
        for v in 0..gold.items() {
            constraints.push(LinearConstraint {
                kind: ConstraintKind::ItemCol,
                terms: item_vars
                    .iter()
                    .enumerate()
                    .filter(|(_, iv)| iv.gold == v)
                    .map(|(k, _)| (VarRef::Item(k), 1.0))
                    .collect(),
                rhs: 1.0,
            });
        }
    }

    Ok(IlpInstance {
        item_vars,
        var_vars,
        constraints,
        item_constraint: c,
        pred_items: pred.items(),
        gold_items: gold.items(),
        pred_vars: pred.vars.clone(),
        gold_vars: gold.vars.clone(),
        links,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    #[default]
    Exact,
    Hillclimb,
}

impl std::str::FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolverMode::Exact),
            "hillclimb" => Ok(SolverMode::Hillclimb),
            other => Err(Error::Config(format!("unknown solver mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub mode: SolverMode,
    pub seed: u64,
    pub node_limit: u64,
    pub restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mode: SolverMode::Exact,
            seed: 0,
            node_limit: DEFAULT_NODE_LIMIT,
            restarts: 8,
        }
    }
}

/// Aligned variable names, a partial bijection.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct VarAlignment {
    pub pairs: Vec<(VarId, VarId)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatentSolution {
    pub score: f64,
    /// Matched `(pred item, gold item)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub alignment: VarAlignment,
    /// False when the score is only a lower bound from hill climbing.
    pub exact: bool,
}

/// Solves a latent matching program.
pub fn solve_ilp(inst: &IlpInstance, opts: &SolverOptions) -> Result<LatentSolution> {
    let plan = Plan::new(inst);
    let (align, matching, exact) = match opts.mode {
        SolverMode::Exact => {
            let solved = bnb::maximize(&plan, opts.node_limit)?;
            let align = plan.full_alignment(&solved.node);
            let matching = inst.score_alignment(&align);
            (align, matching, true)
        }
        SolverMode::Hillclimb => {
            let (align, matching) = plan.hill_climb(opts.seed, opts.restarts.max(1));
            (align, matching, false)
        }
    };
    let alignment = VarAlignment {
        pairs: align
            .iter()
            .enumerate()
            .filter_map(|(x, y)| y.map(|y| (inst.pred_vars[x].clone(), inst.gold_vars[y].clone())))
            .collect(),
    };
    Ok(LatentSolution {
        score: matching.score,
        pairs: matching.pairs,
        alignment,
        exact,
    })
}

/// Search plan: which predicted variables to decide, in what order, and the
/// reference variables worth trying for each.
struct Plan<'a> {
    inst: &'a IlpInstance,
    order: Vec<usize>,
    candidates: Vec<Vec<usize>>,
}

#[derive(Clone)]
struct AlignNode {
    /// Decisions for `order[..assigned.len()]`.
    assigned: Vec<Option<usize>>,
    used: Vec<bool>,
}

impl<'a> Plan<'a> {
    fn new(inst: &'a IlpInstance) -> Self {
        let n_pred = inst.pred_vars.len();
        let mut weight = vec![0.0f64; n_pred];
        let mut pair_weight: HashMap<(usize, usize), f64> = HashMap::new();
        for (k, iv) in inst.item_vars.iter().enumerate() {
            for &l in &inst.links[k] {
                let vp = inst.var_vars[l];
                weight[vp.pred] += iv.coef;
                *pair_weight.entry((vp.pred, vp.gold)).or_default() += iv.coef;
            }
        }
        let mut order: Vec<usize> = (0..n_pred).filter(|&x| weight[x] > 0.0).collect();
        order.sort_by(|&a, &b| weight[b].total_cmp(&weight[a]).then(a.cmp(&b)));
        let candidates = order
            .iter()
            .map(|&x| {
                let mut ys: Vec<(usize, f64)> = (0..inst.gold_vars.len())
                    .filter_map(|y| pair_weight.get(&(x, y)).map(|&w| (y, w)))
                    .collect();
                ys.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                ys.into_iter().map(|(y, _)| y).collect()
            })
            .collect();
        Plan { inst, order, candidates }
    }

    fn full_alignment(&self, node: &AlignNode) -> Vec<Option<usize>> {
        let mut align = vec![None; self.inst.pred_vars.len()];
        for (pos, y) in node.assigned.iter().enumerate() {
            align[self.order[pos]] = *y;
        }
        align
    }

    fn hill_climb(&self, seed: u64, restarts: usize) -> (Vec<Option<usize>>, Matching) {
        let inst = self.inst;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<(Vec<Option<usize>>, Matching)> = None;
        for restart in 0..restarts {
            let mut align = vec![None; inst.pred_vars.len()];
            let mut used = vec![false; inst.gold_vars.len()];
            for (pos, &x) in self.order.iter().enumerate() {
                let mut options = self.candidates[pos].clone();
                if restart > 0 {
                    options.shuffle(&mut rng);
                }
                if let Some(&y) = options.iter().find(|&&y| !used[y]) {
                    align[x] = Some(y);
                    used[y] = true;
                }
            }
            let mut current = inst.score_alignment(&align);
            loop {
                let mut improved: Option<(Vec<Option<usize>>, Matching)> = None;
                for (pos, &x) in self.order.iter().enumerate() {
                    for target in self.candidates[pos].iter().map(|&y| Some(y)).chain([None]) {
                        if target == align[x] {
                            continue;
                        }
                        let mut next = align.clone();
                        if let Some(y) = target {
                            if let Some(other) = next.iter().position(|&a| a == Some(y)) {
                                next[other] = align[x];
                            }
                        }
                        next[x] = target;
                        let m = inst.score_alignment(&next);
                        let bar = improved.as_ref().map_or(current.score, |(_, b)| b.score);
                        if m.score > bar + 1e-12 {
                            improved = Some((next, m));
                        }
                    }
                }
                match improved {
                    Some((next, m)) => {
                        align = next;
                        current = m;
                    }
                    None => break,
                }
            }
            if best.as_ref().is_none_or(|(_, b)| current.score > b.score + 1e-12) {
                best = Some((align, current));
            }
        }
        best.expect("at least one restart")
    }
}

impl Search for Plan<'_> {
    type Node = AlignNode;

    fn root(&self) -> AlignNode {
        AlignNode {
            assigned: Vec::new(),
            used: vec![false; self.inst.gold_vars.len()],
        }
    }

    fn evaluate(&self, node: &AlignNode) -> Evaluation {
        let inst = self.inst;
        let mut decided: Vec<Option<Option<usize>>> = vec![None; inst.pred_vars.len()];
        for (pos, y) in node.assigned.iter().enumerate() {
            decided[self.order[pos]] = Some(*y);
        }
        let complete = node.assigned.len() == self.order.len();
        // Relaxation: drop the variable constraints for undecided variables,
        // keeping only pairs not yet excluded.
        let m = inst.matching_under(|k| {
            inst.links[k].iter().all(|&l| {
                let vp = inst.var_vars[l];
                match decided[vp.pred] {
                    Some(choice) => choice == Some(vp.gold),
                    None => !complete && !node.used[vp.gold],
                }
            })
        });
        if complete {
            Evaluation::Leaf(m.score)
        } else {
            Evaluation::Open(m.score)
        }
    }

    fn branch(&self, node: &AlignNode) -> Vec<AlignNode> {
        let pos = node.assigned.len();
        let mut out: Vec<AlignNode> = self.candidates[pos]
            .iter()
            .filter(|&&y| !node.used[y])
            .map(|&y| {
                let mut child = node.clone();
                child.assigned.push(Some(y));
                child.used[y] = true;
                child
            })
            .collect();
        let mut skip = node.clone();
        skip.assigned.push(None);
        out.push(skip);
        out
    }
}


#[cfg(test)]
fn layout_ok(inst: &IlpInstance) -> bool {
    inst.var_vars
        .iter()
        .enumerate()
        .all(|(l, vp)| inst.var_pair_index(vp.pred, vp.gold) == l)
}

/// Object of an AMR proposition: another variable or a concept constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Obj {
    Var(VarId),
    Concept(String),
}

/// `rel(subj, obj)`, e.g. `instance(x, boy)` or `ARG0(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Prop {
    pub rel: String,
    pub subj: VarId,
    pub obj: Obj,
}

impl Prop {
    pub fn instance(var: &str, concept: &str) -> Prop {
        Prop {
            rel: "instance".into(),
            subj: var.into(),
            obj: Obj::Concept(concept.into()),
        }
    }

    pub fn edge(rel: &str, subj: &str, obj: &str) -> Prop {
        Prop {
            rel: rel.into(),
            subj: subj.into(),
            obj: Obj::Var(obj.into()),
        }
    }
}

/// An AMR graph as a set of propositions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct AmrGraph {
    props: Vec<Prop>,
    vars: Vec<VarId>,
}

impl AmrGraph {
    /// Deduplicates propositions and collects variables in order of first use.
    pub fn new(props: Vec<Prop>) -> AmrGraph {
        let mut unique: Vec<Prop> = Vec::with_capacity(props.len());
        for p in props {
            if !unique.contains(&p) {
                unique.push(p);
            }
        }
        let mut vars: Vec<VarId> = Vec::new();
        for p in &unique {
            let mut note = |v: &VarId| {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            };
            note(&p.subj);
            if let Obj::Var(v) = &p.obj {
                note(v);
            }
        }
        AmrGraph { props: unique, vars }
    }

    /// Graph with an explicit variable set; every variable used must be listed.
    pub fn with_vars(props: Vec<Prop>, vars: Vec<VarId>) -> Result<AmrGraph> {
        let g = AmrGraph::new(props);
        for v in &g.vars {
            if !vars.contains(v) {
                return Err(Error::data("vars", format!("variable {:?} is used but not declared", v.0)));
            }
        }
        Ok(AmrGraph { props: g.props, vars })
    }

    pub fn props(&self) -> &[Prop] {
        &self.props
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    fn side(&self) -> LatentSide {
        let index: HashMap<&VarId, usize> = self.vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let slots = self
            .props
            .iter()
            .map(|p| {
                vec![
                    Some(index[&p.subj]),
                    match &p.obj {
                        Obj::Var(v) => Some(index[v]),
                        Obj::Concept(_) => None,
                    },
                ]
            })
            .collect();
        LatentSide::new(self.vars.clone(), slots).expect("variables are collected from the props")
    }
}

/// Similarity of two propositions assuming their variables are aligned.
pub fn prop_upper_sim(a: &Prop, b: &Prop) -> f64 {
    if a.rel != b.rel {
        return 0.0;
    }
    match (&a.obj, &b.obj) {
        (Obj::Var(_), Obj::Var(_)) => 1.0,
        (Obj::Concept(x), Obj::Concept(y)) if x == y => 1.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmatchResult {
    pub tally: Tally,
    pub solution: LatentSolution,
}

/// Smatch: best F over one-to-one variable alignments.
pub fn smatch(pred: &AmrGraph, gold: &AmrGraph, opts: &SolverOptions) -> Result<SmatchResult> {
    let upper = WeightMatrix::from_fn(pred.props.len(), gold.props.len(), |u, v| {
        prop_upper_sim(&pred.props[u], &gold.props[v])
    })?;
    let inst = build_ilp(&pred.side(), &gold.side(), &upper, MatchConstraint::OneToOne)?;
    let solution = solve_ilp(&inst, opts)?;
    let triple = OverlapTriple::new(solution.score, pred.props.len() as f64, gold.props.len() as f64)?;
    Ok(SmatchResult {
        tally: Tally::from_triple(triple),
        solution,
    })
}
