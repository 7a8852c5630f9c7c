//! Similarity values and the primitives everything else is built from:
//! the discrete (Kronecker) similarity, products over record fields,
//! thresholding, and the four normalizers over an overlap triple.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance used for threshold comparisons and tie detection.
pub const EPS: f64 = 1e-12;

/// A primitive value compared by structural equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prim {
    Bool(bool),
    Int(i64),
    Str(String),
    Tuple(Vec<Prim>),
}

impl Prim {
    fn same_kind(&self, other: &Prim) -> bool {
        match (self, other) {
            (Prim::Bool(_), Prim::Bool(_))
            | (Prim::Int(_), Prim::Int(_))
            | (Prim::Str(_), Prim::Str(_)) => true,
            (Prim::Tuple(a), Prim::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_kind(y))
            }
            _ => false,
        }
    }

    fn kind_name(&self) -> String {
        match self {
            Prim::Bool(_) => "bool".into(),
            Prim::Int(_) => "int".into(),
            Prim::Str(_) => "str".into(),
            Prim::Tuple(items) => {
                let inner: Vec<_> = items.iter().map(Prim::kind_name).collect();
                format!("({})", inner.join(", "))
            }
        }
    }
}

impl From<&str> for Prim {
    fn from(s: &str) -> Self {
        Prim::Str(s.to_string())
    }
}

impl From<String> for Prim {
    fn from(s: String) -> Self {
        Prim::Str(s)
    }
}

impl From<i64> for Prim {
    fn from(v: i64) -> Self {
        Prim::Int(v)
    }
}

impl From<bool> for Prim {
    fn from(v: bool) -> Self {
        Prim::Bool(v)
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prim::Bool(b) => write!(f, "{b}"),
            Prim::Int(i) => write!(f, "{i}"),
            Prim::Str(s) => write!(f, "{s:?}"),
            Prim::Tuple(items) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A similarity value. Normalized scores live in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimScore {
    value: f64,
    normalized: bool,
}

impl SimScore {
    pub const ZERO: SimScore = SimScore {
        value: 0.0,
        normalized: true,
    };
    pub const ONE: SimScore = SimScore {
        value: 1.0,
        normalized: true,
    };

    /// A normalized score; fails unless `value` is in `[0, 1]`.
    pub fn normalized(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Precondition(format!(
                "normalized similarity {value} outside [0, 1]"
            )));
        }
        Ok(SimScore {
            value,
            normalized: true,
        })
    }

    /// An unnormalized (Σ-valued) score; fails on negative or non-finite input.
    pub fn unnormalized(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Precondition(format!(
                "similarity {value} must be finite and nonnegative"
            )));
        }
        Ok(SimScore {
            value,
            normalized: false,
        })
    }

    /// Builds a score, marking it normalized only if it fits in `[0, 1]`.
    pub fn from_ratio(value: f64) -> Self {
        let value = if value.is_finite() { value.max(0.0) } else { 0.0 };
        SimScore {
            value,
            normalized: value <= 1.0,
        }
    }

    pub fn indicator(holds: bool) -> Self {
        if holds {
            Self::ONE
        } else {
            Self::ZERO
        }
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn is_normalized(self) -> bool {
        self.normalized
    }

    /// Product of two scores; normalized iff both factors are.
    pub fn times(self, other: SimScore) -> SimScore {
        SimScore {
            value: self.value * other.value,
            normalized: self.normalized && other.normalized,
        }
    }
}

/// The four ways of turning an overlap triple into a similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Normalizer {
    #[serde(rename = "P")]
    Precision,
    #[serde(rename = "R")]
    Recall,
    #[serde(rename = "F")]
    F,
    #[serde(rename = "J")]
    Jaccard,
}

impl Normalizer {
    pub const ALL: [Normalizer; 4] = [
        Normalizer::Precision,
        Normalizer::Recall,
        Normalizer::F,
        Normalizer::Jaccard,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Normalizer::Precision => "P",
            Normalizer::Recall => "R",
            Normalizer::F => "F",
            Normalizer::Jaccard => "J",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "P" => Some(Normalizer::Precision),
            "R" => Some(Normalizer::Recall),
            "F" => Some(Normalizer::F),
            "J" => Some(Normalizer::Jaccard),
            _ => None,
        }
    }
}

/// Σ(P,R), Σ(P,P) and Σ(R,R): everything the normalizers need.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OverlapTriple {
    pub sigma_pr: f64,
    pub sigma_pp: f64,
    pub sigma_rr: f64,
}

impl OverlapTriple {
    pub fn new(sigma_pr: f64, sigma_pp: f64, sigma_rr: f64) -> Result<Self> {
        for (name, v) in [
            ("sigma_pr", sigma_pr),
            ("sigma_pp", sigma_pp),
            ("sigma_rr", sigma_rr),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Precondition(format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(OverlapTriple {
            sigma_pr,
            sigma_pp,
            sigma_rr,
        })
    }

    /// Whether `sigma_pr <= min(sigma_pp, sigma_rr)` (up to `tol`).
    pub fn is_bounded(&self, tol: f64) -> bool {
        self.sigma_pr <= self.sigma_pp.min(self.sigma_rr) + tol
    }
}

impl std::ops::Add for OverlapTriple {
    type Output = OverlapTriple;

    fn add(self, rhs: OverlapTriple) -> OverlapTriple {
        OverlapTriple {
            sigma_pr: self.sigma_pr + rhs.sigma_pr,
            sigma_pp: self.sigma_pp + rhs.sigma_pp,
            sigma_rr: self.sigma_rr + rhs.sigma_rr,
        }
    }
}

/// Precision, recall, F and Jaccard computed together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    #[serde(rename = "P")]
    pub precision: f64,
    #[serde(rename = "R")]
    pub recall: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "J")]
    pub jaccard: f64,
}

impl Scores {
    pub const PERFECT: Scores = Scores {
        precision: 1.0,
        recall: 1.0,
        f: 1.0,
        jaccard: 1.0,
    };

    pub fn from_triple(t: &OverlapTriple) -> Scores {
        if t.sigma_pp == 0.0 && t.sigma_rr == 0.0 {
            return Scores::PERFECT;
        }
        let precision = ratio(t.sigma_pr, t.sigma_pp);
        let recall = ratio(t.sigma_pr, t.sigma_rr);
        let jaccard = ratio(t.sigma_pr, t.sigma_pp + t.sigma_rr - t.sigma_pr);
        Scores {
            precision,
            recall,
            f: harmonic(precision, recall),
            jaccard,
        }
    }

    /// Scores when precision and recall use different numerators.
    pub fn from_split(p_num: f64, p_den: f64, r_num: f64, r_den: f64) -> Scores {
        if p_den == 0.0 && r_den == 0.0 {
            return Scores::PERFECT;
        }
        let precision = ratio(p_num, p_den);
        let recall = ratio(r_num, r_den);
        let f = harmonic(precision, recall);
        Scores {
            precision,
            recall,
            f,
            jaccard: if f >= 2.0 { 0.0 } else { f / (2.0 - f) },
        }
    }

    pub fn get(&self, n: Normalizer) -> f64 {
        match n {
            Normalizer::Precision => self.precision,
            Normalizer::Recall => self.recall,
            Normalizer::F => self.f,
            Normalizer::Jaccard => self.jaccard,
        }
    }

    /// Componentwise product, used for product-form scores.
    pub fn times(&self, other: &Scores) -> Scores {
        Scores {
            precision: self.precision * other.precision,
            recall: self.recall * other.recall,
            f: self.f * other.f,
            jaccard: self.jaccard * other.jaccard,
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Kronecker delta on primitive values.
pub fn discrete_sim(x: &Prim, y: &Prim) -> Result<SimScore> {
    if !x.same_kind(y) {
        return Err(Error::InvalidComparison(format!(
            "cannot compare {} with {}",
            x.kind_name(),
            y.kind_name()
        )));
    }
    Ok(SimScore::indicator(x == y))
}

/// One factor of a product similarity: a named field and the similarity
/// applied to that field of both records.
pub struct Component<'a, R: ?Sized> {
    pub field: &'a str,
    pub sim: &'a dyn Fn(&R, &R) -> Result<SimScore>,
}

impl<'a, R: ?Sized> Component<'a, R> {
    pub fn new(field: &'a str, sim: &'a dyn Fn(&R, &R) -> Result<SimScore>) -> Self {
        Component { field, sim }
    }
}

/// Product of the component similarities of two records.
///
/// Errors from a component are re-raised as schema errors naming the field.
pub fn product_sim<R: ?Sized>(components: &[Component<'_, R>], a: &R, b: &R) -> Result<SimScore> {
    let mut acc = SimScore::ONE;
    for c in components {
        let s = (c.sim)(a, b).map_err(|e| match e {
            Error::Schema { path, message } => Error::schema(format!("{}.{path}", c.field), message),
            other => Error::schema(c.field, other.to_string()),
        })?;
        acc = acc.times(s);
    }
    Ok(acc)
}

/// Applies one normalizer to an overlap triple.
///
/// Degenerate denominators never fail: both sides empty scores 1, a single
/// empty side scores 0.
pub fn normalize(n: Normalizer, t: &OverlapTriple) -> SimScore {
    SimScore::from_ratio(Scores::from_triple(t).get(n))
}

/// `⟦inner > cutoff⟧` (strict) or `⟦inner >= cutoff⟧`.
pub fn threshold_sim(inner: SimScore, cutoff: f64, strict: bool) -> Result<SimScore> {
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(Error::Config(format!("threshold cutoff {cutoff} outside [0, 1]")));
    }
    if !inner.is_normalized() {
        return Err(Error::Precondition(
            "threshold applied to an unnormalized similarity".into(),
        ));
    }
    let v = inner.value();
    Ok(SimScore::indicator(if strict {
        v > cutoff + EPS
    } else {
        v >= cutoff - EPS
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn s(v: &str) -> Prim {
        Prim::from(v)
    }

    fn pair(a: i64, b: i64) -> Prim {
        Prim::Tuple(vec![Prim::Int(a), Prim::Int(b)])
    }

    #[test]
    fn discrete_examples() {
        assert_eq!(discrete_sim(&s("bombing"), &s("bombing")).unwrap().value(), 1.0);
        assert_eq!(discrete_sim(&s("bombing"), &s("attack")).unwrap().value(), 0.0);
        assert_eq!(discrete_sim(&pair(3, 7), &pair(3, 8)).unwrap().value(), 0.0);
        assert!(discrete_sim(&s("1"), &Prim::Int(1)).is_err());
        assert!(discrete_sim(&pair(1, 2), &Prim::Tuple(vec![Prim::Int(1)])).is_err());
    }

    #[test]
    fn product_examples() {
        let one = |_: &(), _: &()| Ok(SimScore::ONE);
        let zero = |_: &(), _: &()| Ok(SimScore::ZERO);
        let half = |_: &(), _: &()| SimScore::normalized(0.5);
        let eight = |_: &(), _: &()| SimScore::normalized(0.8);
        let all_one = [Component::new("a", &one), Component::new("b", &one)];
        assert_eq!(product_sim(&all_one, &(), &()).unwrap().value(), 1.0);
        let with_zero = [Component::new("a", &half), Component::new("b", &zero)];
        assert_eq!(product_sim(&with_zero, &(), &()).unwrap().value(), 0.0);
        let mixed = [Component::new("a", &half), Component::new("b", &eight)];
        let p = product_sim(&mixed, &(), &()).unwrap();
        assert!((p.value() - 0.4).abs() < TOL);
        assert!(p.is_normalized());
    }

    #[test]
    fn product_reports_failing_field() {
        let missing = |_: &(), _: &()| -> Result<SimScore> { Err(Error::schema("left", "missing field")) };
        let comps = [Component::new("subj", &missing)];
        match product_sim(&comps, &(), &()) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "subj.left"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn product_of_unnormalized_is_unnormalized() {
        let three = |_: &(), _: &()| SimScore::unnormalized(3.0);
        let one = |_: &(), _: &()| Ok(SimScore::ONE);
        let comps = [Component::new("a", &three), Component::new("b", &one)];
        assert!(!product_sim(&comps, &(), &()).unwrap().is_normalized());
    }

    #[test]
    fn normalize_examples() {
        let t = OverlapTriple::new(2.0, 4.0, 2.0).unwrap();
        assert!((normalize(Normalizer::Precision, &t).value() - 0.5).abs() < TOL);
        assert!((normalize(Normalizer::Recall, &t).value() - 1.0).abs() < TOL);
        assert!((normalize(Normalizer::F, &t).value() - 2.0 / 3.0).abs() < TOL);
        assert!((normalize(Normalizer::Jaccard, &t).value() - 0.5).abs() < TOL);
        let empty = OverlapTriple::default();
        for n in Normalizer::ALL {
            assert_eq!(normalize(n, &empty).value(), 1.0);
        }
    }

    #[test]
    fn one_sided_empty_scores_zero() {
        let t = OverlapTriple::new(0.0, 0.0, 3.0).unwrap();
        let sc = Scores::from_triple(&t);
        assert_eq!((sc.precision, sc.recall, sc.f, sc.jaccard), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn overlap_rejects_negative() {
        assert!(OverlapTriple::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        let v = |x| SimScore::normalized(x).unwrap();
        assert_eq!(threshold_sim(v(0.6), 0.5, true).unwrap().value(), 1.0);
        assert_eq!(threshold_sim(v(0.5), 0.5, true).unwrap().value(), 0.0);
        assert_eq!(threshold_sim(v(1.0), 1.0, false).unwrap().value(), 1.0);
        assert!(matches!(threshold_sim(v(0.5), 1.5, true), Err(Error::Config(_))));
    }

    fn bounded_triple() -> impl Strategy<Value = OverlapTriple> {
        (0.0f64..50.0, 0.0f64..50.0, 0.0f64..=1.0).prop_map(|(a, b, frac)| OverlapTriple {
            sigma_pr: a.min(b) * frac,
            sigma_pp: a,
            sigma_rr: b,
        })
    }

    fn small_prim() -> impl Strategy<Value = Prim> {
        let leaf = prop_oneof![
            any::<bool>().prop_map(Prim::Bool),
            (-3i64..3).prop_map(Prim::Int),
            "[ab]{0,2}".prop_map(Prim::Str),
        ];
        leaf.prop_recursive(2, 6, 3, |inner| prop::collection::vec(inner, 0..3).prop_map(Prim::Tuple))
    }

    proptest! {
        #[test]
        fn normalizer_ordering(t in bounded_triple()) {
            let sc = Scores::from_triple(&t);
            prop_assert!(sc.jaccard <= sc.f + TOL);
            prop_assert!(sc.f <= sc.precision.max(sc.recall) + TOL);
            prop_assert!(sc.precision.min(sc.recall) <= sc.f + TOL);
        }

        #[test]
        fn precision_recall_duality(sigma in 0.0f64..10.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let fwd = OverlapTriple { sigma_pr: sigma, sigma_pp: a, sigma_rr: b };
            let rev = OverlapTriple { sigma_pr: sigma, sigma_pp: b, sigma_rr: a };
            prop_assert_eq!(
                normalize(Normalizer::Precision, &fwd).value(),
                normalize(Normalizer::Recall, &rev).value()
            );
        }

        #[test]
        fn discrete_is_reflexive_and_bounded(x in small_prim(), y in small_prim()) {
            prop_assert_eq!(discrete_sim(&x, &x).unwrap().value(), 1.0);
            if let Ok(v) = discrete_sim(&x, &y) {
                prop_assert!(v.value() <= 1.0);
                prop_assert_eq!(v.value(), discrete_sim(&y, &x).unwrap().value());
            }
        }

        #[test]
        fn product_symmetric_for_symmetric_components(
            a in (small_prim(), small_prim()),
            b in (small_prim(), small_prim()),
        ) {
            let first = |x: &(Prim, Prim), y: &(Prim, Prim)| discrete_sim(&x.0, &y.0).or(Ok(SimScore::ZERO));
            let second = |x: &(Prim, Prim), y: &(Prim, Prim)| discrete_sim(&x.1, &y.1).or(Ok(SimScore::ZERO));
            let comps = [Component::new("0", &first), Component::new("1", &second)];
            prop_assert_eq!(
                product_sim(&comps, &a, &b).unwrap().value(),
                product_sim(&comps, &b, &a).unwrap().value()
            );
            prop_assert_eq!(product_sim(&comps, &a, &a).unwrap().value(), 1.0);
        }
    }
}
