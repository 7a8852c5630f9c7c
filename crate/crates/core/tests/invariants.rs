use std::collections::BTreeSet;

use proptest::prelude::*;
use serde_json::{json, Value};

use matchmetric::latent::{build_ilp, smatch, solve_ilp, AmrGraph, LatentSide, Obj, Prop, SolverMode, SolverOptions, VarId};
use matchmetric::schema::parse_schema;
use matchmetric::zoo::coref::{coref_scores, phi4, phi_subset};
use matchmetric::zoo::hierarchy::type_similarity_level;
use matchmetric::zoo::{self, TypePath, ZooOptions};
use matchmetric::{match_score, MatchConstraint, Tally, WeightMatrix};

const TOL: f64 = 1e-9;

fn weights(rows: usize, cols: usize) -> impl Strategy<Value = WeightMatrix> {
    prop::collection::vec(0u8..4, rows * cols)
        .prop_map(move |w| WeightMatrix::from_fn(rows, cols, |i, j| f64::from(w[i * cols + j]) / 3.0).unwrap())
}

type Slots = Vec<Vec<Option<String>>>;

fn side(vars: usize) -> impl Strategy<Value = Slots> {
    let slot = prop::option::of(0..vars.max(1)).prop_map(move |v| v.filter(|_| vars > 0).map(|i| format!("v{i}")));
    prop::collection::vec(prop::collection::vec(slot, 2), 0..5)
}

fn instance() -> impl Strategy<Value = (Slots, Slots, WeightMatrix, MatchConstraint)> {
    (0usize..4, 0usize..4, 0usize..4)
        .prop_flat_map(|(pv, gv, c)| (side(pv), side(gv), Just(MatchConstraint::ALL[c])))
        .prop_flat_map(|(p, g, c)| {
            let (n, m) = (p.len(), g.len());
            (Just(p), Just(g), weights(n, m), Just(c))
        })
}

fn partition(mentions: usize) -> impl Strategy<Value = Vec<BTreeSet<u32>>> {
    prop::collection::vec(0..mentions.max(1), mentions).prop_map(|labels| {
        let mut by = std::collections::BTreeMap::<usize, BTreeSet<u32>>::new();
        for (m, l) in labels.into_iter().enumerate() {
            by.entry(l).or_default().insert(m as u32);
        }
        by.into_values().collect()
    })
}

fn canonical(p: &[BTreeSet<u32>]) -> BTreeSet<BTreeSet<u32>> {
    p.iter().cloned().collect()
}

fn amr() -> impl Strategy<Value = Vec<Prop>> {
    (1usize..5).prop_flat_map(|k| {
        (
            prop::collection::vec(0u8..3, k),
            prop::collection::vec((0..k, 0..k, 0u8..2), 0..5),
        )
            .prop_map(move |(concepts, edges)| {
                let v = |i: usize| format!("n{i}");
                let mut props: Vec<Prop> = concepts
                    .iter()
                    .enumerate()
                    .map(|(i, c)| Prop::instance(&v(i), ["dog", "cat", "see-01"][*c as usize]))
                    .collect();
                props.extend(edges.iter().map(|&(a, b, r)| Prop::edge(["ARG0", "ARG1"][r as usize], &v(a), &v(b))));
                props
            })
    })
}

fn rename(props: &[Prop], perm: &[usize]) -> Vec<Prop> {
    let r = |v: &VarId| {
        let i: usize = v.0[1..].parse().unwrap();
        VarId(format!("m{}", perm[i]))
    };
    props
        .iter()
        .rev()
        .map(|p| Prop {
            rel: p.rel.clone(),
            subj: r(&p.subj),
            obj: match &p.obj {
                Obj::Var(v) => Obj::Var(r(v)),
                c => c.clone(),
            },
        })
        .collect()
}

fn rel(t: u8, s: u8, o: u8) -> Value {
    json!({"type": format!("t{t}"), "subj": {"left": s, "right": s}, "obj": {"left": o, "right": o}})
}

fn ree(args: &[(u8, Vec<u8>)]) -> Value {
    let args: Vec<Value> = args
        .iter()
        .map(|(role, ms)| {
            let mentions: Vec<Value> = ms.iter().map(|m| json!({"left": m, "right": m})).collect();
            json!({"role": format!("r{role}"), "entity": {"mentions": mentions}})
        })
        .collect();
    json!({"type": "event", "args": args})
}

fn ree_args() -> impl Strategy<Value = Vec<(u8, Vec<u8>)>> {
    prop::collection::vec((0u8..2, prop::collection::vec(0u8..5, 1..4)), 0..4)
}

const RELATIONS: &str = r#"{
  "types": {
    "Span": {"kind": "record", "fields": {"left": {"type": "int"}, "right": {"type": "int"}}},
    "Relation": {"kind": "record", "fields": {"type": {"type": "str"}, "subj": {"type": "Span"}, "obj": {"type": "Span"}}},
    "Doc": {"kind": "record", "fields": {"relations": {"type": "Set[Relation]"}}}
  },
  "metric": {"root": "Doc"}
}"#;

fn scores_of(t: &Tally) -> [f64; 4] {
    let s = t.scores();
    [s.precision, s.recall, s.f, s.jaccard]
}

proptest! {
    #[test]
    fn exact_dominates_hillclimb((p, g, w, c) in instance(), seed in 0u64..50) {
        let inst = build_ilp(&LatentSide::from_names(&p).unwrap(), &LatentSide::from_names(&g).unwrap(), &w, c).unwrap();
        let exact = solve_ilp(&inst, &SolverOptions::default()).unwrap();
        let hc = solve_ilp(&inst, &SolverOptions { mode: SolverMode::Hillclimb, seed, ..SolverOptions::default() }).unwrap();
        prop_assert!(exact.exact);
        prop_assert!(!hc.exact);
        prop_assert!(exact.score + TOL >= hc.score);
        let witness: f64 = exact.pairs.iter().map(|&(u, v)| w.get(u, v)).sum();
        prop_assert!((witness - exact.score).abs() < TOL);
        if c.rows_unique() {
            prop_assert!(exact.score <= inst.row_max_bound() + TOL);
        }
    }

    #[test]
    fn no_latent_fields_is_plain_matching(n in 0usize..5, m in 0usize..5, ci in 0usize..4, seed in any::<u64>()) {
        let c = MatchConstraint::ALL[ci];
        let w = WeightMatrix::from_fn(n, m, |i, j| ((seed >> ((i * 5 + j) % 60)) & 3) as f64 / 3.0).unwrap();
        let empty = |k: usize| LatentSide::from_names::<&str>(&vec![Vec::new(); k]).unwrap();
        let inst = build_ilp(&empty(n), &empty(m), &w, c).unwrap();
        let got = solve_ilp(&inst, &SolverOptions::default()).unwrap().score;
        prop_assert!((got - match_score(&w, c).score).abs() < TOL);
    }

    #[test]
    fn smatch_is_renaming_invariant(props in amr(), seed in any::<u64>()) {
        let k = 5;
        let mut perm: Vec<usize> = (0..k).collect();
        // new prefix plus a rotation of the indices
        perm.rotate_left((seed % k as u64) as usize);
        let a = AmrGraph::new(props.clone());
        let b = AmrGraph::new(rename(&props, &perm));
        let r = smatch(&b, &a, &SolverOptions::default()).unwrap();
        prop_assert!((r.tally.scores().f - 1.0).abs() < TOL);
    }

    #[test]
    fn coref_perfect_iff_same_partition((p, g) in (1usize..9).prop_flat_map(|n| (partition(n), partition(n)))) {
        let s = coref_scores(&p, &g).unwrap();
        let same = canonical(&p) == canonical(&g);
        for (name, t) in [("muc", &s.muc), ("b3", &s.b3), ("ceaf_phi3", &s.ceaf_phi3), ("ceaf_phi4", &s.ceaf_phi4)] {
            let sc = t.scores();
            let perfect = sc.precision == 1.0 && sc.recall == 1.0;
            prop_assert_eq!(perfect, same, "{} on {:?} vs {:?}", name, p, g);
            for v in scores_of(t) {
                prop_assert!((0.0..=1.0 + TOL).contains(&v));
            }
        }
    }

    #[test]
    fn muc_ignores_shared_singletons(p in partition(6), g in partition(6)) {
        let before = coref_scores(&p, &g).unwrap().muc.scores();
        let extra = BTreeSet::from([100u32]);
        let (mut p2, mut g2) = (p.clone(), g.clone());
        p2.push(extra.clone());
        g2.push(extra);
        let after = coref_scores(&p2, &g2).unwrap().muc.scores();
        prop_assert_eq!((before.precision, before.recall), (after.precision, after.recall));
    }

    #[test]
    fn rme_relaxation_never_lowers_the_sum(p in ree_args(), g in ree_args()) {
        let opts = ZooOptions::default();
        let (pv, gv) = (ree(&p), ree(&g));
        let two_sided = zoo::evaluate("ceaf_ree", &pv, &gv, &opts).unwrap().tally.sigma_pr;
        let relaxed = zoo::evaluate("ceaf_rme_subset", &pv, &gv, &opts).unwrap().tally.sigma_pr;
        prop_assert!(relaxed + TOL >= two_sided);
    }

    #[test]
    fn rel_f1_counts_the_intersection(
        p in prop::collection::vec((0u8..2, 0u8..3, 0u8..3), 0..6),
        g in prop::collection::vec((0u8..2, 0u8..3, 0u8..3), 0..6),
    ) {
        let doc = |v: &[(u8, u8, u8)]| json!({"relations": v.iter().map(|&(t, s, o)| rel(t, s, o)).collect::<Vec<_>>()});
        let r = zoo::evaluate("rel_f1", &doc(&p), &doc(&g), &ZooOptions::default()).unwrap();
        let (ps, gs): (BTreeSet<_>, BTreeSet<_>) = (p.iter().collect(), g.iter().collect());
        prop_assert_eq!(r.tally.sigma_pr, ps.intersection(&gs).count() as f64);
        prop_assert_eq!(r.tally.sigma_pp, ps.len() as f64);
    }

    #[test]
    fn schema_round_trip_and_reflexivity(
        p in prop::collection::vec((0u8..2, 0u8..3, 0u8..3), 0..5),
        g in prop::collection::vec((0u8..2, 0u8..3, 0u8..3), 0..5),
    ) {
        let s = parse_schema(RELATIONS).unwrap();
        let again = parse_schema(&s.to_json()).unwrap();
        let doc = |v: &[(u8, u8, u8)]| json!({"relations": v.iter().map(|&(t, s, o)| rel(t, s, o)).collect::<Vec<_>>()});
        let opts = ZooOptions::default();
        let a = s.evaluate(&doc(&p), &doc(&g), &opts).unwrap();
        let b = again.evaluate(&doc(&p), &doc(&g), &opts).unwrap();
        prop_assert_eq!(a.tally, b.tally);
        let relation = s.similarity("Relation").unwrap();
        for &(t, x, y) in &p {
            prop_assert_eq!(relation.eval(&rel(t, x, y), &rel(t, x, y), &opts).unwrap(), 1.0);
        }
    }

    #[test]
    fn normalized_entity_sims_peak_on_the_diagonal(
        x in prop::collection::btree_set(0u8..6, 1..5),
        y in prop::collection::btree_set(0u8..6, 1..5),
    ) {
        for phi in [phi4::<u8>, phi_subset::<u8>] {
            prop_assert_eq!(phi(&x, &x), 1.0);
            prop_assert!(phi(&x, &y) <= 1.0);
        }
    }

    #[test]
    fn level_similarity_peaks_on_the_diagonal(
        a in prop::collection::vec("[ab]", 3),
        b in prop::collection::vec("[ab]", 3),
    ) {
        let (pa, pb) = (TypePath::new(a.clone()), TypePath::new(b));
        prop_assert_eq!(type_similarity_level(&pa, &pa).unwrap().value(), 1.0);
        prop_assert!(type_similarity_level(&pb, &pa).unwrap().value() <= 1.0);
    }
}
