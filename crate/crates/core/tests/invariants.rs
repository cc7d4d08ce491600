mod common;

use common::*;
use cvcsp::classify::{classify, verify_soft_loop, verify_tractable, Budgets, Hardness, Verdict};
use cvcsp::express::binary_closure;
use cvcsp::gen::{random_feasible, random_instance, random_language, rng, LanguageParams};
use cvcsp::graph::build_pair_graph;
use cvcsp::ops::PairSet;
use cvcsp::reduce::{cap_reduce, derive_language, DeriveMode};
use cvcsp::solver::{brute_force_solve, fuse_improve, Certified};
use cvcsp::{Assignment, Cost, Instance, Language, UnaryClosure};
use proptest::prelude::*;

fn closure_flag() -> impl Strategy<Value = UnaryClosure> {
    prop_oneof![
        Just(UnaryClosure::None),
        Just(UnaryClosure::Finite),
        Just(UnaryClosure::General)
    ]
}

prop_compose! {
    fn params(max_d: usize)(
        d in 2..=max_d,
        functions in 1usize..=2,
        crisp in any::<bool>(),
        infinity_percent in 0u32..=60,
        max_cost in 1u64..=4,
        unary_closure in closure_flag(),
    ) -> LanguageParams {
        LanguageParams { domain_size: d, functions, min_arity: 2, max_arity: 2, max_cost, infinity_percent, crisp, unary_closure }
    }
}

prop_compose! {
    fn language(max_d: usize)(p in params(max_d), seed in any::<u64>()) -> Language {
        random_language(&mut rng(seed), &p).unwrap()
    }
}

fn conservative(l: Language) -> Language {
    if l.is_conservative() {
        l
    } else {
        l.with_unary_closure(UnaryClosure::Finite)
    }
}

prop_compose! {
    fn instance_over(max_d: usize)(l in language(max_d), n in 1usize..=5, k in 0usize..=6, seed in any::<u64>())
        -> (Language, Instance) {
        let i = random_instance(&mut rng(seed), &l, n, k).unwrap();
        (l, i)
    }
}

fn small() -> Budgets {
    Budgets {
        rounds: 3,
        size: 600,
        ..Budgets::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_grows_with_rounds(l in language(3)) {
        let mut prev = binary_closure(&l, 0, 400).unwrap();
        for r in 1..=3 {
            let next = binary_closure(&l, r, 400).unwrap();
            prop_assume!(!next.size_exhausted);
            for m in &prev.members {
                prop_assert!(next.find(m).is_some());
            }
            prev = next;
        }
    }

    #[test]
    fn self_loops_only_accumulate(l in language(3)) {
        let mut prev = build_pair_graph(&binary_closure(&l, 0, 400).unwrap());
        for r in 1..=3 {
            let c = binary_closure(&l, r, 400).unwrap();
            prop_assume!(!c.size_exhausted);
            let g = build_pair_graph(&c);
            prop_assert!(g.m_set.is_subset(&prev.m_set));
            for e in &prev.edges {
                let now = g.edge(e.p, e.q);
                prop_assert!(now.is_some_and(|n| n.kind >= e.kind), "edge {:?}-{:?} lost", e.p, e.q);
            }
            prev = g;
        }
    }

    #[test]
    fn edges_replay_on_their_members(l in language(3)) {
        let c = binary_closure(&l, 2, 2000).unwrap();
        let g = build_pair_graph(&c);
        for e in &g.edges {
            let f = &c.members[e.member];
            prop_assert!(e.replays_on(f));
            let (p, q) = if e.swapped { (e.q, e.p) } else { (e.p, e.q) };
            prop_assert!(edge(f, p, q).is_some());
        }
        // and every node pair the oracle finds is in the graph
        for f in &c.members {
            for &p in &g.nodes {
                for &q in &g.nodes {
                    if edge(f, p, q).is_some() {
                        let (a, b) = if p <= q { (p, q) } else { (q, p) };
                        prop_assert!(g.edge(a, b).is_some());
                    }
                }
            }
        }
        let m = PairSet::from_pairs(g.nodes.iter().copied().filter(|&n| g.self_loop(n).is_none()));
        prop_assert_eq!(m, g.m_set.clone());
    }

    #[test]
    fn classification_is_deterministic_and_replays(l in language(3)) {
        let l = conservative(l);
        let a = classify(&l, &small()).unwrap();
        let b = classify(&l, &small()).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.verdict).unwrap(), serde_json::to_string(&b.verdict).unwrap());
        prop_assert_eq!(&a.trace, &b.trace);
        match &a.verdict {
            Verdict::Tractable(cert) => {
                prop_assert!(verify_tractable(cert, &l).is_ok());
                for f in l.functions() {
                    prop_assert!(triple_inequality_holds(f, &cert.triple));
                    prop_assert!(pair_inequality_holds(f, &cert.stp));
                }
                if l.functions().iter().all(|f| f.is_finite_valued()) {
                    prop_assert_eq!(&cert.m_set, &PairSet::all(l.domain_size()));
                }
            }
            Verdict::NpHard(Hardness::SoftSelfLoop(w)) => prop_assert!(verify_soft_loop(w, &l).is_ok()),
            _ => {}
        }
    }

    #[test]
    fn feas_is_idempotent(l in language(3)) {
        let once = derive_language(&l, DeriveMode::Feas);
        prop_assert_eq!(derive_language(&once, DeriveMode::Feas), once.clone());
        for (f, g) in l.functions().iter().zip(once.functions()) {
            prop_assert!(g.is_crisp());
            prop_assert_eq!(f.effective_domain(), g.effective_domain());
        }
    }

    #[test]
    fn json_round_trips((l, i) in instance_over(3)) {
        prop_assert_eq!(Language::from_json(&l.to_json()).unwrap(), l);
        prop_assert_eq!(Instance::from_json(&i.to_json()).unwrap(), i);
    }

    #[test]
    fn brute_force_matches_oracle((l, i) in instance_over(3)) {
        let s = brute_force_solve(&i, &l).unwrap();
        let (c, x) = brute_min(&i, &l);
        prop_assert_eq!(s.cost, c);
        prop_assert_eq!(s.assignment.0, x);
    }

    #[test]
    fn cap_reduction_preserves_finite_costs((l, i) in instance_over(3), u in proptest::collection::vec(proptest::option::weighted(0.7, 0u64..4), 3)) {
        let mut l = l.with_unary_closure(UnaryClosure::General);
        let d = l.domain_size();
        let mut vals = u[..d].to_vec();
        vals[0] = vals[0].or(Some(0));
        let idx = l.push(cvcsp::CostFunction::from_ints(d, 1, &vals).unwrap()).unwrap();
        let mut i = i;
        i.push(idx, vec![0]);
        let r = cap_reduce(&i, &l).unwrap();
        let threshold = Cost::Finite(r.threshold.clone());
        for x in tuples(d, i.num_vars) {
            let (before, after) = (cost(&i, &l, &x), cost(&r.instance, &r.language, &x));
            if before.is_finite() {
                prop_assert_eq!(&before, &after);
                prop_assert!(after < threshold);
            } else {
                prop_assert!(after >= threshold);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fusion_never_raises_cost(l in language(3), seed in any::<u64>()) {
        let l = conservative(l);
        let Verdict::Tractable(cert) = classify(&l, &small()).unwrap().verdict else { return Ok(()) };
        let mut r = rng(seed);
        let inst = random_instance(&mut r, &l, 4, 5).unwrap();
        let pair = Certified::pair(cert.stp, &l).unwrap();
        let triple = Certified::triple(cert.triple, &l).unwrap();
        let mut xs = Vec::new();
        for _ in 0..3 {
            match random_feasible(&mut r, &inst, &l, 500).unwrap() {
                Some(x) => xs.push(Assignment(x)),
                None => return Ok(()),
            }
        }
        for ops in [&pair, &triple] {
            let k = ops.arity();
            let f = fuse_improve(&inst, &l, ops, &xs[..k]).unwrap();
            prop_assert!(f.output_cost <= f.input_cost);
            let recomputed = f.outputs.iter().fold(Cost::zero(), |s, y| s + cost(&inst, &l, &y.0));
            prop_assert_eq!(recomputed, f.output_cost);
        }
    }
}
