//! Property suites for the per-module invariants: pairing inversion, set
//! algebra against pointwise scans, submeasure axioms, name laws, evaluator
//! budget monotonicity, Skolem duality, and forcing certificate transfer.

mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;
use std::sync::Arc;

use common::*;
use fsmathias::formula::{classical_eval, classify, eval_on_oracle, Formula, SyntClass, Truth};
use fsmathias::forcing::{
    extends, pi1_forces, tree_member, Budgets, Condition, Verdict,
};
use fsmathias::names::{Name, SliceKind, Term};
use fsmathias::sets::{fst, pair, snd, BitString, FinSet, PeriodicSet};
use fsmathias::skolem::{herbrandize, skolemize};
use fsmathias::submeasure::{EvalCfg, Submeasure};

fn small_set() -> impl Strategy<Value = FinSet> {
    proptest::collection::vec(0u64..24, 0..6).prop_map(FinSet::new)
}

fn periodic() -> impl Strategy<Value = PeriodicSet> {
    (
        proptest::collection::vec(any::<bool>(), 0..5),
        proptest::collection::vec(any::<bool>(), 1..5),
    )
        .prop_map(|(prefix, period)| {
            PeriodicSet::new(BitString::from_bits(prefix), BitString::from_bits(period))
        })
}

proptest! {
    #[test]
    fn pairing_inverts(w in 0u64..10_000, t in 0u64..10_000) {
        let p = pair(w, t);
        prop_assert_eq!(fst(p), w);
        prop_assert_eq!(snd(p), t);
    }

    #[test]
    fn set_algebra_matches_pointwise(a in periodic(), b in periodic()) {
        let bound = a.joint_bound(&b).max(3 * 4 + 5);
        let u = a.union(&b);
        let i = a.inter(&b);
        let d = a.diff(&b);
        for n in 0..bound {
            prop_assert_eq!(u.contains(n), a.contains(n) || b.contains(n));
            prop_assert_eq!(i.contains(n), a.contains(n) && b.contains(n));
            prop_assert_eq!(d.contains(n), a.contains(n) && !b.contains(n));
        }
        prop_assert_eq!(u.is_infinite(), (0..bound).filter(|&n| u.contains(n)).count() > 0 && u.period().bits().iter().any(|&x| x));
    }

    #[test]
    fn restrict_is_monotone(a in periodic(), n in 0u64..50, m in 0u64..50) {
        let (lo, hi) = if n <= m { (n, m) } else { (m, n) };
        prop_assert!(a.restrict(lo).is_subset(&a.restrict(hi)));
    }

    #[test]
    fn submeasure_axioms(seed in 0u64..64, xs in small_set(), ys in small_set()) {
        let pool = expression_pool(7);
        let mu = &pool[(seed as usize) % pool.len()];
        let cfg = EvalCfg::default();
        let vx = mu.eval(&xs, &cfg).unwrap();
        let vy = mu.eval(&ys, &cfg).unwrap();
        let vu = mu.eval(&xs.union(&ys), &cfg).unwrap();
        prop_assert_eq!(mu.eval(&FinSet::empty(), &cfg).unwrap(), 0);
        prop_assert!(vx.max(vy) <= vu);
        prop_assert!(vu <= vx + vy);
    }

    #[test]
    fn imeet_descends_in_depth(seed in 0u64..32, xs in small_set()) {
        let pool = expression_pool(9);
        let mut r = rng(seed);
        let parts: Vec<Submeasure> =
            (0..3).map(|_| pool[r.gen_range(0..pool.len())].clone()).collect();
        let cfg = EvalCfg::default();
        let mut last = u64::MAX;
        for depth in 1..=3 {
            let m = Submeasure::imeet(parts.clone(), depth);
            let v = m.eval(&xs, &cfg).unwrap();
            prop_assert!(v <= last);
            last = v;
        }
    }
}

/// Random name over the public constructors, kept to arity 1 so slices
/// compose.
fn random_name(r: &mut rand_chacha::ChaCha8Rng, depth: usize) -> Name {
    if depth == 0 {
        return match r.gen_range(0..4) {
            0 => Name::generic_chi(),
            1 => Name::generic_enum(),
            2 => Name::from_term(
                Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Const(r.gen_range(0..3)))),
                1,
            ),
            _ => {
                let mut entries = Vec::new();
                for _ in 0..r.gen_range(1..4) {
                    let len = r.gen_range(0..3);
                    let pat = BitString::from_bits((0..len).map(|_| r.gen_bool(0.5)).collect());
                    let x = r.gen_range(0..3);
                    let y = r.gen_range(0..5);
                    entries.push((pat, x, y));
                }
                Name::turing_table(entries).unwrap_or_else(|_| Name::empty(1))
            }
        };
    }
    match r.gen_range(0..4) {
        0 => Name::slice(
            random_name(r, depth - 1),
            *[SliceKind::Even, SliceKind::Odd, SliceKind::Shift, SliceKind::PairFix(1)]
                .choose(r)
                .unwrap(),
        )
        .unwrap(),
        1 => Name::superpose(
            Name::from_term(Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Proj(1))), 2),
            vec![random_name(r, depth - 1), random_name(r, depth - 1)],
        )
        .unwrap(),
        2 => Name::if_zero(
            random_name(r, depth - 1),
            random_name(r, depth - 1),
            random_name(r, depth - 1),
        )
        .unwrap(),
        _ => random_name(r, depth - 1),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn names_are_monotone_and_functional(seed in 0u64..5_000) {
        let mut r = rng(seed);
        let name = random_name(&mut r, 2);
        let len = r.gen_range(0..7usize);
        let tau = BitString::from_bits((0..len).map(|_| r.gen_bool(0.5)).collect());
        let mut ext_bits = tau.bits().to_vec();
        for _ in 0..r.gen_range(0..4usize) {
            ext_bits.push(r.gen_bool(0.5));
        }
        let ext = BitString::from_bits(ext_bits);
        let args: Vec<u64> = (0..name.arity()).map(|_| r.gen_range(0..5)).collect();
        let v1 = name.query(&tau, &args);
        let v2 = name.query(&ext, &args);
        if let Some(y) = v1 {
            // Answers never retract or change along extension.
            prop_assert_eq!(v2, Some(y));
        }
        // Determinism on identical input.
        prop_assert_eq!(name.query(&tau, &args), v1);
    }

    #[test]
    fn superpose_domain_includes_intersection(seed in 0u64..2_000) {
        let mut r = rng(seed);
        let children: Vec<Name> = (0..2).map(|_| random_name(&mut r, 1)).collect();
        let outer = Name::from_term(
            Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Proj(1))),
            2,
        );
        let h = Name::superpose(outer, children.clone()).unwrap();
        let len = r.gen_range(0..=10usize);
        let tau = BitString::from_bits((0..len).map(|_| r.gen_bool(0.5)).collect());
        let arg = r.gen_range(0..4u64);
        let all_defined = children.iter().all(|c| c.query(&tau, &[arg]).is_some());
        if all_defined {
            prop_assert!(h.query(&tau, &[arg]).is_some());
        }
    }

    #[test]
    fn primrec_domain_includes_intersection(seed in 0u64..2_000) {
        let mut r = rng(seed);
        let base = Name::slice(random_name(&mut r, 1), SliceKind::Head).unwrap();
        // step(acc, i) = acc + 1 composed under a random oracle-reading name
        // applied at the loop index.
        let inner = random_name(&mut r, 1);
        let step = Name::superpose(
            Name::from_term(Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Proj(1))), 2),
            vec![
                Name::proj(0, 2),
                Name::superpose(inner.clone(), vec![Name::proj(1, 2)]).unwrap(),
            ],
        )
        .unwrap();
        let h = Name::primrec(base.clone(), step).unwrap();
        let len = r.gen_range(0..=10usize);
        let tau = BitString::from_bits((0..len).map(|_| r.gen_bool(0.5)).collect());
        let y = r.gen_range(0..4u64);
        let chain_defined = base.query(&tau, &[]).is_some()
            && (0..y).all(|i| inner.query(&tau, &[i]).is_some());
        if chain_defined {
            prop_assert!(h.query(&tau, &[y]).is_some());
        }
    }

    #[test]
    fn evaluator_budget_monotonicity(seed in 0u64..2_000) {
        let mut r = rng(seed);
        let quantifiers = r.gen_range(0..2usize);
        let phi = random_closed(&mut r, quantifiers, 2);
        let g = PeriodicSet::progression(r.gen_range(0..2), 1 + r.gen_range(0..3));
        let verdicts: Vec<Truth> = [(2u64, 3u64), (4, 6), (8, 10)]
            .iter()
            .map(|&(b, l)| classical_eval(&phi, &g, b, l))
            .collect();
        for window in verdicts.windows(2) {
            if window[0] != Truth::Unknown {
                prop_assert_eq!(window[0], window[1]);
            }
        }
    }

    #[test]
    fn skolem_herbrand_duality(seed in 0u64..2_000) {
        let mut r = rng(seed);
        let q = 1 + r.gen_range(0..2usize);
        let theta = random_closed(&mut r, q, 2);
        let s_of_not = skolemize(&theta.clone().not());
        let h = herbrandize(&theta);
        prop_assert_eq!(s_of_not.body, Formula::Not(Box::new(h.body)));
        let h_of_not = herbrandize(&theta.clone().not());
        let s = skolemize(&theta);
        prop_assert_eq!(h_of_not.body, Formula::Not(Box::new(s.body)));
    }

    #[test]
    fn classify_matches_construction(seed in 0u64..2_000) {
        let mut r = rng(seed);
        let bounded = random_bounded(&mut r, 0, 2);
        prop_assert_eq!(classify(&bounded), SyntClass::Bounded);
        let pi1 = random_bounded(&mut r, 1, 2).forall();
        prop_assert_eq!(classify(&pi1), SyntClass::Pi01);
        let sigma1 = random_bounded(&mut r, 1, 2).not().forall().not();
        prop_assert_eq!(classify(&sigma1), SyntClass::Sigma01);
        let pi2 = random_bounded(&mut r, 2, 1).not().forall().not().forall();
        prop_assert_eq!(classify(&pi2), SyntClass::Pi02);
        let pi3 = random_bounded(&mut r, 3, 1)
            .forall()
            .not()
            .forall()
            .not()
            .forall();
        prop_assert_eq!(classify(&pi3), SyntClass::Pi03);
    }

    #[test]
    fn formula_print_parse_roundtrip(seed in 0u64..2_000) {
        let mut r = rng(seed);
        let q = r.gen_range(0..3usize);
        let phi = random_closed(&mut r, q, 2);
        let printed = phi.print();
        let reparsed = Formula::parse(&printed).unwrap();
        prop_assert_eq!(&reparsed, &phi);
        prop_assert_eq!(reparsed.print(), printed);
    }
}

#[test]
fn classical_eval_matches_exhaustive_truth_on_total_bforall_formulas() {
    // Formulas whose quantifiers are all bounded with total bounds are
    // decided exactly, matching the recursive truth oracle on every oracle
    // of length at most 8.
    let mut r = rng(99);
    let mut checked = 0;
    for _ in 0..150 {
        let phi = random_bounded(&mut r, 0, 3);
        for len in [0usize, 1, 4, 8] {
            for bits in [0u32, 1, 0b1010, 0b11111111] {
                let tau = BitString::from_fn(len, |i| bits & (1 << i) != 0);
                if let Some(t) = truth_opt(&phi, &tau, 4) {
                    let decided = eval_on_oracle(&phi, &tau, 4);
                    assert_eq!(
                        decided,
                        if t { Truth::True } else { Truth::False },
                        "{} on {tau}",
                        phi.print()
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 300);
}

#[test]
fn refutation_certificates_transfer_to_extensions() {
    // If a coarser condition is refuted by a string that also lies in the
    // finer condition's tree, the finer condition is refuted too.
    let budgets = Budgets::default();
    let mut r = rng(4242);
    let mut transfers = 0;
    for _ in 0..200 {
        let coarse = Condition::new(
            FinSet::empty(),
            PeriodicSet::naturals(),
            Submeasure::card(),
            &budgets,
        )
        .unwrap();
        // A finer condition: restrict the envelope to a random progression
        // and push one of its points into the stem.
        let step = 1 + r.gen_range(0..3u64);
        let start = r.gen_range(0..2u64);
        let envelope = PeriodicSet::progression(start, step);
        let stem = if r.gen_bool(0.5) { FinSet::singleton(start) } else { FinSet::empty() };
        let Ok(fine) = Condition::new(stem, envelope, Submeasure::card(), &budgets) else {
            continue;
        };
        assert!(extends(&fine, &coarse, &budgets));
        let theta = random_bounded(&mut r, 1, 2).forall();
        if let Verdict::Refuted { tau, args, value } = pi1_forces(&coarse, &theta, &budgets) {
            if tree_member(fine.stem(), fine.envelope(), &tau) {
                let v = pi1_forces(&fine, &theta, &budgets);
                assert!(
                    v.is_refuted(),
                    "certificate ({tau}, {args:?}, {value}) did not transfer for {}",
                    theta.print()
                );
                transfers += 1;
            }
        }
    }
    assert!(transfers > 20, "too few transferable refutations: {transfers}");
}

#[test]
fn fusion_limit_meet_is_dominated_by_stages() {
    // The stage-S truncated meet sits below every stage measure on probes.
    use fsmathias::forcing::{demo_schedule, fusion_run, FusionHandler};
    use fsmathias::sets::FinSet as FS;

    struct Folding;
    impl FusionHandler for Folding {
        fn lambda(
            &mut self,
            _s: u64,
            _b: &FS,
            _x: &[u64],
            _c: &Condition,
            _bu: &Budgets,
        ) -> Option<Submeasure> {
            // A genuinely unbounded stage measure so folds happen.
            Some(Submeasure::card())
        }
        fn select_envelope(
            &mut self,
            _s: u64,
            _b: &FS,
            _x: &[u64],
            c: &Condition,
            _bu: &Budgets,
        ) -> Option<(PeriodicSet, String)> {
            Some((c.envelope().clone(), "unchanged".into()))
        }
    }

    let budgets = Budgets { stages: 8, ..Budgets::default() };
    let initial = Condition::new(
        FinSet::empty(),
        PeriodicSet::naturals(),
        Submeasure::card(),
        &budgets,
    )
    .unwrap();
    let state = fusion_run(initial, &mut Folding, &demo_schedule(2, 1), &budgets);
    assert!(state.completed(), "{:?}", state.aborted);
    let cfg = EvalCfg::default();
    let probes: Vec<FinSet> = (0u32..64).map(|mask| {
        (0..6).filter(|i| mask & (1 << i) != 0).map(|i| i as u64).collect()
    }).collect();
    let limit = state.mu_so_far();
    for mu_s in &state.measures {
        for x in &probes {
            let lv = limit.eval(x, &cfg).unwrap();
            let sv = mu_s.eval(x, &cfg).unwrap();
            assert!(lv <= sv, "limit {lv} above stage value {sv} on {x:?}");
        }
    }
}
