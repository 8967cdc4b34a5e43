//! Shared oracles and corpus generators for the integration suites.
//!
//! Everything here recomputes from definitions: exhaustive split and
//! partition enumeration for the submeasure DPs, finite-model truth for the
//! compiler and Skolem theorems, and seeded corpus generators. Nothing calls
//! back into the code paths it checks.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use fsmathias::formula::{Arg, ChainStep, Formula, HoleChain, Index};
use fsmathias::names::{GrowthFn, Name, Term};
use fsmathias::sets::{pair, BitString, FinSet, PeriodicSet};
use fsmathias::submeasure::{EvalCfg, Submeasure, TreeSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Submeasure oracles
// ---------------------------------------------------------------------------

/// Exhaustive split minimum: `min { a(y) + b(z) : x = y ∪ z }` over all
/// 2^|x| complementary splits.
pub fn brute_meet(a: &Submeasure, b: &Submeasure, x: &FinSet, cfg: &EvalCfg) -> u64 {
    let elems = x.elements();
    let mut best = u64::MAX;
    for mask in 0u32..(1 << elems.len()) {
        let y: FinSet = elems
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        let z = x.diff(&y);
        let v = a.eval(&y, cfg).unwrap().saturating_add(b.eval(&z, cfg).unwrap());
        best = best.min(v);
    }
    best
}

/// All set partitions of `x` (Bell-number many; keep `|x| ≤ 8`).
pub fn partitions(x: &FinSet) -> Vec<Vec<FinSet>> {
    fn go(rest: &[u64], acc: &mut Vec<Vec<u64>>, out: &mut Vec<Vec<FinSet>>) {
        match rest.split_first() {
            None => out.push(acc.iter().map(|b| FinSet::new(b.clone())).collect()),
            Some((&e, tail)) => {
                for i in 0..acc.len() {
                    acc[i].push(e);
                    go(tail, acc, out);
                    acc[i].pop();
                }
                acc.push(vec![e]);
                go(tail, acc, out);
                acc.pop();
            }
        }
    }
    let mut out = Vec::new();
    if x.is_empty() {
        out.push(Vec::new());
        return out;
    }
    go(x.elements(), &mut Vec::new(), &mut out);
    out
}

/// Exhaustive Mazur evaluation: minimum of `Σ θ(block)` over all partitions.
pub fn brute_mazur(family: &[Arc<TreeSpec>], x: &FinSet) -> u64 {
    if x.is_empty() {
        return 0;
    }
    partitions(x)
        .iter()
        .map(|p| p.iter().map(|b| fsmathias::submeasure::mazur_theta(family, b)).sum())
        .min()
        .unwrap()
}

/// Three-way split minimum, the oracle for meet associativity.
pub fn brute_meet3(
    a: &Submeasure,
    b: &Submeasure,
    c: &Submeasure,
    x: &FinSet,
    cfg: &EvalCfg,
) -> u64 {
    fn assign(elems: &[u64], idx: usize, parts: &mut [Vec<u64>; 3], best: &mut u64, subs: &[&Submeasure; 3], cfg: &EvalCfg) {
        if idx == elems.len() {
            let v: u64 = parts
                .iter()
                .zip(subs.iter())
                .map(|(p, s)| s.eval(&FinSet::new(p.clone()), cfg).unwrap())
                .fold(0u64, |acc, v| acc.saturating_add(v));
            *best = (*best).min(v);
            return;
        }
        for part in 0..3 {
            parts[part].push(elems[idx]);
            assign(elems, idx + 1, parts, best, subs, cfg);
            parts[part].pop();
        }
    }
    let mut best = u64::MAX;
    assign(x.elements(), 0, &mut [vec![], vec![], vec![]], &mut best, &[a, b, c], cfg);
    best
}

// ---------------------------------------------------------------------------
// Expression corpus
// ---------------------------------------------------------------------------

/// A pool of submeasure expressions exercising every constructor. Leaves are
/// kept cheap enough for exhaustive oracles on 10-element sets.
pub fn expression_pool(seed: u64) -> Vec<Submeasure> {
    let mut r = rng(seed);
    let mut pool: Vec<Submeasure> = Vec::new();
    pool.push(Submeasure::card());
    for n in [0u64, 1, 2, 3, 5, 9] {
        pool.push(Submeasure::constant(n));
    }
    let sets = [
        PeriodicSet::naturals(),
        PeriodicSet::progression(0, 2),
        PeriodicSet::progression(1, 2),
        PeriodicSet::progression(0, 3),
        PeriodicSet::parse("(periodic \"0110\" \"101\")").unwrap(),
    ];
    for s in &sets {
        pool.push(Submeasure::mazur(vec![TreeSpec::Subsets(s.clone())]));
    }
    pool.push(Submeasure::mazur(vec![
        TreeSpec::Subsets(sets[1].clone()),
        TreeSpec::Subsets(sets[2].clone()),
    ]));
    pool.push(Submeasure::mazur(vec![TreeSpec::Cylinder {
        depth: 3,
        allowed: vec![
            BitString::parse("011").unwrap(),
            BitString::parse("110").unwrap(),
            BitString::parse("000").unwrap(),
        ],
    }]));
    pool.push(Submeasure::dom(GrowthFn::affine(2, 0)));
    pool.push(Submeasure::dom(GrowthFn::new(vec![(0, 1), (1, 2), (2, 4)], 0, 8)));
    // Condition trees with small names.
    pool.push(Submeasure::mazur(vec![TreeSpec::NoConv {
        name: Name::empty(1),
        stem: FinSet::empty(),
        args: vec![0],
        depth_cap: 6,
    }]));
    pool.push(Submeasure::mazur(vec![TreeSpec::Stab {
        name: Name::turing_table(vec![
            (BitString::parse("0").unwrap(), 0, 0),
            (BitString::parse("1").unwrap(), 0, 1),
        ])
        .unwrap(),
        stem: FinSet::empty(),
        arg_bound: 1,
        depth_cap: 6,
    }]));
    // Random joins, meets, and truncated countable meets over the base pool.
    let base = pool.clone();
    for _ in 0..24 {
        let a = base[r.gen_range(0..base.len())].clone();
        let b = base[r.gen_range(0..base.len())].clone();
        pool.push(match r.gen_range(0..3) {
            0 => Submeasure::join(a, b),
            1 => Submeasure::meet(a, b),
            _ => Submeasure::imeet(vec![a, b], 1 + r.gen_range(0..2) as usize),
        });
    }
    // A couple of deeper combinations.
    for _ in 0..8 {
        let a = pool[r.gen_range(0..pool.len())].clone();
        let b = base[r.gen_range(0..base.len())].clone();
        pool.push(if r.gen_bool(0.5) { Submeasure::meet(a, b) } else { Submeasure::join(a, b) });
    }
    pool
}

pub fn random_finset(r: &mut ChaCha8Rng, max_elem: u64, max_size: usize) -> FinSet {
    let size = r.gen_range(0..=max_size);
    (0..size).map(|_| r.gen_range(0..max_elem)).collect()
}

// ---------------------------------------------------------------------------
// Finite-model truth
// ---------------------------------------------------------------------------

/// Total truth over an explicit oracle with quantifiers ranging below
/// `bound`. Panics if an atom is undefined; corpus generators must keep
/// every queried name total on the oracle.
pub fn truth(phi: &Formula, tau: &BitString, bound: u64) -> bool {
    fn arg_value(a: &Arg, tau: &BitString, env: &[u64]) -> u64 {
        match a {
            Arg::Var(i) => env[env.len() - 1 - i],
            Arg::Const(c) => *c,
            Arg::Chain(c) => c.value(tau, env).expect("oracle too short for chain"),
        }
    }
    fn name_value(name: &Name, args: &[Arg], tau: &BitString, env: &[u64]) -> u64 {
        let vals: Vec<u64> = args.iter().map(|a| arg_value(a, tau, env)).collect();
        name.query(tau, &vals).expect("corpus names must be total on the oracle")
    }
    fn go(phi: &Formula, tau: &BitString, env: &mut Vec<u64>, bound: u64) -> bool {
        match phi {
            Formula::Atom { left, left_args, right, right_args } => {
                name_value(left, left_args, tau, env) == name_value(right, right_args, tau, env)
            }
            Formula::Not(a) => !go(a, tau, env, bound),
            Formula::And(a, b) => go(a, tau, env, bound) && go(b, tau, env, bound),
            Formula::Forall(a) => (0..bound).all(|w| {
                env.push(w);
                let v = go(a, tau, env, bound);
                env.pop();
                v
            }),
            Formula::BForall { bound: f, bound_args, body } => {
                let limit = name_value(f, bound_args, tau, env);
                (0..=limit).all(|w| {
                    env.push(w);
                    let v = go(body, tau, env, bound);
                    env.pop();
                    v
                })
            }
        }
    }
    go(phi, tau, &mut Vec::new(), bound)
}

/// Like [`truth`] but `None` where some queried name is undefined on the
/// oracle, evaluating all positions (no short-circuiting).
pub fn truth_opt(phi: &Formula, tau: &BitString, bound: u64) -> Option<bool> {
    fn arg_value(a: &Arg, tau: &BitString, env: &[u64]) -> Option<u64> {
        match a {
            Arg::Var(i) => Some(env[env.len() - 1 - i]),
            Arg::Const(c) => Some(*c),
            Arg::Chain(c) => c.value(tau, env),
        }
    }
    fn name_value(name: &Name, args: &[Arg], tau: &BitString, env: &[u64]) -> Option<u64> {
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(arg_value(a, tau, env)?);
        }
        name.query(tau, &vals)
    }
    fn go(phi: &Formula, tau: &BitString, env: &mut Vec<u64>, bound: u64) -> Option<bool> {
        match phi {
            Formula::Atom { left, left_args, right, right_args } => Some(
                name_value(left, left_args, tau, env)? == name_value(right, right_args, tau, env)?,
            ),
            Formula::Not(a) => go(a, tau, env, bound).map(|v| !v),
            Formula::And(a, b) => {
                let x = go(a, tau, env, bound)?;
                let y = go(b, tau, env, bound)?;
                Some(x && y)
            }
            Formula::Forall(a) => {
                let mut all = true;
                for w in 0..bound {
                    env.push(w);
                    let v = go(a, tau, env, bound);
                    env.pop();
                    all &= v?;
                }
                Some(all)
            }
            Formula::BForall { bound: f, bound_args, body } => {
                let limit = name_value(f, bound_args, tau, env)?;
                let mut all = true;
                for w in 0..=limit {
                    env.push(w);
                    let v = go(body, tau, env, bound);
                    env.pop();
                    all &= v?;
                }
                Some(all)
            }
        }
    }
    go(phi, tau, &mut Vec::new(), bound)
}

/// Truth of a template body under an explicit assignment for the hole: the
/// needed index is reported when the assignment is silent there.
pub fn template_truth(
    phi: &Formula,
    tau: &BitString,
    bound: u64,
    w: &BTreeMap<u64, u64>,
) -> Result<bool, u64> {
    fn chain_index(c: &HoleChain, env: &[u64]) -> u64 {
        let mut t = 0u64;
        for step in &c.steps[1..] {
            t = match step {
                ChainStep::Even => 2 * t,
                ChainStep::Odd => 2 * t + 1,
                ChainStep::Shift => t + 1,
                ChainStep::PairFix(Index::Var(i)) => pair(env[env.len() - 1 - i], t),
                ChainStep::PairFix(Index::Const(c)) => pair(*c, t),
                ChainStep::Head => unreachable!(),
            };
        }
        t
    }
    fn arg_value(
        a: &Arg,
        tau: &BitString,
        env: &[u64],
        w: &BTreeMap<u64, u64>,
    ) -> Result<u64, u64> {
        match a {
            Arg::Var(i) => Ok(env[env.len() - 1 - i]),
            Arg::Const(c) => Ok(*c),
            Arg::Chain(c) => match &c.base {
                Some(name) => {
                    let t = chain_index(c, env);
                    Ok(name.query(tau, &[t]).expect("corpus names total"))
                }
                None => {
                    let t = chain_index(c, env);
                    w.get(&t).copied().ok_or(t)
                }
            },
        }
    }
    fn go(
        phi: &Formula,
        tau: &BitString,
        env: &mut Vec<u64>,
        bound: u64,
        w: &BTreeMap<u64, u64>,
    ) -> Result<bool, u64> {
        match phi {
            Formula::Atom { left, left_args, right, right_args } => {
                let mut l = Vec::new();
                for a in left_args {
                    l.push(arg_value(a, tau, env, w)?);
                }
                let mut r = Vec::new();
                for a in right_args {
                    r.push(arg_value(a, tau, env, w)?);
                }
                let lv = left.query(tau, &l).expect("corpus names total");
                let rv = right.query(tau, &r).expect("corpus names total");
                Ok(lv == rv)
            }
            Formula::Not(a) => Ok(!go(a, tau, env, bound, w)?),
            Formula::And(a, b) => Ok(go(a, tau, env, bound, w)? && go(b, tau, env, bound, w)?),
            Formula::Forall(a) => {
                for x in 0..bound {
                    env.push(x);
                    let v = go(a, tau, env, bound, w);
                    env.pop();
                    if !v? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::BForall { bound: f, bound_args, body } => {
                let mut vals = Vec::new();
                for a in bound_args {
                    vals.push(arg_value(a, tau, env, w)?);
                }
                let limit = f.query(tau, &vals).expect("corpus bounds total");
                for x in 0..=limit {
                    env.push(x);
                    let v = go(body, tau, env, bound, w);
                    env.pop();
                    if !v? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
    go(phi, tau, &mut Vec::new(), bound, w)
}

/// Exhaustive search for a hole assignment making the template body true
/// (values range over `0..=value_bound` on the finitely many queried
/// indices).
pub fn exists_witness(
    phi: &Formula,
    tau: &BitString,
    bound: u64,
    value_bound: u64,
) -> Option<BTreeMap<u64, u64>> {
    fn search(
        phi: &Formula,
        tau: &BitString,
        bound: u64,
        value_bound: u64,
        w: &mut BTreeMap<u64, u64>,
        fuel: &mut u64,
    ) -> Option<BTreeMap<u64, u64>> {
        loop {
            if *fuel == 0 {
                return None;
            }
            *fuel -= 1;
            match template_truth(phi, tau, bound, w) {
                Ok(true) => return Some(w.clone()),
                Ok(false) => return None,
                Err(idx) => {
                    for v in 0..=value_bound {
                        w.insert(idx, v);
                        if let Some(found) = search(phi, tau, bound, value_bound, w, fuel) {
                            return Some(found);
                        }
                    }
                    w.remove(&idx);
                    return None;
                }
            }
        }
    }
    let mut fuel = 2_000_000u64;
    search(phi, tau, bound, value_bound, &mut BTreeMap::new(), &mut fuel)
}

/// Exhaustive search for a hole assignment making the template body false.
pub fn exists_counterexample(
    phi: &Formula,
    tau: &BitString,
    bound: u64,
    value_bound: u64,
) -> Option<BTreeMap<u64, u64>> {
    let negated = phi.clone().not();
    exists_witness(&negated, tau, bound, value_bound)
}

// ---------------------------------------------------------------------------
// Formula corpus
// ---------------------------------------------------------------------------

/// Random bounded formula under `ctx` variables. Oracle queries stay below
/// index 8 so every atom is total on length-8 oracles.
pub fn random_bounded(r: &mut ChaCha8Rng, ctx: usize, depth: usize) -> Formula {
    let atom = |r: &mut ChaCha8Rng, ctx: usize| -> Formula {
        let var_or_const = |r: &mut ChaCha8Rng| -> Arg {
            if ctx > 0 && r.gen_bool(0.6) {
                Arg::Var(r.gen_range(0..ctx))
            } else {
                Arg::Const(r.gen_range(0..4))
            }
        };
        match r.gen_range(0..4) {
            0 => {
                // χ(u) = c with the index kept below the oracle length.
                let ix = var_or_const(r);
                Formula::Atom {
                    left: Name::generic_chi(),
                    left_args: vec![ix],
                    right: Name::constant(r.gen_range(0..2), 0),
                    right_args: vec![],
                }
            }
            1 => {
                // u = v
                Formula::Atom {
                    left: Name::identity(),
                    left_args: vec![var_or_const(r)],
                    right: Name::identity(),
                    right_args: vec![var_or_const(r)],
                }
            }
            2 => {
                // u + c = v
                let c = r.gen_range(0..3);
                Formula::Atom {
                    left: Name::from_term(
                        Term::Add(std::sync::Arc::new(Term::Proj(0)), std::sync::Arc::new(Term::Const(c))),
                        1,
                    ),
                    left_args: vec![var_or_const(r)],
                    right: Name::identity(),
                    right_args: vec![var_or_const(r)],
                }
            }
            _ => {
                // χ(u) = χ(v)
                Formula::Atom {
                    left: Name::generic_chi(),
                    left_args: vec![var_or_const(r)],
                    right: Name::generic_chi(),
                    right_args: vec![var_or_const(r)],
                }
            }
        }
    };
    if depth == 0 {
        return atom(r, ctx);
    }
    match r.gen_range(0..5) {
        0 | 1 => atom(r, ctx),
        2 => random_bounded(r, ctx, depth - 1).not(),
        3 => {
            let a = random_bounded(r, ctx, depth - 1);
            let b = random_bounded(r, ctx, depth - 1);
            a.and(b)
        }
        _ => {
            // ∀w ≤ c body: constant bound keeps χ-queries below 8.
            let body = random_bounded(r, ctx + 1, depth - 1);
            Formula::BForall {
                bound: Name::constant(r.gen_range(0..3), 0),
                bound_args: vec![],
                body: Box::new(body),
            }
        }
    }
}

/// Random closed formula with one or two leading quantifiers over a bounded
/// matrix, desugared.
pub fn random_closed(r: &mut ChaCha8Rng, quantifiers: usize, depth: usize) -> Formula {
    let mut phi = random_bounded(r, quantifiers, depth);
    for _ in 0..quantifiers {
        phi = if r.gen_bool(0.5) {
            phi.forall()
        } else {
            // ∃w φ as ¬∀w ¬φ
            phi.not().forall().not()
        };
    }
    phi
}
