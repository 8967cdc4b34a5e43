//! Binary-tree specifications (codes for closed classes) and the Mazur
//! first-hitting index.
//!
//! A `TreeSpec` denotes a downward-closed set of binary strings with total
//! decidable membership. The Mazur construction only ever asks whether a
//! finite set `x` is covered at level `|τ| = max(x)+1`; for the condition
//! trees (`Stab`, `NoConv`, `Pi1Hat`) that question reduces to membership of
//! the characteristic string of `x`, because their acceptance is antitone in
//! the 1-positions of the candidate string.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use crate::names::{parse_growth, GrowthFn, Name, NameExpr};
use crate::sets::{BitString, FinSet, PeriodicSet};
use crate::sexpr::{Sexpr, SexprError};

/// A code for a closed class of subsets of ℕ, given as a binary tree with
/// decidable membership.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TreeSpec {
    /// `τ ∈ T` iff `ones(τ) ⊆ S`.
    Subsets(PeriodicSet),
    /// Explicit set of length-`depth` strings; shorter strings are members
    /// when they extend to an allowed string, longer ones when their
    /// truncation is allowed.
    Cylinder { depth: usize, allowed: Vec<BitString> },
    /// `τ ∈ T` iff the k-th element of `ones(τ)` is `≥ f(k)` for every k.
    DomEnum(GrowthFn),
    /// Stabilizer tree: strings `σ` such that all oracle strings in
    /// `tree(stem, ones(σ) ∪ stem)` of length `≤ min(|σ|, depth_cap)` give
    /// `name` consistent outputs on every argument below `arg_bound` (and on
    /// every table argument when `name` is a table).
    Stab { name: Name, stem: FinSet, arg_bound: u64, depth_cap: u64 },
    /// Closed piece of a Π⁰₁ forcing class: `σ` is accepted when
    /// `ones(σ) ⊆ envelope` and no string of `tree(stem, ones(σ) ∪ stem)` of
    /// length `≤ min(|σ|, depth_cap)` makes the compiled matrix nonzero at
    /// `(y, ū)` for any `ū` below `arg_bound`.
    Pi1Hat {
        matrix: Name,
        stem: FinSet,
        y: u64,
        envelope: PeriodicSet,
        arg_bound: u64,
        depth_cap: u64,
    },
    /// Non-convergence tree: `σ` is accepted when no string of
    /// `tree(stem, ones(σ) ∪ stem)` of length `≤ min(|σ|, depth_cap)` has
    /// `name` defined at the fixed argument tuple.
    NoConv { name: Name, stem: FinSet, args: Vec<u64>, depth_cap: u64 },
}

/// Visits every string of `tree(stem, env)` with length `≤ max_len`, in
/// leftmost (0-first) depth-first order, including the empty string. The
/// callback returns `false` to abort; the function reports whether the walk
/// ran to completion.
pub fn visit_tree_strings(
    stem: &FinSet,
    env: &dyn Fn(u64) -> bool,
    max_len: usize,
    visit: &mut dyn FnMut(&[bool]) -> bool,
) -> bool {
    fn go(
        buf: &mut Vec<bool>,
        stem: &FinSet,
        env: &dyn Fn(u64) -> bool,
        max_len: usize,
        visit: &mut dyn FnMut(&[bool]) -> bool,
    ) -> bool {
        if !visit(buf) {
            return false;
        }
        if buf.len() == max_len {
            return true;
        }
        let i = buf.len() as u64;
        if !stem.contains(i) {
            buf.push(false);
            let ok = go(buf, stem, env, max_len, visit);
            buf.pop();
            if !ok {
                return false;
            }
        }
        if env(i) {
            buf.push(true);
            let ok = go(buf, stem, env, max_len, visit);
            buf.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    let mut buf = Vec::with_capacity(max_len);
    go(&mut buf, stem, env, max_len, visit)
}

fn for_each_tuple(k: usize, bound: u64, f: &mut dyn FnMut(&[u64]) -> bool) -> bool {
    fn go(buf: &mut Vec<u64>, k: usize, bound: u64, f: &mut dyn FnMut(&[u64]) -> bool) -> bool {
        if buf.len() == k {
            return f(buf);
        }
        for v in 0..bound {
            buf.push(v);
            let ok = go(buf, k, bound, f);
            buf.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    let mut buf = Vec::with_capacity(k);
    go(&mut buf, k, bound, f)
}

/// Table patterns that are realizable inside `tree(stem, S ∪ stem)` at some
/// length `≤ len`: the pattern itself must already respect the stem and
/// envelope constraints.
fn pattern_realizable(pattern: &BitString, len: usize, stem: &FinSet, in_env: &dyn Fn(u64) -> bool) -> bool {
    if pattern.len() > len {
        return false;
    }
    for (i, &b) in pattern.bits().iter().enumerate() {
        let i = i as u64;
        if b && !(in_env(i) || stem.contains(i)) {
            return false;
        }
        if !b && stem.contains(i) {
            return false;
        }
    }
    true
}

impl TreeSpec {
    /// Total membership test for a candidate string.
    pub fn accepts(&self, sigma: &BitString) -> bool {
        match self {
            TreeSpec::Subsets(s) => sigma
                .bits()
                .iter()
                .enumerate()
                .all(|(i, &b)| !b || s.contains(i as u64)),
            TreeSpec::Cylinder { depth, allowed } => {
                if sigma.len() <= *depth {
                    allowed.iter().any(|a| sigma.is_prefix_of(a))
                } else {
                    allowed.iter().any(|a| a == &sigma.truncate(*depth))
                }
            }
            TreeSpec::DomEnum(f) => {
                let ones = sigma.ones();
                ones.elements().iter().enumerate().all(|(k, &e)| e >= f.value(k as u64))
            }
            TreeSpec::Stab { name, stem, arg_bound, depth_cap } => {
                let len = sigma.len().min(*depth_cap as usize);
                stab_accepts(name, stem, *arg_bound, &sigma.ones(), len)
            }
            TreeSpec::Pi1Hat { matrix, stem, y, envelope, arg_bound, depth_cap } => {
                let ones = sigma.ones();
                if !envelope.contains_finite(&ones) {
                    return false;
                }
                let len = sigma.len().min(*depth_cap as usize);
                pi1hat_accepts(matrix, stem, *y, *arg_bound, &ones, len)
            }
            TreeSpec::NoConv { name, stem, args, depth_cap } => {
                let len = sigma.len().min(*depth_cap as usize);
                noconv_accepts(name, stem, args, &sigma.ones(), len)
            }
        }
    }

    /// Whether some `τ ∈ T` with `|τ| = max(x)+1` has `x ⊆ ones(τ)`; this is
    /// the tree clause of the Mazur classes `C_i`. `x` must be nonempty.
    pub fn covers(&self, x: &FinSet) -> bool {
        let len = (x.max_element().expect("covers of nonempty set") + 1) as usize;
        match self {
            TreeSpec::Subsets(s) => s.contains_finite(x),
            TreeSpec::Cylinder { depth, allowed } => {
                if len <= *depth {
                    allowed.iter().any(|a| x.iter().all(|e| a.bit(e as usize)))
                } else {
                    // Bits beyond the cylinder depth are free, so only the
                    // part of x below the depth constrains the choice.
                    allowed
                        .iter()
                        .any(|a| x.iter().filter(|&e| (e as usize) < *depth).all(|e| a.bit(e as usize)))
                }
            }
            TreeSpec::DomEnum(f) => {
                x.elements().iter().enumerate().all(|(k, &e)| e >= f.value(k as u64))
            }
            // For the condition trees, acceptance only gets harder as ones
            // are added, so the characteristic string of x is the best
            // candidate among all strings covering x.
            TreeSpec::Stab { name, stem, arg_bound, depth_cap } => {
                stab_accepts(name, stem, *arg_bound, x, len.min(*depth_cap as usize))
            }
            TreeSpec::Pi1Hat { matrix, stem, y, envelope, arg_bound, depth_cap } => {
                envelope.contains_finite(x)
                    && pi1hat_accepts(matrix, stem, *y, *arg_bound, x, len.min(*depth_cap as usize))
            }
            TreeSpec::NoConv { name, stem, args, depth_cap } => {
                noconv_accepts(name, stem, args, x, len.min(*depth_cap as usize))
            }
        }
    }

    pub fn to_sexpr(&self) -> Sexpr {
        match self {
            TreeSpec::Subsets(s) => Sexpr::List(vec![
                Sexpr::Word("subsets".into()),
                Sexpr::parse(&s.to_string()).expect("set prints parseable"),
            ]),
            TreeSpec::Cylinder { depth, allowed } => {
                let mut items =
                    vec![Sexpr::Word("cylinder".into()), Sexpr::Num(*depth as u64)];
                items.extend(allowed.iter().map(|a| Sexpr::Str(a.to_string())));
                Sexpr::List(items)
            }
            TreeSpec::DomEnum(f) => {
                let mut items = vec![Sexpr::Word("domenum".into())];
                items.extend(growth_to_sexprs(f));
                Sexpr::List(items)
            }
            TreeSpec::Stab { name, stem, arg_bound, depth_cap } => Sexpr::List(vec![
                Sexpr::Word("stab".into()),
                name.to_sexpr(),
                Sexpr::parse(&stem.to_string()).expect("finset prints parseable"),
                Sexpr::Num(*arg_bound),
                Sexpr::Num(*depth_cap),
            ]),
            TreeSpec::Pi1Hat { matrix, stem, y, envelope, arg_bound, depth_cap } => Sexpr::List(vec![
                Sexpr::Word("pi1hat".into()),
                matrix.to_sexpr(),
                Sexpr::parse(&stem.to_string()).expect("finset prints parseable"),
                Sexpr::Num(*y),
                Sexpr::parse(&envelope.to_string()).expect("set prints parseable"),
                Sexpr::Num(*arg_bound),
                Sexpr::Num(*depth_cap),
            ]),
            TreeSpec::NoConv { name, stem, args, depth_cap } => {
                let mut arg_items = vec![Sexpr::Word("args".into())];
                arg_items.extend(args.iter().map(|&a| Sexpr::Num(a)));
                Sexpr::List(vec![
                    Sexpr::Word("noconv".into()),
                    name.to_sexpr(),
                    Sexpr::parse(&stem.to_string()).expect("finset prints parseable"),
                    Sexpr::List(arg_items),
                    Sexpr::Num(*depth_cap),
                ])
            }
        }
    }

    pub fn from_sexpr(e: &Sexpr) -> Result<TreeSpec, SexprError> {
        let bad = |msg: &str| SexprError::new(0, format!("{msg} in tree spec `{e}`"));
        let head = e.head().ok_or_else(|| bad("expected a tree spec"))?;
        let items = e.as_list().unwrap();
        match head {
            "subsets" => {
                let s = items.get(1).ok_or_else(|| bad("subsets needs a set"))?;
                Ok(TreeSpec::Subsets(PeriodicSet::from_sexpr(s)?))
            }
            "cylinder" => {
                let depth = items
                    .get(1)
                    .and_then(Sexpr::as_num)
                    .ok_or_else(|| bad("cylinder needs a depth"))? as usize;
                let allowed = items[2..]
                    .iter()
                    .map(|s| {
                        s.as_str()
                            .and_then(BitString::parse)
                            .filter(|b| b.len() == depth)
                            .ok_or_else(|| bad("cylinder strings must be bit strings of the stated depth"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(TreeSpec::Cylinder { depth, allowed })
            }
            "domenum" => {
                if items.len() != 3 {
                    return Err(bad("domenum needs a table and an affine part"));
                }
                Ok(TreeSpec::DomEnum(parse_growth(&items[1], &items[2])?))
            }
            "stab" => {
                if items.len() < 3 {
                    return Err(bad("stab needs a name and a stem"));
                }
                let name = Name::from_sexpr(&items[1])?;
                let stem = FinSet::from_sexpr(&items[2])?;
                let arg_bound = items.get(3).and_then(Sexpr::as_num).unwrap_or(4);
                let depth_cap = items.get(4).and_then(Sexpr::as_num).unwrap_or(8);
                Ok(TreeSpec::Stab { name, stem, arg_bound, depth_cap })
            }
            "pi1hat" => {
                if items.len() < 5 {
                    return Err(bad("pi1hat needs a matrix, stem, index, and envelope"));
                }
                let matrix = Name::from_sexpr(&items[1])?;
                if matrix.arity() == 0 {
                    return Err(bad("pi1hat matrix must take the family index"));
                }
                let stem = FinSet::from_sexpr(&items[2])?;
                let y = items[3].as_num().ok_or_else(|| bad("pi1hat index must be a number"))?;
                let envelope = PeriodicSet::from_sexpr(&items[4])?;
                let arg_bound = items.get(5).and_then(Sexpr::as_num).unwrap_or(4);
                let depth_cap = items.get(6).and_then(Sexpr::as_num).unwrap_or(8);
                Ok(TreeSpec::Pi1Hat { matrix, stem, y, envelope, arg_bound, depth_cap })
            }
            "noconv" => {
                if items.len() != 4 && items.len() != 5 {
                    return Err(bad("noconv needs a name, a stem, and an argument tuple"));
                }
                let name = Name::from_sexpr(&items[1])?;
                let stem = FinSet::from_sexpr(&items[2])?;
                let arg_list = items[3]
                    .as_list()
                    .filter(|l| l.first().and_then(Sexpr::as_word) == Some("args"))
                    .ok_or_else(|| bad("noconv arguments must be (args ...)"))?;
                let args = arg_list[1..]
                    .iter()
                    .map(|a| a.as_num().ok_or_else(|| bad("noconv arguments must be numbers")))
                    .collect::<Result<Vec<_>, _>>()?;
                if args.len() != name.arity() {
                    return Err(bad("noconv argument tuple must match the name arity"));
                }
                let depth_cap = items.get(4).and_then(Sexpr::as_num).unwrap_or(8);
                Ok(TreeSpec::NoConv { name, stem, args, depth_cap })
            }
            _ => Err(bad("unknown tree spec")),
        }
    }
}

pub(crate) fn growth_to_sexprs(f: &GrowthFn) -> Vec<Sexpr> {
    let mut table = vec![Sexpr::Word("table".into())];
    for &(k, v) in &f.table {
        table.push(Sexpr::Num(k));
        table.push(Sexpr::Num(v));
    }
    vec![
        Sexpr::List(table),
        Sexpr::List(vec![
            Sexpr::Word("affine".into()),
            Sexpr::Num(f.slope),
            Sexpr::Num(f.offset),
        ]),
    ]
}

fn stab_accepts(name: &Name, stem: &FinSet, arg_bound: u64, ones: &FinSet, len: usize) -> bool {
    let in_env = |i: u64| ones.contains(i) || stem.contains(i);
    if let NameExpr::Table { entries } = name.expr() {
        // Per argument, all realizable patterns must agree on the value.
        let mut seen: HashMap<u64, u64> = HashMap::new();
        for (pat, x, y) in entries {
            if pattern_realizable(pat, len, stem, &|i| ones.contains(i)) {
                match seen.get(x) {
                    Some(&prev) if prev != *y => return false,
                    Some(_) => {}
                    None => {
                        seen.insert(*x, *y);
                    }
                }
            }
        }
        return true;
    }
    let arity = name.arity();
    let mut seen: HashMap<Vec<u64>, u64> = HashMap::new();
    let mut consistent = true;
    visit_tree_strings(stem, &in_env, len, &mut |bits| {
        let tau = BitString::from_bits(bits.to_vec());
        for_each_tuple(arity, arg_bound, &mut |args| {
            if let Some(y) = name.query(&tau, args) {
                match seen.get(args) {
                    Some(&prev) if prev != y => {
                        consistent = false;
                        return false;
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(args.to_vec(), y);
                    }
                }
            }
            true
        })
    });
    consistent
}

fn pi1hat_accepts(
    matrix: &Name,
    stem: &FinSet,
    y: u64,
    arg_bound: u64,
    ones: &FinSet,
    len: usize,
) -> bool {
    let in_env = |i: u64| ones.contains(i) || stem.contains(i);
    let free = matrix.arity() - 1;
    let mut ok = true;
    visit_tree_strings(stem, &in_env, len, &mut |bits| {
        let tau = BitString::from_bits(bits.to_vec());
        for_each_tuple(free, arg_bound, &mut |us| {
            let mut args = Vec::with_capacity(free + 1);
            args.push(y);
            args.extend_from_slice(us);
            if let Some(z) = matrix.query(&tau, &args) {
                if z != 0 {
                    ok = false;
                    return false;
                }
            }
            true
        })
    });
    ok
}

fn noconv_accepts(name: &Name, stem: &FinSet, args: &[u64], ones: &FinSet, len: usize) -> bool {
    if let NameExpr::Table { entries } = name.expr() {
        return !entries.iter().any(|(pat, x, _)| {
            *x == args[0] && pattern_realizable(pat, len, stem, &|i| ones.contains(i))
        });
    }
    let in_env = |i: u64| ones.contains(i) || stem.contains(i);
    let mut undefined_everywhere = true;
    visit_tree_strings(stem, &in_env, len, &mut |bits| {
        let tau = BitString::from_bits(bits.to_vec());
        if name.query(&tau, args).is_some() {
            undefined_everywhere = false;
            return false;
        }
        true
    });
    undefined_everywhere
}

#[allow(clippy::mutable_key_type)] // FinSet has no interior mutability
static COVERS_CACHE: Lazy<Mutex<HashMap<(usize, FinSet, usize), (bool, Arc<TreeSpec>)>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Memoized covering test for the condition trees. Their internal sweep only
/// sees positions below the depth cap, so the result is a function of
/// `x ∩ [0, cap)` and the capped length — the cache key collapses all sets
/// sharing that signature. The envelope clause of `Pi1Hat` depends on all of
/// `x` and is checked outside the cache.
fn covers_cached(spec: &Arc<TreeSpec>, x: &FinSet) -> bool {
    let cap = match spec.as_ref() {
        // Cheap kinds are computed directly.
        TreeSpec::Subsets(_) | TreeSpec::Cylinder { .. } | TreeSpec::DomEnum(_) => {
            return spec.covers(x)
        }
        TreeSpec::Stab { depth_cap, .. }
        | TreeSpec::Pi1Hat { depth_cap, .. }
        | TreeSpec::NoConv { depth_cap, .. } => *depth_cap,
    };
    if let TreeSpec::Pi1Hat { envelope, .. } = spec.as_ref() {
        if !envelope.contains_finite(x) {
            return false;
        }
    }
    let len = ((x.max_element().expect("covers of nonempty set") + 1) as usize).min(cap as usize);
    let x_low: FinSet = x.iter().take_while(|&e| e < cap).collect();
    let key = (Arc::as_ptr(spec) as usize, x_low.clone(), len);
    if let Some((v, _)) = COVERS_CACHE.lock().unwrap().get(&key) {
        return *v;
    }
    let v = match spec.as_ref() {
        TreeSpec::Stab { name, stem, arg_bound, .. } => {
            stab_accepts(name, stem, *arg_bound, &x_low, len)
        }
        TreeSpec::Pi1Hat { matrix, stem, y, arg_bound, .. } => {
            pi1hat_accepts(matrix, stem, *y, *arg_bound, &x_low, len)
        }
        TreeSpec::NoConv { name, stem, args, .. } => noconv_accepts(name, stem, args, &x_low, len),
        _ => unreachable!(),
    };
    // The kept Arc pins the allocation so the pointer key can never be
    // reused by a different spec.
    COVERS_CACHE.lock().unwrap().insert(key, (v, spec.clone()));
    v
}

/// The Mazur first-hitting index `θ(x)`: the least `i` with `x ∈ C_i`, where
/// `C_0 = {∅}` and `C_i` accepts `x` when `max(x) < i` or some tree among the
/// first `i` covers `x` at level `max(x)+1`.
pub fn mazur_theta(family: &[Arc<TreeSpec>], x: &FinSet) -> u64 {
    let Some(max) = x.max_element() else {
        return 0;
    };
    let cap = max + 1;
    for (j, spec) in family.iter().enumerate() {
        if (j as u64) + 1 >= cap {
            break;
        }
        if covers_cached(spec, x) {
            return (j as u64) + 1;
        }
    }
    cap
}
