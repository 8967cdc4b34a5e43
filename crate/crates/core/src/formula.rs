//! The forcing-language AST: atomic name equations, negation, conjunction,
//! unbounded and bounded universal quantification.
//!
//! Variables are de Bruijn indices internally (index 0 is the innermost
//! binder) and named words in the surface grammar. Sugar (`or`, `implies`,
//! `iff`, `exists`) desugars into the four core connectives by the standard
//! rewrites. Classical evaluation is three-valued and budgeted: a verdict of
//! `True`/`False` never flips when budgets increase, only `Unknown` resolves.

use std::fmt;

use crate::names::Name;
use crate::sets::{pair, BitString, PeriodicSet};
use crate::sexpr::{Sexpr, SexprError};

/// A variable or literal index inside a slice chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Index {
    Var(usize),
    Const(u64),
}

/// One step of a witness-name slice chain, outermost first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ChainStep {
    Even,
    Odd,
    Shift,
    Head,
    PairFix(Index),
}

/// A nullary application of a (possibly still abstract) unary witness name
/// through a slice chain. `base = None` is the template hole.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HoleChain {
    pub steps: Vec<ChainStep>,
    pub base: Option<Name>,
}

impl HoleChain {
    pub fn hole() -> Self {
        HoleChain { steps: vec![ChainStep::Head], base: None }
    }

    /// Prepends a transformation at the inner end (closest to the hole):
    /// substituting `W := λt W'(f(t))` into an occurrence rewrites the chain
    /// by appending `f`.
    pub fn precompose(&self, step: ChainStep) -> Self {
        let mut steps = self.steps.clone();
        steps.push(step);
        HoleChain { steps, base: self.base.clone() }
    }

    /// Fills the hole with a concrete unary name.
    pub fn instantiate(&self, w: &Name) -> Self {
        match &self.base {
            Some(_) => self.clone(),
            None => HoleChain { steps: self.steps.clone(), base: Some(w.clone()) },
        }
    }

    /// Evaluates the chain on an oracle prefix under an environment. The
    /// outermost step must be `Head`.
    pub fn value(&self, tau: &BitString, env: &[u64]) -> Option<u64> {
        let base = self.base.as_ref().expect("cannot evaluate a template hole");
        debug_assert!(matches!(self.steps.first(), Some(ChainStep::Head)));
        let mut t = 0u64;
        for step in &self.steps[1..] {
            t = match step {
                ChainStep::Even => 2 * t,
                ChainStep::Odd => 2 * t + 1,
                ChainStep::Shift => t + 1,
                ChainStep::PairFix(ix) => pair(index_value(*ix, env), t),
                ChainStep::Head => unreachable!("head only occurs outermost"),
            };
        }
        base.query(tau, &[t])
    }
}

fn index_value(ix: Index, env: &[u64]) -> u64 {
    match ix {
        Index::Var(i) => env[env.len() - 1 - i],
        Index::Const(c) => c,
    }
}

/// An argument position of an atom or a quantifier bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Arg {
    Var(usize),
    Const(u64),
    Chain(HoleChain),
}

/// Core formulas of the forcing language.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { left: Name, left_args: Vec<Arg>, right: Name, right_args: Vec<Arg> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Forall(Box<Formula>),
    BForall { bound: Name, bound_args: Vec<Arg>, body: Box<Formula> },
}

/// Surface formulas: core forms plus the four abbreviations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Surface {
    Atom { left: Name, left_args: Vec<Arg>, right: Name, right_args: Vec<Arg> },
    Not(Box<Surface>),
    And(Box<Surface>, Box<Surface>),
    Or(Box<Surface>, Box<Surface>),
    Implies(Box<Surface>, Box<Surface>),
    Iff(Box<Surface>, Box<Surface>),
    Forall(Box<Surface>),
    Exists(Box<Surface>),
    BForall { bound: Name, bound_args: Vec<Arg>, body: Box<Surface> },
}

/// Rewrites sugar into the core connectives:
/// `φ ∨ ψ ↦ ¬(¬φ ∧ ¬ψ)`, `φ → ψ ↦ ¬(φ ∧ ¬ψ)`,
/// `φ ↔ ψ ↦ (φ → ψ) ∧ (ψ → φ)`, `∃v φ ↦ ¬∀v ¬φ`.
pub fn desugar(s: &Surface) -> Formula {
    match s {
        Surface::Atom { left, left_args, right, right_args } => Formula::Atom {
            left: left.clone(),
            left_args: left_args.clone(),
            right: right.clone(),
            right_args: right_args.clone(),
        },
        Surface::Not(a) => Formula::Not(Box::new(desugar(a))),
        Surface::And(a, b) => Formula::And(Box::new(desugar(a)), Box::new(desugar(b))),
        Surface::Or(a, b) => Formula::Not(Box::new(Formula::And(
            Box::new(Formula::Not(Box::new(desugar(a)))),
            Box::new(Formula::Not(Box::new(desugar(b)))),
        ))),
        Surface::Implies(a, b) => Formula::Not(Box::new(Formula::And(
            Box::new(desugar(a)),
            Box::new(Formula::Not(Box::new(desugar(b)))),
        ))),
        Surface::Iff(a, b) => desugar(&Surface::And(
            Box::new(Surface::Implies(a.clone(), b.clone())),
            Box::new(Surface::Implies(b.clone(), a.clone())),
        )),
        Surface::Forall(a) => Formula::Forall(Box::new(desugar(a))),
        Surface::Exists(a) => Formula::Not(Box::new(Formula::Forall(Box::new(Formula::Not(
            Box::new(desugar(a)),
        ))))),
        Surface::BForall { bound, bound_args, body } => Formula::BForall {
            bound: bound.clone(),
            bound_args: bound_args.clone(),
            body: Box::new(desugar(body)),
        },
    }
}

/// Syntactic class of a desugared formula; conservative (`Other` rather than
/// a guess) outside the prenex shapes the witnessing machinery consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SyntClass {
    Bounded,
    Pi01,
    Sigma01,
    Pi02,
    Sigma02,
    Pi03,
    Other,
}

pub fn classify(phi: &Formula) -> SyntClass {
    if is_bounded(phi) {
        return SyntClass::Bounded;
    }
    match phi {
        Formula::Atom { .. } => SyntClass::Bounded,
        Formula::And(..) | Formula::BForall { .. } => SyntClass::Other,
        Formula::Forall(body) => match classify(body) {
            SyntClass::Bounded | SyntClass::Pi01 => SyntClass::Pi01,
            SyntClass::Sigma01 | SyntClass::Pi02 => SyntClass::Pi02,
            SyntClass::Sigma02 | SyntClass::Pi03 => SyntClass::Pi03,
            _ => SyntClass::Other,
        },
        Formula::Not(body) => match classify(body) {
            SyntClass::Bounded => SyntClass::Bounded,
            SyntClass::Pi01 => SyntClass::Sigma01,
            SyntClass::Sigma01 => SyntClass::Pi01,
            SyntClass::Pi02 => SyntClass::Sigma02,
            SyntClass::Sigma02 => SyntClass::Pi02,
            _ => SyntClass::Other,
        },
    }
}

/// No unbounded universal quantifier anywhere.
pub fn is_bounded(phi: &Formula) -> bool {
    match phi {
        Formula::Atom { .. } => true,
        Formula::Not(a) => is_bounded(a),
        Formula::And(a, b) => is_bounded(a) && is_bounded(b),
        Formula::Forall(_) => false,
        Formula::BForall { body, .. } => is_bounded(body),
    }
}

impl Formula {
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn forall(self) -> Formula {
        Formula::Forall(Box::new(self))
    }

    /// Number of distinct free variable slots (indices beyond the binder
    /// depth), equivalently one past the largest free level.
    pub fn free_count(&self) -> usize {
        fn go(phi: &Formula, depth: usize, max_free: &mut usize) {
            let arg = |a: &Arg, depth: usize, max_free: &mut usize| {
                let mut touch = |i: usize| {
                    if i >= depth {
                        *max_free = (*max_free).max(i - depth + 1);
                    }
                };
                match a {
                    Arg::Var(i) => touch(*i),
                    Arg::Const(_) => {}
                    Arg::Chain(c) => {
                        for s in &c.steps {
                            if let ChainStep::PairFix(Index::Var(i)) = s {
                                touch(*i);
                            }
                        }
                    }
                }
            };
            match phi {
                Formula::Atom { left_args, right_args, .. } => {
                    for a in left_args.iter().chain(right_args) {
                        arg(a, depth, max_free);
                    }
                }
                Formula::Not(a) => go(a, depth, max_free),
                Formula::And(a, b) => {
                    go(a, depth, max_free);
                    go(b, depth, max_free);
                }
                Formula::Forall(a) => go(a, depth + 1, max_free),
                Formula::BForall { bound_args, body, .. } => {
                    for a in bound_args {
                        arg(a, depth, max_free);
                    }
                    go(body, depth + 1, max_free);
                }
            }
        }
        let mut max_free = 0;
        go(self, 0, &mut max_free);
        max_free
    }

    pub fn is_closed(&self) -> bool {
        self.free_count() == 0
    }

    /// Whether the variable bound at relative depth 0 of `self`'s hole (i.e.
    /// de Bruijn index `target` at top level) occurs.
    pub fn uses_var(&self, target: usize) -> bool {
        fn arg_uses(a: &Arg, target: usize) -> bool {
            match a {
                Arg::Var(i) => *i == target,
                Arg::Const(_) => false,
                Arg::Chain(c) => c
                    .steps
                    .iter()
                    .any(|s| matches!(s, ChainStep::PairFix(Index::Var(i)) if *i == target)),
            }
        }
        match self {
            Formula::Atom { left_args, right_args, .. } => {
                left_args.iter().chain(right_args).any(|a| arg_uses(a, target))
            }
            Formula::Not(a) => a.uses_var(target),
            Formula::And(a, b) => a.uses_var(target) || b.uses_var(target),
            Formula::Forall(a) => a.uses_var(target + 1),
            Formula::BForall { bound_args, body, .. } => {
                bound_args.iter().any(|a| arg_uses(a, target)) || body.uses_var(target + 1)
            }
        }
    }

    /// Substitutes numerals for the free variable slots.
    pub fn instantiate(&self, values: &[u64]) -> Formula {
        fn subst_arg(a: &Arg, depth: usize, values: &[u64]) -> Arg {
            match a {
                Arg::Var(i) if *i >= depth => Arg::Const(values[*i - depth]),
                Arg::Chain(c) => {
                    let steps = c
                        .steps
                        .iter()
                        .map(|s| match s {
                            ChainStep::PairFix(Index::Var(i)) if *i >= depth => {
                                ChainStep::PairFix(Index::Const(values[*i - depth]))
                            }
                            other => other.clone(),
                        })
                        .collect();
                    Arg::Chain(HoleChain { steps, base: c.base.clone() })
                }
                other => other.clone(),
            }
        }
        fn go(phi: &Formula, depth: usize, values: &[u64]) -> Formula {
            match phi {
                Formula::Atom { left, left_args, right, right_args } => Formula::Atom {
                    left: left.clone(),
                    left_args: left_args.iter().map(|a| subst_arg(a, depth, values)).collect(),
                    right: right.clone(),
                    right_args: right_args.iter().map(|a| subst_arg(a, depth, values)).collect(),
                },
                Formula::Not(a) => Formula::Not(Box::new(go(a, depth, values))),
                Formula::And(a, b) => {
                    Formula::And(Box::new(go(a, depth, values)), Box::new(go(b, depth, values)))
                }
                Formula::Forall(a) => Formula::Forall(Box::new(go(a, depth + 1, values))),
                Formula::BForall { bound, bound_args, body } => Formula::BForall {
                    bound: bound.clone(),
                    bound_args: bound_args.iter().map(|a| subst_arg(a, depth, values)).collect(),
                    body: Box::new(go(body, depth + 1, values)),
                },
            }
        }
        go(self, 0, values)
    }

    /// Substitutes a numeral for one free slot, shifting later slots down.
    pub fn instantiate_slot(&self, slot: usize, value: u64) -> Formula {
        fn subst_ix(i: usize, depth: usize, slot: usize) -> Option<usize> {
            if i < depth + slot {
                Some(i)
            } else if i == depth + slot {
                None
            } else {
                Some(i - 1)
            }
        }
        fn subst_arg(a: &Arg, depth: usize, slot: usize, value: u64) -> Arg {
            match a {
                Arg::Var(i) => match subst_ix(*i, depth, slot) {
                    Some(j) => Arg::Var(j),
                    None => Arg::Const(value),
                },
                Arg::Chain(c) => {
                    let steps = c
                        .steps
                        .iter()
                        .map(|s| match s {
                            ChainStep::PairFix(Index::Var(i)) => {
                                match subst_ix(*i, depth, slot) {
                                    Some(j) => ChainStep::PairFix(Index::Var(j)),
                                    None => ChainStep::PairFix(Index::Const(value)),
                                }
                            }
                            other => other.clone(),
                        })
                        .collect();
                    Arg::Chain(HoleChain { steps, base: c.base.clone() })
                }
                other => other.clone(),
            }
        }
        fn go(phi: &Formula, depth: usize, slot: usize, value: u64) -> Formula {
            match phi {
                Formula::Atom { left, left_args, right, right_args } => Formula::Atom {
                    left: left.clone(),
                    left_args: left_args.iter().map(|a| subst_arg(a, depth, slot, value)).collect(),
                    right: right.clone(),
                    right_args: right_args.iter().map(|a| subst_arg(a, depth, slot, value)).collect(),
                },
                Formula::Not(a) => Formula::Not(Box::new(go(a, depth, slot, value))),
                Formula::And(a, b) => Formula::And(
                    Box::new(go(a, depth, slot, value)),
                    Box::new(go(b, depth, slot, value)),
                ),
                Formula::Forall(a) => Formula::Forall(Box::new(go(a, depth + 1, slot, value))),
                Formula::BForall { bound, bound_args, body } => Formula::BForall {
                    bound: bound.clone(),
                    bound_args: bound_args
                        .iter()
                        .map(|a| subst_arg(a, depth, slot, value))
                        .collect(),
                    body: Box::new(go(body, depth + 1, slot, value)),
                },
            }
        }
        go(self, 0, slot, value)
    }

    /// Fills every hole chain with the given unary witness name.
    pub fn fill_hole(&self, w: &Name) -> Formula {
        fn fill_arg(a: &Arg, w: &Name) -> Arg {
            match a {
                Arg::Chain(c) => Arg::Chain(c.instantiate(w)),
                other => other.clone(),
            }
        }
        match self {
            Formula::Atom { left, left_args, right, right_args } => Formula::Atom {
                left: left.clone(),
                left_args: left_args.iter().map(|a| fill_arg(a, w)).collect(),
                right: right.clone(),
                right_args: right_args.iter().map(|a| fill_arg(a, w)).collect(),
            },
            Formula::Not(a) => Formula::Not(Box::new(a.fill_hole(w))),
            Formula::And(a, b) => Formula::And(Box::new(a.fill_hole(w)), Box::new(b.fill_hole(w))),
            Formula::Forall(a) => Formula::Forall(Box::new(a.fill_hole(w))),
            Formula::BForall { bound, bound_args, body } => Formula::BForall {
                bound: bound.clone(),
                bound_args: bound_args.iter().map(|a| fill_arg(a, w)).collect(),
                body: Box::new(body.fill_hole(w)),
            },
        }
    }
}

/// Three-valued verdict of the budgeted classical evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn negate(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

/// Budgeted classical evaluation over the characteristic function of `g`.
///
/// Atoms query names on the prefix `χ_g ↾ oracle_depth`; unbounded universal
/// quantifiers scan arguments below `quantifier_bound` for counterexamples
/// and answer `True` only when the body provably ignores the variable.
pub fn classical_eval(
    phi: &Formula,
    g: &PeriodicSet,
    quantifier_bound: u64,
    oracle_depth: u64,
) -> Truth {
    let tau = BitString::from_fn(oracle_depth as usize, |i| g.contains(i as u64));
    eval_in(phi, &tau, &mut Vec::new(), quantifier_bound)
}

/// Evaluation against an explicit oracle prefix instead of a set.
pub fn eval_on_oracle(phi: &Formula, tau: &BitString, quantifier_bound: u64) -> Truth {
    eval_in(phi, tau, &mut Vec::new(), quantifier_bound)
}

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

fn eval_in(phi: &Formula, tau: &BitString, env: &mut Vec<u64>, b: u64) -> Truth {
    match phi {
        Formula::Atom { left, left_args, right, right_args } => {
            match (name_value(left, left_args, tau, env), name_value(right, right_args, tau, env)) {
                (Some(l), Some(r)) => {
                    if l == r {
                        Truth::True
                    } else {
                        Truth::False
                    }
                }
                _ => Truth::Unknown,
            }
        }
        Formula::Not(a) => eval_in(a, tau, env, b).negate(),
        Formula::And(p, q) => match (eval_in(p, tau, env, b), eval_in(q, tau, env, b)) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        },
        Formula::BForall { bound, bound_args, body } => {
            let Some(limit) = name_value(bound, bound_args, tau, env) else {
                return Truth::Unknown;
            };
            let mut result = Truth::True;
            for w in 0..=limit {
                env.push(w);
                let t = eval_in(body, tau, env, b);
                env.pop();
                match t {
                    Truth::False => return Truth::False,
                    Truth::Unknown => result = Truth::Unknown,
                    Truth::True => {}
                }
            }
            result
        }
        Formula::Forall(body) => {
            if !body.uses_var(0) {
                env.push(0);
                let t = eval_in(body, tau, env, b);
                env.pop();
                return t;
            }
            for w in 0..b {
                env.push(w);
                let t = eval_in(body, tau, env, b);
                env.pop();
                if t == Truth::False {
                    return Truth::False;
                }
            }
            // An unbounded universal is never asserted from a finite scan.
            Truth::Unknown
        }
    }
}

// ---------------------------------------------------------------------------
// Surface grammar
// ---------------------------------------------------------------------------

/// Parser state: binder names from outermost to innermost, plus free
/// variables in order of first appearance.
struct Scope {
    binders: Vec<String>,
    free: Vec<String>,
}

impl Scope {
    fn resolve(&mut self, word: &str) -> usize {
        if let Some(pos) = self.binders.iter().rposition(|b| b == word) {
            return self.binders.len() - 1 - pos;
        }
        let slot = if let Some(pos) = self.free.iter().position(|f| f == word) {
            pos
        } else {
            self.free.push(word.to_string());
            self.free.len() - 1
        };
        self.binders.len() + slot
    }
}

impl Surface {
    /// Parses the surface grammar. Returns the formula together with the
    /// names of its free variables in order of first appearance.
    pub fn parse(text: &str) -> Result<(Surface, Vec<String>), SexprError> {
        let e = Sexpr::parse(text)?;
        let mut scope = Scope { binders: Vec::new(), free: Vec::new() };
        let s = Surface::from_sexpr(&e, &mut scope)?;
        Ok((s, scope.free))
    }

    fn from_sexpr(e: &Sexpr, scope: &mut Scope) -> Result<Surface, SexprError> {
        let bad = |msg: &str| SexprError::new(0, format!("{msg} in formula `{e}`"));
        let head = e.head().ok_or_else(|| bad("expected a formula form"))?;
        let items = e.as_list().unwrap();
        let unary = |items: &[Sexpr], scope: &mut Scope| -> Result<Box<Surface>, SexprError> {
            if items.len() != 2 {
                return Err(bad("connective arity"));
            }
            Ok(Box::new(Surface::from_sexpr(&items[1], scope)?))
        };
        match head {
            "atom" => {
                if items.len() != 5 {
                    return Err(bad("atom needs two names with argument lists"));
                }
                let left = Name::from_sexpr(&items[1])?;
                let left_args = parse_args(&items[2], scope)?;
                let right = Name::from_sexpr(&items[3])?;
                let right_args = parse_args(&items[4], scope)?;
                if left.arity() != left_args.len() {
                    return Err(SexprError::new(
                        0,
                        format!(
                            "name `{}` has arity {} but is applied to {} arguments",
                            items[1],
                            left.arity(),
                            left_args.len()
                        ),
                    ));
                }
                if right.arity() != right_args.len() {
                    return Err(SexprError::new(
                        0,
                        format!(
                            "name `{}` has arity {} but is applied to {} arguments",
                            items[3],
                            right.arity(),
                            right_args.len()
                        ),
                    ));
                }
                Ok(Surface::Atom { left, left_args, right, right_args })
            }
            "not" => Ok(Surface::Not(unary(items, scope)?)),
            "and" | "or" | "implies" | "iff" => {
                if items.len() != 3 {
                    return Err(bad("binary connective arity"));
                }
                let a = Box::new(Surface::from_sexpr(&items[1], scope)?);
                let b = Box::new(Surface::from_sexpr(&items[2], scope)?);
                Ok(match head {
                    "and" => Surface::And(a, b),
                    "or" => Surface::Or(a, b),
                    "implies" => Surface::Implies(a, b),
                    _ => Surface::Iff(a, b),
                })
            }
            "forall" | "exists" => {
                if items.len() != 3 {
                    return Err(bad("quantifier needs a variable and a body"));
                }
                let var = items[1].as_word().ok_or_else(|| bad("quantifier variable must be a word"))?;
                scope.binders.push(var.to_string());
                let body = Box::new(Surface::from_sexpr(&items[2], scope)?);
                scope.binders.pop();
                Ok(if head == "forall" { Surface::Forall(body) } else { Surface::Exists(body) })
            }
            "ball" => {
                // (ball v F (args ...) body) — bounded universal ∀v ≤ F(args).
                if items.len() != 5 {
                    return Err(bad("ball needs a variable, bound name, bound args, and body"));
                }
                let var = items[1].as_word().ok_or_else(|| bad("ball variable must be a word"))?;
                let bound = Name::from_sexpr(&items[2])?;
                let bound_args = parse_args(&items[3], scope)?;
                if bound.arity() != bound_args.len() {
                    return Err(bad("bound name arity does not match its arguments"));
                }
                scope.binders.push(var.to_string());
                let body = Box::new(Surface::from_sexpr(&items[4], scope)?);
                scope.binders.pop();
                Ok(Surface::BForall { bound, bound_args, body })
            }
            _ => Err(bad("unknown formula form")),
        }
    }
}

fn parse_args(e: &Sexpr, scope: &mut Scope) -> Result<Vec<Arg>, SexprError> {
    let items = e
        .as_list()
        .ok_or_else(|| SexprError::new(0, format!("argument list expected, got `{e}`")))?;
    items.iter().map(|item| parse_arg(item, scope)).collect()
}

fn parse_arg(e: &Sexpr, scope: &mut Scope) -> Result<Arg, SexprError> {
    match e {
        Sexpr::Num(n) => Ok(Arg::Const(*n)),
        Sexpr::Word(w) => Ok(Arg::Var(scope.resolve(w))),
        Sexpr::List(_) => {
            let (steps, base) = parse_chain(e, scope)?;
            Ok(Arg::Chain(HoleChain { steps, base }))
        }
        Sexpr::Str(_) => Err(SexprError::new(0, "strings are not formula arguments")),
    }
}

/// Chains print as nested slice forms around `(hole)` or a concrete name.
fn parse_chain(e: &Sexpr, scope: &mut Scope) -> Result<(Vec<ChainStep>, Option<Name>), SexprError> {
    let bad = |msg: &str| SexprError::new(0, format!("{msg} in chain `{e}`"));
    match e.head() {
        Some("hole") => Ok((Vec::new(), None)),
        Some("slice") => {
            let items = e.as_list().unwrap();
            if items.len() != 3 {
                return Err(bad("slice needs a kind and an inner chain"));
            }
            let step = match &items[1] {
                Sexpr::Word(w) => match w.as_str() {
                    "even" => ChainStep::Even,
                    "odd" => ChainStep::Odd,
                    "shift" => ChainStep::Shift,
                    "head" => ChainStep::Head,
                    _ => return Err(bad("unknown slice kind")),
                },
                form if form.head() == Some("pairfix") => {
                    let arg = form.as_list().and_then(|l| l.get(1)).ok_or_else(|| bad("pairfix index"))?;
                    let ix = match arg {
                        Sexpr::Num(n) => Index::Const(*n),
                        Sexpr::Word(w) => Index::Var(scope.resolve(w)),
                        _ => return Err(bad("pairfix index must be a variable or number")),
                    };
                    ChainStep::PairFix(ix)
                }
                _ => return Err(bad("unknown slice kind")),
            };
            let (mut steps, base) = parse_chain(&items[2], scope)?;
            steps.insert(0, step);
            Ok((steps, base))
        }
        _ => {
            let name = Name::from_sexpr(e)?;
            if name.arity() != 0 {
                return Err(bad("argument names must be nullary"));
            }
            Ok((Vec::new(), Some(name)))
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn var_name(index: usize, depth: usize) -> String {
    if index < depth {
        format!("v{}", depth - 1 - index)
    } else {
        format!("u{}", index - depth)
    }
}

fn print_arg(a: &Arg, depth: usize) -> Sexpr {
    match a {
        Arg::Var(i) => Sexpr::Word(var_name(*i, depth)),
        Arg::Const(c) => Sexpr::Num(*c),
        Arg::Chain(chain) => print_chain(&chain.steps, &chain.base, depth),
    }
}

fn print_chain(steps: &[ChainStep], base: &Option<Name>, depth: usize) -> Sexpr {
    match steps.split_first() {
        None => match base {
            None => Sexpr::List(vec![Sexpr::Word("hole".into())]),
            Some(n) => n.to_sexpr(),
        },
        Some((step, rest)) => {
            let kind = match step {
                ChainStep::Even => Sexpr::Word("even".into()),
                ChainStep::Odd => Sexpr::Word("odd".into()),
                ChainStep::Shift => Sexpr::Word("shift".into()),
                ChainStep::Head => Sexpr::Word("head".into()),
                ChainStep::PairFix(Index::Const(c)) => {
                    Sexpr::List(vec![Sexpr::Word("pairfix".into()), Sexpr::Num(*c)])
                }
                ChainStep::PairFix(Index::Var(i)) => Sexpr::List(vec![
                    Sexpr::Word("pairfix".into()),
                    Sexpr::Word(var_name(*i, depth)),
                ]),
            };
            Sexpr::List(vec![Sexpr::Word("slice".into()), kind, print_chain(rest, base, depth)])
        }
    }
}

impl Formula {
    pub fn to_sexpr(&self) -> Sexpr {
        self.to_sexpr_at(0)
    }

    fn to_sexpr_at(&self, depth: usize) -> Sexpr {
        match self {
            Formula::Atom { left, left_args, right, right_args } => Sexpr::List(vec![
                Sexpr::Word("atom".into()),
                left.to_sexpr(),
                Sexpr::List(left_args.iter().map(|a| print_arg(a, depth)).collect()),
                right.to_sexpr(),
                Sexpr::List(right_args.iter().map(|a| print_arg(a, depth)).collect()),
            ]),
            Formula::Not(a) => {
                Sexpr::List(vec![Sexpr::Word("not".into()), a.to_sexpr_at(depth)])
            }
            Formula::And(a, b) => Sexpr::List(vec![
                Sexpr::Word("and".into()),
                a.to_sexpr_at(depth),
                b.to_sexpr_at(depth),
            ]),
            Formula::Forall(a) => Sexpr::List(vec![
                Sexpr::Word("forall".into()),
                Sexpr::Word(format!("v{depth}")),
                a.to_sexpr_at(depth + 1),
            ]),
            Formula::BForall { bound, bound_args, body } => Sexpr::List(vec![
                Sexpr::Word("ball".into()),
                Sexpr::Word(format!("v{depth}")),
                bound.to_sexpr(),
                Sexpr::List(bound_args.iter().map(|a| print_arg(a, depth)).collect()),
                body.to_sexpr_at(depth + 1),
            ]),
        }
    }

    pub fn print(&self) -> String {
        self.to_sexpr().to_string()
    }

    /// Parses and desugars; free variables are reported in order of first
    /// appearance.
    pub fn parse_family(text: &str) -> Result<(Formula, Vec<String>), SexprError> {
        let (s, free) = Surface::parse(text)?;
        Ok((desugar(&s), free))
    }

    /// Parses a closed formula.
    pub fn parse(text: &str) -> Result<Formula, SexprError> {
        let (phi, free) = Formula::parse_family(text)?;
        if !free.is_empty() {
            return Err(SexprError::new(
                0,
                format!("formula has free variables: {}", free.join(", ")),
            ));
        }
        Ok(phi)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print())
    }
}
