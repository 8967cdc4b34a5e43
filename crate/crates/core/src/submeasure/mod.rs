//! Integer-valued lower-semicontinuous submeasures as expression trees.
//!
//! A submeasure is determined by its values on finite sets; the expression
//! constructors preserve the three axioms (`μ(∅) = 0`, monotonicity,
//! subadditivity) by construction:
//!
//! - `CARD` — cardinality; `CONST(n)` — `n` on every nonempty set.
//! - `JOIN` — pointwise max; `MEET` — `min { μ(y) + ν(z) : x = y ∪ z }`,
//!   computed by subset enumeration under a DP budget.
//! - `MAZUR(family)` — the first-hitting-index construction over a family of
//!   binary trees, evaluated by partition minimization.
//! - `IMEET` — the truncated countable meet `⋀_j (μ_j ∨ j)`.
//! - `DOM(F)` — the Mazur submeasure of the class of sets whose enumeration
//!   function dominates `F`.
//!
//! Expression nodes are hash-consed, so structurally equal expressions are
//! pointer-equal and share one global evaluation cache. Evaluation is pure;
//! the cache is an idempotent fill behind a mutex, safe for concurrent use.

mod check;
mod trees;

pub use check::{unbounded_check, fin_generated_check, MeetReport, UnboundedVerdict};
pub use trees::{mazur_theta, visit_tree_strings, TreeSpec};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use std::sync::Mutex;

use once_cell::sync::Lazy;
use thiserror::Error;

use crate::names::{parse_growth, GrowthFn};
use crate::sets::FinSet;
use crate::sexpr::{Sexpr, SexprError};

/// Evaluation budgets for the subset and partition dynamic programs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalCfg {
    /// Largest `|x|` a MEET node will enumerate splits for.
    pub meet_budget: usize,
    /// Largest `|x|` a MAZUR/DOM node will enumerate partitions for.
    pub mazur_budget: usize,
}

impl Default for EvalCfg {
    fn default() -> Self {
        EvalCfg { meet_budget: 16, mazur_budget: 14 }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("dp budget exceeded: |x| = {size} > {budget}")]
    BudgetExceeded { size: usize, budget: usize },
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Card,
    Const(u64),
    Join(Submeasure, Submeasure),
    Meet(Submeasure, Submeasure),
    Mazur(Vec<Arc<TreeSpec>>),
    IMeet { parts: Vec<Submeasure>, depth: usize, compiled: Submeasure },
    Dom(Arc<TreeSpec>),
}

/// Handle to an interned submeasure expression. Clone is cheap; equality and
/// hashing are pointer-based, which coincides with structural equality
/// because construction hash-conses every node.
#[derive(Clone)]
pub struct Submeasure {
    node: Arc<Expr>,
}

impl PartialEq for Submeasure {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.node, &other.node)
    }
}

impl Eq for Submeasure {}

impl Hash for Submeasure {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (Arc::as_ptr(&self.node) as usize).hash(state);
    }
}

static INTERNER: Lazy<Mutex<HashSet<Arc<Expr>>>> = Lazy::new(|| Mutex::new(HashSet::new()));

/// Value cache keyed by node pointer and element bitmask (sets fit in u128
/// at desk scale); a side table catches anything larger.
static EVAL_CACHE: Lazy<Mutex<HashMap<(usize, u128), u64>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

#[allow(clippy::mutable_key_type)] // FinSet has no interior mutability
static EVAL_CACHE_BIG: Lazy<Mutex<HashMap<(usize, FinSet), u64>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// First-hitting-index cache per Mazur node.
static THETA_CACHE: Lazy<Mutex<HashMap<(usize, u128), u64>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

pub(crate) fn set_mask(x: &FinSet) -> Option<u128> {
    let mut mask = 0u128;
    for e in x.iter() {
        if e >= 128 {
            return None;
        }
        mask |= 1u128 << e;
    }
    Some(mask)
}

fn intern(e: Expr) -> Arc<Expr> {
    let mut set = INTERNER.lock().unwrap();
    if let Some(a) = set.get(&e) {
        a.clone()
    } else {
        let a = Arc::new(e);
        set.insert(a.clone());
        a
    }
}

impl Submeasure {
    fn from_expr(e: Expr) -> Submeasure {
        Submeasure { node: intern(e) }
    }

    pub fn expr(&self) -> &Expr {
        &self.node
    }

    /// Cardinality.
    pub fn card() -> Submeasure {
        Submeasure::from_expr(Expr::Card)
    }

    /// Measure `n` on every nonempty set (`0` on the empty set).
    pub fn constant(n: u64) -> Submeasure {
        Submeasure::from_expr(Expr::Const(n))
    }

    /// Pointwise max.
    pub fn join(a: Submeasure, b: Submeasure) -> Submeasure {
        Submeasure::from_expr(Expr::Join(a, b))
    }

    /// Lattice meet: `min { a(y) + b(z) : x = y ∪ z }`.
    pub fn meet(a: Submeasure, b: Submeasure) -> Submeasure {
        Submeasure::from_expr(Expr::Meet(a, b))
    }

    /// The Mazur submeasure of a tree family. An empty family degenerates
    /// to the pure max-threshold measure: `θ(x) = max(x) + 1`.
    pub fn mazur(family: Vec<TreeSpec>) -> Submeasure {
        Submeasure::from_expr(Expr::Mazur(family.into_iter().map(Arc::new).collect()))
    }

    /// Truncated countable meet `⋀_{j<depth} (parts_j ∨ j)`.
    pub fn imeet(parts: Vec<Submeasure>, depth: usize) -> Submeasure {
        assert!(!parts.is_empty(), "imeet needs at least one part");
        let used = depth.min(parts.len()).max(1);
        let mut terms: Vec<Submeasure> = Vec::with_capacity(used);
        for (j, p) in parts.iter().take(used).enumerate() {
            if j == 0 {
                terms.push(p.clone());
            } else {
                terms.push(Submeasure::join(p.clone(), Submeasure::constant(j as u64)));
            }
        }
        let compiled = terms
            .into_iter()
            .rev()
            .reduce(|acc, t| Submeasure::meet(t, acc))
            .unwrap();
        Submeasure::from_expr(Expr::IMeet { parts, depth, compiled })
    }

    /// The Mazur submeasure of the class of sets whose enumeration function
    /// dominates `f`.
    pub fn dom(f: GrowthFn) -> Submeasure {
        Submeasure::from_expr(Expr::Dom(Arc::new(TreeSpec::DomEnum(f))))
    }

    fn node_key(&self) -> usize {
        Arc::as_ptr(&self.node) as usize
    }

    /// Evaluates the submeasure on a finite set under the default budgets.
    pub fn eval_default(&self, x: &FinSet) -> Result<u64, EvalError> {
        self.eval(x, &EvalCfg::default())
    }

    /// Evaluates the submeasure on a finite set.
    ///
    /// MEET and MAZUR/DOM refuse sets larger than their budget; values that
    /// were computed are budget-independent, so the cache carries across
    /// configurations.
    pub fn eval(&self, x: &FinSet, cfg: &EvalCfg) -> Result<u64, EvalError> {
        if x.is_empty() {
            return Ok(0);
        }
        let mask = set_mask(x);
        match mask {
            Some(m) => {
                if let Some(&v) = EVAL_CACHE.lock().unwrap().get(&(self.node_key(), m)) {
                    return Ok(v);
                }
            }
            None => {
                if let Some(&v) =
                    EVAL_CACHE_BIG.lock().unwrap().get(&(self.node_key(), x.clone()))
                {
                    return Ok(v);
                }
            }
        }
        let v = match self.expr() {
            Expr::Card => x.len() as u64,
            Expr::Const(n) => *n,
            Expr::Join(a, b) => a.eval(x, cfg)?.max(b.eval(x, cfg)?),
            Expr::Meet(a, b) => {
                let n = x.len();
                if n > cfg.meet_budget {
                    return Err(EvalError::BudgetExceeded { size: n, budget: cfg.meet_budget });
                }
                let elems = x.elements();
                let mut best = u64::MAX;
                for mask in 0u32..(1 << n) {
                    let y: FinSet = elems
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &e)| e)
                        .collect();
                    let z = x.diff(&y);
                    let v = a.eval(&y, cfg)?.saturating_add(b.eval(&z, cfg)?);
                    best = best.min(v);
                    if best == 0 {
                        break;
                    }
                }
                best
            }
            Expr::Mazur(family) => self.partition_min(family, x, cfg)?,
            Expr::Dom(spec) => self.partition_min(std::slice::from_ref(spec), x, cfg)?,
            Expr::IMeet { compiled, .. } => compiled.eval(x, cfg)?,
        };
        match mask {
            Some(m) => {
                EVAL_CACHE.lock().unwrap().insert((self.node_key(), m), v);
            }
            None => {
                EVAL_CACHE_BIG.lock().unwrap().insert((self.node_key(), x.clone()), v);
            }
        }
        Ok(v)
    }

    /// Prints the expression in the textual grammar.
    pub fn print(&self) -> String {
        self.to_sexpr().to_string()
    }

    pub fn to_sexpr(&self) -> Sexpr {
        match self.expr() {
            Expr::Card => Sexpr::List(vec![Sexpr::Word("card".into())]),
            Expr::Const(n) => Sexpr::List(vec![Sexpr::Word("const".into()), Sexpr::Num(*n)]),
            Expr::Join(a, b) => {
                Sexpr::List(vec![Sexpr::Word("join".into()), a.to_sexpr(), b.to_sexpr()])
            }
            Expr::Meet(a, b) => {
                Sexpr::List(vec![Sexpr::Word("meet".into()), a.to_sexpr(), b.to_sexpr()])
            }
            Expr::Mazur(family) => {
                let mut items = vec![Sexpr::Word("mazur".into())];
                items.extend(family.iter().map(|t| t.to_sexpr()));
                Sexpr::List(items)
            }
            Expr::IMeet { parts, depth, .. } => {
                let mut items = vec![Sexpr::Word("imeet".into()), Sexpr::Num(*depth as u64)];
                items.extend(parts.iter().map(Submeasure::to_sexpr));
                Sexpr::List(items)
            }
            Expr::Dom(spec) => match spec.as_ref() {
                TreeSpec::DomEnum(f) => {
                    let mut items = vec![Sexpr::Word("dom".into())];
                    items.extend(trees::growth_to_sexprs(f));
                    Sexpr::List(items)
                }
                _ => unreachable!("dom node always wraps a domenum spec"),
            },
        }
    }

    pub fn parse(text: &str) -> Result<Submeasure, SexprError> {
        Submeasure::from_sexpr(&Sexpr::parse(text)?)
    }

    pub fn from_sexpr(e: &Sexpr) -> Result<Submeasure, SexprError> {
        let bad = |msg: &str| SexprError::new(0, format!("{msg} in submeasure `{e}`"));
        let head = e.head().ok_or_else(|| bad("expected a submeasure form"))?;
        let items = e.as_list().unwrap();
        match head {
            "card" => Ok(Submeasure::card()),
            "const" => {
                let n = items
                    .get(1)
                    .and_then(Sexpr::as_num)
                    .ok_or_else(|| bad("const needs a number"))?;
                Ok(Submeasure::constant(n))
            }
            "join" | "meet" => {
                if items.len() != 3 {
                    return Err(bad("join/meet are binary"));
                }
                let a = Submeasure::from_sexpr(&items[1])?;
                let b = Submeasure::from_sexpr(&items[2])?;
                Ok(if head == "join" { Submeasure::join(a, b) } else { Submeasure::meet(a, b) })
            }
            "mazur" => {
                let family = items[1..]
                    .iter()
                    .map(TreeSpec::from_sexpr)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Submeasure::mazur(family))
            }
            "imeet" => {
                if items.len() < 3 {
                    return Err(bad("imeet needs a depth and at least one part"));
                }
                let depth = items[1].as_num().ok_or_else(|| bad("imeet depth must be a number"))?;
                let parts = items[2..]
                    .iter()
                    .map(Submeasure::from_sexpr)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Submeasure::imeet(parts, depth as usize))
            }
            "dom" => {
                if items.len() != 3 {
                    return Err(bad("dom needs a table and an affine part"));
                }
                let f = parse_growth(&items[1], &items[2])?;
                Ok(Submeasure::dom(f))
            }
            _ => Err(bad("unknown submeasure form")),
        }
    }
}

impl fmt::Debug for Submeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print())
    }
}

impl fmt::Display for Submeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print())
    }
}

impl Submeasure {
    /// Exact minimum of `θ(z_1) + ... + θ(z_k)` over partitions of `x`: every
    /// partition has a unique block through the lowest element, so the
    /// recursion minimizes over that block and re-enters `eval` for the rest,
    /// sharing results through the global cache.
    fn partition_min(
        &self,
        family: &[Arc<TreeSpec>],
        x: &FinSet,
        cfg: &EvalCfg,
    ) -> Result<u64, EvalError> {
        let n = x.len();
        if n > cfg.mazur_budget {
            return Err(EvalError::BudgetExceeded { size: n, budget: cfg.mazur_budget });
        }
        let elems = x.elements();
        let low = elems[0];
        let rest: Vec<u64> = elems[1..].to_vec();
        let mut best = u64::MAX;
        for mask in 0u32..(1 << rest.len()) {
            let mut block = vec![low];
            block.extend(rest.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &e)| e));
            let block = FinSet::new(block);
            let complement = x.diff(&block);
            let theta = self.theta_cached(family, &block);
            if theta >= best {
                continue;
            }
            let v = theta.saturating_add(self.eval(&complement, cfg)?);
            best = best.min(v);
        }
        Ok(best)
    }

    fn theta_cached(&self, family: &[Arc<TreeSpec>], block: &FinSet) -> u64 {
        if let Some(m) = set_mask(block) {
            let key = (self.node_key(), m);
            if let Some(&v) = THETA_CACHE.lock().unwrap().get(&key) {
                return v;
            }
            let v = mazur_theta(family, block);
            THETA_CACHE.lock().unwrap().insert(key, v);
            v
        } else {
            mazur_theta(family, block)
        }
    }
}
