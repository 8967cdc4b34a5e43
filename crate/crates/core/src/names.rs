//! Partial k-ary names: monotone, functional oracle functionals.
//!
//! A name answers `query(τ, x̄)` with `Some(y)` or `None`, where `τ` is a
//! finite oracle prefix. Every constructor preserves the two name laws:
//! answers never retract under oracle extension, and compatible oracles never
//! disagree on a value. Work per query is bounded by a function of `|τ|`, so
//! queries always terminate.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sets::{pair, BitString};
use crate::sexpr::{Sexpr, SexprError};

/// Arithmetic terms over truncated arithmetic, the ground-function language.
///
/// Projections `x0, x1, ...` select arguments; `pair`/`fst`/`snd` expose the
/// ambient pairing function.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Const(u64),
    Proj(usize),
    Add(Arc<Term>, Arc<Term>),
    Mul(Arc<Term>, Arc<Term>),
    /// Truncated subtraction `max(a - b, 0)`.
    Monus(Arc<Term>, Arc<Term>),
    Pair(Arc<Term>, Arc<Term>),
    Fst(Arc<Term>),
    Snd(Arc<Term>),
}

impl Term {
    pub fn eval(&self, args: &[u64]) -> u64 {
        match self {
            Term::Const(c) => *c,
            Term::Proj(i) => args[*i],
            Term::Add(a, b) => a.eval(args).wrapping_add(b.eval(args)),
            Term::Mul(a, b) => a.eval(args).wrapping_mul(b.eval(args)),
            Term::Monus(a, b) => a.eval(args).saturating_sub(b.eval(args)),
            Term::Pair(a, b) => pair(a.eval(args), b.eval(args)),
            Term::Fst(a) => crate::sets::fst(a.eval(args)),
            Term::Snd(a) => crate::sets::snd(a.eval(args)),
        }
    }

    /// Smallest arity that covers every projection.
    pub fn min_arity(&self) -> usize {
        match self {
            Term::Const(_) => 0,
            Term::Proj(i) => i + 1,
            Term::Add(a, b) | Term::Mul(a, b) | Term::Monus(a, b) | Term::Pair(a, b) => {
                a.min_arity().max(b.min_arity())
            }
            Term::Fst(a) | Term::Snd(a) => a.min_arity(),
        }
    }
}

/// A unary growth function: explicit table with an affine tail.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrowthFn {
    pub table: Vec<(u64, u64)>,
    pub slope: u64,
    pub offset: u64,
}

impl GrowthFn {
    pub fn new(mut table: Vec<(u64, u64)>, slope: u64, offset: u64) -> Self {
        table.sort_unstable();
        table.dedup();
        GrowthFn { table, slope, offset }
    }

    pub fn affine(slope: u64, offset: u64) -> Self {
        GrowthFn { table: Vec::new(), slope, offset }
    }

    pub fn value(&self, k: u64) -> u64 {
        match self.table.binary_search_by_key(&k, |&(a, _)| a) {
            Ok(i) => self.table[i].1,
            Err(_) => self.slope.wrapping_mul(k).wrapping_add(self.offset),
        }
    }
}

/// A total ground function: either an arithmetic term or a unary table with
/// affine tail.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroundFn {
    Term { term: Arc<Term>, arity: usize },
    Table(GrowthFn),
}

impl GroundFn {
    pub fn arity(&self) -> usize {
        match self {
            GroundFn::Term { arity, .. } => *arity,
            GroundFn::Table(_) => 1,
        }
    }

    pub fn eval(&self, args: &[u64]) -> u64 {
        match self {
            GroundFn::Term { term, .. } => term.eval(args),
            GroundFn::Table(f) => f.value(args[0]),
        }
    }
}

/// Argument-index transformations used by Skolemization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SliceKind {
    /// `t ↦ 2t`
    Even,
    /// `t ↦ 2t+1`
    Odd,
    /// `t ↦ ⟨w, t⟩` for a fixed `w`
    PairFix(u64),
    /// `t ↦ t+1`
    Shift,
    /// nullary view at index 0
    Head,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NameError {
    #[error("arity mismatch: expected {expected}, got {got} in {context}")]
    ArityMismatch { expected: usize, got: usize, context: &'static str },
    #[error("inconsistent table: patterns {0} and {1} are compatible but map argument {2} to {3} and {4}")]
    InconsistentTable(BitString, BitString, u64, u64, u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NameExpr {
    /// Canonical name of a total ground function; defined on every oracle.
    Canon(GroundFn),
    /// `outer(children...)`, defined where all parts are.
    Superpose { outer: Name, children: Vec<Name> },
    /// Primitive recursion on the last argument: the chain `z_0 = base(x̄)`,
    /// `z_{i+1} = step(z_i, i, x̄)` must be fully defined.
    PrimRec { base: Name, step: Name },
    /// Characteristic function of the generic: `τ(x)` for `x < |τ|`.
    GenericChi,
    /// Enumeration function of the generic: position of the (n+1)-st 1,
    /// defined as soon as that many ones appear.
    GenericEnum,
    /// Finite monotone-closed oracle table; entries `(pattern, x, y)`.
    Table { entries: Vec<(BitString, u64, u64)> },
    /// Index-transformed view of a unary name.
    Slice { inner: Name, kind: SliceKind },
    /// Lazy case split on a name value: only the taken branch must be defined.
    IfZero { cond: Name, then: Name, els: Name },
    /// A nullary name used at a wider arity, ignoring all arguments.
    Lift { inner: Name, arity: usize },
    /// The nowhere-defined name.
    Empty { arity: usize },
    /// Least-witness scan: at `t = 0` returns the first `w` where the scanned
    /// test leaves `U(w) = 1 ∸ Σ_{u≤w} not_theta(x̄,u)` behind (the partial sum
    /// stabilizes strictly below the step count); at `t+1` defers to `tail`
    /// at the found witness. Scan horizon is `|τ|`.
    Sigma1Witness { not_theta: Name, tail: Name },
    /// Forcing-guided selector used by the higher witnessing construction;
    /// lives in the forcing module.
    Pi3Select(Arc<crate::forcing::Pi3Select>),
}

/// A partial k-ary name. Cheap to clone; structural equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Name(Arc<NameExpr>);

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print())
    }
}

impl Name {
    fn wrap(e: NameExpr) -> Name {
        Name(Arc::new(e))
    }

    pub fn expr(&self) -> &NameExpr {
        &self.0
    }

    /// Canonical name of a ground function.
    pub fn canonical(f: GroundFn) -> Name {
        Name::wrap(NameExpr::Canon(f))
    }

    pub fn from_term(term: Term, arity: usize) -> Name {
        assert!(term.min_arity() <= arity, "term projections exceed arity");
        Name::canonical(GroundFn::Term { term: Arc::new(term), arity })
    }

    /// Constant function of the given arity.
    pub fn constant(c: u64, arity: usize) -> Name {
        Name::from_term(Term::Const(c), arity)
    }

    /// Projection `x̄ ↦ x_i`.
    pub fn proj(i: usize, arity: usize) -> Name {
        Name::from_term(Term::Proj(i), arity)
    }

    pub fn identity() -> Name {
        Name::proj(0, 1)
    }

    pub fn superpose(outer: Name, children: Vec<Name>) -> Result<Name, NameError> {
        if outer.arity() != children.len() {
            return Err(NameError::ArityMismatch {
                expected: outer.arity(),
                got: children.len(),
                context: "superpose outer arity vs child count",
            });
        }
        if children.is_empty() {
            // A nullary outer needs no children; it is its own superposition.
            return Ok(outer);
        }
        let k = children[0].arity();
        for c in &children {
            if c.arity() != k {
                return Err(NameError::ArityMismatch {
                    expected: k,
                    got: c.arity(),
                    context: "superpose child arities",
                });
            }
        }
        Ok(Name::wrap(NameExpr::Superpose { outer, children }))
    }

    pub fn primrec(base: Name, step: Name) -> Result<Name, NameError> {
        if step.arity() != base.arity() + 2 {
            return Err(NameError::ArityMismatch {
                expected: base.arity() + 2,
                got: step.arity(),
                context: "primrec step arity",
            });
        }
        Ok(Name::wrap(NameExpr::PrimRec { base, step }))
    }

    pub fn generic_chi() -> Name {
        Name::wrap(NameExpr::GenericChi)
    }

    pub fn generic_enum() -> Name {
        Name::wrap(NameExpr::GenericEnum)
    }

    /// Builds a table name, rejecting inconsistent entries.
    pub fn turing_table(entries: Vec<(BitString, u64, u64)>) -> Result<Name, NameError> {
        for (i, (p1, x1, y1)) in entries.iter().enumerate() {
            for (p2, x2, y2) in entries.iter().skip(i + 1) {
                if x1 == x2 && y1 != y2 && p1.compatible(p2) {
                    return Err(NameError::InconsistentTable(p1.clone(), p2.clone(), *x1, *y1, *y2));
                }
            }
        }
        Ok(Name::wrap(NameExpr::Table { entries }))
    }

    pub fn slice(inner: Name, kind: SliceKind) -> Result<Name, NameError> {
        if inner.arity() != 1 {
            return Err(NameError::ArityMismatch {
                expected: 1,
                got: inner.arity(),
                context: "slice inner arity",
            });
        }
        Ok(Name::wrap(NameExpr::Slice { inner, kind }))
    }

    pub fn if_zero(cond: Name, then: Name, els: Name) -> Result<Name, NameError> {
        let k = cond.arity();
        for (n, what) in [(&then, "if-zero then-branch"), (&els, "if-zero else-branch")] {
            if n.arity() != k {
                return Err(NameError::ArityMismatch { expected: k, got: n.arity(), context: what });
            }
        }
        Ok(Name::wrap(NameExpr::IfZero { cond, then, els }))
    }

    pub fn lift(inner: Name, arity: usize) -> Result<Name, NameError> {
        if inner.arity() != 0 {
            return Err(NameError::ArityMismatch {
                expected: 0,
                got: inner.arity(),
                context: "lift inner arity",
            });
        }
        Ok(Name::wrap(NameExpr::Lift { inner, arity }))
    }

    pub fn empty(arity: usize) -> Name {
        Name::wrap(NameExpr::Empty { arity })
    }

    pub fn sigma1_witness(not_theta: Name, tail: Name) -> Result<Name, NameError> {
        if tail.arity() != not_theta.arity() + 1 {
            return Err(NameError::ArityMismatch {
                expected: not_theta.arity() + 1,
                got: tail.arity(),
                context: "sigma1 witness tail arity",
            });
        }
        Ok(Name::wrap(NameExpr::Sigma1Witness { not_theta, tail }))
    }

    pub fn pi3_select(data: crate::forcing::Pi3Select) -> Name {
        Name::wrap(NameExpr::Pi3Select(Arc::new(data)))
    }

    pub fn arity(&self) -> usize {
        match self.expr() {
            NameExpr::Canon(f) => f.arity(),
            NameExpr::Superpose { children, outer } => {
                children.first().map(|c| c.arity()).unwrap_or_else(|| outer.arity())
            }
            NameExpr::PrimRec { base, .. } => base.arity() + 1,
            NameExpr::GenericChi | NameExpr::GenericEnum => 1,
            NameExpr::Table { .. } => 1,
            NameExpr::Slice { kind: SliceKind::Head, .. } => 0,
            NameExpr::Slice { .. } => 1,
            NameExpr::IfZero { cond, .. } => cond.arity(),
            NameExpr::Lift { arity, .. } => *arity,
            NameExpr::Empty { arity } => *arity,
            NameExpr::Sigma1Witness { not_theta, .. } => not_theta.arity(),
            NameExpr::Pi3Select(d) => d.arity(),
        }
    }

    /// Queries the name on an oracle prefix. Returns `None` when the oracle
    /// does not yet carry enough information.
    pub fn query(&self, tau: &BitString, args: &[u64]) -> Option<u64> {
        debug_assert_eq!(args.len(), self.arity(), "query arity");
        match self.expr() {
            NameExpr::Canon(f) => Some(f.eval(args)),
            NameExpr::Superpose { outer, children } => {
                let mut vals = Vec::with_capacity(children.len());
                for c in children {
                    vals.push(c.query(tau, args)?);
                }
                outer.query(tau, &vals)
            }
            NameExpr::PrimRec { base, step } => {
                let (xs, y) = args.split_at(args.len() - 1);
                let y = y[0];
                let mut acc = base.query(tau, xs)?;
                let mut step_args = Vec::with_capacity(xs.len() + 2);
                for i in 0..y {
                    step_args.clear();
                    step_args.push(acc);
                    step_args.push(i);
                    step_args.extend_from_slice(xs);
                    acc = step.query(tau, &step_args)?;
                }
                Some(acc)
            }
            NameExpr::GenericChi => {
                let x = args[0] as usize;
                tau.get(x).map(|b| b as u64)
            }
            NameExpr::GenericEnum => {
                let n = args[0] as usize;
                tau.bits()
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .nth(n)
                    .map(|(i, _)| i as u64)
            }
            NameExpr::Table { entries } => entries
                .iter()
                .find(|(p, x, _)| *x == args[0] && p.is_prefix_of(tau))
                .map(|&(_, _, y)| y),
            NameExpr::Slice { inner, kind } => match kind {
                SliceKind::Even => inner.query(tau, &[2 * args[0]]),
                SliceKind::Odd => inner.query(tau, &[2 * args[0] + 1]),
                SliceKind::PairFix(w) => inner.query(tau, &[pair(*w, args[0])]),
                SliceKind::Shift => inner.query(tau, &[args[0] + 1]),
                SliceKind::Head => inner.query(tau, &[0]),
            },
            NameExpr::IfZero { cond, then, els } => {
                if cond.query(tau, args)? == 0 {
                    then.query(tau, args)
                } else {
                    els.query(tau, args)
                }
            }
            NameExpr::Lift { inner, .. } => inner.query(tau, &[]),
            NameExpr::Empty { .. } => None,
            NameExpr::Sigma1Witness { not_theta, tail } => {
                let (xs, t) = args.split_at(args.len() - 1);
                let w0 = sigma1_scan(not_theta, tau, xs)?;
                if t[0] == 0 {
                    Some(w0)
                } else {
                    let mut tail_args = xs.to_vec();
                    tail_args.push(w0);
                    tail_args.push(t[0] - 1);
                    tail.query(tau, &tail_args)
                }
            }
            NameExpr::Pi3Select(d) => d.query(tau, args),
        }
    }

    /// Prints the name in the textual grammar.
    pub fn print(&self) -> String {
        self.to_sexpr().to_string()
    }

    pub fn to_sexpr(&self) -> Sexpr {
        fn term_sexpr(t: &Term) -> Sexpr {
            match t {
                Term::Const(c) => Sexpr::Num(*c),
                Term::Proj(i) => Sexpr::Word(format!("x{i}")),
                Term::Add(a, b) => {
                    Sexpr::List(vec![Sexpr::Word("+".into()), term_sexpr(a), term_sexpr(b)])
                }
                Term::Mul(a, b) => {
                    Sexpr::List(vec![Sexpr::Word("*".into()), term_sexpr(a), term_sexpr(b)])
                }
                Term::Monus(a, b) => {
                    Sexpr::List(vec![Sexpr::Word("monus".into()), term_sexpr(a), term_sexpr(b)])
                }
                Term::Pair(a, b) => {
                    Sexpr::List(vec![Sexpr::Word("pair".into()), term_sexpr(a), term_sexpr(b)])
                }
                Term::Fst(a) => Sexpr::List(vec![Sexpr::Word("fst".into()), term_sexpr(a)]),
                Term::Snd(a) => Sexpr::List(vec![Sexpr::Word("snd".into()), term_sexpr(a)]),
            }
        }
        fn growth_sexpr(f: &GrowthFn) -> Vec<Sexpr> {
            let mut table = vec![Sexpr::Word("table".into())];
            for &(k, v) in &f.table {
                table.push(Sexpr::Num(k));
                table.push(Sexpr::Num(v));
            }
            let affine = Sexpr::List(vec![
                Sexpr::Word("affine".into()),
                Sexpr::Num(f.slope),
                Sexpr::Num(f.offset),
            ]);
            vec![Sexpr::List(table), affine]
        }
        match self.expr() {
            NameExpr::Canon(GroundFn::Term { term, arity }) => Sexpr::List(vec![
                Sexpr::Word("canon".into()),
                Sexpr::List(vec![Sexpr::Word("arity".into()), Sexpr::Num(*arity as u64)]),
                term_sexpr(term),
            ]),
            NameExpr::Canon(GroundFn::Table(f)) => {
                let mut items = vec![Sexpr::Word("canon".into())];
                items.extend(growth_sexpr(f));
                Sexpr::List(items)
            }
            NameExpr::Superpose { outer, children } => {
                let mut items = vec![Sexpr::Word("superpose".into()), outer.to_sexpr()];
                items.extend(children.iter().map(Name::to_sexpr));
                Sexpr::List(items)
            }
            NameExpr::PrimRec { base, step } => Sexpr::List(vec![
                Sexpr::Word("primrec".into()),
                base.to_sexpr(),
                step.to_sexpr(),
            ]),
            NameExpr::GenericChi => Sexpr::List(vec![Sexpr::Word("chi".into())]),
            NameExpr::GenericEnum => Sexpr::List(vec![Sexpr::Word("enum".into())]),
            NameExpr::Table { entries } => {
                let rows = entries
                    .iter()
                    .map(|(p, x, y)| {
                        Sexpr::List(vec![Sexpr::Str(p.to_string()), Sexpr::Num(*x), Sexpr::Num(*y)])
                    })
                    .collect();
                Sexpr::List(vec![Sexpr::Word("table".into()), Sexpr::List(rows)])
            }
            NameExpr::Slice { inner, kind } => {
                let mut items = vec![Sexpr::Word("slice".into())];
                match kind {
                    SliceKind::Even => items.push(Sexpr::Word("even".into())),
                    SliceKind::Odd => items.push(Sexpr::Word("odd".into())),
                    SliceKind::PairFix(w) => items.push(Sexpr::List(vec![
                        Sexpr::Word("pairfix".into()),
                        Sexpr::Num(*w),
                    ])),
                    SliceKind::Shift => items.push(Sexpr::Word("shift".into())),
                    SliceKind::Head => items.push(Sexpr::Word("head".into())),
                }
                items.push(inner.to_sexpr());
                Sexpr::List(items)
            }
            NameExpr::IfZero { cond, then, els } => Sexpr::List(vec![
                Sexpr::Word("ifzero".into()),
                cond.to_sexpr(),
                then.to_sexpr(),
                els.to_sexpr(),
            ]),
            NameExpr::Lift { inner, arity } => Sexpr::List(vec![
                Sexpr::Word("lift".into()),
                Sexpr::Num(*arity as u64),
                inner.to_sexpr(),
            ]),
            NameExpr::Empty { arity } => {
                Sexpr::List(vec![Sexpr::Word("never".into()), Sexpr::Num(*arity as u64)])
            }
            NameExpr::Sigma1Witness { not_theta, tail } => Sexpr::List(vec![
                Sexpr::Word("sigma1-witness".into()),
                not_theta.to_sexpr(),
                tail.to_sexpr(),
            ]),
            NameExpr::Pi3Select(d) => {
                Sexpr::List(vec![Sexpr::Word("pi3-select".into()), Sexpr::Str(d.describe())])
            }
        }
    }

    /// Parses a name from the textual grammar.
    pub fn parse(text: &str) -> Result<Name, SexprError> {
        let e = Sexpr::parse(text)?;
        Name::from_sexpr(&e)
    }

    pub fn from_sexpr(e: &Sexpr) -> Result<Name, SexprError> {
        let bad = |msg: &str| SexprError::new(0, format!("{msg} in name expression `{e}`"));
        let items = e.as_list().ok_or_else(|| bad("expected a list form"))?;
        let head = e.head().ok_or_else(|| bad("expected a head word"))?;
        match head {
            "canon" => {
                // (canon <term>) | (canon (arity k) <term>) | (canon (table ...) (affine a b))
                let rest = &items[1..];
                match rest {
                    [t] => {
                        let term = parse_term(t)?;
                        let arity = term.min_arity();
                        Ok(Name::from_term(term, arity))
                    }
                    [a, t] if a.head() == Some("arity") => {
                        let arity = a.as_list().and_then(|l| l.get(1)).and_then(Sexpr::as_num)
                            .ok_or_else(|| bad("bad arity form"))? as usize;
                        let term = parse_term(t)?;
                        if term.min_arity() > arity {
                            return Err(bad("term projections exceed declared arity"));
                        }
                        Ok(Name::from_term(term, arity))
                    }
                    [t, a] if t.head() == Some("table") && a.head() == Some("affine") => {
                        let f = parse_growth(t, a)?;
                        Ok(Name::canonical(GroundFn::Table(f)))
                    }
                    _ => Err(bad("bad canon form")),
                }
            }
            "superpose" => {
                if items.len() < 2 {
                    return Err(bad("superpose needs an outer name"));
                }
                let outer = Name::from_sexpr(&items[1])?;
                let children = items[2..].iter().map(Name::from_sexpr).collect::<Result<_, _>>()?;
                Name::superpose(outer, children).map_err(|err| bad(&err.to_string()))
            }
            "primrec" => {
                if items.len() != 3 {
                    return Err(bad("primrec needs base and step"));
                }
                let base = Name::from_sexpr(&items[1])?;
                let step = Name::from_sexpr(&items[2])?;
                Name::primrec(base, step).map_err(|err| bad(&err.to_string()))
            }
            "chi" => Ok(Name::generic_chi()),
            "enum" => Ok(Name::generic_enum()),
            "table" => {
                let rows = items.get(1).and_then(Sexpr::as_list).ok_or_else(|| bad("table needs a row list"))?;
                let mut entries = Vec::new();
                for row in rows {
                    let cols = row.as_list().ok_or_else(|| bad("table row must be a list"))?;
                    match cols {
                        [p, x, y] => {
                            let pat = p
                                .as_str()
                                .and_then(BitString::parse)
                                .ok_or_else(|| bad("table pattern must be a bit string"))?;
                            let x = x.as_num().ok_or_else(|| bad("table argument must be a number"))?;
                            let y = y.as_num().ok_or_else(|| bad("table value must be a number"))?;
                            entries.push((pat, x, y));
                        }
                        _ => return Err(bad("table row must be (\"bits\" x y)")),
                    }
                }
                Name::turing_table(entries).map_err(|err| bad(&err.to_string()))
            }
            "slice" => {
                if items.len() != 3 {
                    return Err(bad("slice needs a kind and a name"));
                }
                let kind = match &items[1] {
                    Sexpr::Word(w) => match w.as_str() {
                        "even" => SliceKind::Even,
                        "odd" => SliceKind::Odd,
                        "shift" => SliceKind::Shift,
                        "head" => SliceKind::Head,
                        _ => return Err(bad("unknown slice kind")),
                    },
                    form if form.head() == Some("pairfix") => {
                        let w = form
                            .as_list()
                            .and_then(|l| l.get(1))
                            .and_then(Sexpr::as_num)
                            .ok_or_else(|| bad("pairfix needs a number"))?;
                        SliceKind::PairFix(w)
                    }
                    _ => return Err(bad("unknown slice kind")),
                };
                let inner = Name::from_sexpr(&items[2])?;
                Name::slice(inner, kind).map_err(|err| bad(&err.to_string()))
            }
            "ifzero" => {
                if items.len() != 4 {
                    return Err(bad("ifzero needs three names"));
                }
                let cond = Name::from_sexpr(&items[1])?;
                let then = Name::from_sexpr(&items[2])?;
                let els = Name::from_sexpr(&items[3])?;
                Name::if_zero(cond, then, els).map_err(|err| bad(&err.to_string()))
            }
            "lift" => {
                if items.len() != 3 {
                    return Err(bad("lift needs an arity and a name"));
                }
                let arity = items[1].as_num().ok_or_else(|| bad("lift arity must be a number"))? as usize;
                let inner = Name::from_sexpr(&items[2])?;
                Name::lift(inner, arity).map_err(|err| bad(&err.to_string()))
            }
            "never" => {
                let arity =
                    items.get(1).and_then(Sexpr::as_num).ok_or_else(|| bad("never needs an arity"))?;
                Ok(Name::empty(arity as usize))
            }
            "sigma1-witness" => {
                if items.len() != 3 {
                    return Err(bad("sigma1-witness needs two names"));
                }
                let not_theta = Name::from_sexpr(&items[1])?;
                let tail = Name::from_sexpr(&items[2])?;
                Name::sigma1_witness(not_theta, tail).map_err(|err| bad(&err.to_string()))
            }
            _ => Err(bad("unknown name constructor")),
        }
    }
}

fn parse_term(e: &Sexpr) -> Result<Term, SexprError> {
    let bad = |msg: &str| SexprError::new(0, format!("{msg} in term `{e}`"));
    match e {
        Sexpr::Num(n) => Ok(Term::Const(*n)),
        Sexpr::Word(w) => {
            if let Some(i) = w.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                Ok(Term::Proj(i))
            } else {
                Err(bad("unknown term variable (use x0, x1, ...)"))
            }
        }
        Sexpr::List(items) => {
            let head = e.head().ok_or_else(|| bad("expected operator"))?;
            let args: Vec<Term> =
                items[1..].iter().map(parse_term).collect::<Result<_, _>>()?;
            let two = |args: &[Term]| -> Result<(Arc<Term>, Arc<Term>), SexprError> {
                if args.len() != 2 {
                    Err(bad("binary operator needs two arguments"))
                } else {
                    Ok((Arc::new(args[0].clone()), Arc::new(args[1].clone())))
                }
            };
            match head {
                "+" => two(&args).map(|(a, b)| Term::Add(a, b)),
                "*" => two(&args).map(|(a, b)| Term::Mul(a, b)),
                "monus" => two(&args).map(|(a, b)| Term::Monus(a, b)),
                "pair" => two(&args).map(|(a, b)| Term::Pair(a, b)),
                "fst" if args.len() == 1 => Ok(Term::Fst(Arc::new(args[0].clone()))),
                "snd" if args.len() == 1 => Ok(Term::Snd(Arc::new(args[0].clone()))),
                _ => Err(bad("unknown term operator")),
            }
        }
        Sexpr::Str(_) => Err(bad("strings are not terms")),
    }
}

pub fn parse_growth(table: &Sexpr, affine: &Sexpr) -> Result<GrowthFn, SexprError> {
    let bad = |msg: &str| SexprError::new(0, msg.to_string());
    let t = table.as_list().ok_or_else(|| bad("growth table must be a list"))?;
    let mut pairs = Vec::new();
    let mut i = 1;
    while i + 1 < t.len() + 1 && i < t.len() {
        let k = t[i].as_num().ok_or_else(|| bad("growth table key must be a number"))?;
        let v = t
            .get(i + 1)
            .and_then(Sexpr::as_num)
            .ok_or_else(|| bad("growth table needs key/value pairs"))?;
        pairs.push((k, v));
        i += 2;
    }
    let a = affine.as_list().ok_or_else(|| bad("affine part must be a list"))?;
    if a.len() != 3 {
        return Err(bad("affine part must be (affine slope offset)"));
    }
    let slope = a[1].as_num().ok_or_else(|| bad("affine slope must be a number"))?;
    let offset = a[2].as_num().ok_or_else(|| bad("affine offset must be a number"))?;
    Ok(GrowthFn::new(pairs, slope, offset))
}

fn sigma1_scan(not_theta: &Name, tau: &BitString, xs: &[u64]) -> Option<u64> {
    let mut args = xs.to_vec();
    args.push(0);
    let mut t_sum = 0u64;
    let mut y = 0u64;
    for s in 0..=(tau.len() as u64) {
        *args.last_mut().unwrap() = s;
        let t = not_theta.query(tau, &args)?;
        t_sum = t_sum.saturating_add(t);
        if t_sum == 0 {
            y += 1;
        }
        if y < s {
            return Some(y);
        }
    }
    None
}

// Derived combinators used by the compilation of bounded formulas.

/// `|f - g|` on shared arguments.
pub fn abs_diff(f: Name, g: Name) -> Result<Name, NameError> {
    let t = Term::Add(
        Arc::new(Term::Monus(Arc::new(Term::Proj(0)), Arc::new(Term::Proj(1)))),
        Arc::new(Term::Monus(Arc::new(Term::Proj(1)), Arc::new(Term::Proj(0)))),
    );
    Name::superpose(Name::from_term(t, 2), vec![f, g])
}

/// `f + g` on shared arguments.
pub fn add(f: Name, g: Name) -> Result<Name, NameError> {
    let t = Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Proj(1)));
    Name::superpose(Name::from_term(t, 2), vec![f, g])
}

/// `1 ∸ f` on shared arguments.
pub fn truncated_not(f: Name) -> Result<Name, NameError> {
    let t = Term::Monus(Arc::new(Term::Const(1)), Arc::new(Term::Proj(0)));
    Name::superpose(Name::from_term(t, 1), vec![f])
}

impl Name {
    /// Applies `self` to the listed argument names (all of common arity).
    pub fn apply(&self, args: Vec<Name>) -> Result<Name, NameError> {
        Name::superpose(self.clone(), args)
    }
}

/// `⌊t/2⌋` as a unary name, via the recursion `h(0) = 0`, `h(i+1) = i ∸ h(i)`.
pub fn half() -> Name {
    let base = Name::constant(0, 0);
    let step = Name::from_term(
        Term::Monus(Arc::new(Term::Proj(1)), Arc::new(Term::Proj(0))),
        2,
    );
    Name::primrec(base, step).expect("half arity")
}

/// `t mod 2` as a unary name: `t ∸ 2⌊t/2⌋`.
pub fn parity() -> Name {
    let t = Term::Monus(
        Arc::new(Term::Proj(0)),
        Arc::new(Term::Mul(Arc::new(Term::Const(2)), Arc::new(Term::Proj(1)))),
    );
    Name::superpose(Name::from_term(t, 2), vec![Name::identity(), half()]).expect("parity arity")
}

/// `Σ_{w ≤ bound(v̄)} body(w, v̄)`: the bounded sum of `body` (summation index
/// first) up to a bound computed from the outer arguments.
pub fn bounded_sum(bound: Name, body: Name) -> Result<Name, NameError> {
    let n = bound.arity();
    if body.arity() != n + 1 {
        return Err(NameError::ArityMismatch {
            expected: n + 1,
            got: body.arity(),
            context: "bounded_sum body arity",
        });
    }
    // partial(v̄, y) = Σ_{w ≤ y} body(w, v̄), by primitive recursion on y.
    let base = {
        let mut args = vec![Name::constant(0, n)];
        args.extend((0..n).map(|i| Name::proj(i, n)));
        Name::superpose(body.clone(), args)?
    };
    let step = {
        // step(acc, i, v̄) = acc + body(i+1, v̄)
        let succ_i = Name::from_term(
            Term::Add(Arc::new(Term::Proj(1)), Arc::new(Term::Const(1))),
            n + 2,
        );
        let mut args = vec![succ_i];
        args.extend((0..n).map(|i| Name::proj(i + 2, n + 2)));
        let body_at = Name::superpose(body, args)?;
        add(Name::proj(0, n + 2), body_at)?
    };
    let partial = Name::primrec(base, step)?;
    // result(v̄) = partial(v̄, bound(v̄))
    let mut args: Vec<Name> = (0..n).map(|i| Name::proj(i, n)).collect();
    args.push(bound);
    Name::superpose(partial, args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    #[test]
    fn canonical_defined_everywhere() {
        let id = Name::identity();
        assert_eq!(id.query(&BitString::empty(), &[7]), Some(7));
        let monus = Name::from_term(
            Term::Monus(Arc::new(Term::Proj(0)), Arc::new(Term::Proj(1))),
            2,
        );
        assert_eq!(monus.query(&bs("0110"), &[3, 5]), Some(0));
        let four = Name::constant(4, 2);
        for tau in ["", "0", "110101"] {
            for a in 0..10 {
                assert_eq!(four.query(&bs(tau), &[a, a + 1]), Some(4));
            }
        }
    }

    #[test]
    fn superpose_composes_and_propagates_undefined() {
        let succ = Name::from_term(Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Const(1))), 1);
        let h = Name::superpose(succ.clone(), vec![Name::identity()]).unwrap();
        assert_eq!(h.query(&BitString::empty(), &[3]), Some(4));
        let h = Name::superpose(succ, vec![Name::generic_chi()]).unwrap();
        assert_eq!(h.query(&bs("01"), &[5]), None);
        assert_eq!(h.query(&bs("01"), &[1]), Some(2));
    }

    #[test]
    fn primrec_builds_identity() {
        let step = Name::from_term(Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Const(1))), 2);
        let h = Name::primrec(Name::constant(0, 0), step).unwrap();
        assert_eq!(h.query(&BitString::empty(), &[5]), Some(5));
        assert_eq!(h.arity(), 1);
    }

    #[test]
    fn primrec_chain_breaks_on_undefined() {
        // Step consults the oracle at index i; a short oracle breaks the chain.
        let step = Name::superpose(
            Name::from_term(Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Proj(1))), 2),
            vec![
                Name::slice(Name::generic_chi(), SliceKind::Head).map(|n| Name::lift(n, 2)).unwrap().unwrap(),
                Name::proj(1, 2),
            ],
        )
        .unwrap();
        let h = Name::primrec(Name::constant(0, 0), step).unwrap();
        assert_eq!(h.query(&BitString::empty(), &[3]), None);
        assert!(h.query(&bs("1"), &[3]).is_some());
    }

    #[test]
    fn primrec_encodes_addition() {
        // add(x, y) = x + y by recursion on the last argument.
        let base = Name::identity();
        let step = Name::from_term(Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Const(1))), 3);
        let addn = Name::primrec(base, step).unwrap();
        for x in [0u64, 1, 5, 19, 40] {
            for y in [0u64, 2, 7, 33] {
                assert_eq!(addn.query(&BitString::empty(), &[x, y]), Some(x + y));
            }
        }
    }

    #[test]
    fn generic_chi_reads_oracle() {
        let chi = Name::generic_chi();
        assert_eq!(chi.query(&bs("0110"), &[2]), Some(1));
        assert_eq!(chi.query(&bs("01"), &[5]), None);
    }

    #[test]
    fn generic_enum_positions() {
        let e = Name::generic_enum();
        assert_eq!(e.query(&bs("01101"), &[1]), Some(2));
        assert_eq!(e.query(&bs("01101"), &[2]), Some(4));
        assert_eq!(e.query(&bs("01101"), &[3]), None);
    }

    #[test]
    fn table_semantics_and_consistency() {
        let t = Name::turing_table(vec![(bs("1"), 0, 7)]).unwrap();
        assert_eq!(t.query(&bs("10"), &[0]), Some(7));
        assert_eq!(t.query(&bs("01"), &[0]), None);
        assert!(Name::turing_table(vec![(bs("1"), 0, 7), (bs("0"), 0, 7)]).is_ok());
        let err = Name::turing_table(vec![(bs("1"), 0, 7), (bs("11"), 0, 8)]).unwrap_err();
        assert!(matches!(err, NameError::InconsistentTable(..)));
    }

    #[test]
    fn slice_semantics() {
        let id = Name::identity();
        let even = Name::slice(id.clone(), SliceKind::Even).unwrap();
        assert_eq!(even.query(&BitString::empty(), &[3]), Some(6));
        // slice(slice(W, even), odd) = λt W(2(2t+1))
        let w = Name::turing_table(
            (0..50).map(|i| (BitString::empty(), i, 100 + i)).collect(),
        )
        .unwrap();
        let composed =
            Name::slice(Name::slice(w.clone(), SliceKind::Even).unwrap(), SliceKind::Odd).unwrap();
        for t in 0..20 {
            assert_eq!(
                composed.query(&BitString::empty(), &[t]),
                w.query(&BitString::empty(), &[2 * (2 * t + 1)])
            );
        }
        let pf = Name::slice(w.clone(), SliceKind::PairFix(2)).unwrap();
        assert_eq!(pf.query(&bs("0"), &[0]), w.query(&bs("0"), &[pair(2, 0)]));
    }

    #[test]
    fn half_and_parity() {
        let h = half();
        let p = parity();
        for t in 0..40u64 {
            assert_eq!(h.query(&BitString::empty(), &[t]), Some(t / 2));
            assert_eq!(p.query(&BitString::empty(), &[t]), Some(t % 2));
        }
    }

    #[test]
    fn bounded_sum_totals() {
        // Σ_{w ≤ y} w = y(y+1)/2, bound given by the identity.
        let body = Name::proj(0, 2);
        let s = bounded_sum(Name::identity(), body).unwrap();
        for y in 0..12u64 {
            assert_eq!(s.query(&BitString::empty(), &[y]), Some(y * (y + 1) / 2));
        }
    }

    #[test]
    fn monotone_under_extension() {
        // Once defined, values persist along oracle extension.
        let pool: Vec<Name> = vec![
            Name::generic_chi(),
            Name::generic_enum(),
            Name::turing_table(vec![(bs("01"), 0, 3), (bs("1"), 0, 4), (bs("00"), 1, 9)]).unwrap(),
            Name::slice(Name::generic_enum(), SliceKind::Even).unwrap(),
            Name::superpose(
                Name::from_term(Term::Add(Arc::new(Term::Proj(0)), Arc::new(Term::Proj(1))), 2),
                vec![Name::generic_chi(), Name::generic_chi()],
            )
            .unwrap(),
        ];
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            rng
        };
        for _ in 0..1000 {
            let n = &pool[(next() % pool.len() as u64) as usize];
            let len = (next() % 6) as usize;
            let tau = BitString::from_bits((0..len).map(|_| next() % 2 == 0).collect());
            let ext = {
                let mut bits = tau.bits().to_vec();
                for _ in 0..(next() % 4) {
                    bits.push(next() % 2 == 0);
                }
                BitString::from_bits(bits)
            };
            let args: Vec<u64> = (0..n.arity()).map(|_| next() % 6).collect();
            if let Some(y) = n.query(&tau, &args) {
                assert_eq!(n.query(&ext, &args), Some(y), "{}", n.print());
            }
        }
    }

    #[test]
    fn parse_print_roundtrip() {
        for text in [
            "(canon (arity 1) (+ x0 1))",
            "(chi)",
            "(enum)",
            "(slice even (chi))",
            "(slice (pairfix 2) (enum))",
            "(superpose (canon (arity 2) (+ x0 x1)) (chi) (chi))",
            "(table ((\"01\" 0 3) (\"1\" 0 4)))",
            "(never 2)",
        ] {
            let n = Name::parse(text).unwrap();
            let n2 = Name::parse(&n.print()).unwrap();
            assert_eq!(n, n2);
        }
    }
}
