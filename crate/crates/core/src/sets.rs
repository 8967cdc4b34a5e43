//! Ground encodings: finite sets, binary strings, the pairing function, and
//! eventually periodic infinite sets.
//!
//! `PeriodicSet` is the desk-scale stand-in for an arbitrary infinite set: it
//! has total decidable membership, decidable infinitude, and is closed under
//! union, intersection, and difference. Values are canonical (minimal period,
//! then minimal prefix), so equality is structural.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Cantor pairing `(w, t) -> (w+t)(w+t+1)/2 + t`.
pub fn pair(w: u64, t: u64) -> u64 {
    let s = w + t;
    s * (s + 1) / 2 + t
}

/// First projection inverting [`pair`].
pub fn fst(p: u64) -> u64 {
    let (w, _) = unpair(p);
    w
}

/// Second projection inverting [`pair`].
pub fn snd(p: u64) -> u64 {
    let (_, t) = unpair(p);
    t
}

/// Inverse of [`pair`].
pub fn unpair(p: u64) -> (u64, u64) {
    // Largest s with s(s+1)/2 <= p, found by integer square root then repair.
    let mut s = (((8.0 * p as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while s * (s + 1) / 2 > p {
        s -= 1;
    }
    while (s + 1) * (s + 2) / 2 <= p {
        s += 1;
    }
    let t = p - s * (s + 1) / 2;
    (s - t, t)
}

/// A coded finite set of naturals: strictly increasing element list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct FinSet {
    elements: Vec<u64>,
}

impl FinSet {
    pub fn empty() -> Self {
        FinSet { elements: Vec::new() }
    }

    /// Builds the canonical code: sorts and deduplicates.
    pub fn new(mut elements: Vec<u64>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        FinSet { elements }
    }

    pub fn singleton(x: u64) -> Self {
        FinSet { elements: vec![x] }
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn max_element(&self) -> Option<u64> {
        self.elements.last().copied()
    }

    pub fn is_subset(&self, other: &FinSet) -> bool {
        self.elements.iter().all(|&x| other.contains(x))
    }

    pub fn union(&self, other: &FinSet) -> FinSet {
        let mut v = self.elements.clone();
        v.extend_from_slice(&other.elements);
        FinSet::new(v)
    }

    pub fn inter(&self, other: &FinSet) -> FinSet {
        FinSet {
            elements: self.elements.iter().copied().filter(|&x| other.contains(x)).collect(),
        }
    }

    pub fn diff(&self, other: &FinSet) -> FinSet {
        FinSet {
            elements: self.elements.iter().copied().filter(|&x| !other.contains(x)).collect(),
        }
    }

    pub fn insert(&self, x: u64) -> FinSet {
        if self.contains(x) {
            self.clone()
        } else {
            let mut v = self.elements.clone();
            v.push(x);
            FinSet::new(v)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.elements.iter().copied()
    }

    /// The characteristic string of length `max(x)+1` (empty for the empty set).
    pub fn char_string(&self) -> BitString {
        match self.max_element() {
            None => BitString::empty(),
            Some(m) => {
                BitString::from_fn((m + 1) as usize, |i| self.contains(i as u64))
            }
        }
    }

    /// Iterates over all subsets; only valid for small sets.
    pub fn subsets(&self) -> impl Iterator<Item = FinSet> + '_ {
        let n = self.elements.len();
        assert!(n < 26, "subset enumeration over {n} elements");
        (0u32..(1 << n)).map(move |mask| {
            FinSet {
                elements: self
                    .elements
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &x)| x)
                    .collect(),
            }
        })
    }
}

impl fmt::Debug for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.elements.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for FinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(fin")?;
        for x in &self.elements {
            write!(f, " {x}")?;
        }
        write!(f, ")")
    }
}

impl FromIterator<u64> for FinSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        FinSet::new(iter.into_iter().collect())
    }
}

/// A finite binary string over {0,1}.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn empty() -> Self {
        BitString { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> bool) -> Self {
        BitString { bits: (0..len).map(f).collect() }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()
            .map(BitString::from_bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn push(&self, b: bool) -> BitString {
        let mut bits = self.bits.clone();
        bits.push(b);
        BitString { bits }
    }

    /// Positions holding a 1, as a finite set.
    pub fn ones(&self) -> FinSet {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u64)
            .collect()
    }

    /// Positions holding a 0, as a finite set.
    pub fn zeros(&self) -> FinSet {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| !b)
            .map(|(i, _)| i as u64)
            .collect()
    }

    /// String-extension order: `self` is an initial segment of `other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.bits.len() <= other.bits.len() && other.bits[..self.bits.len()] == self.bits[..]
    }

    /// Two strings are compatible as oracles when one extends the other.
    pub fn compatible(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn truncate(&self, len: usize) -> BitString {
        BitString { bits: self.bits[..len.min(self.bits.len())].to_vec() }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"")?;
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        write!(f, "\"")
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// An eventually periodic subset of the naturals: membership of `n` is
/// `prefix[n]` when `n < |prefix|`, else `period[(n - |prefix|) mod |period|]`.
///
/// The stored representation is canonical: the period is minimal, and the
/// prefix is as short as possible given that period.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicSet {
    prefix: BitString,
    period: BitString,
}

impl PeriodicSet {
    pub fn new(prefix: BitString, period: BitString) -> Self {
        assert!(!period.is_empty(), "period must be nonempty");
        let mut s = PeriodicSet { prefix, period };
        s.canonicalize();
        s
    }

    /// The full set of naturals.
    pub fn naturals() -> Self {
        PeriodicSet::new(BitString::empty(), BitString::from_bits(vec![true]))
    }

    /// The empty set.
    pub fn empty_set() -> Self {
        PeriodicSet::new(BitString::empty(), BitString::from_bits(vec![false]))
    }

    /// The arithmetic progression `{a, a+d, a+2d, ...}`; `d = 0` gives `{a}`.
    pub fn progression(a: u64, d: u64) -> Self {
        if d == 0 {
            return PeriodicSet::from_finite(&FinSet::singleton(a));
        }
        let prefix = BitString::from_fn(a as usize, |_| false);
        let period = BitString::from_fn(d as usize, |i| i == 0);
        PeriodicSet::new(prefix, period)
    }

    /// Embeds a finite set.
    pub fn from_finite(x: &FinSet) -> Self {
        let prefix = x.char_string();
        PeriodicSet::new(prefix, BitString::from_bits(vec![false]))
    }

    fn canonicalize(&mut self) {
        // Minimize the period: smallest divisor d such that the period is
        // d-periodic.
        let m = self.period.len();
        for d in 1..=m {
            if m % d == 0 && (0..m).all(|i| self.period.bit(i) == self.period.bit(i % d)) {
                self.period = self.period.truncate(d);
                break;
            }
        }
        // Shrink the prefix: dropping the last prefix bit rotates the period
        // right by one, and is sound exactly when that bit equals the last
        // period bit.
        let m = self.period.len();
        let mut prefix = self.prefix.bits().to_vec();
        let mut period = self.period.bits().to_vec();
        while let Some(&last) = prefix.last() {
            if last == period[m - 1] {
                prefix.pop();
                period.rotate_right(1);
            } else {
                break;
            }
        }
        self.prefix = BitString::from_bits(prefix);
        self.period = BitString::from_bits(period);
        // Rotation preserves d-periodicity, so the period stays minimal.
    }

    pub fn prefix(&self) -> &BitString {
        &self.prefix
    }

    pub fn period(&self) -> &BitString {
        &self.period
    }

    pub fn contains(&self, n: u64) -> bool {
        let l = self.prefix.len() as u64;
        if n < l {
            self.prefix.bit(n as usize)
        } else {
            let m = self.period.len() as u64;
            self.period.bit(((n - l) % m) as usize)
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.period.bits().iter().any(|&b| b)
    }

    /// A horizon beyond which the pointwise behavior of `self` and `other`
    /// jointly repeats; membership checks up to this bound decide containment
    /// and equality.
    pub fn joint_bound(&self, other: &PeriodicSet) -> u64 {
        let l = self.prefix.len().max(other.prefix.len());
        (l + lcm(self.period.len(), other.period.len())) as u64
    }

    fn pointwise(&self, other: &PeriodicSet, f: impl Fn(bool, bool) -> bool) -> PeriodicSet {
        let l = self.prefix.len().max(other.prefix.len());
        let m = lcm(self.period.len(), other.period.len());
        let prefix = BitString::from_fn(l, |i| f(self.contains(i as u64), other.contains(i as u64)));
        let period =
            BitString::from_fn(m, |i| f(self.contains((l + i) as u64), other.contains((l + i) as u64)));
        PeriodicSet::new(prefix, period)
    }

    pub fn union(&self, other: &PeriodicSet) -> PeriodicSet {
        self.pointwise(other, |a, b| a || b)
    }

    pub fn inter(&self, other: &PeriodicSet) -> PeriodicSet {
        self.pointwise(other, |a, b| a && b)
    }

    pub fn diff(&self, other: &PeriodicSet) -> PeriodicSet {
        self.pointwise(other, |a, b| a && !b)
    }

    pub fn union_finite(&self, x: &FinSet) -> PeriodicSet {
        self.union(&PeriodicSet::from_finite(x))
    }

    pub fn diff_finite(&self, x: &FinSet) -> PeriodicSet {
        self.diff(&PeriodicSet::from_finite(x))
    }

    /// Decides `self ⊆ other` exactly.
    pub fn is_subset(&self, other: &PeriodicSet) -> bool {
        let bound = self.joint_bound(other);
        (0..bound).all(|n| !self.contains(n) || other.contains(n))
    }

    pub fn contains_finite(&self, x: &FinSet) -> bool {
        x.iter().all(|n| self.contains(n))
    }

    /// `self ∩ {0, ..., n-1}` as a finite set.
    pub fn restrict(&self, n: u64) -> FinSet {
        (0..n).filter(|&i| self.contains(i)).collect()
    }

    /// Enumerates members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0u64..).filter(move |&n| self.contains(n))
    }
}

impl fmt::Debug for PeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(periodic \"{}\" \"{}\")", self.prefix, self.period)
    }
}

use crate::sexpr::{Sexpr, SexprError};

impl FinSet {
    /// Parses `(fin 1 2 3)`.
    pub fn from_sexpr(e: &Sexpr) -> Result<FinSet, SexprError> {
        let bad = |msg: &str| SexprError::new(0, format!("{msg} in `{e}`"));
        if e.head() != Some("fin") {
            return Err(bad("expected a (fin ...) form"));
        }
        let items = e.as_list().unwrap();
        let elems = items[1..]
            .iter()
            .map(|x| x.as_num().ok_or_else(|| bad("fin elements must be numbers")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FinSet::new(elems))
    }

    pub fn parse(text: &str) -> Result<FinSet, SexprError> {
        FinSet::from_sexpr(&Sexpr::parse(text)?)
    }
}

impl PeriodicSet {
    /// Parses the set grammar: `(fin ...)`, `(nat)`, `(prog a d)`,
    /// `(periodic "prefix" "period")`, `(union S S)`, `(inter S S)`,
    /// `(diff S S)`.
    pub fn from_sexpr(e: &Sexpr) -> Result<PeriodicSet, SexprError> {
        let bad = |msg: &str| SexprError::new(0, format!("{msg} in `{e}`"));
        let head = e.head().ok_or_else(|| bad("expected a set form"))?;
        let items = e.as_list().unwrap();
        match head {
            "fin" => Ok(PeriodicSet::from_finite(&FinSet::from_sexpr(e)?)),
            "nat" => Ok(PeriodicSet::naturals()),
            "prog" => {
                if items.len() != 3 {
                    return Err(bad("prog needs start and step"));
                }
                let a = items[1].as_num().ok_or_else(|| bad("prog start must be a number"))?;
                let d = items[2].as_num().ok_or_else(|| bad("prog step must be a number"))?;
                Ok(PeriodicSet::progression(a, d))
            }
            "periodic" => {
                if items.len() != 3 {
                    return Err(bad("periodic needs prefix and period strings"));
                }
                let prefix = items[1]
                    .as_str()
                    .and_then(BitString::parse)
                    .ok_or_else(|| bad("prefix must be a bit string"))?;
                let period = items[2]
                    .as_str()
                    .and_then(BitString::parse)
                    .ok_or_else(|| bad("period must be a bit string"))?;
                if period.is_empty() {
                    return Err(bad("period must be nonempty"));
                }
                Ok(PeriodicSet::new(prefix, period))
            }
            "union" | "inter" | "diff" => {
                if items.len() != 3 {
                    return Err(bad("set algebra forms are binary"));
                }
                let a = PeriodicSet::from_sexpr(&items[1])?;
                let b = PeriodicSet::from_sexpr(&items[2])?;
                Ok(match head {
                    "union" => a.union(&b),
                    "inter" => a.inter(&b),
                    _ => a.diff(&b),
                })
            }
            _ => Err(bad("unknown set form")),
        }
    }

    pub fn parse(text: &str) -> Result<PeriodicSet, SexprError> {
        PeriodicSet::from_sexpr(&Sexpr::parse(text)?)
    }
}

impl fmt::Display for PeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(periodic \"{}\" \"{}\")", self.prefix, self.period)
    }
}
