//! Conditions, the condition ordering, and the budgeted forcing machinery.
//!
//! A condition is a triple `(a, A, μ)`: finite stem, infinite envelope, and a
//! submeasure whose value on the envelope is committed to be infinite. The
//! commitment is witnessed at an admission threshold rather than decided:
//! every condition carries an [`UnboundedVerdict`] certificate.
//!
//! The forcing relation itself is Π⁰₁-hard even for atomic sentences, so all
//! checks here are budgeted: depth-bounded string sweeps for Π⁰₁ forcing,
//! horizon-bounded measure growth for validity, window-bounded searches for
//! extensions. Certificates never lie; budgets only limit search power.

mod decide;
mod fusion;
mod relation;

pub use decide::{
    lambda_submeasure, locality_submeasure, localize, pi2_decide, LocalizeOutcome, Pi2Report,
};
pub use fusion::{
    cone_run, demo_schedule, fusion_run, generic_build, stabilization_holds, star_fusion_run,
    ConeReport, ConeStageCheck, DenseSpec, FusionHandler, FusionState, GenericAction,
    GenericApprox, GenericEvent, StageCase, StageRecord, StarFusionHandler,
};
pub use relation::{
    approx_forces, pi1_forces, pi1_forces_raw, revalidate_refutation, ApproxCert, ApproxError,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::sets::{BitString, FinSet, PeriodicSet};
use crate::submeasure::{unbounded_check, EvalCfg, Submeasure, UnboundedVerdict};

/// Search budgets shared by every forcing-side routine. All searches are
/// deterministic given the seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    /// Depth bound `L` on oracle strings in forcing sweeps.
    pub depth: u64,
    /// Horizon `N` for measure growth and envelope restrictions.
    pub horizon: u64,
    /// Window for stem-extension and index searches.
    pub window: u64,
    /// Fusion stage count.
    pub stages: u64,
    /// Bound `B` on quantifier arguments in matrix sweeps.
    pub arg_bound: u64,
    /// Admission threshold `s₀` for condition validity certificates.
    pub admission: u64,
    /// Probe-pool window for sampled submeasure comparisons.
    pub probe_window: u64,
    /// Number of extra random probe sets.
    pub probe_random: u64,
    pub seed: u64,
    pub eval: EvalCfg,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            depth: 8,
            horizon: 64,
            window: 8,
            stages: 12,
            arg_bound: 4,
            admission: 4,
            probe_window: 10,
            probe_random: 16,
            seed: 0,
            eval: EvalCfg::default(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConditionError {
    #[error("stem is not contained in the envelope")]
    StemOutsideEnvelope,
    #[error("validity not admitted: {0:?}")]
    NotAdmitted(UnboundedVerdict),
}

/// A forcing condition `(a, A, μ)` with its admission certificate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Condition {
    stem: FinSet,
    envelope: PeriodicSet,
    measure: Submeasure,
    cert: UnboundedVerdict,
}

impl Condition {
    /// Admits a condition by certifying `μ(A) ≥ s₀` below the horizon.
    pub fn new(
        stem: FinSet,
        envelope: PeriodicSet,
        measure: Submeasure,
        budgets: &Budgets,
    ) -> Result<Condition, ConditionError> {
        if !envelope.contains_finite(&stem) {
            return Err(ConditionError::StemOutsideEnvelope);
        }
        let cert =
            unbounded_check(&measure, &envelope, budgets.admission, budgets.horizon, &budgets.eval);
        if !cert.is_witnessed() {
            return Err(ConditionError::NotAdmitted(cert));
        }
        Ok(Condition { stem, envelope, measure, cert })
    }

    /// Builds a condition from a certificate already in hand. The caller
    /// vouches that `cert` talks about this measure and envelope; revalidate
    /// with [`Condition::revalidate`] if in doubt.
    pub fn with_cert(
        stem: FinSet,
        envelope: PeriodicSet,
        measure: Submeasure,
        cert: UnboundedVerdict,
    ) -> Result<Condition, ConditionError> {
        if !envelope.contains_finite(&stem) {
            return Err(ConditionError::StemOutsideEnvelope);
        }
        if !cert.is_witnessed() {
            return Err(ConditionError::NotAdmitted(cert));
        }
        Ok(Condition { stem, envelope, measure, cert })
    }

    pub fn stem(&self) -> &FinSet {
        &self.stem
    }

    pub fn envelope(&self) -> &PeriodicSet {
        &self.envelope
    }

    pub fn measure(&self) -> &Submeasure {
        &self.measure
    }

    pub fn cert(&self) -> &UnboundedVerdict {
        &self.cert
    }

    pub fn revalidate(&self, cfg: &EvalCfg) -> bool {
        self.envelope.contains_finite(&self.stem)
            && self.cert.is_witnessed()
            && self.cert.revalidate(&self.measure, &self.envelope, cfg)
    }
}

/// Membership in `tree(a, A)`: within the string's domain the stem forces
/// ones and the envelope bounds them.
pub fn tree_member(stem: &FinSet, envelope: &PeriodicSet, tau: &BitString) -> bool {
    tau.bits().iter().enumerate().all(|(i, &b)| {
        let i = i as u64;
        if b {
            envelope.contains(i)
        } else {
            !stem.contains(i)
        }
    })
}

/// Deterministic probe pool: all subsets of `{0, ..., probe_window-1}` plus
/// seeded random sets with elements below 24.
pub fn probe_pool(budgets: &Budgets) -> Vec<FinSet> {
    use rand::{Rng, SeedableRng};
    let w = budgets.probe_window.min(10) as usize;
    let mut pool: Vec<FinSet> = (0u32..(1 << w))
        .map(|mask| (0..w).filter(|i| mask & (1 << i) != 0).map(|i| i as u64).collect())
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(budgets.seed);
    for _ in 0..budgets.probe_random {
        let size = rng.gen_range(0..=8);
        let set: FinSet = (0..size).map(|_| rng.gen_range(0..24u64)).collect();
        pool.push(set);
    }
    pool
}

/// The condition ordering `(b, B, ν) ≤ (a, A, μ)`: set clauses exact,
/// `μ ≤ ν` refutation-exact and confirmation-sampled over the probe pool.
pub fn extends(fine: &Condition, coarse: &Condition, budgets: &Budgets) -> bool {
    extends_with_pool(fine, coarse, budgets, &probe_pool(budgets))
}

pub fn extends_with_pool(
    fine: &Condition,
    coarse: &Condition,
    budgets: &Budgets,
    pool: &[FinSet],
) -> bool {
    if !coarse.stem.is_subset(&fine.stem)
        || !coarse.envelope.contains_finite(&fine.stem)
        || !fine.envelope.is_subset(&coarse.envelope)
    {
        return false;
    }
    measure_le_sampled(&coarse.measure, &fine.measure, budgets, pool)
}

fn measure_le_sampled(
    small: &Submeasure,
    large: &Submeasure,
    budgets: &Budgets,
    pool: &[FinSet],
) -> bool {
    pool.iter().all(|x| {
        match (small.eval(x, &budgets.eval), large.eval(x, &budgets.eval)) {
            (Ok(a), Ok(b)) => a <= b,
            // A probe that exceeds the DP budget refutes nothing.
            _ => true,
        }
    })
}

/// The fusion ordering `≤_s`: the plain ordering, agreement of the meets
/// with `s` on the probe pool, and `ν(b) ≥ s` exactly.
pub fn extends_s(fine: &Condition, coarse: &Condition, s: u64, budgets: &Budgets) -> bool {
    let pool = probe_pool(budgets);
    extends_with_pool(fine, coarse, budgets, &pool)
        && meets_agree_at(fine.measure(), coarse.measure(), s, budgets, &pool)
        && stem_value_at_least(fine, s, budgets)
}

///`(ν ∧ s)(x) = (μ ∧ s)(x)` for every probe `x`.
pub fn meets_agree_at(
    nu: &Submeasure,
    mu: &Submeasure,
    s: u64,
    budgets: &Budgets,
    pool: &[FinSet],
) -> bool {
    let cs = Submeasure::constant(s);
    let left = Submeasure::meet(nu.clone(), cs.clone());
    let right = Submeasure::meet(mu.clone(), cs);
    pool.iter().all(|x| match (left.eval(x, &budgets.eval), right.eval(x, &budgets.eval)) {
        (Ok(a), Ok(b)) => a == b,
        _ => true,
    })
}

pub fn stem_value_at_least(c: &Condition, s: u64, budgets: &Budgets) -> bool {
    c.measure.eval(&c.stem, &budgets.eval).map(|v| v >= s).unwrap_or(false)
}

/// Forcing-relation verdicts. `Refuted` certificates re-check: the string is
/// in the condition tree and the matrix value reproduces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    ForcedUpTo { depth: u64 },
    Refuted { tau: BitString, args: Vec<u64>, value: u64 },
    Unknown { reason: String },
}

impl Verdict {
    pub fn is_forced(&self) -> bool {
        matches!(self, Verdict::ForcedUpTo { .. })
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }
}

/// Forcing-guided selector name: enumerates pairs `(τ_i, y_i)` of tree
/// strings and candidate values ordered so that extensions and larger values
/// come later, and answers with the first `y_i` whose string is an initial
/// segment of the oracle and whose finite-change condition forces the family
/// member at `y_i` to the depth derived from `|τ_i|`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pi3Select {
    pub condition: Condition,
    /// Π⁰₁ family with exactly one free slot.
    pub family: Formula,
    pub value_bound: u64,
    pub arg_bound: u64,
    pub min_depth: u64,
}

impl Pi3Select {
    pub fn arity(&self) -> usize {
        0
    }

    pub fn describe(&self) -> String {
        format!(
            "select first forced member of {} below ({}, {})",
            self.family.print(),
            self.condition.stem,
            self.condition.envelope
        )
    }

    pub fn query(&self, tau: &BitString, _args: &[u64]) -> Option<u64> {
        // Enumerate prefixes of the oracle that lie in tree(a, A), shortest
        // first; within a length, candidate values ascend. Longer strings
        // sort later, so answers never retract under oracle extension.
        let a = &self.condition.stem;
        let big_a = &self.condition.envelope;
        for len in 0..=tau.len() {
            let prefix = tau.truncate(len);
            if !tree_member(a, big_a, &prefix) {
                continue;
            }
            for y in 0..self.value_bound {
                let stem = a.union(&prefix.ones());
                let envelope = big_a.diff_finite(&prefix.zeros());
                let phi = self.family.instantiate(&[y]);
                let depth = (prefix.len() as u64).max(self.min_depth);
                let v = pi1_forces_raw(&stem, &envelope, &phi, depth, self.arg_bound);
                if v.is_forced() {
                    return Some(y);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budgets() -> Budgets {
        Budgets::default()
    }

    #[test]
    fn condition_admission() {
        let c = Condition::new(
            FinSet::empty(),
            PeriodicSet::naturals(),
            Submeasure::card(),
            &budgets(),
        )
        .unwrap();
        assert!(c.revalidate(&budgets().eval));

        let err = Condition::new(
            FinSet::empty(),
            PeriodicSet::naturals(),
            Submeasure::constant(2),
            &budgets(),
        )
        .unwrap_err();
        assert!(matches!(err, ConditionError::NotAdmitted(_)));

        let err = Condition::new(
            FinSet::singleton(1),
            PeriodicSet::progression(0, 2),
            Submeasure::card(),
            &budgets(),
        )
        .unwrap_err();
        assert!(matches!(err, ConditionError::StemOutsideEnvelope));
    }

    #[test]
    fn tree_member_examples() {
        let all = PeriodicSet::naturals();
        for tau in ["", "0", "1", "0101", "111"] {
            assert!(tree_member(&FinSet::empty(), &all, &BitString::parse(tau).unwrap()));
        }
        let a = FinSet::singleton(1);
        let env = PeriodicSet::progression(0, 2).union_finite(&a);
        assert!(tree_member(&a, &env, &BitString::parse("0110").unwrap()));
        assert!(!tree_member(&FinSet::singleton(0), &all, &BitString::parse("01").unwrap()));
    }

    #[test]
    fn extends_reflexive_and_shrinking() {
        let b = budgets();
        let c = Condition::new(
            FinSet::empty(),
            PeriodicSet::naturals(),
            Submeasure::card(),
            &b,
        )
        .unwrap();
        assert!(extends(&c, &c, &b));
        let smaller = Condition::new(
            FinSet::empty(),
            PeriodicSet::progression(0, 2),
            Submeasure::card(),
            &b,
        )
        .unwrap();
        assert!(extends(&smaller, &c, &b));
        assert!(!extends(&c, &smaller, &b));
    }

    #[test]
    fn extends_refutes_measure_drop() {
        let b = budgets();
        let c = Condition::new(
            FinSet::empty(),
            PeriodicSet::naturals(),
            Submeasure::card(),
            &b,
        )
        .unwrap();
        // meet(card, const 0) is the zero submeasure: refuted by any probe
        // with positive cardinality.
        let zero = Submeasure::meet(Submeasure::card(), Submeasure::constant(0));
        let dropped = Condition {
            stem: FinSet::empty(),
            envelope: PeriodicSet::naturals(),
            measure: zero,
            cert: c.cert().clone(),
        };
        assert!(!extends(&dropped, &c, &b));
    }

    #[test]
    fn probe_pool_is_deterministic() {
        let b = budgets();
        assert_eq!(probe_pool(&b), probe_pool(&b));
        let other = Budgets { seed: 1, ..b };
        assert_ne!(probe_pool(&b), probe_pool(&other));
    }

    #[test]
    fn extends_s_checks_meet_agreement_and_stem_value() {
        let b = budgets();
        let coarse = Condition::new(
            FinSet::empty(),
            PeriodicSet::naturals(),
            Submeasure::card(),
            &b,
        )
        .unwrap();
        let fine = Condition::new(
            FinSet::new(vec![0, 1, 2]),
            PeriodicSet::naturals(),
            Submeasure::card(),
            &b,
        )
        .unwrap();
        // card agrees with itself at any level and the stem has 3 elements.
        assert!(extends_s(&fine, &coarse, 3, &b));
        assert!(!extends_s(&fine, &coarse, 4, &b), "stem value clause must fail at 4");
    }

    #[test]
    fn pi3_selector_is_monotone_and_picks_forced_members() {
        use crate::formula::Formula;
        let b = budgets();
        let condition = Condition::new(
            FinSet::empty(),
            PeriodicSet::naturals(),
            Submeasure::card(),
            &b,
        )
        .unwrap();
        // φ(w) ≡ (χ(0) = w): forced with value 1 below conditions whose tree
        // pins bit 0 to 1, with value 0 when it pins bit 0 to 0.
        let family = Formula::parse_family("(atom (chi) (0) (canon (arity 1) x0) (w))")
            .unwrap()
            .0;
        let name = crate::names::Name::pi3_select(Pi3Select {
            condition,
            family,
            value_bound: 4,
            arg_bound: 4,
            min_depth: 2,
        });
        assert_eq!(name.arity(), 0);
        // The empty prefix decides nothing, so no member is forced yet.
        assert_eq!(name.query(&BitString::empty(), &[]), None);
        let one = name.query(&BitString::parse("1").unwrap(), &[]);
        assert_eq!(one, Some(1));
        let zero = name.query(&BitString::parse("0").unwrap(), &[]);
        assert_eq!(zero, Some(0));
        // Monotone: extensions keep the answer.
        for ext in ["10", "11", "101"] {
            assert_eq!(name.query(&BitString::parse(ext).unwrap(), &[]), one);
        }
    }
}
