//! Budgeted Π⁰₁ forcing and approximate forcing.
//!
//! A Π⁰₁ sentence forces under `(a, A, μ)` exactly when no string of
//! `tree(a, A)` makes its compiled matrix nonzero; the budgeted check sweeps
//! strings to the stated depth and matrix arguments below the stated bound.
//! The relation only reads the stem and envelope, never the measure.

use thiserror::Error;

use crate::formula::{classify, Formula, SyntClass};
use crate::sets::{BitString, FinSet, PeriodicSet};
use crate::skolem::{compile_bounded_in, pi1_normal_form};
use crate::submeasure::{unbounded_check, visit_tree_strings, UnboundedVerdict};

use super::{tree_member, Budgets, Condition, Verdict};

/// Splits a closed Π⁰₁ (or bounded) formula into leading universal
/// quantifiers and a bounded matrix, normalizing Skolemized shapes whose
/// universals sit inside the body.
fn pi1_matrix(phi: &Formula) -> (usize, Formula) {
    fn strip(phi: &Formula) -> (usize, &Formula) {
        match phi {
            Formula::Forall(body) => {
                let (k, m) = strip(body);
                (k + 1, m)
            }
            _ => (0, phi),
        }
    }
    match classify(phi) {
        SyntClass::Bounded => (0, phi.clone()),
        SyntClass::Pi01 => {
            let (k, m) = strip(phi);
            (k, m.clone())
        }
        _ => {
            // Positive-universal bodies (Skolemization output) admit the
            // fresh-bound normal form, which is Π⁰₁ by construction.
            let nf = pi1_normal_form(phi);
            let (k, m) = strip(&nf);
            (k, m.clone())
        }
    }
}

/// Budgeted Π⁰₁ forcing over raw stem/envelope data: sweeps every string of
/// `tree(stem, envelope)` up to the depth and every argument tuple below the
/// bound; reports the first violation as a certificate.
pub fn pi1_forces_raw(
    stem: &FinSet,
    envelope: &PeriodicSet,
    phi: &Formula,
    depth: u64,
    arg_bound: u64,
) -> Verdict {
    let (k, matrix) = pi1_matrix(phi);
    let t = match compile_bounded_in(&matrix, k) {
        Ok(t) => t,
        Err(err) => return Verdict::Unknown { reason: format!("matrix compilation failed: {err}") },
    };
    let mut verdict = Verdict::ForcedUpTo { depth };
    let env = |i: u64| envelope.contains(i);
    visit_tree_strings(stem, &env, depth as usize, &mut |bits| {
        let tau = BitString::from_bits(bits.to_vec());
        let mut args = vec![0u64; k];
        loop {
            if let Some(z) = t.query(&tau, &args) {
                if z != 0 {
                    verdict = Verdict::Refuted { tau: tau.clone(), args: args.clone(), value: z };
                    return false;
                }
            }
            // Next tuple below the bound, lexicographically.
            let mut i = 0;
            loop {
                if i == k {
                    return true;
                }
                args[i] += 1;
                if args[i] < arg_bound {
                    break;
                }
                args[i] = 0;
                i += 1;
            }
        }
    });
    verdict
}

/// Budgeted Π⁰₁ forcing for a condition.
pub fn pi1_forces(c: &Condition, phi: &Formula, budgets: &Budgets) -> Verdict {
    pi1_forces_raw(c.stem(), c.envelope(), phi, budgets.depth, budgets.arg_bound)
}

/// Re-checks a refutation certificate by definition-level recomputation.
pub fn revalidate_refutation(
    stem: &FinSet,
    envelope: &PeriodicSet,
    phi: &Formula,
    tau: &BitString,
    args: &[u64],
    value: u64,
) -> bool {
    if !tree_member(stem, envelope, tau) {
        return false;
    }
    let (k, matrix) = pi1_matrix(phi);
    if args.len() != k {
        return false;
    }
    match compile_bounded_in(&matrix, k) {
        Ok(t) => t.query(tau, args) == Some(value) && value != 0,
        Err(_) => false,
    }
}

/// A certified approximate-forcing answer: `(a, A - removed, μ)` forces the
/// family member at `witness`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxCert {
    pub witness: u64,
    pub removed: FinSet,
    pub forcing: Verdict,
    pub validity: UnboundedVerdict,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ApproxError {
    #[error("no witness found up to value bound {value_bound} with {removals} removals allowed")]
    NotFoundUpTo { value_bound: u64, removals: u64 },
}

/// Approximate forcing `(a, A, μ) ▶ ∃w φ(w)`: searches for a value `y` and a
/// finite `a' ⊆ A` such that `(a, A - a', μ)` forces `φ(y)`.
///
/// The removals are repaired greedily from refutation certificates: a
/// violating string pins optional 1-positions, and deleting one of them from
/// the envelope kills that string (and nothing the stem needs). Validity of
/// the shrunk condition is re-certified before an answer is returned.
pub fn approx_forces(
    c: &Condition,
    family: &Formula,
    budgets: &Budgets,
) -> Result<ApproxCert, ApproxError> {
    let removal_budget = budgets.window.max(budgets.depth);
    for y in 0..budgets.arg_bound {
        let phi = family.instantiate(&[y]);
        let mut removed = FinSet::empty();
        for _ in 0..=removal_budget {
            let envelope = c.envelope().diff_finite(&removed);
            if !envelope.contains_finite(c.stem()) {
                break;
            }
            match pi1_forces_raw(c.stem(), &envelope, &phi, budgets.depth, budgets.arg_bound) {
                forced @ Verdict::ForcedUpTo { .. } => {
                    let validity = unbounded_check(
                        c.measure(),
                        &envelope,
                        budgets.admission,
                        budgets.horizon,
                        &budgets.eval,
                    );
                    if !validity.is_witnessed() {
                        break;
                    }
                    return Ok(ApproxCert { witness: y, removed, forcing: forced, validity });
                }
                Verdict::Refuted { tau, .. } => {
                    let removable = tau.ones().diff(c.stem());
                    match removable.elements().first() {
                        Some(&e) => removed = removed.insert(e),
                        None => break,
                    }
                }
                Verdict::Unknown { .. } => break,
            }
        }
    }
    Err(ApproxError::NotFoundUpTo {
        value_bound: budgets.arg_bound,
        removals: removal_budget,
    })
}
