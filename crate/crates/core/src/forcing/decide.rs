//! Locality machinery and the budgeted Π⁰₂ decision procedure.
//!
//! Both are instances of one pattern: build a Mazur submeasure from condition
//! trees that capture "some extension settles the question", meet it into the
//! condition's measure, and read the budgeted unboundedness dichotomy. The
//! unbounded side keeps the meet (the question is settled negatively
//! everywhere below); the bounded side searches for the settling extension.

use crate::formula::{classify, Formula, SyntClass};
use crate::names::Name;
use crate::sets::{FinSet, PeriodicSet};
use crate::skolem::{compile_bounded_in, pi1_normal_form, SkolemError};
use crate::submeasure::{unbounded_check, Submeasure, TreeSpec, UnboundedVerdict};

use super::relation::{pi1_forces, pi1_forces_raw};
use super::{Budgets, Condition, Verdict};

/// Dichotomy checks look for small witnesses or give up; capping the DP
/// budget keeps nested-meet evaluation from exploding on large initial
/// segments without affecting certificate soundness.
fn soft_eval(budgets: &Budgets) -> crate::submeasure::EvalCfg {
    crate::submeasure::EvalCfg {
        meet_budget: budgets.eval.meet_budget.min(10),
        mazur_budget: budgets.eval.mazur_budget.min(10),
    }
}

/// The unboundedness target for an ideal dichotomy: the largest value the
/// budgeted evaluation can reach at all. A Mazur decision submeasure whose
/// pieces cover everything caps below this, so reaching it is genuine
/// evidence of growth.
fn dichotomy_target(cfg: &crate::submeasure::EvalCfg) -> u64 {
    cfg.meet_budget.min(cfg.mazur_budget) as u64
}

/// The non-convergence submeasure `ϑ_b` of a name below a stem: the Mazur
/// submeasure of the union, over argument tuples below `arg_bound`, of the
/// classes of envelopes along which the name stays undefined at that tuple.
pub fn locality_submeasure(
    name: &Name,
    stem: &FinSet,
    arg_bound: u64,
    depth_cap: u64,
) -> Submeasure {
    let arity = name.arity();
    let mut family = Vec::new();
    let mut tuple = vec![0u64; arity];
    loop {
        family.push(TreeSpec::NoConv {
            name: name.clone(),
            stem: stem.clone(),
            args: tuple.clone(),
            depth_cap,
        });
        let mut i = 0;
        loop {
            if i == arity {
                return Submeasure::mazur(family);
            }
            tuple[i] += 1;
            if tuple[i] < arg_bound {
                break;
            }
            tuple[i] = 0;
            i += 1;
        }
        if arity == 0 {
            // A nullary name has a single (empty) tuple.
            return Submeasure::mazur(family);
        }
    }
}

/// Outcome of the locality dichotomy for a name below a condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LocalizeOutcome {
    /// The meet of the measure with the truncated locality chain stays
    /// unbounded: the refined condition keeps the name local.
    Localized { condition: Condition },
    /// An extension kills the domain of the name: below `(stem, envelope)`
    /// the name is nowhere defined at `args` up to the depth.
    DomKilled { stem: FinSet, envelope: PeriodicSet, args: Vec<u64>, depth: u64 },
    Unknown { reason: String },
}

/// Stem extensions within the window: the stem itself plus one extra point
/// of the envelope at a time.
fn stem_extensions(c: &Condition, budgets: &Budgets) -> Vec<FinSet> {
    let mut out = vec![c.stem().clone()];
    for e in c.envelope().restrict(budgets.window).iter() {
        if !c.stem().contains(e) {
            out.push(c.stem().insert(e));
        }
    }
    out
}

/// The two-branch locality dichotomy: either refine the measure so the name
/// is local below the refined condition, or exhibit an extension along which
/// the name's domain dies.
pub fn localize(c: &Condition, name: &Name, budgets: &Budgets) -> LocalizeOutcome {
    let bs = stem_extensions(c, budgets);
    // ⋀_{b} (ϑ_b ∨ |b|), truncated to the window.
    let mut chain: Option<Submeasure> = None;
    for b in &bs {
        let theta_b = locality_submeasure(name, b, budgets.arg_bound, budgets.depth);
        let capped = Submeasure::join(theta_b, Submeasure::constant(b.len() as u64));
        chain = Some(match chain {
            None => capped,
            Some(acc) => Submeasure::meet(capped, acc),
        });
    }
    let refined = Submeasure::meet(c.measure().clone(), chain.expect("at least the stem itself"));
    let soft = soft_eval(budgets);
    let target = budgets.admission.max(dichotomy_target(&soft));
    let check = unbounded_check(&refined, c.envelope(), target, budgets.horizon, &soft);
    if check.is_witnessed() {
        let condition = Condition::with_cert(
            c.stem().clone(),
            c.envelope().clone(),
            refined,
            check,
        )
        .expect("stem stays inside the envelope");
        return LocalizeOutcome::Localized { condition };
    }
    // Bounded side: look for a stem extension and an argument tuple whose
    // non-convergence tree swallows the whole envelope, repairing greedily by
    // removing the 1-positions of defined strings.
    for b in &bs {
        let arity = name.arity();
        let mut tuple = vec![0u64; arity];
        'tuples: loop {
            let mut envelope = c.envelope().clone();
            for _ in 0..=budgets.window {
                match first_defined_string(name, b, &envelope, &tuple, budgets.depth) {
                    None => {
                        let validity = unbounded_check(
                            c.measure(),
                            &envelope,
                            budgets.admission,
                            budgets.horizon,
                            &budgets.eval,
                        );
                        if validity.is_witnessed() {
                            return LocalizeOutcome::DomKilled {
                                stem: b.clone(),
                                envelope,
                                args: tuple.clone(),
                                depth: budgets.depth,
                            };
                        }
                        break;
                    }
                    Some(tau_ones) => {
                        let removable = tau_ones.diff(b);
                        match removable.elements().first() {
                            Some(&e) => envelope = envelope.diff_finite(&FinSet::singleton(e)),
                            None => break,
                        }
                    }
                }
            }
            let mut i = 0;
            loop {
                if i == arity {
                    break 'tuples;
                }
                tuple[i] += 1;
                if tuple[i] < budgets.arg_bound {
                    break;
                }
                tuple[i] = 0;
                i += 1;
            }
            if arity == 0 {
                break;
            }
        }
    }
    LocalizeOutcome::Unknown {
        reason: format!(
            "locality meet bounded ({check:?}) but no domain-killing extension found in the window"
        ),
    }
}

/// First string of `tree(stem, envelope ∪ stem)` (up to the depth) on which
/// the name is defined at `args`; returns its 1-set.
fn first_defined_string(
    name: &Name,
    stem: &FinSet,
    envelope: &PeriodicSet,
    args: &[u64],
    depth: u64,
) -> Option<FinSet> {
    let mut found = None;
    let env = |i: u64| envelope.contains(i) || stem.contains(i);
    crate::submeasure::visit_tree_strings(stem, &env, depth as usize, &mut |bits| {
        let tau = crate::sets::BitString::from_bits(bits.to_vec());
        if name.query(&tau, args).is_some() {
            found = Some(tau.ones());
            return false;
        }
        true
    });
    found
}

/// Prepares the Π⁰₁-family matrix of `family` (one free slot) as a name
/// whose first argument is the family index.
pub fn family_matrix(family: &Formula) -> Result<Name, SkolemError> {
    let shaped = match classify(family) {
        SyntClass::Bounded | SyntClass::Pi01 => family.clone(),
        _ => pi1_normal_form(family),
    };
    // Strip the universal prefix; the matrix sits under k binders plus the
    // free family slot.
    let mut k = 0;
    let mut matrix = &shaped;
    while let Formula::Forall(body) = matrix {
        k += 1;
        matrix = body;
    }
    let t = compile_bounded_in(matrix, k + 1)?;
    if k == 0 {
        return Ok(t);
    }
    // Reorder (ū, w) to (w, ū): T's argument j < k comes from position j+1
    // and its family slot k from position 0.
    let mut children = Vec::with_capacity(k + 1);
    for j in 0..k {
        children.push(Name::proj(j + 1, k + 1));
    }
    children.push(Name::proj(0, k + 1));
    Ok(Name::superpose(t, children)?)
}

/// The star submeasure of a Π⁰₁ family below a stem: the Mazur submeasure of
/// the union over window values `y` of the closed classes
/// "`(stem, B ∪ stem)` forces the member at `y`".
pub fn lambda_submeasure(
    stem: &FinSet,
    family: &Formula,
    window: u64,
    budgets: &Budgets,
) -> Result<Submeasure, SkolemError> {
    let matrix = family_matrix(family)?;
    let specs = (0..window)
        .map(|y| TreeSpec::Pi1Hat {
            matrix: matrix.clone(),
            stem: stem.clone(),
            y,
            envelope: PeriodicSet::naturals(),
            arg_bound: budgets.arg_bound,
            depth_cap: budgets.depth,
        })
        .collect();
    Ok(Submeasure::mazur(specs))
}

/// Report of the budgeted Π⁰₂ decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pi2Report {
    /// The meet with the decision submeasure stays unbounded: the refined
    /// condition forces `∀w ¬φ(w)`. The sweep records, per `w` below the
    /// argument bound, the Π⁰₁ verdict of `φ(w)` under the refined condition.
    AllNegative { condition: Condition, rho: Submeasure, sweep: Vec<(u64, Verdict)> },
    /// An extension forces `φ(witness)`.
    Exists {
        stem: FinSet,
        envelope: PeriodicSet,
        witness: u64,
        validity: UnboundedVerdict,
        forcing: Verdict,
    },
    Unknown { reason: String },
}

/// Budgeted Π⁰₂ decision for a Π⁰₁ family `φ(w)` below a condition.
///
/// The decision submeasure is the Mazur submeasure of the classes
/// "some stem extension in the window forces `φ(y)` along this envelope"
/// for `(b, y)` in the window.
pub fn pi2_decide(c: &Condition, family: &Formula, budgets: &Budgets) -> Pi2Report {
    let matrix = match family_matrix(family) {
        Ok(m) => m,
        Err(err) => return Pi2Report::Unknown { reason: format!("matrix compilation failed: {err}") },
    };
    let bs = stem_extensions(c, budgets);
    let mut specs = Vec::new();
    for b in &bs {
        for y in 0..budgets.arg_bound {
            specs.push(TreeSpec::Pi1Hat {
                matrix: matrix.clone(),
                stem: b.clone(),
                y,
                envelope: c.envelope().clone(),
                arg_bound: budgets.arg_bound,
                depth_cap: budgets.depth,
            });
        }
    }
    if specs.is_empty() {
        return Pi2Report::Unknown { reason: "empty decision window".into() };
    }
    let rho = Submeasure::mazur(specs);
    let meet = Submeasure::meet(c.measure().clone(), rho.clone());
    let soft = soft_eval(budgets);
    let target = budgets.admission.max(dichotomy_target(&soft));
    let check = unbounded_check(&meet, c.envelope(), target, budgets.horizon, &soft);
    if check.is_witnessed() {
        let condition = Condition::with_cert(
            c.stem().clone(),
            c.envelope().clone(),
            meet,
            check,
        )
        .expect("stem unchanged");
        let sweep = (0..budgets.arg_bound)
            .map(|w| (w, pi1_forces(&condition, &family.instantiate(&[w]), budgets)))
            .collect();
        return Pi2Report::AllNegative { condition, rho, sweep };
    }
    // Bounded side: search the window for a forcing extension, repairing the
    // envelope greedily from refutation certificates.
    for b in &bs {
        for y in 0..budgets.arg_bound {
            let phi = family.instantiate(&[y]);
            let mut envelope = c.envelope().clone();
            for _ in 0..=budgets.window {
                let env_with_stem = envelope.union_finite(b);
                match pi1_forces_raw(b, &env_with_stem, &phi, budgets.depth, budgets.arg_bound) {
                    forced @ Verdict::ForcedUpTo { .. } => {
                        let validity = unbounded_check(
                            c.measure(),
                            &env_with_stem,
                            budgets.admission,
                            budgets.horizon,
                            &budgets.eval,
                        );
                        if validity.is_witnessed() {
                            return Pi2Report::Exists {
                                stem: b.clone(),
                                envelope: env_with_stem,
                                witness: y,
                                validity,
                                forcing: forced,
                            };
                        }
                        break;
                    }
                    Verdict::Refuted { tau, .. } => {
                        let removable = tau.ones().diff(b);
                        match removable.elements().first() {
                            Some(&e) => envelope = envelope.diff_finite(&FinSet::singleton(e)),
                            None => break,
                        }
                    }
                    Verdict::Unknown { .. } => break,
                }
            }
        }
    }
    Pi2Report::Unknown { reason: format!("neither branch certified within budget ({check:?})") }
}
