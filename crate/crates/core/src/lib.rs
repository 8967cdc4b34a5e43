//! Executable combinatorics of F-sigma Mathias forcing.
//!
//! The library is organized around the objects a forcing condition is made of:
//!
//! - [`sets`]: finite sets, binary strings, Cantor pairing, and eventually
//!   periodic infinite sets with a decidable boolean algebra.
//! - [`submeasure`]: integer-valued lower-semicontinuous submeasures as
//!   expression trees, their lattice, the Mazur construction from tree
//!   families, and budgeted unboundedness certification.
//! - [`names`]: partial oracle functionals (monotone, functional, stage
//!   bounded) with canonical, combinatory, and table-driven constructors.
//! - [`formula`]: the forcing-language AST, its textual grammar, desugaring,
//!   syntactic classification, and a budgeted classical evaluator.
//! - [`skolem`]: compilation of bounded formulas to names, Skolemization and
//!   Herbrandization with exact index plumbing, and witness-name builders.
//! - [`forcing`]: conditions, the ordering and fusion structure, budgeted
//!   forcing-relation checks, and the fusion/generic construction drivers.
//!
//! Everything is immutable after construction and safe to share across
//! threads. Search routines are deterministic given a seed; every verdict
//! carries a certificate that re-validates by definition-level recomputation.

pub mod formula;
pub mod forcing;
pub mod names;
pub mod sets;
pub mod sexpr;
pub mod skolem;
pub mod submeasure;
