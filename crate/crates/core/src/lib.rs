//! A workbench for finite universal algebra at desk scale.
//!
//! The crate represents finite algebras by operation tables and provides:
//!
//! - evaluation, powers, subuniverse closure, quotients, constant expansion
//!   and identity checking ([`algebra`]);
//! - compatible binary relations, congruence generation by two independent
//!   algorithms, and congruence-lattice enumeration ([`relation`],
//!   [`congruence`]);
//! - unary polynomials, bounded-arity term and polynomial clones with
//!   derivation tracking, and Maltsev-operation search ([`clones`]);
//! - the 2x2 matrix set and the term-condition predicates built on it:
//!   abelian, strongly rectangular, strongly abelian, rectangularity with
//!   respect to an order, strong solvability, affineness, zero preservation
//!   ([`centrality`]);
//! - three certified construction pipelines over those predicates
//!   ([`construct`]), with replayable certificates ([`certificate`]);
//! - a brute-force polynomial-matrix oracle for cross-validation ([`oracle`]).
//!
//! Everything is immutable after construction and every operation is a pure
//! function, so values can be shared freely across threads.

pub mod algebra;
pub mod centrality;
pub mod certificate;
pub mod clones;
mod closure;
pub mod congruence;
pub mod construct;
pub mod error;
pub mod oracle;
pub mod relation;
pub mod verdict;

pub use algebra::{Assignment, FiniteAlgebra, Operation, Quotient, Term};
pub use centrality::{Matrix2x2, MatrixCondition, MatrixSet};
pub use clones::{CloneSet, Derivation, FiniteMap, MaltsevMode};
pub use congruence::{Congruence, CongruenceAlgorithm};
pub use error::{Error, Result};
pub use relation::{BinaryRelation, ClosureFlags, RelationKind};
pub use verdict::{Outcome, Verdict, Witness};
