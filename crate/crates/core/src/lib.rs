//! Wedge-lifted codes over GF(2^ℓ): monomial classification, exact
//! dimensions, binary trace codes and disjoint repair groups.

pub mod bitlattice;
pub mod classify;
pub mod cli;
pub mod code;
pub mod field;
pub mod linalg;
pub mod repair;

pub use classify::{count_bad, Monomial, Route};
pub use code::{build_code, trace_code, BinaryTraceCode, WedgeLiftedCode};
pub use field::{make_coset_family, make_field, CosetFamily, FieldElement, FieldSpec};
pub use repair::{build_repair_plan, verify_drgp, RepairPlan};
