//! Holonomic approximation of formal jet sections near cubes of positive
//! codimension, and an h-principle pipeline for open invariant relations.

// Negated float comparisons below are deliberate: NaN must fail the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod hprinciple;
pub mod jet;
pub mod taylor;
pub mod wiggle;
