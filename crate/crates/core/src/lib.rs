// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod geometry;
pub mod kinetics;
pub mod mesh;
pub mod sparse;
pub mod timestepper;
