//! Exact perturbed-norm computations for weighted composition operators on
//! `C(S)` over a circle grid, plus a disk-algebra companion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod disk;
pub mod error;
pub mod measures;
pub mod operators;
pub mod scenario;
pub mod serde_util;
pub mod space;
pub mod summation;

pub use error::{LabError, Result};
