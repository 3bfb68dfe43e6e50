#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod cli;
pub mod error;
pub mod hb;
pub mod laplace;
pub mod polyfact;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};
