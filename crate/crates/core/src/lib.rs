// `!(x > 0.0)` guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hadamard;
pub mod liouville;
pub mod memsearch;
pub mod pulsekit;
pub mod qip2d;
pub mod specproc;
pub mod spinsys;

pub use error::{Error, Result};
