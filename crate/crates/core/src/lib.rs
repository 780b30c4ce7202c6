#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxcount;
pub mod cli;
pub mod conditions;
pub mod dimension;
pub mod error;
pub mod exec;
pub mod families;
pub mod ifs;
pub mod mqv;
pub mod sampler;
pub mod series;

pub use error::{Error, Result};
pub use exec::Exec;
