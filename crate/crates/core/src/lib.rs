#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod qcore;
pub mod weakproto;
pub mod pointer;
pub mod fisher;
pub mod precision;
