#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod case_io;
pub mod grid;
pub mod metrics;
pub mod mpp;
pub mod opf;
pub mod qp;
pub mod sensitivity;
