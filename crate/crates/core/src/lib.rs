#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arnoldi;
pub mod baselines;
pub mod compress;
pub mod dense_eq;
pub mod error;
pub mod linalg;
pub mod mtx;
pub mod problems;
pub mod report;
pub mod restart;
pub mod rng;
pub mod sparse;
pub mod timing;
