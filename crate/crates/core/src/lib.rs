//! Differentially private leading eigenvector release for graphs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod graph;
pub mod linalg;
pub mod noise;
pub mod spectral;
pub mod synthetic;
pub mod ppm;
pub mod ptr;
pub mod subset;
pub mod harness;
