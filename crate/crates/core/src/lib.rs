#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary_data;
pub mod config;
pub mod estimates;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod linear;
pub mod output;
pub mod quadrature;
pub mod reference;
pub mod scenario;
pub mod solver;
