// NaN must fail the range checks, hence `!(x > 0.0)` style comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod charsol;
pub mod cli;
pub mod corollary;
pub mod functions;
pub mod hermite;
pub mod kernel;
pub mod output;
pub mod poly;
pub mod quadrature;
pub mod remainder;
