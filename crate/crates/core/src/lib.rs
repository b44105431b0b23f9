//! Period integrals and iterated period integrals of real-weight cusp forms
//! (powers of the Dedekind eta function), the noncommutative reciprocity
//! functions and Dedekind cocycles built from them, and exact/numeric checks
//! of all their functional equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact_core;
pub mod modular_group;
pub mod multipliers;
pub mod forms;
pub mod quadrature;
pub mod nc_series;
pub mod iterated_periods;
pub mod reciprocity;
pub mod cocycles;
pub mod app;

pub use error::{Error, Result};
