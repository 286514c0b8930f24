#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Core-radius-regularized mechanics of closed dislocation loops in linear
//! elasticity: the singular strain of a loop, its cutoff energy, the
//! renormalized Peach–Koehler force, and the gradient flows it drives.

pub mod banded;
pub mod cli;
pub mod energy;
pub mod error;
pub mod flow;
pub mod force;
pub mod geometry;
pub mod quadrature;
pub mod spectral;
pub mod strain;

pub use error::{Error, Result};
