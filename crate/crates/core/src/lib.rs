//! Computations with one-dimensional noncommutative CW complexes at finite grid resolution.

pub mod error;
pub mod cartan;
pub mod catalog;
pub mod complex;
pub mod cu;
pub mod findim;
pub mod form;
pub mod homspec;
pub mod json;
pub mod standard;
pub mod testfn;

pub use error::{Error, Result};
