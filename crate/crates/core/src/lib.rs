//! Minimal surfaces in the neutral product S^2_p x S^2_p.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod frenet;
pub mod fundata;
pub mod gordon;
pub mod grid;
pub mod immersion;
pub mod product;
pub mod surfaces;

pub use error::{Error, Result};
