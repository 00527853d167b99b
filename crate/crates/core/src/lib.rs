//! Bespoke ternary neural network circuits: exact generation, approximate
//! component libraries and accuracy/area co-optimization.

pub mod bdd;
pub mod bdderr;
pub mod cgp;
pub mod circuitgen;
pub mod complib;
pub mod error;
pub mod moo;
pub mod netlist;
pub mod tech;
pub mod tnn;
pub mod varsim;

pub use error::{Error, Result};
