//! Numerical toolkit for deciding whether a sampled vector field on the flat
//! 3-torus is a steady Euler flow for some Riemannian metric.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command line and
//! anything touching the operating system live in the companion `eulerize`
//! crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod certifier;
pub mod currents;
pub mod dec;
mod error;
pub mod field_zoo;
pub mod fields;
pub mod grid;
pub mod linalg;
pub mod math;
pub mod metric;
pub mod ode;
pub mod plug_lab;

pub use error::{Error, Result};
pub use fields::{OneForm, ScalarField0, ThreeForm, TwoForm, VectorField};
pub use grid::Grid3;
