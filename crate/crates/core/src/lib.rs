//! Simulator for a PT-symmetric two-level quantum heat engine.
//!
//! The working medium is a spin-½ in the complex field B = (J cos φ, −J sin φ, iγJ).
//! Slow loops in the (J, φ) control plane change level populations through the
//! imaginary part of the adiabatic phase, which makes a four-leg variable-mass
//! Otto cycle with efficiency 1 − J₂/J₁ possible without any explicit bath.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cycle;
pub mod error;
pub mod evolve;
pub mod matrix;
pub mod model;
pub mod quadrature;
pub mod thermo;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix2, Vector2};
pub use model::{Branch, ControlPoint, EigenSystem, SystemParams};
