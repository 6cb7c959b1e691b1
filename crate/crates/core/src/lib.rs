//! Total-variation proximal flows for discrete differential forms on flat tori.
//!
//! A degree-p form on a periodic cubical grid represents a current; its
//! boundary noise is the total variation `E(ω) = ∫|dω|`. Proximal iteration on
//! `E` drives the form to the nearest closed form, and constraining each step
//! to the cone of a calibration produces calibrated cycles.

pub mod cone;
pub mod error;
pub mod exterior;
pub mod flow;
pub mod grid;
pub mod hodge;
pub mod tvprox;

pub use error::{Error, Result};
