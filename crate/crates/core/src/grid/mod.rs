//! Periodic cubical complex on the flat torus `T^n`: cochains, exterior
//! derivative, Hodge star, codifferential, and the current pairing.

mod form;
pub mod io;
mod operators;
mod sparse;
mod torus;

pub use form::DiscreteForm;
pub use operators::{build_d, build_star, delta, l2_inner, l2_norm, pairing, star, star_inv, weight};
pub use sparse::SparseOperator;
pub use torus::TorusGrid;
