//! Exterior algebra over `ℝⁿ`: k-vectors, wedge products, the algebraic
//! Hodge star, and the Euclidean, mass and comass norms.

mod basis;
mod grassmann;
mod kvector;
mod normal_form;
mod norms;

pub use basis::{binomial, full_mask, wedge_sign, Basis, MultiIndex, MAX_DIM};
pub use grassmann::{ascend_random, best_plane, PlaneAscent, DEFAULT_RESTARTS, GRADIENT_TOL};
pub use kvector::KVector;
pub use normal_form::{normal_form_2, NormalForm2};
pub use norms::{
    comass_norm, euclid_norm, has_exact_oracle, is_decomposable, mass_decomposition, mass_norm, Decomposability,
    MassDecomposition, NormEstimate,
};

/// Algebraic Hodge star of a k-vector.
pub fn star_alg(v: &KVector) -> KVector {
    v.star()
}

pub fn wedge(a: &KVector, b: &KVector) -> crate::error::Result<KVector> {
    a.wedge(b)
}
