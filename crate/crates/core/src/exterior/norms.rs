//! Mass and comass norms, decomposability, and minimal-mass decompositions.
//!
//! Degrees `k ∈ {0, 1, 2, n−2, n−1, n}` have exact values (Euclidean for the
//! trivially decomposable degrees, the 2-vector normal form otherwise).
//! Every other degree returns a certified bracket.

use super::grassmann::{best_plane, DEFAULT_RESTARTS};
use super::kvector::KVector;
use super::normal_form::normal_form_2;
use crate::error::{Error, Result};

const ASCENT_SEED: u64 = 0x6d61_7373;
const PURSUIT_RESTARTS: usize = 16;

/// A norm value with its certified bracket; `exact` when `lower == upper`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

impl NormEstimate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            lower: value,
            upper: value,
            exact: true,
        }
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Degrees at which mass and comass are computed exactly.
pub fn has_exact_oracle(n: usize, k: usize) -> bool {
    k <= 2 || k + 2 >= n
}

/// The same vector as a 2-vector, through the Hodge star when `k = n − 2`.
fn as_two_vector(v: &KVector) -> Option<KVector> {
    if v.k() == 2 {
        Some(v.clone())
    } else if v.k() + 2 == v.n() {
        Some(v.star())
    } else {
        None
    }
}

fn trivially_decomposable(v: &KVector) -> bool {
    v.k() <= 1 || v.k() + 1 >= v.n()
}

pub fn euclid_norm(v: &KVector) -> f64 {
    v.euclid_norm()
}

pub fn mass_norm(v: &KVector) -> NormEstimate {
    if trivially_decomposable(v) {
        return NormEstimate::exact(v.euclid_norm());
    }
    if let Some(w) = as_two_vector(v) {
        let nf = normal_form_2(&w).expect("degree 2");
        return NormEstimate::exact(nf.lambdas.iter().sum());
    }
    let upper = greedy_decomposition(v).1.min(v.l1_norm());
    let lower = v.euclid_norm();
    NormEstimate {
        value: upper,
        lower,
        upper,
        exact: false,
    }
}

pub fn comass_norm(v: &KVector) -> NormEstimate {
    if trivially_decomposable(v) {
        return NormEstimate::exact(v.euclid_norm());
    }
    if let Some(w) = as_two_vector(v) {
        let nf = normal_form_2(&w).expect("degree 2");
        return NormEstimate::exact(nf.lambdas[0]);
    }
    let best = best_plane(v, DEFAULT_RESTARTS, ASCENT_SEED);
    NormEstimate {
        value: best.value,
        lower: best.value,
        upper: v.euclid_norm(),
        exact: false,
    }
}

/// Matching pursuit over unit decomposables: an explicit decomposition whose
/// total is an upper bound on the mass. Leftover residual is spent in the
/// coordinate basis.
fn greedy_decomposition(v: &KVector) -> (Vec<KVector>, f64) {
    let n = v.n();
    let scale = v.euclid_norm();
    let mut residual = v.clone();
    let mut terms = Vec::new();
    let mut total = 0.0;
    let max_terms = 4 * v.coeffs().len();
    for t in 0..max_terms {
        if residual.euclid_norm() <= 1e-12 * scale {
            break;
        }
        let best = best_plane(&residual, PURSUIT_RESTARTS, ASCENT_SEED + t as u64);
        if best.value <= 1e-14 * scale {
            break;
        }
        let term = best.plane(n).scale(best.value);
        residual -= &term;
        total += term.euclid_norm();
        terms.push(term);
    }
    let b = residual.basis_table();
    for (r, &c) in residual.coeffs().iter().enumerate() {
        if c != 0.0 {
            let mut e = KVector::zero(n, v.k());
            e.coeffs_mut()[b.rank_of(b.mask(r)).expect("basis")] = c;
            total += c.abs();
            terms.push(e);
        }
    }
    (terms, total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decomposability {
    Decomposable,
    NotDecomposable,
    /// Neither the norm bracket nor the ascent could settle the question.
    Indeterminate,
}

/// Norm-equality test `|‖v‖ − |v|| ≤ tol·|v|`, cross-checked by `v ∧ v = 0`
/// for 2-vectors.
pub fn is_decomposable(v: &KVector, tol: f64) -> Result<Decomposability> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let e = v.euclid_norm();
    if e == 0.0 || trivially_decomposable(v) {
        return Ok(Decomposability::Decomposable);
    }
    if let Some(w) = as_two_vector(v) {
        let mass = mass_norm(v).value;
        let by_norm = (mass - e).abs() <= tol * e;
        let by_wedge = if w.n() >= 4 {
            w.wedge(&w).expect("degree 4 fits").euclid_norm() <= tol * e * e
        } else {
            true
        };
        return Ok(match (by_norm, by_wedge) {
            (true, true) => Decomposability::Decomposable,
            (false, false) => Decomposability::NotDecomposable,
            _ => Decomposability::Indeterminate,
        });
    }
    let mass = mass_norm(v);
    if mass.upper - e <= tol * e {
        return Ok(Decomposability::Decomposable);
    }
    if mass.lower - e > tol * e {
        return Ok(Decomposability::NotDecomposable);
    }
    let comass = comass_norm(v);
    if comass.lower >= (1.0 - tol) * e {
        return Ok(Decomposability::Decomposable);
    }
    Ok(Decomposability::Indeterminate)
}

/// Decomposable terms `b₁, …, b_l` with `Σ bᵢ = v` and `Σ |bᵢ| = ‖v‖`.
#[derive(Clone, Debug)]
pub struct MassDecomposition {
    pub terms: Vec<KVector>,
    pub total: f64,
}

pub fn mass_decomposition(v: &KVector) -> Result<MassDecomposition> {
    if trivially_decomposable(v) {
        let terms = if v.is_zero() { Vec::new() } else { vec![v.clone()] };
        return Ok(MassDecomposition {
            total: v.euclid_norm(),
            terms,
        });
    }
    if v.k() == 2 {
        let terms = normal_form_2(v)?.terms();
        let total = terms.iter().map(KVector::euclid_norm).sum();
        return Ok(MassDecomposition { terms, total });
    }
    if v.k() + 2 == v.n() {
        let terms: Vec<KVector> = normal_form_2(&v.star())?
            .terms()
            .iter()
            .map(KVector::star_inv)
            .collect();
        let total = terms.iter().map(KVector::euclid_norm).sum();
        return Ok(MassDecomposition { terms, total });
    }
    Err(Error::Unsupported(format!(
        "no exact mass decomposition in degree {} of dimension {}",
        v.k(),
        v.n()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, axes: &[usize]) -> KVector {
        KVector::basis(n, axes).unwrap()
    }

    #[test]
    fn exact_values() {
        assert_eq!(mass_norm(&e(4, &[0, 1])).value, 1.0);
        let symp = &e(4, &[0, 1]) + &e(4, &[2, 3]);
        assert!((mass_norm(&symp).value - 2.0).abs() < 1e-12);
        assert!((comass_norm(&symp).value - 1.0).abs() < 1e-12);
        assert!((mass_norm(&(e(3, &[0, 1, 2]) * 3.0)).value - 3.0).abs() < 1e-15);
        assert_eq!(comass_norm(&e(4, &[0, 1])).value, 1.0);

        let s6 = (&(&e(6, &[0, 1]) + &e(6, &[2, 3])) + &e(6, &[4, 5])) * 2.0;
        assert!((comass_norm(&s6).value - 2.0).abs() < 1e-12);
        assert!((mass_norm(&s6).value - 6.0).abs() < 1e-12);
        // n - 2 through the star
        let s6dual = s6.star();
        assert_eq!(s6dual.k(), 4);
        assert!((comass_norm(&s6dual).value - 2.0).abs() < 1e-12);
        assert!(mass_norm(&s6dual).exact);
    }

    #[test]
    fn decomposability() {
        use Decomposability::*;
        assert_eq!(is_decomposable(&e(4, &[0, 1]), 1e-9).unwrap(), Decomposable);
        let symp = &e(4, &[0, 1]) + &e(4, &[2, 3]);
        assert_eq!(is_decomposable(&symp, 1e-9).unwrap(), NotDecomposable);
        let simple = KVector::wedge_of_vectors(4, &[vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]]).unwrap();
        assert_eq!(is_decomposable(&simple, 1e-9).unwrap(), Decomposable);
        assert!(is_decomposable(&simple, 0.0).is_err());
    }

    #[test]
    fn decompositions() {
        let symp = &e(4, &[0, 1]) + &e(4, &[2, 3]);
        let d = mass_decomposition(&symp).unwrap();
        assert_eq!(d.terms.len(), 2);
        assert!((d.total - 2.0).abs() < 1e-12);

        let one = mass_decomposition(&e(4, &[0, 1])).unwrap();
        assert_eq!(one.terms.len(), 1);
        assert!((one.total - 1.0).abs() < 1e-12);

        let v = &(e(4, &[0, 1]) * 2.0) - &e(4, &[2, 3]);
        let d = mass_decomposition(&v).unwrap();
        assert!((d.total - 3.0).abs() < 1e-12);
        assert!((&d.terms[0] - &(e(4, &[0, 1]) * 2.0)).euclid_norm() < 1e-12);
        assert!((&d.terms[1] + &e(4, &[2, 3])).euclid_norm() < 1e-12);

        assert!(matches!(
            mass_decomposition(&KVector::zero(6, 3)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn bracket_for_three_vectors_in_six_dimensions() {
        // e123 + e456: two orthogonal planes
        let v = &e(6, &[0, 1, 2]) + &e(6, &[3, 4, 5]);
        let m = mass_norm(&v);
        assert!(!m.exact);
        assert!(m.lower <= m.upper);
        assert!((m.upper - 2.0).abs() < 1e-9);
        let c = comass_norm(&v);
        assert!((c.lower - 1.0).abs() < 1e-9);
        assert!(c.lower <= c.upper + 1e-12);
    }
}
