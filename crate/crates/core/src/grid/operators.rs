//! Exterior derivative, Hodge star, codifferential and the L² structure.
//!
//! Cochain values approximate pointwise form components: `d` carries the
//! finite-difference factor `1/hᵢ`, the star is the signed complement
//! permutation, and every degree shares the quadrature weight
//! `W = Π hᵢ` per cell.

use super::form::DiscreteForm;
use super::sparse::SparseOperator;
use super::torus::TorusGrid;
use crate::error::{Error, Result};
use crate::exterior::{full_mask, wedge_sign};

pub(crate) fn assemble_d(grid: &TorusGrid, p: usize) -> SparseOperator {
    let n = grid.n();
    let from = grid.basis(p);
    let to = grid.basis(p + 1);
    let (cf, ct) = (from.len(), to.len());
    let mut triplets = Vec::with_capacity(grid.site_count() * ct * 2 * (p + 1));
    for site in 0..grid.site_count() {
        for (rj, &jmask) in to.masks().iter().enumerate() {
            let row = site * ct + rj;
            for axis in 0..n {
                let bit = 1u32 << axis;
                if jmask & bit == 0 {
                    continue;
                }
                let imask = jmask & !bit;
                // dx_axis ∧ dx_I = sign · dx_J
                let sign = f64::from(wedge_sign(bit, imask));
                let ri = from.rank_of(imask).expect("face has rank");
                let w = sign / grid.spacings()[axis];
                triplets.push((row, grid.forward(site, axis) * cf + ri, w));
                triplets.push((row, site * cf + ri, -w));
            }
        }
    }
    SparseOperator::from_triplets(grid.cell_count(p + 1), grid.cell_count(p), triplets)
}

pub(crate) fn assemble_delta(grid: &TorusGrid, p: usize, d_prev: &SparseOperator) -> SparseOperator {
    // δ_p = W_{p-1}^{-1} d_{p-1}^T W_p
    let ratio = weight(grid, p) / weight(grid, p - 1);
    d_prev.transpose().scale(ratio)
}

/// Quadrature weight of a p-cell in the L² inner product.
pub fn weight(grid: &TorusGrid, _p: usize) -> f64 {
    grid.cell_volume()
}

pub fn build_d(grid: &TorusGrid, p: usize) -> Result<SparseOperator> {
    grid.d(p).map(|d| (*d).clone())
}

pub fn delta(grid: &TorusGrid, p: usize) -> Result<SparseOperator> {
    grid.delta(p).map(|d| (*d).clone())
}

/// Diagonal star from p-cochains to (n−p)-cochains, `⋆ dx_I = sign(I, Iᶜ) dx_{Iᶜ}`.
pub fn build_star(grid: &TorusGrid, p: usize) -> Result<SparseOperator> {
    let n = grid.n();
    if p > n {
        return Err(Error::DegreeOutOfRange { degree: p, n });
    }
    let (from, to) = (grid.basis(p), grid.basis(n - p));
    let full = full_mask(n);
    let map: Vec<(usize, f64)> = from
        .masks()
        .iter()
        .map(|&m| {
            let comp = full & !m;
            (to.rank_of(comp).expect("complement"), f64::from(wedge_sign(m, comp)))
        })
        .collect();
    let (cf, ct) = (from.len(), to.len());
    let mut triplets = Vec::with_capacity(grid.cell_count(p));
    for site in 0..grid.site_count() {
        for (r, &(rc, s)) in map.iter().enumerate() {
            triplets.push((site * ct + rc, site * cf + r, s));
        }
    }
    Ok(SparseOperator::from_triplets(
        grid.cell_count(n - p),
        grid.cell_count(p),
        triplets,
    ))
}

fn check_same(a: &DiscreteForm, b: &DiscreteForm) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::DimensionMismatch("forms live on different grids".into()));
    }
    if a.degree() != b.degree() {
        return Err(Error::DimensionMismatch(format!(
            "degrees {} and {} differ",
            a.degree(),
            b.degree()
        )));
    }
    Ok(())
}

pub fn l2_inner(a: &DiscreteForm, b: &DiscreteForm) -> Result<f64> {
    check_same(a, b)?;
    let w = weight(a.grid(), a.degree());
    Ok(w * a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>())
}

pub fn l2_norm(a: &DiscreteForm) -> f64 {
    let w = weight(a.grid(), a.degree());
    (w * a.values().iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// Hodge star of a form.
pub fn star(omega: &DiscreteForm) -> DiscreteForm {
    let grid = omega.grid_arc();
    let s = build_star(grid, omega.degree()).expect("degree within range");
    DiscreteForm::from_values(grid.clone(), grid.n() - omega.degree(), s.mul_vec(omega.values()))
        .expect("star preserves cell counts")
}

pub fn star_inv(omega: &DiscreteForm) -> DiscreteForm {
    let (n, p) = (omega.grid().n(), omega.degree());
    let s = star(omega);
    if (p * (n - p)) % 2 == 0 {
        s
    } else {
        s.scale(-1.0)
    }
}

/// Current pairing `T_ω(ρ) = ∫ ρ ∧ ω` for complementary degrees.
pub fn pairing(rho: &DiscreteForm, omega: &DiscreteForm) -> Result<f64> {
    if rho.grid() != omega.grid() {
        return Err(Error::DimensionMismatch("forms live on different grids".into()));
    }
    let n = rho.grid().n();
    if rho.degree() + omega.degree() != n {
        return Err(Error::DimensionMismatch(format!(
            "degrees {} and {} are not complementary in dimension {n}",
            rho.degree(),
            omega.degree()
        )));
    }
    l2_inner(rho, &star_inv(omega))
}
