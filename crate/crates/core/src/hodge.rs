//! Discrete Hodge decomposition `ω = dα + δβ + h` on the torus.
//!
//! Harmonic forms on a flat torus are the constant-coefficient forms, so the
//! harmonic part is the component-wise mean. The exact and coexact parts come
//! from conjugate-gradient solves against the Hodge Laplacian with right-hand
//! sides projected off its kernel.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::{DiscreteForm, SparseOperator, TorusGrid};

pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// `Δ_p = d δ + δ d`.
pub fn laplacian(grid: &TorusGrid, p: usize) -> Result<SparseOperator> {
    let n = grid.n();
    if p > n {
        return Err(Error::DegreeOutOfRange { degree: p, n });
    }
    let size = grid.cell_count(p);
    let mut lap = SparseOperator::from_triplets(size, size, Vec::new());
    if p >= 1 {
        lap = lap.add(&grid.d(p - 1)?.matmul(&*grid.delta(p)?));
    }
    if p < n {
        lap = lap.add(&grid.delta(p + 1)?.matmul(&*grid.d(p)?));
    }
    Ok(lap)
}

#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// semidefinite operator with a consistent right-hand side.
pub fn conjugate_gradient(
    op: &SparseOperator,
    rhs: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, CgOutcome)> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok((
            x,
            CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = op
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut rel = 1.0;
    for it in 1..=max_iters {
        op.mul_vec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::CgNotConverged {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        if rel <= tol {
            return Ok((
                x,
                CgOutcome {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::CgNotConverged {
        iterations: max_iters,
        residual: rel,
    })
}

fn remove_mean(form: &mut DiscreteForm) {
    let mean = form.site_mean();
    let c = mean.len();
    for chunk in form.values_mut().chunks_mut(c) {
        for (v, m) in chunk.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
}

/// Solves `Δ x = rhs` with `x` orthogonal to the harmonic forms.
fn solve_laplacian(rhs: &DiscreteForm, cg_tol: f64) -> Result<(DiscreteForm, CgOutcome)> {
    let mut b = rhs.clone();
    remove_mean(&mut b);
    let lap = laplacian(rhs.grid(), rhs.degree())?;
    let max_iters = 10 * b.values().len();
    let (x, out) = conjugate_gradient(&lap, b.values(), cg_tol, max_iters)?;
    let mut x = rhs.with_values(x);
    remove_mean(&mut x);
    Ok((x, out))
}

/// Constant-coefficient form with the component-wise mean of `omega`.
pub fn harmonic_projection(omega: &DiscreteForm) -> DiscreteForm {
    DiscreteForm::constant(omega.grid_arc().clone(), omega.degree(), &omega.site_mean())
        .expect("mean has C(n,p) components")
}

#[derive(Clone, Debug)]
pub struct HodgeSplit {
    pub exact: DiscreteForm,
    pub coexact: DiscreteForm,
    pub harmonic: DiscreteForm,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct HodgeResiduals {
    /// `‖ω − (exact + coexact + harmonic)‖ / ‖ω‖`.
    pub reconstruction: f64,
    /// Largest pairwise `|(a, b)| / ‖ω‖²`.
    pub orthogonality: f64,
    /// `(‖ω‖² − Σ‖part‖²) / ‖ω‖²`.
    pub pythagoras: f64,
}

impl HodgeSplit {
    pub fn residuals(&self, omega: &DiscreteForm) -> HodgeResiduals {
        let norm = omega.l2_norm();
        let scale = if norm > 0.0 { norm } else { 1.0 };
        let mut sum = self.exact.clone();
        sum.axpy(1.0, &self.coexact);
        sum.axpy(1.0, &self.harmonic);
        let reconstruction = (omega - &sum).l2_norm() / scale;
        let inner = |a: &DiscreteForm, b: &DiscreteForm| a.l2_inner(b).expect("same shape").abs();
        let orthogonality = inner(&self.exact, &self.coexact)
            .max(inner(&self.exact, &self.harmonic))
            .max(inner(&self.coexact, &self.harmonic))
            / (scale * scale);
        let parts = self.exact.l2_norm().powi(2) + self.coexact.l2_norm().powi(2) + self.harmonic.l2_norm().powi(2);
        HodgeResiduals {
            reconstruction,
            orthogonality,
            pythagoras: (norm * norm - parts).abs() / (scale * scale),
        }
    }
}

fn check_tol(cg_tol: f64) -> Result<()> {
    if cg_tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "cg tolerance must be positive, got {cg_tol}"
        )))
    }
}

fn coexact_part(omega: &DiscreteForm, cg_tol: f64) -> Result<DiscreteForm> {
    if omega.degree() == omega.grid().n() {
        return Ok(omega.zeros_like());
    }
    let (beta, _) = solve_laplacian(&omega.d()?, cg_tol)?;
    beta.delta()
}

fn exact_part(omega: &DiscreteForm, cg_tol: f64) -> Result<DiscreteForm> {
    if omega.degree() == 0 {
        return Ok(omega.zeros_like());
    }
    let (alpha, _) = solve_laplacian(&omega.delta()?, cg_tol)?;
    alpha.d()
}

pub fn hodge_decompose(omega: &DiscreteForm, cg_tol: f64) -> Result<HodgeSplit> {
    check_tol(cg_tol)?;
    Ok(HodgeSplit {
        exact: exact_part(omega, cg_tol)?,
        coexact: coexact_part(omega, cg_tol)?,
        harmonic: harmonic_projection(omega),
    })
}

/// Projection onto the closed forms `im d ⊕ harmonic`, i.e. `ω` minus its
/// coexact part.
pub fn closed_projection(omega: &DiscreteForm, cg_tol: f64) -> Result<DiscreteForm> {
    check_tol(cg_tol)?;
    Ok(omega - &coexact_part(omega, cg_tol)?)
}

/// Numerical dimension of `ker Δ_p`: random forms are stripped of their
/// range component by an unprojected CG solve, and the rank of what remains
/// is read off the Gram matrix.
pub fn kernel_dimension(grid: &std::sync::Arc<TorusGrid>, p: usize, samples: usize, seed: u64) -> Result<usize> {
    let lap = laplacian(grid, p)?;
    let mut kernel = Vec::with_capacity(samples);
    for s in 0..samples {
        let r = DiscreteForm::random(grid.clone(), p, seed.wrapping_add(s as u64));
        let lr = lap.mul_vec(r.values());
        let (x, _) = conjugate_gradient(&lap, &lr, 1e-12, 20 * lr.len())?;
        kernel.push(&r - &r.with_values(x));
    }
    let gram = DMatrix::from_fn(samples, samples, |i, j| {
        kernel[i].l2_inner(&kernel[j]).expect("same shape")
    });
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(eig.eigenvalues.iter().filter(|&&v| v > 1e-8 * top).count())
}
