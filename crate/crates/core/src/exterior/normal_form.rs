//! Spectral normal form of 2-vectors and the minimal-mass decompositions it yields.

#[cfg(test)]
use nalgebra::DMatrix;
use nalgebra::{DVector, SymmetricEigen};

use super::kvector::KVector;
use crate::error::{Error, Result};

/// `v = Σᵢ λᵢ · f_{2i} ∧ f_{2i+1}` with `λ₁ ≥ λ₂ ≥ … ≥ 0` and an orthonormal frame.
#[derive(Clone, Debug)]
pub struct NormalForm2 {
    pub lambdas: Vec<f64>,
    /// Orthonormal frame of `ℝⁿ`, one column vector per entry.
    pub frame: Vec<Vec<f64>>,
}

impl NormalForm2 {
    pub fn reconstruct(&self) -> KVector {
        let n = self.frame.len();
        let mut v = KVector::zero(n, 2);
        for (i, &l) in self.lambdas.iter().enumerate() {
            let plane =
                KVector::wedge_of_vectors(n, &self.frame[2 * i..2 * i + 2]).expect("frame vectors have length n");
            v.axpy(l, &plane);
        }
        v
    }

    /// The decomposable pieces `λᵢ f_{2i} ∧ f_{2i+1}` with `λᵢ > 0`.
    pub fn terms(&self) -> Vec<KVector> {
        let n = self.frame.len();
        self.lambdas
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(i, &l)| {
                KVector::wedge_of_vectors(n, &self.frame[2 * i..2 * i + 2])
                    .expect("frame vectors have length n")
                    .scale(l)
            })
            .collect()
    }
}

fn orthogonalize(u: &mut DVector<f64>, against: &[DVector<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for f in against {
            let c = f.dot(u);
            u.axpy(-c, f, 1.0);
        }
    }
}

/// Normal form of a 2-vector from the spectrum of `AᵀA`, `A` its skew matrix.
pub fn normal_form_2(v: &KVector) -> Result<NormalForm2> {
    if v.k() != 2 {
        return Err(Error::InvalidArgument(format!(
            "normal form needs a 2-vector, got degree {}",
            v.k()
        )));
    }
    let n = v.n();
    let a = v.to_skew_matrix();
    let s = a.transpose() * &a;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let scale = v.euclid_norm();
    let null_tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut paired: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut lambdas = Vec::with_capacity(n / 2);
    let mut kernel: Vec<DVector<f64>> = Vec::new();

    for &i in &order {
        let mut u: DVector<f64> = eig.eigenvectors.column(i).into_owned();
        let mut taken = paired.clone();
        taken.extend(kernel.iter().cloned());
        orthogonalize(&mut u, &taken);
        let len = u.norm();
        if len < 1e-6 {
            continue;
        }
        u /= len;
        let au = &a * &u;
        let lambda = au.norm();
        if lambda <= null_tol || lambdas.len() == n / 2 {
            kernel.push(u);
            continue;
        }
        let mut fa = au / lambda;
        orthogonalize(&mut fa, &paired);
        let fa_len = fa.norm();
        fa /= fa_len;
        paired.push(fa);
        paired.push(u);
        lambdas.push(lambda);
    }

    // complete the frame from the kernel, topping up numerically lost directions
    let mut frame = paired;
    frame.extend(kernel);
    let mut e = 0;
    while frame.len() < n {
        let mut u = DVector::from_fn(n, |r, _| if r == e { 1.0 } else { 0.0 });
        e += 1;
        orthogonalize(&mut u, &frame);
        let len = u.norm();
        if len > 1e-6 {
            frame.push(u / len);
        }
    }
    while lambdas.len() < n / 2 {
        lambdas.push(0.0);
    }
    Ok(NormalForm2 {
        lambdas,
        frame: frame.into_iter().map(|c| c.as_slice().to_vec()).collect(),
    })
}

#[cfg(test)]
fn frame_matrix(frame: &[Vec<f64>]) -> DMatrix<f64> {
    let n = frame.len();
    DMatrix::from_fn(n, n, |r, c| frame[c][r])
}
