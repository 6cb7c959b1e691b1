use std::ops::{Add, Sub};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::operators;
use super::torus::TorusGrid;
use crate::error::{Error, Result};
use crate::exterior::KVector;

/// A degree-p cochain on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteForm {
    grid: Arc<TorusGrid>,
    degree: usize,
    values: Vec<f64>,
}

impl DiscreteForm {
    pub fn zeros(grid: Arc<TorusGrid>, degree: usize) -> Result<Self> {
        if degree > grid.n() {
            return Err(Error::DegreeOutOfRange { degree, n: grid.n() });
        }
        let len = grid.cell_count(degree);
        Ok(Self {
            grid,
            degree,
            values: vec![0.0; len],
        })
    }

    pub fn from_values(grid: Arc<TorusGrid>, degree: usize, values: Vec<f64>) -> Result<Self> {
        if degree > grid.n() {
            return Err(Error::DegreeOutOfRange { degree, n: grid.n() });
        }
        if values.len() != grid.cell_count(degree) {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.cell_count(degree)
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite cochain value {v}")));
        }
        Ok(Self { grid, degree, values })
    }

    /// Constant-coefficient form with the given component per axis set.
    pub fn constant(grid: Arc<TorusGrid>, degree: usize, components: &[f64]) -> Result<Self> {
        if degree > grid.n() {
            return Err(Error::DegreeOutOfRange { degree, n: grid.n() });
        }
        if components.len() != grid.components(degree) {
            return Err(Error::DimensionMismatch(format!(
                "{} components for degree {degree} in dimension {}",
                components.len(),
                grid.n()
            )));
        }
        let values = components
            .iter()
            .copied()
            .cycle()
            .take(grid.cell_count(degree))
            .collect();
        Self::from_values(grid, degree, values)
    }

    /// Samples `f(position, component)` at the base vertex of every cell.
    pub fn from_fn(grid: Arc<TorusGrid>, degree: usize, mut f: impl FnMut(&[f64], usize) -> f64) -> Result<Self> {
        let c = grid.components(degree);
        let mut values = Vec::with_capacity(grid.cell_count(degree));
        for site in 0..grid.site_count() {
            let x = grid.position(site);
            for r in 0..c {
                values.push(f(&x, r));
            }
        }
        Self::from_values(grid, degree, values)
    }

    /// Independent standard normal values, deterministic per seed.
    pub fn random(grid: Arc<TorusGrid>, degree: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = grid.cell_count(degree);
        let values = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self { grid, degree, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn components(&self) -> usize {
        self.grid.components(self.degree)
    }

    /// Components collocated at `site`.
    pub fn at_site(&self, site: usize) -> &[f64] {
        let c = self.components();
        &self.values[site * c..(site + 1) * c]
    }

    pub fn at_site_mut(&mut self, site: usize) -> &mut [f64] {
        let c = self.components();
        &mut self.values[site * c..(site + 1) * c]
    }

    pub fn site_vector(&self, site: usize) -> KVector {
        KVector::from_coeffs(self.grid.n(), self.degree, self.at_site(site).to_vec())
            .expect("site components match C(n,p)")
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self {
            grid: self.grid.clone(),
            degree: self.degree,
            values,
        }
    }

    pub fn zeros_like(&self) -> Self {
        self.with_values(vec![0.0; self.values.len()])
    }

    pub fn scale(&self, s: f64) -> Self {
        self.with_values(self.values.iter().map(|v| v * s).collect())
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.values.len(), x.values.len(), "shape mismatch");
        for (y, xv) in self.values.iter_mut().zip(&x.values) {
            *y += a * xv;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        operators::l2_norm(self)
    }

    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        operators::l2_inner(self, other)
    }

    /// Exterior derivative.
    pub fn d(&self) -> Result<Self> {
        let d = self.grid.d(self.degree)?;
        Ok(Self {
            grid: self.grid.clone(),
            degree: self.degree + 1,
            values: d.mul_vec(&self.values),
        })
    }

    /// Codifferential, the L²-adjoint of `d`.
    pub fn delta(&self) -> Result<Self> {
        let delta = self.grid.delta(self.degree)?;
        Ok(Self {
            grid: self.grid.clone(),
            degree: self.degree - 1,
            values: delta.mul_vec(&self.values),
        })
    }

    /// Component-wise average over sites.
    pub fn site_mean(&self) -> Vec<f64> {
        let c = self.components();
        let mut mean = vec![0.0; c];
        for chunk in self.values.chunks(c) {
            for (m, v) in mean.iter_mut().zip(chunk) {
                *m += v;
            }
        }
        let s = self.grid.site_count() as f64;
        mean.iter_mut().for_each(|m| *m /= s);
        mean
    }
}

impl Add for &DiscreteForm {
    type Output = DiscreteForm;
    fn add(self, rhs: &DiscreteForm) -> DiscreteForm {
        assert_eq!(self.degree, rhs.degree, "degree mismatch");
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &DiscreteForm {
    type Output = DiscreteForm;
    fn sub(self, rhs: &DiscreteForm) -> DiscreteForm {
        assert_eq!(self.degree, rhs.degree, "degree mismatch");
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}
