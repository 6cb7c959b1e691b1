use std::fmt;
use std::sync::{Arc, OnceLock};

use super::operators;
use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::exterior::{binomial, Basis, MAX_DIM};

/// Periodic cubical complex on `T^n = Π [0, Lᵢ)` with `Nᵢ` cells per axis.
///
/// Sites are the grid vertices in row-major order (last axis fastest); a
/// p-cell is a site together with a p-element axis set, and p-cochains are
/// stored site-major with the `C(n,p)` axis sets in lexicographic order.
pub struct TorusGrid {
    dims: Vec<usize>,
    lengths: Vec<f64>,
    spacings: Vec<f64>,
    strides: Vec<usize>,
    sites: usize,
    bases: Vec<Basis>,
    d_cache: Vec<OnceLock<Arc<SparseOperator>>>,
    delta_cache: Vec<OnceLock<Arc<SparseOperator>>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dims", &self.dims)
            .field("lengths", &self.lengths)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.lengths == other.lengths
    }
}

impl TorusGrid {
    pub fn new(dims: Vec<usize>, lengths: Vec<f64>) -> Result<Self> {
        let n = dims.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "grid dimension {n} not in 1..={MAX_DIM}"
            )));
        }
        if lengths.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} cell counts but {} periods",
                lengths.len()
            )));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidArgument(format!("cell count {d} < 2")));
        }
        if let Some(l) = lengths.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "period {l} must be positive and finite"
            )));
        }
        let spacings = dims.iter().zip(&lengths).map(|(&d, &l)| l / d as f64).collect();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let sites = dims.iter().product();
        Ok(Self {
            bases: (0..=n).map(|p| Basis::new(n, p)).collect(),
            d_cache: (0..=n).map(|_| OnceLock::new()).collect(),
            delta_cache: (0..=n).map(|_| OnceLock::new()).collect(),
            dims,
            lengths,
            spacings,
            strides,
            sites,
        })
    }

    /// Grid with unit spacing (`Lᵢ = Nᵢ`).
    pub fn unit(dims: Vec<usize>) -> Result<Self> {
        let lengths = dims.iter().map(|&d| d as f64).collect();
        Self::new(dims, lengths)
    }

    /// `N^n` cells on the unit torus.
    pub fn cube(n: usize, cells: usize, length: f64) -> Result<Self> {
        Self::new(vec![cells; n], vec![length; n])
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn site_count(&self) -> usize {
        self.sites
    }

    /// Volume of one grid cell, the quadrature weight of every site.
    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn components(&self, p: usize) -> usize {
        binomial(self.n(), p)
    }

    pub fn cell_count(&self, p: usize) -> usize {
        self.sites * self.components(p)
    }

    pub fn basis(&self, p: usize) -> &Basis {
        &self.bases[p]
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        (0..self.n()).map(|i| (site / self.strides[i]) % self.dims[i]).collect()
    }

    pub fn site_of(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .zip(&self.dims)
            .map(|((&c, &s), &d)| (c % d) * s)
            .sum()
    }

    /// Position of the base vertex of `site`.
    pub fn position(&self, site: usize) -> Vec<f64> {
        self.coords(site)
            .iter()
            .zip(&self.spacings)
            .map(|(&c, &h)| c as f64 * h)
            .collect()
    }

    /// Neighbouring site one step forward along `axis`, wrapping periodically.
    pub fn forward(&self, site: usize, axis: usize) -> usize {
        let s = self.strides[axis];
        let c = (site / s) % self.dims[axis];
        if c + 1 == self.dims[axis] {
            site + s - self.dims[axis] * s
        } else {
            site + s
        }
    }

    pub fn backward(&self, site: usize, axis: usize) -> usize {
        let s = self.strides[axis];
        let c = (site / s) % self.dims[axis];
        if c == 0 {
            site + (self.dims[axis] - 1) * s
        } else {
            site - s
        }
    }

    /// Cached exterior derivative `d_p`.
    pub fn d(&self, p: usize) -> Result<Arc<SparseOperator>> {
        if p >= self.n() {
            return Err(Error::DegreeOutOfRange { degree: p, n: self.n() });
        }
        Ok(self.d_cache[p]
            .get_or_init(|| Arc::new(operators::assemble_d(self, p)))
            .clone())
    }

    /// Cached codifferential `δ_p`, mapping p-cochains to (p−1)-cochains.
    pub fn delta(&self, p: usize) -> Result<Arc<SparseOperator>> {
        if p == 0 || p > self.n() {
            return Err(Error::DegreeOutOfRange { degree: p, n: self.n() });
        }
        let d = self.d(p - 1)?;
        Ok(self.delta_cache[p]
            .get_or_init(|| Arc::new(operators::assemble_delta(self, p, &d)))
            .clone())
    }
}
