//! Total-variation energy `E(ω) = ∫|dω|` and its proximal operator.
//!
//! The components of `dω` sharing a base vertex are grouped into one
//! (p+1)-covector per site and measured with the Euclidean norm; the
//! half-cell stagger between components is ignored.

mod solver;

pub use solver::{operator_norm, solve, ConvexSet, ProxSolution, WholeSpace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{weight, DiscreteForm};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TVConfig {
    pub inner_max_iters: usize,
    /// Relative duality-gap threshold.
    pub inner_tol: f64,
    /// Fraction of the largest stable dual step, in (0, 1).
    pub step_ratio: f64,
}

impl Default for TVConfig {
    fn default() -> Self {
        Self {
            inner_max_iters: 20_000,
            inner_tol: 1e-8,
            step_ratio: 0.95,
        }
    }
}

impl TVConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol.is_finite() && self.inner_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inner_tol must be positive, got {}",
                self.inner_tol
            )));
        }
        if !(self.step_ratio > 0.0 && self.step_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "step_ratio must lie in (0, 1), got {}",
                self.step_ratio
            )));
        }
        Ok(())
    }
}

/// A (p+1)-form with every collocated site vector in the closed unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct DualField(DiscreteForm);

impl DualField {
    pub fn new(form: DiscreteForm) -> Result<Self> {
        let comps = form.components();
        let worst = site_norms(form.values(), comps).into_iter().fold(0.0f64, f64::max);
        if worst > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!("dual field has site norm {worst} > 1")));
        }
        Ok(Self(form))
    }

    pub fn form(&self) -> &DiscreteForm {
        &self.0
    }

    pub fn max_site_norm(&self) -> f64 {
        site_norms(self.0.values(), self.0.components())
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub(crate) fn site_norms(values: &[f64], comps: usize) -> Vec<f64> {
    values
        .chunks(comps)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

fn check_degree(omega: &DiscreteForm) -> Result<()> {
    if omega.degree() >= omega.grid().n() {
        return Err(Error::DegreeOutOfRange {
            degree: omega.degree(),
            n: omega.grid().n(),
        });
    }
    Ok(())
}

/// `Σ_s W |(dω)_s|`.
pub fn tv_energy(omega: &DiscreteForm) -> Result<f64> {
    check_degree(omega)?;
    let dw = omega.d()?;
    let w = weight(omega.grid(), dw.degree());
    Ok(w * site_norms(dw.values(), dw.components()).iter().sum::<f64>())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DualBound {
    /// Best pairing `(y, dω)` over unit-bounded dual fields; a lower bound on `E(ω)`.
    pub value: f64,
    /// `tv_energy(ω) − value ≥ 0`.
    pub gap: f64,
}

const DUAL_ASCENT_STEPS: usize = 50;

/// Lower bound on `E(ω)` from its sup definition: projected ascent of the
/// pairing `(y, dω)_W = (δy, ω)_W` over dual fields with `|y_s| ≤ 1`,
/// from `restarts` random starting fields.
pub fn tv_energy_dual(omega: &DiscreteForm, restarts: usize, seed: u64) -> Result<DualBound> {
    let primal = tv_energy(omega)?;
    let dw = omega.d()?;
    let comps = dw.components();
    let w = weight(omega.grid(), dw.degree());
    let g = dw.values();
    let gmax = site_norms(g, comps).into_iter().fold(0.0f64, f64::max);
    if gmax == 0.0 {
        return Ok(DualBound {
            value: 0.0,
            gap: primal,
        });
    }
    let step = 1.0 / gmax;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..restarts.max(1) {
        let mut y: Vec<f64> = (0..g.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        for ys in y.chunks_mut(comps) {
            let norm = ys.iter().map(|v| v * v).sum::<f64>().sqrt();
            ys.iter_mut().for_each(|v| *v /= norm.max(1.0));
        }
        for _ in 0..DUAL_ASCENT_STEPS {
            for (ys, gs) in y.chunks_mut(comps).zip(g.chunks(comps)) {
                for (a, b) in ys.iter_mut().zip(gs) {
                    *a += step * b;
                }
                let norm = ys.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1.0 {
                    ys.iter_mut().for_each(|v| *v /= norm);
                }
            }
        }
        let value = w * y.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
        best = best.max(value);
    }
    Ok(DualBound {
        value: best,
        gap: primal - best,
    })
}

/// `argmin_ω E(ω) + ‖ω − ω̄‖² / (2h)`.
pub fn prox_tv(omega_bar: &DiscreteForm, h: f64, cfg: &TVConfig) -> Result<ProxSolution> {
    check_degree(omega_bar)?;
    solve(omega_bar, h, &WholeSpace, cfg, cfg.inner_max_iters, cfg.inner_tol, None)
}

/// [`prox_tv`] warm-started from a previous dual field.
pub fn prox_tv_warm(
    omega_bar: &DiscreteForm,
    h: f64,
    cfg: &TVConfig,
    warm: Option<&DualField>,
) -> Result<ProxSolution> {
    check_degree(omega_bar)?;
    solve(omega_bar, h, &WholeSpace, cfg, cfg.inner_max_iters, cfg.inner_tol, warm)
}
