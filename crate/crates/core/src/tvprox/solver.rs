//! Accelerated projected ascent on the dual ball for
//!
//! `min_{ω ∈ C} E(ω) + ‖ω − ω̄‖² / (2h)`,  `E(ω) = max_{|y_s| ≤ 1} (y, dω)`.
//!
//! For a dual field `y` the inner minimizer is `ω(y) = P_C(ω̄ − h δy)`; the
//! dual function is smooth with gradient `dω(y)` and Lipschitz constant
//! `h‖d‖²`. The duality gap at `y` is `Σ_s W (|dω(y)|_s − y_s · dω(y)_s)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{site_norms, DualField, TVConfig};
use crate::error::{Error, Result};
use crate::grid::{weight, DiscreteForm, SparseOperator};

/// A closed convex set with an exact L² projection.
pub trait ConvexSet: Sync {
    fn project(&self, omega: &mut DiscreteForm);

    /// Distance-like feasibility defect; zero for the whole space.
    fn residual(&self, _omega: &DiscreteForm) -> f64 {
        0.0
    }
}

/// No constraint.
pub struct WholeSpace;

impl ConvexSet for WholeSpace {
    fn project(&self, _omega: &mut DiscreteForm) {}
}

#[derive(Clone, Debug)]
pub struct ProxSolution {
    pub omega: DiscreteForm,
    pub dual: DualField,
    /// Certified duality gap of `omega` against `dual`.
    pub gap: f64,
    /// Step objective `E(ω) + ‖ω − ω̄‖²/(2h)` at `omega`.
    pub objective: f64,
    pub iterations: usize,
    /// `‖y_{k+1} − y_k‖` of the last dual update, in W-norm.
    pub fixed_point_residual: f64,
}

const POWER_ITERS: usize = 50;
const GAP_EVERY: usize = 10;

/// `‖d‖` in the W-operator norm, by power iteration on `δd`.
pub fn operator_norm(d: &SparseOperator, delta: &SparseOperator) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
    let mut x: Vec<f64> = (0..d.cols()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut dx = vec![0.0; d.rows()];
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERS {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        d.mul_vec_into(&x, &mut dx);
        lambda = dx.iter().map(|v| v * v).sum::<f64>();
        delta.mul_vec_into(&dx, &mut x);
    }
    lambda.sqrt()
}

struct Workspace<'a> {
    center: &'a DiscreteForm,
    h: f64,
    set: &'a dyn ConvexSet,
    d: &'a SparseOperator,
    delta: &'a SparseOperator,
    comps: usize,
    w_dual: f64,
}

impl Workspace<'_> {
    /// `ω(y)` and `dω(y)`.
    fn primal(&self, y: &[f64]) -> (DiscreteForm, Vec<f64>) {
        let dy = self.delta.mul_vec(y);
        let mut omega = self.center.clone();
        for (o, v) in omega.values_mut().iter_mut().zip(&dy) {
            *o -= self.h * v;
        }
        self.set.project(&mut omega);
        let g = self.d.mul_vec(omega.values());
        (omega, g)
    }

    fn gap(&self, y: &[f64], g: &[f64]) -> f64 {
        let mut gap = 0.0;
        for (ys, gs) in y.chunks(self.comps).zip(g.chunks(self.comps)) {
            let norm = gs.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = ys.iter().zip(gs).map(|(a, b)| a * b).sum();
            gap += norm - dot;
        }
        self.w_dual * gap.max(0.0)
    }

    fn objective(&self, omega: &DiscreteForm, g: &[f64]) -> f64 {
        let tv: f64 = self.w_dual * site_norms(g, self.comps).iter().sum::<f64>();
        let dist = (omega - self.center).l2_norm();
        tv + dist * dist / (2.0 * self.h)
    }
}

fn project_ball(y: &mut [f64], comps: usize) {
    for ys in y.chunks_mut(comps) {
        let norm = ys.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1.0 {
            ys.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

pub fn solve(
    center: &DiscreteForm,
    h: f64,
    set: &dyn ConvexSet,
    cfg: &TVConfig,
    max_iters: usize,
    tol: f64,
    warm: Option<&DualField>,
) -> Result<ProxSolution> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "proximal step must be positive, got {h}"
        )));
    }
    cfg.validate()?;
    let grid = center.grid_arc().clone();
    let p = center.degree();
    let d = grid.d(p)?;
    let delta = grid.delta(p + 1)?;
    let comps = grid.components(p + 1);
    let ws = Workspace {
        center,
        h,
        set,
        d: &d,
        delta: &delta,
        comps,
        w_dual: weight(&grid, p + 1),
    };

    let lip = operator_norm(&d, &delta);
    let step = if lip > 0.0 {
        cfg.step_ratio * cfg.step_ratio / (h * lip * lip)
    } else {
        1.0
    };

    // start from the better of the cold and warm dual fields
    let mut y = vec![0.0; d.rows()];
    let (mut omega, mut g) = ws.primal(&y);
    let mut gap = ws.gap(&y, &g);
    if let Some(w) = warm.filter(|w| w.form().values().len() == y.len()) {
        let (wo, wg) = ws.primal(w.form().values());
        let wgap = ws.gap(w.form().values(), &wg);
        if wgap < gap {
            y = w.form().values().to_vec();
            omega = wo;
            g = wg;
            gap = wgap;
        }
    }
    let mut objective = ws.objective(&omega, &g);
    let converged = |gap: f64, objective: f64| gap <= tol * (1.0 + objective.abs());

    let mut z = y.clone();
    let mut t = 1.0f64;
    let mut fixed_point = 0.0;
    let mut iterations = 0;
    while !converged(gap, objective) {
        if iterations >= max_iters {
            return Err(Error::ProxNotConverged { iterations, gap });
        }
        iterations += 1;
        let (_, gz) = ws.primal(&z);
        let mut y_new: Vec<f64> = z.iter().zip(&gz).map(|(zi, gi)| zi + step * gi).collect();
        project_ball(&mut y_new, comps);

        // gradient-based adaptive restart
        let restart: f64 = z
            .iter()
            .zip(&y_new)
            .zip(&y)
            .map(|((zi, yn), yo)| (zi - yn) * (yn - yo))
            .sum();
        let t_new = if restart > 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        let momentum = if restart > 0.0 { 0.0 } else { (t - 1.0) / t_new };
        fixed_point = ws.w_dual.sqrt() * y_new.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        for i in 0..z.len() {
            z[i] = y_new[i] + momentum * (y_new[i] - y[i]);
        }
        y = y_new;
        t = t_new;

        if iterations % GAP_EVERY == 0 || iterations == max_iters {
            let (o, gy) = ws.primal(&y);
            gap = ws.gap(&y, &gy);
            objective = ws.objective(&o, &gy);
            omega = o;
        }
    }
    let dual = DualField::new(DiscreteForm::from_values(grid, p + 1, y)?)?;
    Ok(ProxSolution {
        omega,
        dual,
        gap,
        objective,
        iterations,
        fixed_point_residual: fixed_point,
    })
}
