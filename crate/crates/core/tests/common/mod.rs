//! Reference implementations used as test oracles. They share only grid
//! geometry (site layout, basis order) with the library.
#![allow(dead_code)]

use std::sync::Arc;

use currentflow::grid::{DiscreteForm, TorusGrid};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(r)).collect()
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

/// Dense exterior derivative built from forward differences, with the sign
/// of `dx_a ∧ dx_{J∖a}` counted directly.
pub fn dense_d(grid: &TorusGrid, p: usize) -> DMatrix<f64> {
    let (from, to) = (grid.basis(p), grid.basis(p + 1));
    let sites = grid.site_count();
    let mut m = DMatrix::zeros(sites * to.len(), sites * from.len());
    for s in 0..sites {
        for (rj, &jm) in to.masks().iter().enumerate() {
            for a in 0..grid.n() {
                if jm & (1 << a) == 0 {
                    continue;
                }
                let rest = jm & !(1 << a);
                let before = (0..a).filter(|&b| jm & (1 << b) != 0).count();
                let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
                let ri = from.masks().iter().position(|&x| x == rest).unwrap();
                let h = grid.spacings()[a];
                let fwd = grid.forward(s, a);
                m[(s * to.len() + rj, fwd * from.len() + ri)] += sign / h;
                m[(s * to.len() + rj, s * from.len() + ri)] -= sign / h;
            }
        }
    }
    m
}

/// `W Σ_s |(Dω)_s|` with grouped site norms.
pub fn dense_tv(grid: &TorusGrid, p: usize, d: &DMatrix<f64>, omega: &[f64]) -> f64 {
    let g = d * DVector::from_column_slice(omega);
    let comps = grid.components(p + 1);
    grid.cell_volume()
        * g.as_slice()
            .chunks(comps)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum::<f64>()
}

pub fn step_objective(center: &DiscreteForm, h: f64, omega: &[f64]) -> f64 {
    let grid = center.grid();
    let d = dense_d(grid, center.degree());
    let dist2: f64 = omega.iter().zip(center.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    dense_tv(grid, center.degree(), &d, omega) + grid.cell_volume() * dist2 / (2.0 * h)
}

/// Pointwise cones with projections written independently of the library.
#[derive(Clone, Debug)]
pub enum OracleCone {
    Free,
    Nonneg,
    Ray(Vec<f64>),
    /// `e₁₂ + e₃₄` on ℝ⁴, via the symmetric matrix `A(w) J` of the
    /// J-invariant part.
    Kahler,
}

fn complex_structure() -> DMatrix<f64> {
    // J e1 = e2, J e3 = e4
    let mut j = DMatrix::zeros(4, 4);
    j[(1, 0)] = 1.0;
    j[(0, 1)] = -1.0;
    j[(3, 2)] = 1.0;
    j[(2, 3)] = -1.0;
    j
}

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn kahler_project(w: &[f64]) -> Vec<f64> {
    let mut a = DMatrix::zeros(4, 4);
    for (r, &(i, j)) in PAIRS.iter().enumerate() {
        a[(i, j)] = w[r];
        a[(j, i)] = -w[r];
    }
    let jm = complex_structure();
    let inv = (&a + jm.transpose() * &a * &jm) * 0.5;
    let s = &inv * &jm;
    let s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let s_plus = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let a_plus = -(&s_plus * &jm);
    PAIRS
        .iter()
        .map(|&(i, j)| 0.5 * (a_plus[(i, j)] - a_plus[(j, i)]))
        .collect()
}

impl OracleCone {
    pub fn project(&self, w: &mut [f64]) {
        match self {
            OracleCone::Free => {}
            OracleCone::Nonneg => w.iter_mut().for_each(|x| *x = x.max(0.0)),
            OracleCone::Ray(r) => {
                let t: f64 = w.iter().zip(r).map(|(a, b)| a * b).sum::<f64>().max(0.0);
                w.iter_mut().zip(r).for_each(|(x, ri)| *x = t * ri);
            }
            OracleCone::Kahler => {
                let p = kahler_project(w);
                w.copy_from_slice(&p);
            }
        }
    }

    pub fn project_field(&self, values: &mut [f64], comps: usize) {
        for s in values.chunks_mut(comps) {
            self.project(s);
        }
    }
}

pub struct OracleStep {
    pub omega: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// ADMM on `min W Σ|z_s| + W‖x − ω̄‖²/(2h)` with `z = Dx`, `u = x ∈ C` and,
/// when `normalization = Some((a, t))`, `v = x` on `{W Σ_s ⟨a, v_s⟩ = t}`.
/// The returned point is exactly feasible.
pub fn admm_step(
    center: &DiscreteForm,
    h: f64,
    cone: &OracleCone,
    normalization: Option<(&[f64], f64)>,
    max_iters: usize,
) -> OracleStep {
    let grid = center.grid();
    let p = center.degree();
    let w = grid.cell_volume();
    let d = dense_d(grid, p);
    let (m, q) = (d.ncols(), d.nrows());
    let comps = grid.components(p);
    let dcomps = grid.components(p + 1);
    let bar = DVector::from_column_slice(center.values());
    let blocks = 1.0 + if normalization.is_some() { 1.0 } else { 0.0 };
    let dtd = d.transpose() * &d;
    let aw: Option<(DVector<f64>, f64)> = normalization.map(|(a, t)| {
        let full: Vec<f64> = (0..grid.site_count()).flat_map(|_| a.iter().map(|x| x * w)).collect();
        (DVector::from_vec(full), t)
    });

    // objective scaled by 1/W: Σ|z_s| + ‖x − ω̄‖²/(2h)
    let mut rho = 1.0 / h;
    let factor = |rho: f64| {
        let mut k = &dtd * rho;
        for i in 0..m {
            k[(i, i)] += 1.0 / h + rho * blocks;
        }
        k.cholesky().expect("positive definite")
    };
    let mut chol = factor(rho);
    let mut x = bar.clone();
    let mut z = &d * &x;
    let mut u = x.clone();
    let mut v = x.clone();
    let (mut lz, mut lu, mut lv) = (DVector::zeros(q), DVector::zeros(m), DVector::zeros(m));
    let mut iterations = 0;
    for it in 0..max_iters {
        iterations = it + 1;
        let mut rhs = &bar / h + d.transpose() * (&z - &lz) * rho + (&u - &lu) * rho;
        if aw.is_some() {
            rhs += (&v - &lv) * rho;
        }
        x = chol.solve(&rhs);
        let dx = &d * &x;
        let z_old = z.clone();
        let u_old = u.clone();
        let v_old = v.clone();
        z = &dx + &lz;
        for s in z.as_mut_slice().chunks_mut(dcomps) {
            let norm = s.iter().map(|t| t * t).sum::<f64>().sqrt();
            let shrink = if norm > 1.0 / rho {
                1.0 - 1.0 / (rho * norm)
            } else {
                0.0
            };
            s.iter_mut().for_each(|t| *t *= shrink);
        }
        u = &x + &lu;
        cone.project_field(u.as_mut_slice(), comps);
        if let Some((a, t)) = &aw {
            let y = &x + &lv;
            v = &y + a * ((t - a.dot(&y)) / a.norm_squared());
        }
        lz += &dx - &z;
        lu += &x - &u;
        let mut primal = (&dx - &z).norm_squared() + (&x - &u).norm_squared();
        let mut dual = (d.transpose() * (&z - &z_old)).norm_squared() + (&u - &u_old).norm_squared();
        if aw.is_some() {
            lv += &x - &v;
            primal += (&x - &v).norm_squared();
            dual += (&v - &v_old).norm_squared();
        }
        let (primal, dual) = (primal.sqrt(), rho * dual.sqrt());
        let scale = 1.0 + x.norm();
        if primal < 1e-12 * scale && dual < 1e-12 * scale {
            break;
        }
        if it % 50 == 49 {
            let ratio = if primal > 10.0 * dual {
                2.0
            } else if dual > 10.0 * primal {
                0.5
            } else {
                1.0
            };
            if ratio != 1.0 {
                rho *= ratio;
                lz /= ratio;
                lu /= ratio;
                lv /= ratio;
                chol = factor(rho);
            }
        }
    }
    let mut omega: Vec<f64> = match cone {
        OracleCone::Free if aw.is_none() => x.as_slice().to_vec(),
        _ => u.as_slice().to_vec(),
    };
    cone.project_field(&mut omega, comps);
    if let Some((a, t)) = &aw {
        let cur: f64 = a.iter().zip(&omega).map(|(x, y)| x * y).sum();
        omega.iter_mut().for_each(|o| *o *= t / cur);
    }
    let objective = step_objective(center, h, &omega);
    OracleStep {
        omega,
        objective,
        iterations,
    }
}

pub fn circle(n: usize) -> Arc<TorusGrid> {
    Arc::new(TorusGrid::new(vec![n], vec![1.0]).unwrap())
}

/// Projected subgradient descent with step `c/√(t+1)`, returning the best
/// objective seen; an upper bound on the optimum.
pub fn subgradient_step(center: &DiscreteForm, h: f64, iters: usize) -> f64 {
    let grid = center.grid();
    let p = center.degree();
    let d = dense_d(grid, p);
    let dcomps = grid.components(p + 1);
    let bar = DVector::from_column_slice(center.values());
    let mut x = bar.clone();
    let mut best = step_objective(center, h, x.as_slice());
    let lip = d.norm();
    for t in 0..iters {
        let g = &d * &x;
        let mut unit = g.clone();
        for s in unit.as_mut_slice().chunks_mut(dcomps) {
            let n = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                s.iter_mut().for_each(|v| *v /= n);
            }
        }
        // gradient of the objective divided by W
        let sub = d.transpose() * unit + (&x - &bar) / h;
        let step = h.min(1.0 / lip) / ((t + 1) as f64).sqrt();
        x -= sub * step;
        best = best.min(step_objective(center, h, x.as_slice()));
    }
    best
}

/// Nearest point of the cone generated by `rays`, as `w − P_{K°}(w)` with the
/// polar projection computed by Dykstra's algorithm over the half-spaces
/// `⟨x, r⟩ ≤ 0`.
pub fn dykstra_cone_projection(rays: &[Vec<f64>], w: &[f64], sweeps: usize) -> Vec<f64> {
    let m = w.len();
    let mut x = w.to_vec();
    let mut corr = vec![vec![0.0; m]; rays.len()];
    for _ in 0..sweeps {
        for (r, c) in rays.iter().zip(corr.iter_mut()) {
            let y: Vec<f64> = x.iter().zip(c.iter()).map(|(a, b)| a + b).collect();
            let rr: f64 = r.iter().map(|v| v * v).sum();
            let t = (y.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / rr).max(0.0);
            for i in 0..m {
                x[i] = y[i] - t * r[i];
                c[i] = y[i] - x[i];
            }
        }
    }
    w.iter().zip(&x).map(|(a, b)| a - b).collect()
}

/// Unit complex lines `u ∧ Ju` for random unit `u ∈ ℝ⁴`.
pub fn kahler_rays(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let mut u = gaussian_vec(&mut r, 4);
            let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            u.iter_mut().for_each(|v| *v /= n);
            let ju = [-u[1], u[0], -u[3], u[2]];
            PAIRS.iter().map(|&(i, j)| u[i] * ju[j] - u[j] * ju[i]).collect()
        })
        .collect()
}

/// Complex lines `u ∧ Ju` spread evenly: a Fibonacci lattice with both poles
/// on the sphere of lines, `u = (cos θ/2, 0, sin θ/2 cos φ, sin θ/2 sin φ)`.
pub fn kahler_rays_even(count: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * i as f64 / (count - 1) as f64;
            let theta = z.clamp(-1.0, 1.0).acos();
            let phi = golden * i as f64;
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let u = [c, 0.0, s * phi.cos(), s * phi.sin()];
            let ju = [-u[1], u[0], -u[3], u[2]];
            PAIRS.iter().map(|&(i, j)| u[i] * ju[j] - u[j] * ju[i]).collect()
        })
        .collect()
}
