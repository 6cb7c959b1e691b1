//! Constant-coefficient calibrations `φ` and their pointwise cones
//! `Λ_φ = {w : φ ∧ w = ‖w‖ vol}` of complementary degree.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{ascend_random, binomial, comass_norm, is_decomposable, Basis, Decomposability, KVector};
use crate::grid::{weight, DiscreteForm, TorusGrid};
use crate::tvprox::ConvexSet;

const COMASS_SLACK: f64 = 1e-9;
pub const DEFAULT_POLYHEDRAL_RAYS: usize = 2000;

/// A constant k-form of comass at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    name: String,
    phi: KVector,
    /// `a` with `φ ∧ w = ⟨a, w⟩ vol` for every (n−k)-vector `w`.
    density: KVector,
}

impl Calibration {
    pub fn new(name: impl Into<String>, phi: KVector) -> Result<Self> {
        let comass = comass_norm(&phi);
        let bound = if comass.exact { comass.value } else { comass.lower };
        if bound > 1.0 + COMASS_SLACK {
            return Err(Error::InvalidArgument(format!("comass {bound} exceeds 1")));
        }
        let (n, k) = (phi.n(), phi.k());
        let dual = Basis::new(n, n - k);
        let density = (0..dual.len())
            .map(|r| {
                let e = KVector::basis(n, dual.index(r).axes()).expect("basis axes are valid");
                phi.wedge(&e).expect("complementary degrees").coeffs()[0]
            })
            .collect();
        Ok(Self {
            name: name.into(),
            density: KVector::from_coeffs(n, n - k, density)?,
            phi,
        })
    }

    pub fn volume(n: usize) -> Result<Self> {
        let axes: Vec<usize> = (0..n).collect();
        Self::new("volume", KVector::basis(n, &axes)?)
    }

    /// `e_{i₁…i_k}` with zero-based axes.
    pub fn axis(n: usize, axes: &[usize]) -> Result<Self> {
        let label = axes.iter().map(|a| (a + 1).to_string()).collect::<Vec<_>>().join(",");
        Self::new(format!("axis:{label}"), KVector::basis(n, axes)?)
    }

    /// `e₁₂ + e₃₄` on `ℝ⁴`.
    pub fn kahler4() -> Self {
        let phi = KVector::from_coeffs(4, 2, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).expect("six coefficients");
        Self::new("kahler4", phi).expect("the Kähler form has comass 1")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    pub fn k(&self) -> usize {
        self.phi.k()
    }

    pub fn phi(&self) -> &KVector {
        &self.phi
    }

    /// Degree of the forms the cone lives in.
    pub fn cone_degree(&self) -> usize {
        self.n() - self.k()
    }

    pub fn density_vector(&self) -> &KVector {
        &self.density
    }

    /// `(φ ∧ w) / vol`.
    pub fn density(&self, w: &KVector) -> f64 {
        self.density.dot(w)
    }
}

/// Named calibration presets; axis indices are one-based as on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preset {
    Volume,
    Axis(Vec<usize>),
    Kahler4,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume" => Ok(Self::Volume),
            "kahler4" => Ok(Self::Kahler4),
            _ => {
                let list = s
                    .strip_prefix("axis:")
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown calibration preset '{s}'")))?;
                let axes = list
                    .split(',')
                    .map(|t| match t.trim().parse::<usize>() {
                        Ok(a) if a >= 1 => Ok(a),
                        _ => Err(Error::InvalidArgument(format!("bad axis '{t}' in '{s}'"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Axis(axes))
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Volume => write!(f, "volume"),
            Self::Kahler4 => write!(f, "kahler4"),
            Self::Axis(a) => {
                let s: Vec<String> = a.iter().map(|i| i.to_string()).collect();
                write!(f, "axis:{}", s.join(","))
            }
        }
    }
}

pub fn make_calibration(preset: &Preset, n: usize) -> Result<Calibration> {
    match preset {
        Preset::Volume => Calibration::volume(n),
        Preset::Axis(axes) => {
            let zero: Vec<usize> = axes.iter().map(|a| a - 1).collect();
            Calibration::axis(n, &zero)
        }
        Preset::Kahler4 if n == 4 => Ok(Calibration::kahler4()),
        Preset::Kahler4 => Err(Error::InvalidArgument(format!("kahler4 needs n = 4, got {n}"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConeKind {
    /// `k = n`: nonnegative functions.
    NonnegFunction,
    /// Decomposable unit `φ`: the ray through its density vector.
    DecomposableRay { ray: Vec<f64> },
    /// `e₁₂ + e₃₄`: positive semidefinite (1,1)-forms.
    KahlerT4,
    /// Cone generated by sampled calibrated planes; an inner approximation.
    PolyhedralSampled { rays: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeSpec {
    calibration: Calibration,
    kind: ConeKind,
}

impl ConeSpec {
    /// Picks the exact cone for the calibration, falling back to sampled rays.
    pub fn new(calibration: Calibration) -> Result<Self> {
        let (n, k) = (calibration.n(), calibration.k());
        let a = calibration.density.coeffs();
        if k == n {
            if (a[0] - 1.0).abs() > COMASS_SLACK {
                return Err(Error::Unsupported(
                    "volume calibrations must have unit coefficient".into(),
                ));
            }
            return Ok(Self {
                calibration,
                kind: ConeKind::NonnegFunction,
            });
        }
        if n == 4 && k == 2 {
            let c = calibration.phi.coeffs();
            let kahler = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
            if c.iter().zip(kahler).all(|(x, y)| (x - y).abs() <= 1e-12) {
                return Ok(Self {
                    calibration,
                    kind: ConeKind::KahlerT4,
                });
            }
        }
        if is_decomposable(&calibration.phi, 1e-9)? == Decomposability::Decomposable {
            let norm = calibration.density.euclid_norm();
            if (norm - 1.0).abs() > COMASS_SLACK {
                return Err(Error::Unsupported(format!(
                    "decomposable calibration of norm {norm} has a trivial cone"
                )));
            }
            return Ok(Self {
                kind: ConeKind::DecomposableRay { ray: a.to_vec() },
                calibration,
            });
        }
        Self::polyhedral(calibration, DEFAULT_POLYHEDRAL_RAYS, 0)
    }

    /// Sampled inner approximation from `count` calibrated planes found by
    /// random-start ascent of `ξ ↦ (φ ∧ ξ) / vol`.
    pub fn polyhedral(calibration: Calibration, count: usize, seed: u64) -> Result<Self> {
        let a = &calibration.density;
        if a.k() == 0 || a.k() == a.n() || count == 0 {
            return Err(Error::Unsupported(
                "sampled cones need 0 < k < n and at least one ray".into(),
            ));
        }
        let mut rays = Vec::with_capacity(count);
        let mut attempt = 0u64;
        while rays.len() < count && attempt < 20 * count as u64 {
            let found = ascend_random(a, seed.wrapping_mul(0x9e37_79b9).wrapping_add(attempt));
            attempt += 1;
            if found.value >= 1.0 - COMASS_SLACK {
                rays.push(found.plane(a.n()).coeffs().to_vec());
            }
        }
        if rays.is_empty() {
            return Err(Error::Unsupported(
                "no calibrated planes found; the cone is trivial".into(),
            ));
        }
        Ok(Self {
            calibration,
            kind: ConeKind::PolyhedralSampled { rays },
        })
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn degree(&self) -> usize {
        self.calibration.cone_degree()
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, ConeKind::PolyhedralSampled { .. })
    }

    /// `κ` with `|w|/κ ≤ (φ∧w)/vol ≤ κ|w|` on the cone.
    pub fn transversal_constant(&self) -> f64 {
        match &self.kind {
            ConeKind::NonnegFunction | ConeKind::DecomposableRay { .. } => 1.0,
            ConeKind::KahlerT4 => std::f64::consts::SQRT_2,
            ConeKind::PolyhedralSampled { .. } => {
                let (n, k) = (self.calibration.n(), self.calibration.cone_degree());
                (binomial(n, k) as f64).sqrt()
            }
        }
    }

    fn check(&self, w: &KVector) -> Result<()> {
        if w.n() != self.calibration.n() || w.k() != self.degree() {
            return Err(Error::DimensionMismatch(format!(
                "cone lives in degree {} of dimension {}, got degree {} of dimension {}",
                self.degree(),
                self.calibration.n(),
                w.k(),
                w.n()
            )));
        }
        Ok(())
    }

    fn check_form(&self, omega: &DiscreteForm) -> Result<()> {
        if omega.grid().n() != self.calibration.n() || omega.degree() != self.degree() {
            return Err(Error::DimensionMismatch(format!(
                "cone needs {}-forms on a {}-torus, got {}-forms on a {}-torus",
                self.degree(),
                self.calibration.n(),
                omega.degree(),
                omega.grid().n()
            )));
        }
        Ok(())
    }

    /// In-place projection of one site's coefficients.
    fn project_slice(&self, w: &mut [f64]) {
        match &self.kind {
            ConeKind::NonnegFunction => w[0] = w[0].max(0.0),
            ConeKind::DecomposableRay { ray } => {
                let t = dot(w, ray).max(0.0);
                w.iter_mut().zip(ray).for_each(|(x, r)| *x = t * r);
            }
            ConeKind::KahlerT4 => {
                let h = Hermitian2::from_coeffs(w).clip();
                h.write(w);
            }
            ConeKind::PolyhedralSampled { rays } => {
                let p = nnls_projection(rays, w);
                w.copy_from_slice(&p);
            }
        }
    }

    /// Scalars `λ` with `⟨a, P_C(w + μa)⟩ = Σ max(λ + μ, 0)`, for the exact kinds.
    fn spectrum(&self, w: &[f64], out: &mut Vec<f64>) -> bool {
        match &self.kind {
            ConeKind::NonnegFunction => out.push(w[0]),
            ConeKind::DecomposableRay { ray } => out.push(dot(w, ray)),
            ConeKind::KahlerT4 => {
                let (hi, lo) = Hermitian2::from_coeffs(w).eigenvalues();
                out.push(hi);
                out.push(lo);
            }
            ConeKind::PolyhedralSampled { .. } => return false,
        }
        true
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `[[a, x+iy], [x−iy, d]]` for the (1,1) part of
/// `a e₁₂ + d e₃₄ + x (e₁₄ − e₂₃) + y (e₁₃ + e₂₄)`.
#[derive(Clone, Copy, Debug)]
struct Hermitian2 {
    a: f64,
    d: f64,
    x: f64,
    y: f64,
}

impl Hermitian2 {
    // lexicographic order e12 e13 e14 e23 e24 e34
    fn from_coeffs(w: &[f64]) -> Self {
        Self {
            a: w[0],
            d: w[5],
            x: 0.5 * (w[2] - w[3]),
            y: 0.5 * (w[1] + w[4]),
        }
    }

    fn write(&self, w: &mut [f64]) {
        w[0] = self.a;
        w[1] = self.y;
        w[2] = self.x;
        w[3] = -self.x;
        w[4] = self.y;
        w[5] = self.d;
    }

    fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.a + self.d);
        let r = (0.25 * (self.a - self.d).powi(2) + self.x * self.x + self.y * self.y).sqrt();
        (m + r, m - r)
    }

    fn clip(self) -> Self {
        let (hi, lo) = self.eigenvalues();
        if lo >= 0.0 {
            self
        } else if hi <= 0.0 {
            Self {
                a: 0.0,
                d: 0.0,
                x: 0.0,
                y: 0.0,
            }
        } else {
            // hi · (H − lo I) / (hi − lo)
            let s = hi / (hi - lo);
            Self {
                a: s * (self.a - lo),
                d: s * (self.d - lo),
                x: s * self.x,
                y: s * self.y,
            }
        }
    }
}

/// Lawson–Hanson nonnegative least squares: the point of the cone spanned by
/// `rays` nearest to `w`.
fn nnls_projection(rays: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let m = w.len();
    let a = DMatrix::from_fn(m, rays.len(), |i, j| rays[j][i]);
    let b = DVector::from_column_slice(w);
    let scale = b.norm().max(1e-300);
    let tol = 1e-13 * scale;
    let mut x = DVector::zeros(rays.len());
    let mut passive: Vec<usize> = Vec::new();
    for _ in 0..3 * rays.len().max(m) {
        let grad = a.transpose() * (&b - &a * &x);
        let candidate = (0..rays.len())
            .filter(|j| !passive.contains(j))
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        match candidate {
            Some(j) if grad[j] > tol => passive.push(j),
            _ => break,
        }
        loop {
            let sub = a.select_columns(passive.iter());
            let z = sub
                .clone()
                .svd(true, true)
                .solve(&b, 1e-14)
                .expect("SVD computed with both factors");
            if z.iter().all(|&v| v > 0.0) {
                for (i, &j) in passive.iter().enumerate() {
                    x[j] = z[i];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (i, &j) in passive.iter().enumerate() {
                if z[i] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[i]));
                }
            }
            for (i, &j) in passive.iter().enumerate() {
                x[j] += alpha * (z[i] - x[j]);
            }
            passive.retain(|&j| x[j] > 1e-15 * scale);
            for j in 0..rays.len() {
                if !passive.contains(&j) {
                    x[j] = 0.0;
                }
            }
            if passive.is_empty() {
                break;
            }
        }
    }
    (&a * &x).iter().copied().collect()
}

/// Euclidean distance from `w` to the cone.
pub fn cone_residual_point(spec: &ConeSpec, w: &KVector) -> Result<f64> {
    let p = project_cone_point(spec, w)?;
    Ok((w - &p).euclid_norm())
}

pub fn project_cone_point(spec: &ConeSpec, w: &KVector) -> Result<KVector> {
    spec.check(w)?;
    let mut out = w.clone();
    spec.project_slice(out.coeffs_mut());
    Ok(out)
}

pub fn project_cone_form(spec: &ConeSpec, omega: &DiscreteForm) -> Result<DiscreteForm> {
    spec.check_form(omega)?;
    let mut out = omega.clone();
    let comps = out.components();
    for w in out.values_mut().chunks_mut(comps) {
        spec.project_slice(w);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeResidualReport {
    pub max_site_distance: f64,
    pub mean_site_distance: f64,
    pub worst_site: usize,
}

pub fn cone_residual(spec: &ConeSpec, omega: &DiscreteForm) -> Result<ConeResidualReport> {
    let projected = project_cone_form(spec, omega)?;
    let comps = omega.components();
    let mut report = ConeResidualReport {
        max_site_distance: 0.0,
        mean_site_distance: 0.0,
        worst_site: 0,
    };
    let mut total = 0.0;
    for (s, (w, p)) in omega
        .values()
        .chunks(comps)
        .zip(projected.values().chunks(comps))
        .enumerate()
    {
        let dist = w.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        total += dist;
        if dist > report.max_site_distance {
            report.max_site_distance = dist;
            report.worst_site = s;
        }
    }
    report.mean_site_distance = total / omega.grid().site_count() as f64;
    Ok(report)
}

/// `T_ω(φ) = ∫ φ ∧ ω`.
pub fn transversal_pairing(calibration: &Calibration, omega: &DiscreteForm) -> Result<f64> {
    if omega.grid().n() != calibration.n() || omega.degree() != calibration.cone_degree() {
        return Err(Error::DimensionMismatch(format!(
            "calibration of degree {} pairs with {}-forms on a {}-torus",
            calibration.k(),
            calibration.cone_degree(),
            calibration.n()
        )));
    }
    let a = calibration.density.coeffs();
    let w = weight(omega.grid(), omega.degree());
    Ok(w * omega.values().chunks(a.len()).map(|s| dot(s, a)).sum::<f64>())
}

/// `∫ |ω|` with the pointwise Euclidean norm.
pub fn integrated_norm(omega: &DiscreteForm) -> f64 {
    let w = weight(omega.grid(), omega.degree());
    w * omega
        .values()
        .chunks(omega.components())
        .map(|s| dot(s, s).sqrt())
        .sum::<f64>()
}

/// Random feasible field, reproducible per seed.
pub fn sample_calibrated(spec: &ConeSpec, grid: Arc<TorusGrid>, seed: u64) -> Result<DiscreteForm> {
    if grid.n() != spec.calibration.n() {
        return Err(Error::DimensionMismatch(format!(
            "calibration lives in dimension {}, grid in {}",
            spec.calibration.n(),
            grid.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = grid.components(spec.degree());
    let mut values = Vec::with_capacity(grid.cell_count(spec.degree()));
    let mut site = vec![0.0; comps];
    let mut gauss = move || -> f64 { StandardNormal.sample(&mut rng) };
    for _ in 0..grid.site_count() {
        match &spec.kind {
            ConeKind::NonnegFunction => site[0] = gauss().abs(),
            ConeKind::DecomposableRay { ray } => {
                let t = gauss().abs();
                site.iter_mut().zip(ray).for_each(|(x, r)| *x = t * r);
            }
            ConeKind::KahlerT4 => {
                // H = G G* / 2 for a complex Gaussian 2×2 matrix G
                let g: Vec<f64> = (0..8).map(|_| gauss()).collect();
                let (p, q) = ((g[0], g[1], g[2], g[3]), (g[4], g[5], g[6], g[7]));
                let a = 0.5 * (p.0 * p.0 + p.1 * p.1 + p.2 * p.2 + p.3 * p.3);
                let d = 0.5 * (q.0 * q.0 + q.1 * q.1 + q.2 * q.2 + q.3 * q.3);
                // row1 · conj(row2)
                let x = 0.5 * (p.0 * q.0 + p.1 * q.1 + p.2 * q.2 + p.3 * q.3);
                let y = 0.5 * (p.1 * q.0 - p.0 * q.1 + p.3 * q.2 - p.2 * q.3);
                Hermitian2 { a, d, x, y }.write(&mut site);
            }
            ConeKind::PolyhedralSampled { rays } => {
                site.iter_mut().for_each(|x| *x = 0.0);
                for _ in 0..3 {
                    let j = (gauss().abs() * 1e6) as usize % rays.len();
                    let t = gauss().abs();
                    site.iter_mut().zip(&rays[j]).for_each(|(x, r)| *x += t * r);
                }
            }
        }
        values.extend_from_slice(&site);
    }
    DiscreteForm::from_values(grid, spec.degree(), values)
}

/// The convex set `C` or `C ∩ {T(φ) = target}` for the constrained step.
#[derive(Clone, Copy, Debug)]
pub struct FeasibleSet<'a> {
    spec: &'a ConeSpec,
    normalization: Option<f64>,
}

const BISECTION_STEPS: usize = 200;

impl<'a> FeasibleSet<'a> {
    pub fn cone(spec: &'a ConeSpec) -> Self {
        Self {
            spec,
            normalization: None,
        }
    }

    pub fn normalized(spec: &'a ConeSpec, target: f64) -> Result<Self> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "normalization target must be positive, got {target}"
            )));
        }
        Ok(Self {
            spec,
            normalization: Some(target),
        })
    }

    pub fn spec(&self) -> &ConeSpec {
        self.spec
    }

    fn shifted_projection(&self, z: &[f64], mu: f64, comps: usize) -> Vec<f64> {
        let a = self.spec.calibration.density.coeffs();
        let mut out = z.to_vec();
        for w in out.chunks_mut(comps) {
            w.iter_mut().zip(a).for_each(|(x, ai)| *x += mu * ai);
            self.spec.project_slice(w);
        }
        out
    }

    /// `μ` with `W Σ max(λ + μ, 0) = target`, exact for piecewise-linear spectra.
    fn spectral_shift(lambdas: &mut [f64], target: f64) -> f64 {
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let mut sum = 0.0;
        for j in 0..lambdas.len() {
            sum += lambdas[j];
            let mu = (target - sum) / (j + 1) as f64;
            let next_inactive = j + 1 == lambdas.len() || lambdas[j + 1] + mu <= 0.0;
            if lambdas[j] + mu >= 0.0 && next_inactive {
                return mu;
            }
        }
        unreachable!("the last breakpoint always satisfies both conditions")
    }

    fn project_normalized(&self, omega: &mut DiscreteForm, target: f64) {
        let comps = omega.components();
        let w = weight(omega.grid(), omega.degree());
        let cal = &self.spec.calibration;
        let mut lambdas = Vec::new();
        let exact = omega
            .values()
            .chunks(comps)
            .all(|s| self.spec.spectrum(s, &mut lambdas));
        let mu = if exact {
            Self::spectral_shift(&mut lambdas, target / w)
        } else {
            let pairing = |mu: f64| {
                let p = self.shifted_projection(omega.values(), mu, comps);
                let a = cal.density.coeffs();
                w * p.chunks(comps).map(|s| dot(s, a)).sum::<f64>()
            };
            let scale = omega.max_abs() + target;
            let (mut lo, mut hi) = (-scale, scale);
            while pairing(lo) > target {
                lo *= 2.0;
            }
            while pairing(hi) < target {
                hi *= 2.0;
            }
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if pairing(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * scale {
                    break;
                }
            }
            0.5 * (lo + hi)
        };
        let projected = self.shifted_projection(omega.values(), mu, comps);
        omega.values_mut().copy_from_slice(&projected);
        let t = transversal_pairing(cal, omega).expect("degrees checked by the caller");
        if t > 0.0 {
            let s = target / t;
            omega.values_mut().iter_mut().for_each(|v| *v *= s);
        }
    }
}

impl ConvexSet for FeasibleSet<'_> {
    fn project(&self, omega: &mut DiscreteForm) {
        match self.normalization {
            None => {
                let comps = omega.components();
                for w in omega.values_mut().chunks_mut(comps) {
                    self.spec.project_slice(w);
                }
            }
            Some(target) => self.project_normalized(omega, target),
        }
    }

    fn residual(&self, omega: &DiscreteForm) -> f64 {
        let cone = cone_residual(self.spec, omega)
            .map(|r| r.max_site_distance)
            .unwrap_or(f64::INFINITY);
        match self.normalization {
            None => cone,
            Some(target) => {
                let t = transversal_pairing(&self.spec.calibration, omega).unwrap_or(f64::NAN);
                cone.max((t - target).abs())
            }
        }
    }
}
