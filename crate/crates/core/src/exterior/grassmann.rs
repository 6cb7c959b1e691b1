//! Multi-start ascent of `ξ ↦ ⟨v, ξ⟩` over unit decomposable k-vectors,
//! parameterized by orthonormal k-frames.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::kvector::KVector;

pub const DEFAULT_RESTARTS: usize = 64;
pub const GRADIENT_TOL: f64 = 1e-8;
const ORTHO_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 2000;

#[derive(Clone, Debug)]
pub struct PlaneAscent {
    /// Best value of `⟨v, f₁ ∧ ⋯ ∧ f_k⟩` found.
    pub value: f64,
    /// Orthonormal frame attaining it (columns).
    pub frame: Vec<Vec<f64>>,
    /// Riemannian gradient norm at the returned frame.
    pub gradient_norm: f64,
}

impl PlaneAscent {
    pub fn plane(&self, n: usize) -> KVector {
        KVector::wedge_of_vectors(n, &self.frame).expect("frame columns have length n")
    }
}

fn columns(f: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..f.ncols()).map(|j| f.column(j).iter().copied().collect()).collect()
}

fn blade(f: &DMatrix<f64>) -> KVector {
    KVector::wedge_of_vectors(f.nrows(), &columns(f)).expect("consistent shapes")
}

/// Modified Gram-Schmidt; keeps the orientation of the frame.
fn orthonormalize(f: &mut DMatrix<f64>) -> bool {
    for j in 0..f.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let c = f.column(i).dot(&f.column(j));
                let ci = f.column(i).into_owned();
                f.column_mut(j).axpy(-c, &ci, 1.0);
            }
        }
        let len = f.column(j).norm();
        if len < 1e-14 {
            return false;
        }
        f.column_mut(j).scale_mut(1.0 / len);
    }
    let gram = f.transpose() * &*f;
    let k = f.ncols();
    (gram - DMatrix::identity(k, k)).amax() <= ORTHO_TOL
}

fn euclidean_gradient(v: &KVector, f: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = (f.nrows(), f.ncols());
    let cols = columns(f);
    let mut g = DMatrix::zeros(n, k);
    for j in 0..k {
        let left = KVector::wedge_of_vectors(n, &cols[..j]).expect("shapes");
        let right = KVector::wedge_of_vectors(n, &cols[j + 1..]).expect("shapes");
        for r in 0..n {
            let mut er = vec![0.0; n];
            er[r] = 1.0;
            let w = left
                .wedge(&KVector::vector(&er))
                .and_then(|lw| lw.wedge(&right))
                .expect("degree k fits");
            g[(r, j)] = v.dot(&w);
        }
    }
    g
}

fn riemannian_gradient(f: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let ftg = f.transpose() * g;
    let sym = (&ftg + ftg.transpose()) * 0.5;
    g - f * sym
}

fn ascend(v: &KVector, mut f: DMatrix<f64>, tol: f64) -> (f64, DMatrix<f64>, f64) {
    let scale = v.euclid_norm();
    let mut value = v.dot(&blade(&f));
    let mut step = 1.0 / scale.max(1e-300);
    let mut gnorm = f64::INFINITY;
    for _ in 0..MAX_STEPS {
        let g = euclidean_gradient(v, &f);
        let rg = riemannian_gradient(&f, &g);
        gnorm = rg.norm();
        if gnorm <= tol * scale {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = &f + &rg * step;
            if orthonormalize(&mut trial) {
                let tv = v.dot(&blade(&trial));
                if tv >= value + 1e-4 * step * gnorm * gnorm {
                    f = trial;
                    value = tv;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (value, f, gnorm)
}

/// Largest pairing of `v` with a unit decomposable k-vector found by
/// projected-gradient ascent from `restarts` deterministic starting frames.
/// The value is a lower bound on the comass of `v`.
pub fn best_plane(v: &KVector, restarts: usize, seed: u64) -> PlaneAscent {
    let (n, k) = (v.n(), v.k());
    if k == 0 {
        return PlaneAscent {
            value: v.coeffs()[0].abs(),
            frame: Vec::new(),
            gradient_norm: 0.0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ (k as u64));
    let mut best: Option<PlaneAscent> = None;

    // first start: the heaviest basis plane, oriented to pair positively
    let b = v.basis_table();
    let (r_max, c_max) =
        v.coeffs().iter().enumerate().fold(
            (0, 0.0f64),
            |acc, (r, &c)| if c.abs() > acc.1.abs() { (r, c) } else { acc },
        );
    let mut start = DMatrix::zeros(n, k);
    for (j, &a) in b.index(r_max).axes().iter().enumerate() {
        start[(a, j)] = 1.0;
    }
    if c_max < 0.0 {
        start.column_mut(0).neg_mut();
    }

    for attempt in 0..restarts.max(1) {
        let f0 = if attempt == 0 {
            start.clone()
        } else {
            let mut f = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
            if !orthonormalize(&mut f) {
                continue;
            }
            f
        };
        let (mut value, mut f, gnorm) = ascend(v, f0, GRADIENT_TOL);
        if value < 0.0 {
            f.column_mut(0).neg_mut();
            value = -value;
        }
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(PlaneAscent {
                value,
                frame: columns(&f),
                gradient_norm: gnorm,
            });
        }
    }
    best.expect("at least one restart")
}

/// Single ascent from a random frame drawn from `seed`; lands on a local
/// maximizer, so different seeds sample different critical planes.
pub fn ascend_random(v: &KVector, seed: u64) -> PlaneAscent {
    let (n, k) = (v.n(), v.k());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = loop {
        let mut f = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
        if orthonormalize(&mut f) {
            break f;
        }
    };
    let (value, f, gradient_norm) = ascend(v, f0, GRADIENT_TOL);
    PlaneAscent {
        value,
        frame: columns(&f),
        gradient_norm,
    }
}
