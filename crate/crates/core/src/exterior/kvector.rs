use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;

use super::basis::{binomial, full_mask, wedge_sign, Basis, MultiIndex, MAX_DIM};
use crate::error::{Error, Result};

/// A degree-`k` multivector over `ℝⁿ` in the lexicographic wedge basis.
#[derive(Clone, Debug, PartialEq)]
pub struct KVector {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl KVector {
    pub fn zero(n: usize, k: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n) && k <= n, "invalid (n, k) = ({n}, {k})");
        Self {
            n,
            k,
            coeffs: vec![0.0; binomial(n, k)],
        }
    }

    pub fn from_coeffs(n: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_DIM || k > n {
            return Err(Error::DegreeOutOfRange { degree: k, n });
        }
        if coeffs.len() != binomial(n, k) {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients supplied, C({n},{k}) = {} expected",
                coeffs.len(),
                binomial(n, k)
            )));
        }
        Ok(Self { n, k, coeffs })
    }

    /// Unit basis element `e_{axes}`; axes are 0-based.
    pub fn basis(n: usize, axes: &[usize]) -> Result<Self> {
        let idx = MultiIndex::new(axes.to_vec(), n)?;
        let mut v = Self::zero(n, idx.len());
        let b = Basis::new(n, idx.len());
        let r = b.rank_of(idx.mask()).expect("validated index");
        v.coeffs[r] = 1.0;
        Ok(v)
    }

    pub fn scalar(n: usize, value: f64) -> Self {
        let mut v = Self::zero(n, 0);
        v.coeffs[0] = value;
        v
    }

    pub fn vector(components: &[f64]) -> Self {
        Self {
            n: components.len(),
            k: 1,
            coeffs: components.to_vec(),
        }
    }

    /// `v₁ ∧ ⋯ ∧ v_k` of the given 1-vectors (all of length `n`).
    pub fn wedge_of_vectors(n: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let mut acc = Self::scalar(n, 1.0);
        for v in vectors {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "vector of length {} in dimension {n}",
                    v.len()
                )));
            }
            acc = acc.wedge(&Self::vector(v))?;
        }
        Ok(acc)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn basis_table(&self) -> Basis {
        Basis::new(self.n, self.k)
    }

    /// Coefficient of `e_{axes}` (0-based, increasing).
    pub fn coeff(&self, axes: &[usize]) -> f64 {
        let mask = axes.iter().fold(0u32, |m, &a| m | (1 << a));
        Basis::new(self.n, self.k).rank_of(mask).map_or(0.0, |r| self.coeffs[r])
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!((self.n, self.k), (other.n, other.k));
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Euclidean norm `|v|` in the orthonormal wedge basis.
    pub fn euclid_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            k: self.k,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!((self.n, self.k), (x.n, x.k));
        for (y, xv) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += a * xv;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "wedge of vectors in dimensions {} and {}",
                self.n, other.n
            )));
        }
        let k = self.k + other.k;
        if k > self.n {
            return Err(Error::DegreeOutOfRange { degree: k, n: self.n });
        }
        let ba = Basis::new(self.n, self.k);
        let bb = Basis::new(self.n, other.k);
        let bc = Basis::new(self.n, k);
        let mut out = Self::zero(self.n, k);
        for (ra, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            let ma = ba.mask(ra);
            for (rb, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 {
                    continue;
                }
                let mb = bb.mask(rb);
                let s = wedge_sign(ma, mb);
                if s != 0 {
                    let rc = bc.rank_of(ma | mb).expect("disjoint union has rank");
                    out.coeffs[rc] += f64::from(s) * ca * cb;
                }
            }
        }
        Ok(out)
    }

    /// Algebraic Hodge star: `α ∧ ⋆β = ⟨α, β⟩ e_{1…n}`.
    pub fn star(&self) -> Self {
        let from = Basis::new(self.n, self.k);
        let to = Basis::new(self.n, self.n - self.k);
        let full = full_mask(self.n);
        let mut out = Self::zero(self.n, self.n - self.k);
        for (r, &c) in self.coeffs.iter().enumerate() {
            let m = from.mask(r);
            let comp = full & !m;
            let rc = to.rank_of(comp).expect("complement has rank");
            out.coeffs[rc] = f64::from(wedge_sign(m, comp)) * c;
        }
        out
    }

    /// Inverse of [`KVector::star`]: `(−1)^{k(n−k)} ⋆`.
    pub fn star_inv(&self) -> Self {
        let s = self.star();
        let k = self.k;
        let n = self.n;
        if (k * (n - k)).is_multiple_of(2) {
            s
        } else {
            -s
        }
    }

    /// Skew-symmetric matrix `A` with `A[i][j] = v_{ij}` for `i < j` (k = 2 only).
    pub fn to_skew_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.k, 2, "skew matrix form needs a 2-vector");
        let b = Basis::new(self.n, 2);
        let mut a = DMatrix::zeros(self.n, self.n);
        for (r, &c) in self.coeffs.iter().enumerate() {
            let idx = b.index(r);
            let (i, j) = (idx.axes()[0], idx.axes()[1]);
            a[(i, j)] = c;
            a[(j, i)] = -c;
        }
        a
    }

    pub fn from_skew_matrix(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let b = Basis::new(n, 2);
        let mut v = Self::zero(n, 2);
        for r in 0..b.len() {
            let idx = b.index(r);
            let (i, j) = (idx.axes()[0], idx.axes()[1]);
            v.coeffs[r] = 0.5 * (a[(i, j)] - a[(j, i)]);
        }
        v
    }

    /// Human-readable sum such as `1*e12 + -2*e34` (1-based axes).
    pub fn to_expression(&self) -> String {
        let b = Basis::new(self.n, self.k);
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(r, c)| format!("{c}*{}", b.index(r)))
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    }
}

impl Add for &KVector {
    type Output = KVector;
    fn add(self, rhs: &KVector) -> KVector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for KVector {
    type Output = KVector;
    fn add(mut self, rhs: KVector) -> KVector {
        self += &rhs;
        self
    }
}

impl Sub for &KVector {
    type Output = KVector;
    fn sub(self, rhs: &KVector) -> KVector {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for KVector {
    type Output = KVector;
    fn sub(mut self, rhs: KVector) -> KVector {
        self -= &rhs;
        self
    }
}

impl AddAssign<&KVector> for KVector {
    fn add_assign(&mut self, rhs: &KVector) {
        assert_eq!((self.n, self.k), (rhs.n, rhs.k), "shape mismatch");
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&KVector> for KVector {
    fn sub_assign(&mut self, rhs: &KVector) {
        assert_eq!((self.n, self.k), (rhs.n, rhs.k), "shape mismatch");
        self.axpy(-1.0, rhs);
    }
}

impl Mul<f64> for &KVector {
    type Output = KVector;
    fn mul(self, s: f64) -> KVector {
        self.scale(s)
    }
}

impl Mul<f64> for KVector {
    type Output = KVector;
    fn mul(self, s: f64) -> KVector {
        self.scale(s)
    }
}

impl Neg for KVector {
    type Output = KVector;
    fn neg(self) -> KVector {
        self.scale(-1.0)
    }
}
