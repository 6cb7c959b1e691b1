//! Lexicographic bookkeeping for the wedge basis of `∧^k ℝⁿ`.
//!
//! Index sets are carried as bitmasks internally; [`MultiIndex`] is the
//! validated public form.

use std::fmt;

use crate::error::{Error, Result};

/// Largest ambient dimension supported by the bitmask layout.
pub const MAX_DIM: usize = 16;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// A strictly increasing list of axis indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(axes: Vec<usize>, n: usize) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "dimension {n} exceeds the supported maximum {MAX_DIM}"
            )));
        }
        if axes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "axes {axes:?} are not strictly increasing"
            )));
        }
        if let Some(&a) = axes.iter().find(|&&a| a >= n) {
            return Err(Error::InvalidArgument(format!(
                "axis {a} out of range for dimension {n}"
            )));
        }
        Ok(Self(axes))
    }

    pub fn from_mask(mask: u32) -> Self {
        Self((0..32).filter(|i| mask & (1 << i) != 0).collect())
    }

    pub fn axes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mask(&self) -> u32 {
        self.0.iter().fold(0, |m, &a| m | (1 << a))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e")?;
        for a in &self.0 {
            write!(f, "{}", a + 1)?;
        }
        Ok(())
    }
}

/// Lexicographic basis of `∧^k ℝⁿ` with O(1) rank lookup.
#[derive(Clone, Debug)]
pub struct Basis {
    n: usize,
    k: usize,
    masks: Vec<u32>,
    rank: Vec<u32>,
}

const NO_RANK: u32 = u32::MAX;

impl Basis {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n <= MAX_DIM, "dimension {n} exceeds {MAX_DIM}");
        assert!(k <= n, "degree {k} exceeds dimension {n}");
        let mut masks = Vec::with_capacity(binomial(n, k));
        let mut current: Vec<usize> = (0..k).collect();
        loop {
            masks.push(current.iter().fold(0u32, |m, &a| m | (1 << a)));
            // next combination in lexicographic order
            let mut i = k;
            loop {
                if i == 0 {
                    let mut rank = vec![NO_RANK; 1 << n];
                    for (r, &m) in masks.iter().enumerate() {
                        rank[m as usize] = r as u32;
                    }
                    return Self { n, k, masks, rank };
                }
                i -= 1;
                if current[i] < n - k + i {
                    current[i] += 1;
                    for j in i + 1..k {
                        current[j] = current[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    pub fn mask(&self, r: usize) -> u32 {
        self.masks[r]
    }

    pub fn rank_of(&self, mask: u32) -> Option<usize> {
        match self.rank.get(mask as usize) {
            Some(&r) if r != NO_RANK => Some(r as usize),
            _ => None,
        }
    }

    pub fn index(&self, r: usize) -> MultiIndex {
        MultiIndex::from_mask(self.masks[r])
    }
}

/// Sign of the shuffle placing the axes of `a` before those of `b`
/// (`e_a ∧ e_b = sign · e_{a∪b}`); zero when the sets overlap.
pub fn wedge_sign(a: u32, b: u32) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        inversions += (a >> bit).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Mask of all `n` axes.
pub fn full_mask(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn lexicographic_order() {
        let b = Basis::new(4, 2);
        let names: Vec<String> = (0..b.len()).map(|r| b.index(r).to_string()).collect();
        assert_eq!(names, ["e12", "e13", "e14", "e23", "e24", "e34"]);
        for r in 0..b.len() {
            assert_eq!(b.rank_of(b.mask(r)), Some(r));
        }
        assert_eq!(b.rank_of(0b111), None);
        assert_eq!(Basis::new(3, 0).len(), 1);
        assert_eq!(Basis::new(3, 3).len(), 1);
    }

    #[test]
    fn shuffle_signs() {
        assert_eq!(wedge_sign(0b01, 0b10), 1);
        assert_eq!(wedge_sign(0b10, 0b01), -1);
        assert_eq!(wedge_sign(0b01, 0b01), 0);
        // (1,3) then (2,4): one inversion
        assert_eq!(wedge_sign(0b0101, 0b1010), -1);
    }

    #[test]
    fn multi_index_validation() {
        assert!(MultiIndex::new(vec![0, 2], 3).is_ok());
        assert!(MultiIndex::new(vec![2, 0], 3).is_err());
        assert!(MultiIndex::new(vec![1, 1], 3).is_err());
        assert!(MultiIndex::new(vec![0, 3], 3).is_err());
    }
}
