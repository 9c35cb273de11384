use std::fmt;

use crate::error::{Error, Result};

/// Largest ambient dimension supported by the bitmask bookkeeping.
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

/// A strictly increasing list of axes, stored 0-based.
///
/// `MultiIndex::new(&[0, 1], 3)` is the index of `dx¹ ∧ dx²` in ℝ³.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    indices: Vec<usize>,
}

impl MultiIndex {
    pub fn new(indices: &[usize], n: usize) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::InvalidIndex(format!("ambient dimension {n} exceeds {MAX_DIM}")));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndex(format!("{indices:?} is not strictly increasing")));
        }
        if indices.iter().any(|&i| i >= n) {
            return Err(Error::InvalidIndex(format!("{indices:?} has an axis outside 0..{n}")));
        }
        Ok(Self { indices: indices.to_vec() })
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    pub(crate) fn from_mask(mask: u32) -> Self {
        let indices = (0..32).filter(|b| mask & (1 << b) != 0).collect();
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn degree(&self) -> usize {
        self.indices.len()
    }

    pub(crate) fn mask(&self) -> u32 {
        self.indices.iter().fold(0, |m, &i| m | (1 << i))
    }

    /// Position of this index in the lexicographic basis of `∧^k(ℝⁿ)*`.
    pub fn rank(&self, n: usize) -> usize {
        rank_of_mask(self.mask(), n)
    }

    pub fn complement(&self, n: usize) -> MultiIndex {
        let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        MultiIndex::from_mask(full & !self.mask())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.indices.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.indices.iter().map(|i| format!("{}", i + 1)).collect();
        write!(f, "e{}", parts.join(""))
    }
}

/// Lexicographic basis of `∧^k(ℝⁿ)*`.
pub fn basis(n: usize, k: usize) -> Vec<MultiIndex> {
    basis_masks(n, k).into_iter().map(MultiIndex::from_mask).collect()
}

pub(crate) fn basis_masks(n: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut combo: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(combo.iter().fold(0u32, |m, &i| m | (1 << i)));
        // advance to the next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] < n - k + i {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub(crate) fn rank_of_mask(mask: u32, n: usize) -> usize {
    let k = mask.count_ones() as usize;
    let mut rank = 0;
    let mut next = 0usize;
    let mut pos = 0usize;
    for c in 0..n {
        if mask & (1 << c) == 0 {
            continue;
        }
        for j in next..c {
            rank += binomial(n - 1 - j, k - 1 - pos);
        }
        next = c + 1;
        pos += 1;
    }
    rank
}

/// Sign of sorting the concatenation `(a, b)`; zero when the index sets overlap.
pub(crate) fn merge_sign(a: u32, b: u32) -> f64 {
    if a & b != 0 {
        return 0.0;
    }
    let mut inversions = 0u32;
    let mut rest = a;
    while rest != 0 {
        let x = rest.trailing_zeros();
        rest &= rest - 1;
        inversions += (b & ((1u32 << x) - 1)).count_ones();
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn basis_is_lexicographic_and_ranked() {
        let b = basis(4, 2);
        let lists: Vec<Vec<usize>> = b.iter().map(|m| m.indices().to_vec()).collect();
        assert_eq!(
            lists,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        for n in 0..=6 {
            for k in 0..=n {
                for (i, m) in basis(n, k).iter().enumerate() {
                    assert_eq!(m.rank(n), i);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(MultiIndex::new(&[1, 0], 3).is_err());
        assert!(MultiIndex::new(&[0, 0], 3).is_err());
        assert!(MultiIndex::new(&[3], 3).is_err());
    }

    #[test]
    fn merge_signs() {
        assert_eq!(merge_sign(0b01, 0b10), 1.0);
        assert_eq!(merge_sign(0b10, 0b01), -1.0);
        assert_eq!(merge_sign(0b11, 0b01), 0.0);
        // (2,3) then (1): one... two inversions
        assert_eq!(merge_sign(0b110, 0b001), 1.0);
    }
}
