//! Occupation-vector basis of the symmetric subspace of `M` d-level systems.
//!
//! A basis ket `|m⟩` is labelled by the counts `(m_1, …, m_d)` of systems in
//! each level. Vectors are ordered reverse-lexicographically with the first
//! level most significant, so `(M, 0, …, 0)` has rank 0 and `(0, …, 0, M)`
//! is last.
//!
//! Levels are 0-based in code.

use std::collections::HashMap;
use std::fmt;
use std::ops::Add;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cz, Real};

/// Default cap on `d^M` for [`embed_symmetric`].
pub const DEFAULT_ORACLE_BUDGET: u64 = 1 << 22;

/// Composition of a non-negative total over `d` levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupationVector {
    counts: Vec<usize>,
}

impl OccupationVector {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDims("occupation vector needs d >= 1 levels".into()));
        }
        Ok(OccupationVector { counts })
    }

    /// All `total` systems in `level`.
    pub fn concentrated(d: usize, level: usize, total: usize) -> Result<Self> {
        if level >= d {
            return Err(Error::InvalidDims(format!("level {level} out of range for d = {d}")));
        }
        let mut counts = vec![0; d];
        counts[level] = total;
        Self::new(counts)
    }

    pub fn zero(d: usize) -> Result<Self> {
        Self::new(vec![0; d])
    }

    pub fn d(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn get(&self, level: usize) -> usize {
        self.counts[level]
    }

    /// Moves one system from level `from` to level `to`, if `from` is occupied.
    pub fn shifted(&self, from: usize, to: usize) -> Option<Self> {
        if self.counts[from] == 0 {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[from] -= 1;
        counts[to] += 1;
        Some(OccupationVector { counts })
    }

    /// `self - other` componentwise, if non-negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        if self.d() != other.d() {
            return None;
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()?;
        Some(OccupationVector { counts })
    }
}

impl Add for &OccupationVector {
    type Output = OccupationVector;

    fn add(self, rhs: &OccupationVector) -> OccupationVector {
        assert_eq!(self.d(), rhs.d(), "occupation vectors over different d");
        OccupationVector {
            counts: self.counts.iter().zip(&rhs.counts).map(|(a, b)| a + b).collect(),
        }
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

fn check_dims(d: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::InvalidDims("d must be at least 1".into()));
    }
    Ok(())
}

/// Binomial coefficient by interleaved multiply/divide, overflow-checked.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc
            .checked_mul(u128::from(n - i))
            .ok_or_else(|| Error::Overflow(format!("C({n}, {k})")))?
            / u128::from(i + 1);
    }
    u64::try_from(acc).map_err(|_| Error::Overflow(format!("C({n}, {k})")))
}

/// Multinomial `(Σ c)! / Π c!`, overflow-checked.
pub fn multinomial(counts: &[usize]) -> Result<u64> {
    let mut acc: u64 = 1;
    let mut running: u64 = 0;
    for &c in counts {
        running += c as u64;
        acc = acc
            .checked_mul(binomial(running, c as u64)?)
            .ok_or_else(|| Error::Overflow(format!("multinomial of {counts:?}")))?;
    }
    Ok(acc)
}

/// Dimension `(M+d-1)! / (M! (d-1)!)` of the symmetric subspace.
pub fn dim_sym(d: usize, total: usize) -> Result<usize> {
    check_dims(d)?;
    let n = binomial((total + d - 1) as u64, (d - 1) as u64)?;
    usize::try_from(n).map_err(|_| Error::Overflow(format!("dim_sym({d}, {total})")))
}

/// All occupation vectors of `total` over `d` levels, in canonical order.
pub fn enumerate_occupations(d: usize, total: usize) -> Result<Vec<OccupationVector>> {
    let size = dim_sym(d, total)?;
    let mut out = Vec::with_capacity(size);
    let mut scratch = vec![0usize; d];
    fill(&mut scratch, 0, total, &mut out);
    debug_assert_eq!(out.len(), size);
    Ok(out)
}

fn fill(scratch: &mut [usize], pos: usize, remaining: usize, out: &mut Vec<OccupationVector>) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(OccupationVector {
            counts: scratch.to_vec(),
        });
        return;
    }
    for v in (0..=remaining).rev() {
        scratch[pos] = v;
        fill(scratch, pos + 1, remaining - v, out);
    }
}

/// Position of `m` in the canonical order for `(m.d(), m.total())`.
pub fn rank(m: &OccupationVector) -> Result<usize> {
    let d = m.d();
    let mut remaining = m.total();
    let mut r = 0usize;
    for (pos, &c) in m.counts.iter().enumerate().take(d - 1) {
        // Every vector with a larger count at `pos` comes first; there are
        // as many as compositions of (remaining - c - 1) over the d - pos
        // levels still open.
        if remaining > c {
            r += dim_sym(d - pos, remaining - c - 1)?;
        }
        remaining -= c;
    }
    Ok(r)
}

/// Inverse of [`rank`].
pub fn unrank(d: usize, total: usize, index: usize) -> Result<OccupationVector> {
    let size = dim_sym(d, total)?;
    if index >= size {
        return Err(Error::IndexOutOfRange { index, size });
    }
    let mut counts = vec![0usize; d];
    let mut remaining = total;
    let mut left = index;
    for (pos, slot) in counts.iter_mut().enumerate().take(d - 1) {
        let mut c = remaining;
        loop {
            // Number of vectors sharing this prefix with count `c` at `pos`.
            let block = dim_sym(d - pos - 1, remaining - c)?;
            if left < block {
                break;
            }
            left -= block;
            c -= 1;
        }
        *slot = c;
        remaining -= c;
    }
    counts[d - 1] = remaining;
    Ok(OccupationVector { counts })
}

/// Enumerated basis with a reverse lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisIndex {
    d: usize,
    total: usize,
    vectors: Vec<OccupationVector>,
    lookup: HashMap<OccupationVector, usize>,
}

impl BasisIndex {
    pub fn new(d: usize, total: usize) -> Result<Self> {
        let vectors = enumerate_occupations(d, total)?;
        let lookup = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        Ok(BasisIndex {
            d,
            total,
            vectors,
            lookup,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn size(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, index: usize) -> &OccupationVector {
        &self.vectors[index]
    }

    pub fn vectors(&self) -> &[OccupationVector] {
        &self.vectors
    }

    pub fn rank_of(&self, m: &OccupationVector) -> Result<usize> {
        self.lookup.get(m).copied().ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "{m} is not a basis vector for d = {}, M = {}",
                self.d, self.total
            ))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &OccupationVector)> {
        self.vectors.iter().enumerate()
    }
}

/// Number of entries `d^M` of the full tensor-product space.
pub fn full_dim(d: usize, total: usize) -> u128 {
    (d as u128).checked_pow(total as u32).unwrap_or(u128::MAX)
}

pub(crate) fn check_budget(d: usize, total: usize, budget: u64) -> Result<usize> {
    let entries = full_dim(d, total);
    if entries > u128::from(budget) {
        return Err(Error::BudgetExceeded { entries, budget });
    }
    Ok(entries as usize)
}

/// Normalized permutation-symmetric vector of `|m⟩` in the full `d^M` space.
///
/// The full index of a product string `s_1 … s_M` is `Σ s_l d^(M-1-l)`.
pub fn embed_symmetric<T: Real>(m: &OccupationVector, budget: u64) -> Result<Vec<Complex<T>>> {
    let d = m.d();
    let total = m.total();
    let len = check_budget(d, total, budget)?;
    let strings = multinomial(m.counts())?;
    let amp = Complex::new((T::one() / T::count(strings)).sqrt(), T::zero());
    let mut out = vec![cz(); len];
    let mut counts = m.counts.clone();
    visit_strings(&mut counts, total, 0, d, &mut |idx| out[idx] = amp);
    Ok(out)
}

/// Calls `f` with the full index of every distinct string with the given
/// level counts.
pub(crate) fn visit_strings(
    counts: &mut [usize],
    remaining: usize,
    prefix: usize,
    d: usize,
    f: &mut impl FnMut(usize),
) {
    if remaining == 0 {
        f(prefix);
        return;
    }
    for level in 0..d {
        if counts[level] > 0 {
            counts[level] -= 1;
            visit_strings(counts, remaining - 1, prefix * d + level, d, f);
            counts[level] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ov(c: &[usize]) -> OccupationVector {
        OccupationVector::new(c.to_vec()).unwrap()
    }

    /// Brute-force enumeration of compositions, independent of `fill`.
    fn brute_compositions(d: usize, total: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let n = (total + 1).pow(d as u32);
        for code in 0..n {
            let mut c = code;
            let v: Vec<usize> = (0..d)
                .map(|_| {
                    let x = c % (total + 1);
                    c /= total + 1;
                    x
                })
                .collect();
            if v.iter().sum::<usize>() == total {
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn dim_examples() {
        assert_eq!(dim_sym(1, 5).unwrap(), 1);
        assert_eq!(dim_sym(2, 2).unwrap(), 3);
        assert_eq!(dim_sym(3, 2).unwrap(), 6);
        for d in 1..=4 {
            for m in 0..=5 {
                assert_eq!(dim_sym(d, m).unwrap(), brute_compositions(d, m).len());
            }
        }
    }

    #[test]
    fn dim_rejects_zero_levels() {
        assert!(matches!(dim_sym(0, 3), Err(Error::InvalidDims(_))));
        assert!(enumerate_occupations(0, 1).is_err());
    }

    #[test]
    fn binomial_overflow_is_reported() {
        assert_eq!(binomial(20, 10).unwrap(), 184_756);
        assert_eq!(binomial(67, 33).unwrap(), 14_226_520_737_620_288_370);
        assert!(matches!(binomial(70, 35), Err(Error::Overflow(_))));
    }

    #[test]
    fn enumeration_examples() {
        let two = enumerate_occupations(2, 2).unwrap();
        assert_eq!(two, vec![ov(&[2, 0]), ov(&[1, 1]), ov(&[0, 2])]);
        assert_eq!(enumerate_occupations(1, 3).unwrap(), vec![ov(&[3])]);
        assert_eq!(
            enumerate_occupations(3, 1).unwrap(),
            vec![ov(&[1, 0, 0]), ov(&[0, 1, 0]), ov(&[0, 0, 1])]
        );
    }

    #[test]
    fn enumeration_is_sorted_descending() {
        let all = enumerate_occupations(4, 5).unwrap();
        for w in all.windows(2) {
            assert!(w[0] > w[1], "{} before {}", w[0], w[1]);
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&ov(&[2, 0])).unwrap(), 0);
        assert_eq!(rank(&ov(&[1, 1])).unwrap(), 1);
        assert_eq!(rank(&ov(&[0, 2])).unwrap(), 2);
        assert_eq!(unrank(2, 2, 1).unwrap(), ov(&[1, 1]));
        assert!(matches!(unrank(2, 2, 3), Err(Error::IndexOutOfRange { index: 3, size: 3 })));
    }

    #[test]
    fn rank_unrank_exhaustive() {
        for d in 1..=4 {
            for m in 0..=8 {
                let all = enumerate_occupations(d, m).unwrap();
                for (i, v) in all.iter().enumerate() {
                    assert_eq!(rank(v).unwrap(), i);
                    assert_eq!(&unrank(d, m, i).unwrap(), v);
                }
            }
        }
    }

    #[test]
    fn pascal_recurrence() {
        for d in 2..=5 {
            for m in 0..=12 {
                let lhs: usize = (0..=m).map(|mp| dim_sym(d - 1, m - mp).unwrap()).sum();
                assert_eq!(lhs, dim_sym(d, m).unwrap());
            }
        }
    }

    #[test]
    fn embedding_examples() {
        let e = embed_symmetric::<f64>(&ov(&[2, 0]), DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(e[0].re, 1.0);
        assert!(e[1..].iter().all(|z| z.norm() == 0.0));

        let e = embed_symmetric::<f64>(&ov(&[1, 1]), DEFAULT_ORACLE_BUDGET).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(e[0b01].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(e[0b10].re, s, epsilon = 1e-15);
        assert_eq!(e[0].re, 0.0);

        // |112>, |121>, |211>  (levels 0,0,1 in code)
        let e = embed_symmetric::<f64>(&ov(&[2, 1]), DEFAULT_ORACLE_BUDGET).unwrap();
        for idx in [0b001, 0b010, 0b100] {
            assert_abs_diff_eq!(e[idx].re, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        }
        assert_eq!(e.iter().filter(|z| z.norm() > 0.0).count(), 3);
    }

    #[test]
    fn embedding_budget() {
        let err = embed_symmetric::<f64>(&ov(&[3, 3]), 32).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { entries: 64, budget: 32 });
    }

    #[test]
    fn embeddings_are_orthonormal() {
        for d in 1..=3 {
            for m in 0..=4 {
                let all = enumerate_occupations(d, m).unwrap();
                let vecs: Vec<_> = all
                    .iter()
                    .map(|v| embed_symmetric::<f64>(v, DEFAULT_ORACLE_BUDGET).unwrap())
                    .collect();
                for (i, a) in vecs.iter().enumerate() {
                    for (j, b) in vecs.iter().enumerate() {
                        let ip = crate::linalg::inner(a, b);
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert_abs_diff_eq!(ip.re, want, epsilon = 1e-12);
                        assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn basis_index_lookup() {
        let b = BasisIndex::new(3, 3).unwrap();
        assert_eq!(b.size(), 10);
        for (i, v) in b.iter() {
            assert_eq!(b.rank_of(v).unwrap(), i);
        }
        assert!(b.rank_of(&ov(&[1, 1])).is_err());
    }
}
