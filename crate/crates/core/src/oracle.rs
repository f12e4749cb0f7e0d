//! Brute-force reference computations.
//!
//! Nothing here is fast. The isometry is built as an explicit dense matrix
//! with amplitudes evaluated from floating-point factorials, cloning is
//! conjugation by that matrix followed by an index-summed partial trace, and
//! reductions go through the full `d^M` tensor-product space via
//! [`embed_symmetric`]. None of it shares code with the closed forms in
//! [`crate::cloner`], [`crate::states::reduce_single`] or
//! [`crate::pipeline::partial_keep`].

use num_complex::Complex;

use crate::cloner::MAX_EXACT_SPAN;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::{cre, cz, Real};
use crate::states::{pure_power, PureState, QuditDensity, SymDensity};
use crate::symbasis::{check_budget, dim_sym, embed_symmetric, enumerate_occupations, rank};

/// Dense `V` mapping the `M`-system symmetric space into
/// (`N`-system symmetric space) ⊗ (ancilla labels).
///
/// Row `n_rank * ancilla_size + k_rank`, column `m_rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryMatrix<T> {
    d: usize,
    m_in: usize,
    n_out: usize,
    ancilla_size: usize,
    matrix: CMatrix<T>,
}

impl<T: Real> IsometryMatrix<T> {
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d, self.m_in, self.n_out)
    }

    pub fn ancilla_size(&self) -> usize {
        self.ancilla_size
    }

    pub fn output_size(&self) -> usize {
        self.matrix.rows() / self.ancilla_size
    }

    /// Entry for input `m`, output `n`, ancilla `k` (zero unless `n = m + k`).
    pub fn entry(&self, n_rank: usize, k_rank: usize, m_rank: usize) -> Complex<T> {
        self.matrix[(n_rank * self.ancilla_size + k_rank, m_rank)]
    }

    /// `max |V†V - I|`
    pub fn defect(&self) -> T {
        let vv = self.matrix.adjoint().matmul(&self.matrix);
        vv.max_abs_diff(&CMatrix::identity(vv.rows()))
    }
}

fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, i| acc * T::count(i as u64))
}

/// Explicit isometry of the `M → N` machine.
pub fn build_isometry<T: Real>(d: usize, m_in: usize, n_out: usize) -> Result<IsometryMatrix<T>> {
    if d < 1 || n_out < m_in {
        return Err(Error::InvalidDims(format!("d = {d}, M = {m_in}, N = {n_out}")));
    }
    if n_out + d > MAX_EXACT_SPAN {
        return Err(Error::ScaleExceeded(format!("N + d = {} exceeds {MAX_EXACT_SPAN}", n_out + d)));
    }
    let inputs = enumerate_occupations(d, m_in)?;
    let ancillas = enumerate_occupations(d, n_out - m_in)?;
    let out_size = dim_sym(d, n_out)?;
    let eta = (factorial::<T>(n_out - m_in) * factorial::<T>(m_in + d - 1) / factorial::<T>(n_out + d - 1)).sqrt();
    let mut matrix = CMatrix::zeros(out_size * ancillas.len(), inputs.len());
    for (col, m) in inputs.iter().enumerate() {
        for (kr, k) in ancillas.iter().enumerate() {
            let ratio = m.counts().iter().zip(k.counts()).fold(T::one(), |acc, (&mi, &ki)| {
                acc * factorial::<T>(mi + ki) / (factorial::<T>(mi) * factorial::<T>(ki))
            });
            let n = m + k;
            matrix[(rank(&n)? * ancillas.len() + kr, col)] = cre(eta * ratio.sqrt());
        }
    }
    Ok(IsometryMatrix {
        d,
        m_in,
        n_out,
        ancilla_size: ancillas.len(),
        matrix,
    })
}

/// `Tr_anc(V ρ V†)` by explicit summation over the ancilla index.
pub fn oracle_clone_with<T: Real>(iso: &IsometryMatrix<T>, rho: &SymDensity<T>) -> Result<SymDensity<T>> {
    if (rho.d(), rho.total()) != (iso.d, iso.m_in) {
        return Err(Error::DimensionMismatch("state does not match isometry input".into()));
    }
    let joint = rho.matrix().conjugate_by(&iso.matrix);
    let a = iso.ancilla_size;
    let n = iso.output_size();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = cz();
            for k in 0..a {
                s += joint[(i * a + k, j * a + k)];
            }
            out[(i, j)] = s;
        }
    }
    SymDensity::from_matrix(iso.d, iso.n_out, out)
}

pub fn oracle_clone<T: Real>(rho: &SymDensity<T>, n_out: usize) -> Result<SymDensity<T>> {
    oracle_clone_with(&build_isometry(rho.d(), rho.total(), n_out)?, rho)
}

/// Columns `embed_symmetric(m)` for every basis vector, as a `d^M × D` matrix.
pub fn embedding_matrix<T: Real>(d: usize, total: usize, budget: u64) -> Result<CMatrix<T>> {
    let full = check_budget(d, total, budget)?;
    let basis = enumerate_occupations(d, total)?;
    let cols = basis
        .iter()
        .map(|m| embed_symmetric::<T>(m, budget))
        .collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_fn(full, basis.len(), |i, j| cols[j][i]))
}

/// Literal partial trace of the embedded operator over the last
/// `M - keep` systems; returns the `d^keep × d^keep` full-space matrix.
pub fn full_partial_trace<T: Real>(rho: &SymDensity<T>, keep: usize, budget: u64) -> Result<CMatrix<T>> {
    let d = rho.d();
    let total = rho.total();
    if keep > total {
        return Err(Error::InvalidDims(format!("keep = {keep} > M = {total}")));
    }
    let e = embedding_matrix::<T>(d, total, budget)?;
    let kept = d.pow(keep as u32);
    let rest = d.pow((total - keep) as u32);
    let lam = rho.matrix();
    let mut out = CMatrix::zeros(kept, kept);
    for r in 0..rest {
        let slice = CMatrix::from_fn(kept, lam.rows(), |a, j| e[(a * rest + r, j)]);
        out = out.add(&lam.conjugate_by(&slice));
    }
    Ok(out)
}

/// Single-system reduction through the full tensor-product space.
pub fn oracle_reduce<T: Real>(rho: &SymDensity<T>, budget: u64) -> Result<QuditDensity<T>> {
    if rho.total() == 0 {
        return Err(Error::InvalidDims("cannot reduce a state of zero systems".into()));
    }
    QuditDensity::from_matrix(full_partial_trace(rho, 1, budget)?)
}

/// Reduction to `keep` systems through the full space, projected back onto
/// the symmetric basis. The second value is the Frobenius norm of the part
/// of the reduced operator lying outside the symmetric subspace.
pub fn oracle_partial_keep<T: Real>(rho: &SymDensity<T>, keep: usize, budget: u64) -> Result<(SymDensity<T>, T)> {
    let d = rho.d();
    let reduced = full_partial_trace(rho, keep, budget)?;
    let e = embedding_matrix::<T>(d, keep, budget)?;
    let projected = e.adjoint().matmul(&reduced).matmul(&e);
    let leakage = reduced.sub(&projected.conjugate_by(&e)).frobenius_norm();
    Ok((SymDensity::from_matrix(d, keep, projected)?, leakage))
}

/// `V^{⊗M}` applied to a full-space vector.
pub fn apply_local<T: Real>(u: &CMatrix<T>, v: &[Complex<T>], d: usize, total: usize) -> Vec<Complex<T>> {
    let mut cur = v.to_vec();
    for pos in 0..total {
        let stride = d.pow((total - 1 - pos) as u32);
        let mut next = vec![cz(); cur.len()];
        for (idx, slot) in next.iter_mut().enumerate() {
            let level = (idx / stride) % d;
            let base = idx - level * stride;
            let mut s = cz();
            for l in 0..d {
                s += u[(level, l)] * cur[base + l * stride];
            }
            *slot = s;
        }
        cur = next;
    }
    cur
}

/// Matrix of `V^{⊗M}` restricted to the symmetric subspace:
/// `W_{n,m} = ⟨n| V^{⊗M} |m⟩`.
pub fn symmetric_rotation<T: Real>(u: &CMatrix<T>, total: usize, budget: u64) -> Result<CMatrix<T>> {
    let d = u.rows();
    let e = embedding_matrix::<T>(d, total, budget)?;
    let basis = enumerate_occupations(d, total)?;
    let mut w = CMatrix::zeros(basis.len(), basis.len());
    let rotated: Vec<Vec<Complex<T>>> = (0..basis.len())
        .map(|m| {
            let col: Vec<_> = (0..e.rows()).map(|i| e[(i, m)]).collect();
            apply_local(u, &col, d, total)
        })
        .collect();
    for n in 0..basis.len() {
        let en: Vec<_> = (0..e.rows()).map(|i| e[(i, n)]).collect();
        for (m, rv) in rotated.iter().enumerate() {
            w[(n, m)] = linalg::inner(&en, rv);
        }
    }
    Ok(w)
}

/// `V^{⊗M} ρ V^{†⊗M}` on the symmetric subspace.
pub fn rotate_symmetric<T: Real>(rho: &SymDensity<T>, u: &CMatrix<T>, budget: u64) -> Result<SymDensity<T>> {
    if u.rows() != rho.d() || u.cols() != rho.d() {
        return Err(Error::DimensionMismatch("unitary does not match state dimension".into()));
    }
    let w = symmetric_rotation(u, rho.total(), budget)?;
    SymDensity::from_matrix(rho.d(), rho.total(), rho.matrix().conjugate_by(&w))
}

/// `⟨x|^{⊗N} ρ_out |x⟩^{⊗N}` for `ρ_out` the oracle clone of `|x⟩^{⊗M}`.
pub fn oracle_global_fidelity<T: Real>(x: &PureState<T>, m_in: usize, n_out: usize) -> Result<T> {
    let input = SymDensity::from_pure(x.d(), m_in, &pure_power(x, m_in)?)?;
    let out = oracle_clone(&input, n_out)?;
    let ideal = pure_power(x, n_out)?;
    Ok(linalg::expectation(out.matrix(), &ideal).re)
}
