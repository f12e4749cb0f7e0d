//! Universal `M → N` cloning of states in the symmetric subspace.
//!
//! The machine maps each basis ket as
//!
//! ```text
//! |m⟩ ⊗ R  ↦  Σ_k α_{m,k} |m + k⟩ ⊗ R_k,      Σ_i k_i = N - M,
//! α_{m,k} = η √(Π_i (m_i + k_i)! / (m_i! k_i!)),
//! η = √((N - M)! (M + d - 1)! / (N + d - 1)!).
//! ```
//!
//! The ancilla outputs `R_k` are an orthonormal family labelled by `k`, so
//! tracing them out leaves `Σ_k λ_{m,m'} α_{m,k} α_{m',k} |m+k⟩⟨m'+k|`.
//!
//! Squared amplitudes are exact rationals: `α²_{m,k} = Π_i C(m_i + k_i, k_i)
//! / C(N + d - 1, N - M)`. They are formed in integer arithmetic and square
//! rooted once.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cre, to_real, Real};
use crate::states::{QuditDensity, SymDensity};
use crate::symbasis::{binomial, BasisIndex, OccupationVector};

/// Largest `N + d` accepted in exact mode; `(N + d - 1)!` fits in 64 bits.
pub const MAX_EXACT_SPAN: usize = 21;

fn check_clone_dims(d: usize, m_in: usize, n_out: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::InvalidDims("d must be at least 1".into()));
    }
    if n_out < m_in {
        return Err(Error::InvalidDims(format!("cannot clone {m_in} systems into N = {n_out} < M")));
    }
    if n_out + d > MAX_EXACT_SPAN {
        return Err(Error::ScaleExceeded(format!(
            "N + d = {} exceeds the exact limit {MAX_EXACT_SPAN}",
            n_out + d
        )));
    }
    Ok(())
}

/// Exact `α²_{m,k}` as `(numerator, denominator)`.
pub fn amplitude_squared_exact(m: &OccupationVector, k: &OccupationVector, n_out: usize) -> Result<(u64, u64)> {
    if m.d() != k.d() {
        return Err(Error::DimensionMismatch(format!("m has d = {}, k has d = {}", m.d(), k.d())));
    }
    let d = m.d();
    let m_in = m.total();
    if m_in + k.total() != n_out {
        return Err(Error::DimensionMismatch(format!(
            "|m| + |k| = {} + {} does not equal N = {n_out}",
            m_in,
            k.total()
        )));
    }
    check_clone_dims(d, m_in, n_out)?;
    let mut numer: u64 = 1;
    for (&mi, &ki) in m.counts().iter().zip(k.counts()) {
        numer = numer
            .checked_mul(binomial((mi + ki) as u64, ki as u64)?)
            .ok_or_else(|| Error::Overflow("amplitude numerator".into()))?;
    }
    let denom = binomial((n_out + d - 1) as u64, (n_out - m_in) as u64)?;
    Ok((numer, denom))
}

/// `α_{m,k}` for `m` over `M` systems and `k` over `N - M`.
pub fn amplitude<T: Real>(m: &OccupationVector, k: &OccupationVector, n_out: usize) -> Result<T> {
    let (numer, denom) = amplitude_squared_exact(m, k, n_out)?;
    Ok((T::count(numer) / T::count(denom)).sqrt())
}

/// `η = √((N - M)! (M + d - 1)! / (N + d - 1)!)`
pub fn normalization<T: Real>(d: usize, m_in: usize, n_out: usize) -> Result<T> {
    check_clone_dims(d, m_in, n_out)?;
    let denom = binomial((n_out + d - 1) as u64, (n_out - m_in) as u64)?;
    Ok((T::one() / T::count(denom)).sqrt())
}

/// Amplitude table of the `M → N` machine for `d` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct CloneMap<T> {
    d: usize,
    m_in: usize,
    n_out: usize,
    eta: T,
    input: BasisIndex,
    ancilla: BasisIndex,
    output: BasisIndex,
    /// `α[m_rank * ancilla.size() + k_rank]`
    table: Vec<T>,
    /// `out[m_rank * ancilla.size() + k_rank]` = rank of `m + k` in `output`.
    sum_rank: Vec<usize>,
}

impl<T: Real> CloneMap<T> {
    pub fn new(d: usize, m_in: usize, n_out: usize) -> Result<Self> {
        check_clone_dims(d, m_in, n_out)?;
        let input = BasisIndex::new(d, m_in)?;
        let ancilla = BasisIndex::new(d, n_out - m_in)?;
        let output = BasisIndex::new(d, n_out)?;
        let mut table = Vec::with_capacity(input.size() * ancilla.size());
        let mut sum_rank = Vec::with_capacity(input.size() * ancilla.size());
        for m in input.vectors() {
            for k in ancilla.vectors() {
                table.push(amplitude(m, k, n_out)?);
                sum_rank.push(output.rank_of(&(m + k))?);
            }
        }
        Ok(CloneMap {
            d,
            m_in,
            n_out,
            eta: normalization(d, m_in, n_out)?,
            input,
            ancilla,
            output,
            table,
            sum_rank,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn input_systems(&self) -> usize {
        self.m_in
    }

    pub fn output_systems(&self) -> usize {
        self.n_out
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn input_basis(&self) -> &BasisIndex {
        &self.input
    }

    pub fn ancilla_basis(&self) -> &BasisIndex {
        &self.ancilla
    }

    pub fn output_basis(&self) -> &BasisIndex {
        &self.output
    }

    /// `α_{m,k}` by basis ranks.
    pub fn alpha(&self, m_rank: usize, k_rank: usize) -> T {
        self.table[m_rank * self.ancilla.size() + k_rank]
    }

    /// Rank of `m + k` in the output basis.
    pub fn output_rank(&self, m_rank: usize, k_rank: usize) -> usize {
        self.sum_rank[m_rank * self.ancilla.size() + k_rank]
    }

    /// Largest `|Σ_k α²_{m,k} - 1|` over inputs `m`.
    pub fn isometry_defect(&self) -> T {
        let a = self.ancilla.size();
        (0..self.input.size())
            .map(|m| {
                let s = self.table[m * a..(m + 1) * a]
                    .iter()
                    .fold(T::zero(), |acc, &x| acc + x * x);
                (s - T::one()).abs()
            })
            .fold(T::zero(), T::max)
    }

    /// Copy with one amplitude shifted by `delta`; used to check that the
    /// verification suite notices a broken machine.
    pub fn with_perturbed_amplitude(mut self, m_rank: usize, k_rank: usize, delta: T) -> Self {
        let a = self.ancilla.size();
        self.table[m_rank * a + k_rank] += delta;
        self
    }

    fn check_input(&self, rho: &SymDensity<T>) -> Result<()> {
        if rho.d() != self.d || rho.total() != self.m_in {
            return Err(Error::DimensionMismatch(format!(
                "machine expects (d, M) = ({}, {}), state has ({}, {})",
                self.d,
                self.m_in,
                rho.d(),
                rho.total()
            )));
        }
        Ok(())
    }

    /// Output state `Σ λ_{m,m'} α_{m,k} α_{m',k} |m+k⟩⟨m'+k|`.
    pub fn apply(&self, rho: &SymDensity<T>) -> Result<SymDensity<T>> {
        self.check_input(rho)?;
        let lam = rho.matrix();
        let dn = self.output.size();
        let din = self.input.size();
        let mut out = CMatrix::zeros(dn, dn);
        for k in 0..self.ancilla.size() {
            for m in 0..din {
                let am = self.alpha(m, k);
                let row = self.output_rank(m, k);
                for mp in 0..din {
                    let v = lam[(m, mp)];
                    if v.re == T::zero() && v.im == T::zero() {
                        continue;
                    }
                    out[(row, self.output_rank(mp, k))] += v * (am * self.alpha(mp, k));
                }
            }
        }
        SymDensity::from_matrix(self.d, self.n_out, out)
    }

    /// Single-copy reduction of the output without building the N-system
    /// state:
    ///
    /// diagonal `Σ_{m,k} λ_{m,m} α²_{m,k} (m_i + k_i) / N`, off-diagonal
    /// `Σ_{m,k} λ_{m,m'} α_{m,k} α_{m',k} √((m_i + k_i)(m_j + k_j + 1)) / N`
    /// with `m' = m - e_i + e_j`.
    pub fn reduced_output(&self, rho: &SymDensity<T>) -> Result<QuditDensity<T>> {
        self.check_input(rho)?;
        let d = self.d;
        if self.n_out == 0 {
            return Err(Error::InvalidDims("cannot reduce a state of zero systems".into()));
        }
        let lam = rho.matrix();
        let inv_n = T::one() / T::count(self.n_out as u64);
        let mut out = CMatrix::zeros(d, d);
        for (r, m) in self.input.iter() {
            for (kr, k) in self.ancilla.iter() {
                let am = self.alpha(r, kr);
                for i in 0..d {
                    let ni = m.get(i) + k.get(i);
                    out[(i, i)] += lam[(r, r)] * (am * am * T::count(ni as u64) * inv_n);
                    if m.get(i) == 0 {
                        continue;
                    }
                    for j in (0..d).filter(|&j| j != i) {
                        let mp = m.shifted(i, j).expect("m_i > 0");
                        let rp = self.input.rank_of(&mp)?;
                        let nj = m.get(j) + k.get(j);
                        let w = T::count((ni * (nj + 1)) as u64).sqrt() * inv_n;
                        out[(i, j)] += lam[(r, rp)] * (am * self.alpha(rp, kr) * w);
                    }
                }
            }
        }
        QuditDensity::from_matrix(out)
    }
}

/// Clones `rho` (over `M` systems) to `N` systems.
pub fn clone<T: Real>(rho: &SymDensity<T>, n_out: usize) -> Result<SymDensity<T>> {
    CloneMap::new(rho.d(), rho.total(), n_out)?.apply(rho)
}

/// Single-copy reduction of `clone(rho, N)`, computed directly.
pub fn reduced_output<T: Real>(rho: &SymDensity<T>, n_out: usize) -> Result<QuditDensity<T>> {
    CloneMap::new(rho.d(), rho.total(), n_out)?.reduced_output(rho)
}

fn check_formula_dims(m_in: usize, n_out: usize, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDims("d must be at least 2".into()));
    }
    if m_in < 1 {
        return Err(Error::InvalidDims("M must be at least 1".into()));
    }
    if n_out < m_in {
        return Err(Error::InvalidDims(format!("N = {n_out} < M = {m_in}")));
    }
    // keeps every product below within i64
    if n_out > 1 << 20 || d > 1 << 20 {
        return Err(Error::ScaleExceeded("formula arguments too large".into()));
    }
    Ok(())
}

fn r(n: usize) -> Rational64 {
    Rational64::from_integer(n as i64)
}

/// Optimal shrinking factor `M (N + d) / (N (M + d))`.
pub fn bem_shrink(m_in: usize, n_out: usize, d: usize) -> Result<Rational64> {
    check_formula_dims(m_in, n_out, d)?;
    Ok(r(m_in) * r(n_out + d) / (r(n_out) * r(m_in + d)))
}

/// Single-copy fidelity `(M (N + d) + N - M) / (N (M + d))`.
pub fn fidelity_single(m_in: usize, n_out: usize, d: usize) -> Result<Rational64> {
    check_formula_dims(m_in, n_out, d)?;
    Ok((r(m_in) * r(n_out + d) + r(n_out - m_in)) / (r(n_out) * r(m_in + d)))
}

/// `((d - 1) f + 1) / d`, the pure-state fidelity for shrinking factor `f`.
pub fn fidelity_from_shrink(f: Rational64, d: usize) -> Rational64 {
    (r(d - 1) * f + r(1)) / r(d)
}

/// Global fidelity `N! (M + d - 1)! / (M! (N + d - 1)!)`, evaluated as
/// `Π_{i=1}^{d-1} (M + i) / (N + i)`.
pub fn fidelity_global(m_in: usize, n_out: usize, d: usize) -> Result<Rational64> {
    check_formula_dims(m_in, n_out, d)?;
    Ok((1..d).fold(r(1), |acc, i| acc * r(m_in + i) / r(n_out + i)))
}

/// Least-squares fit of `σ_out = (1 - f)/d · I + f σ_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShrinkReport<T> {
    /// `None` when the input is maximally mixed and `f` is unidentifiable.
    pub shrink: Option<T>,
    pub residual: T,
    pub degenerate: bool,
}

/// Fits `f = ⟨τ_in, τ_out⟩ / ⟨τ_in, τ_in⟩` on traceless parts `τ = σ - I/d`.
pub fn extract_shrink<T: Real>(sigma_in: &QuditDensity<T>, sigma_out: &QuditDensity<T>) -> Result<ShrinkReport<T>> {
    let d = sigma_in.d();
    if sigma_out.d() != d {
        return Err(Error::DimensionMismatch(format!(
            "input has d = {d}, output has d = {}",
            sigma_out.d()
        )));
    }
    let noise = CMatrix::identity(d).scale(cre(T::one() / T::count(d as u64)));
    let tau_in = sigma_in.matrix().sub(&noise);
    let tau_out = sigma_out.matrix().sub(&noise);
    let norm_in = tau_in.frobenius_norm();
    if norm_in < T::lit(1e-12) {
        return Ok(ShrinkReport {
            shrink: None,
            residual: tau_out.frobenius_norm(),
            degenerate: true,
        });
    }
    let f = tau_in.frobenius_dot(&tau_out).re / (norm_in * norm_in);
    let residual = tau_out.sub(&tau_in.scale(cre(f))).frobenius_norm();
    Ok(ShrinkReport {
        shrink: Some(f),
        residual,
        degenerate: false,
    })
}

/// Both sides of the enumeration identity
/// `Σ_k Π_l C(m_l + k_l, k_l) (m_j + k_j + 1) = (m_j + 1) (N + d)! / ((N - M)! (M + d)!)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SumIdentity {
    pub lhs: u128,
    pub rhs: u128,
}

impl SumIdentity {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Evaluates both sides exactly; `level` is 0-based.
pub fn check_sum_identity(m: &OccupationVector, level: usize, n_out: usize) -> Result<SumIdentity> {
    let d = m.d();
    let m_in = m.total();
    if level >= d {
        return Err(Error::InvalidDims(format!("level {level} out of range for d = {d}")));
    }
    if n_out < m_in {
        return Err(Error::InvalidDims(format!("N = {n_out} < M = {m_in}")));
    }
    let overflow = || Error::Overflow("sum identity".into());
    let mut lhs: u128 = 0;
    for k in BasisIndex::new(d, n_out - m_in)?.vectors() {
        let mut term: u128 = u128::from((m.get(level) + k.get(level) + 1) as u64);
        for (&ml, &kl) in m.counts().iter().zip(k.counts()) {
            term = term
                .checked_mul(u128::from(binomial((ml + kl) as u64, kl as u64)?))
                .ok_or_else(overflow)?;
        }
        lhs = lhs.checked_add(term).ok_or_else(overflow)?;
    }
    // (N + d)! / ((N - M)! (M + d)!) = C(N + d, N - M)
    let rhs = u128::from((m.get(level) + 1) as u64)
        .checked_mul(u128::from(binomial((n_out + d) as u64, (n_out - m_in) as u64)?))
        .ok_or_else(overflow)?;
    Ok(SumIdentity { lhs, rhs })
}

/// Exact value as a float, for reporting.
pub fn rational_value<T: Real>(q: Rational64) -> T {
    to_real(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{fidelity_pure, reduce_single, PureState};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex;

    fn ov(c: &[usize]) -> OccupationVector {
        OccupationVector::new(c.to_vec()).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn qubit_two_to_three_amplitudes() {
        let a = |m: &[usize], k: &[usize]| amplitude::<f64>(&ov(m), &ov(k), 3).unwrap();
        assert_abs_diff_eq!(a(&[2, 0], &[1, 0]), 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a(&[2, 0], &[0, 1]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a(&[1, 1], &[1, 0]), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(a(&[1, 1], &[0, 1]), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(a(&[0, 2], &[1, 0]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a(&[0, 2], &[0, 1]), 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn amplitude_errors() {
        assert!(matches!(
            amplitude::<f64>(&ov(&[1, 0]), &ov(&[1, 0, 0]), 2),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            amplitude::<f64>(&ov(&[1, 0]), &ov(&[1, 0]), 3),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(CloneMap::<f64>::new(2, 3, 2), Err(Error::InvalidDims(_))));
        assert!(matches!(CloneMap::<f64>::new(2, 1, 20), Err(Error::ScaleExceeded(_))));
        assert!(CloneMap::<f64>::new(2, 1, 19).is_ok());
    }

    #[test]
    fn isometry_normalization_grid() {
        for d in 1..=4 {
            for m in 0..=6 {
                for n in m..=8 {
                    let map = CloneMap::<f64>::new(d, m, n).unwrap();
                    assert!(map.isometry_defect() <= 1e-12, "d={d} M={m} N={n}");
                    assert!(map.table.iter().all(|&a| a > 0.0));
                }
            }
        }
    }

    #[test]
    fn identity_when_n_equals_m() {
        let x = PureState::normalized(vec![Complex::new(0.3, 0.2), Complex::new(0.1, -0.7)]).unwrap();
        let rho = crate::states::pure_power_density(&x, 2).unwrap();
        let out = clone(&rho, 2).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) <= 1e-15);
        let red = reduced_output(&rho, 2).unwrap();
        assert!(red.matrix().max_abs_diff(reduce_single(&rho).unwrap().matrix()) <= 1e-15);
    }

    #[test]
    fn one_to_three_output_of_arbitrary_qubit() {
        let x = PureState::normalized(vec![Complex::new(0.8, 0.1), Complex::new(-0.2, 0.55)]).unwrap();
        let rho = crate::states::pure_power_density(&x, 1).unwrap();
        let red = reduced_output(&rho, 3).unwrap();
        let want = QuditDensity::pure_plus_noise(&x, 5.0 / 9.0, 2.0 / 9.0);
        assert!(red.matrix().max_abs_diff(want.matrix()) <= 1e-12);
    }

    #[test]
    fn clone_rejects_shrinking() {
        let rho = SymDensity::<f64>::maximally_mixed(2, 3).unwrap();
        assert!(matches!(clone(&rho, 2), Err(Error::InvalidDims(_))));
        let map = CloneMap::<f64>::new(2, 2, 3).unwrap();
        assert!(matches!(map.apply(&rho), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn closed_form_fidelities() {
        assert_eq!(fidelity_single(1, 3, 2).unwrap(), q(7, 9));
        assert_eq!(fidelity_single(1, 4, 2).unwrap(), q(3, 4));
        assert_eq!(fidelity_single(1, 2, 2).unwrap(), q(5, 6));
        assert_eq!(bem_shrink(2, 3, 2).unwrap(), q(5, 6));
        assert_eq!(bem_shrink(1, 3, 2).unwrap(), q(5, 9));
        assert_eq!(bem_shrink(4, 4, 5).unwrap(), q(1, 1));
        assert_eq!(fidelity_global(3, 3, 4).unwrap(), q(1, 1));
        assert_eq!(fidelity_global(1, 2, 2).unwrap(), q(2, 3));
        assert_eq!(fidelity_global(2, 3, 2).unwrap(), q(3, 4));
        assert!(bem_shrink(0, 3, 2).is_err());
        assert!(fidelity_single(2, 1, 2).is_err());
        assert!(fidelity_global(1, 2, 1).is_err());
    }

    /// Factorial form of the global fidelity, computed independently.
    fn global_by_factorials(m: u64, n: u64, d: u64) -> Rational64 {
        let fact = |x: u64| (1..=x).product::<u64>() as i64;
        Rational64::new(fact(n) * fact(m + d - 1), fact(m) * fact(n + d - 1))
    }

    #[test]
    fn global_fidelity_matches_factorials() {
        for d in 2..=5u64 {
            for m in 1..=6u64 {
                for n in m..=10u64 {
                    assert_eq!(
                        fidelity_global(m as usize, n as usize, d as usize).unwrap(),
                        global_by_factorials(m, n, d)
                    );
                }
            }
        }
    }

    #[test]
    fn single_fidelity_is_shrink_relation() {
        for d in 2..=6 {
            for m in 1..=6 {
                for n in m..=12 {
                    let f = bem_shrink(m, n, d).unwrap();
                    assert_eq!(fidelity_single(m, n, d).unwrap(), fidelity_from_shrink(f, d));
                }
            }
        }
    }

    #[test]
    fn shrink_extraction() {
        let x = PureState::normalized(vec![Complex::new(0.3, 0.4), Complex::new(0.5, -0.1)]).unwrap();
        let sigma = QuditDensity::pure_plus_noise(&x, 0.6, 0.2);
        let rep = extract_shrink(&sigma, &sigma).unwrap();
        assert_abs_diff_eq!(rep.shrink.unwrap(), 1.0, epsilon = 1e-12);
        assert!(rep.residual <= 1e-12);

        let pure = QuditDensity::pure(&x);
        let out = QuditDensity::pure_plus_noise(&x, 25.0 / 54.0, 29.0 / 108.0);
        let rep = extract_shrink(&pure, &out).unwrap();
        assert_abs_diff_eq!(rep.shrink.unwrap(), 25.0 / 54.0, epsilon = 1e-12);
        assert!(rep.residual <= 1e-10);

        let mixed = QuditDensity::<f64>::maximally_mixed(2);
        let rep = extract_shrink(&mixed, &out).unwrap();
        assert!(rep.degenerate);
        assert!(rep.shrink.is_none());

        let three = QuditDensity::<f64>::maximally_mixed(3);
        assert!(extract_shrink(&mixed, &three).is_err());
    }

    #[test]
    fn sum_identity_examples() {
        let s = check_sum_identity(&ov(&[2, 0]), 0, 3).unwrap();
        assert_eq!(s, SumIdentity { lhs: 15, rhs: 15 });
        let s = check_sum_identity(&ov(&[1, 1]), 1, 3).unwrap();
        assert_eq!(s, SumIdentity { lhs: 10, rhs: 10 });
        // N = M: single k = 0 term
        let s = check_sum_identity(&ov(&[1, 2, 0]), 1, 3).unwrap();
        assert!(s.holds());
        assert_eq!(s.lhs, 3);
        assert!(check_sum_identity(&ov(&[1, 1]), 2, 3).is_err());
    }

    #[test]
    fn pure_input_reaches_single_fidelity() {
        let x = PureState::normalized(vec![
            Complex::new(0.2, 0.1),
            Complex::new(-0.5, 0.3),
            Complex::new(0.4, 0.6),
        ])
        .unwrap();
        for m in 1..=3 {
            for n in m..=5 {
                let rho = crate::states::pure_power_density(&x, m).unwrap();
                let f = fidelity_pure(&reduced_output(&rho, n).unwrap(), &x).unwrap();
                let want: f64 = rational_value(fidelity_single(m, n, 3).unwrap());
                assert_abs_diff_eq!(f, want, epsilon = 1e-12);
            }
        }
    }
}
