//! Density operators on the symmetric subspace and on a single qudit.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::{cre, cz, Real};
use crate::symbasis::{multinomial, BasisIndex, OccupationVector};

/// Hermitian matrix `λ_{m,m'}` over the symmetric basis of `M` d-level systems.
///
/// Construction checks shapes only; call [`validate_density`] for the
/// Hermitian / trace / positivity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SymDensity<T> {
    basis: BasisIndex,
    entries: CMatrix<T>,
}

impl<T: Real> SymDensity<T> {
    pub fn from_matrix(d: usize, total: usize, entries: CMatrix<T>) -> Result<Self> {
        let basis = BasisIndex::new(d, total)?;
        if entries.rows() != basis.size() || entries.cols() != basis.size() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, symmetric basis for d = {d}, M = {total} has size {}",
                entries.rows(),
                entries.cols(),
                basis.size()
            )));
        }
        Ok(SymDensity { basis, entries })
    }

    /// `|v⟩⟨v|` for a vector given in the symmetric basis.
    pub fn from_pure(d: usize, total: usize, v: &[Complex<T>]) -> Result<Self> {
        Self::from_matrix(d, total, CMatrix::outer(v, v))
    }

    /// `I / D`
    pub fn maximally_mixed(d: usize, total: usize) -> Result<Self> {
        let basis = BasisIndex::new(d, total)?;
        let n = basis.size();
        let entries = CMatrix::identity(n).scale(cre(T::one() / T::count(n as u64)));
        Ok(SymDensity { basis, entries })
    }

    /// `|m⟩⟨m|`
    pub fn basis_projector(m: &OccupationVector) -> Result<Self> {
        let basis = BasisIndex::new(m.d(), m.total())?;
        let r = basis.rank_of(m)?;
        let mut entries = CMatrix::zeros(basis.size(), basis.size());
        entries[(r, r)] = cre(T::one());
        Ok(SymDensity { basis, entries })
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }

    /// Number of systems `M`.
    pub fn total(&self) -> usize {
        self.basis.total()
    }

    pub fn basis(&self) -> &BasisIndex {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.entries
    }

    pub fn entry(&self, m: &OccupationVector, mp: &OccupationVector) -> Result<Complex<T>> {
        Ok(self.entries[(self.basis.rank_of(m)?, self.basis.rank_of(mp)?)])
    }

    pub fn trace(&self) -> Complex<T> {
        self.entries.trace()
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.basis.d() != other.basis.d() || self.basis.total() != other.basis.total() {
            return Err(Error::DimensionMismatch("combining states over different (d, M)".into()));
        }
        Ok(SymDensity {
            basis: self.basis.clone(),
            entries: self.entries.scale(cre(a)).add(&other.entries.scale(cre(b))),
        })
    }

    /// Lossless precision change through `f64`.
    pub fn cast<U: Real>(&self) -> SymDensity<U> {
        let m = &self.entries;
        SymDensity {
            basis: self.basis.clone(),
            entries: CMatrix::from_fn(m.rows(), m.cols(), |i, j| {
                Complex::new(U::lit(m[(i, j)].re.as_f64()), U::lit(m[(i, j)].im.as_f64()))
            }),
        }
    }
}

/// `d × d` single-system density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditDensity<T> {
    matrix: CMatrix<T>,
}

impl<T: Real> QuditDensity<T> {
    pub fn from_matrix(matrix: CMatrix<T>) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "qudit density must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(QuditDensity { matrix })
    }

    pub fn pure(x: &PureState<T>) -> Self {
        QuditDensity {
            matrix: CMatrix::outer(x.amplitudes(), x.amplitudes()),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        QuditDensity {
            matrix: CMatrix::identity(d).scale(cre(T::one() / T::count(d as u64))),
        }
    }

    /// `p·|x⟩⟨x| + q·I`
    pub fn pure_plus_noise(x: &PureState<T>, p: T, q: T) -> Self {
        let d = x.d();
        QuditDensity {
            matrix: CMatrix::outer(x.amplitudes(), x.amplitudes())
                .scale(cre(p))
                .add(&CMatrix::identity(d).scale(cre(q))),
        }
    }

    pub fn d(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn conjugate_by(&self, u: &CMatrix<T>) -> Self {
        QuditDensity {
            matrix: self.matrix.conjugate_by(u),
        }
    }
}

/// Normalized pure state `Σ x_i |i⟩` of one d-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    amps: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    /// Accepts amplitudes whose squared norm is within tolerance of 1.
    pub fn new(amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidDims("pure state needs d >= 1 amplitudes".into()));
        }
        let n = linalg::norm_sqr(&amps).as_f64();
        if !n.is_finite() || (n - 1.0).abs() > T::tolerances().norm {
            return Err(Error::NotNormalized(n));
        }
        Ok(PureState { amps })
    }

    /// Rescales to unit norm; rejects the zero vector.
    pub fn normalized(amps: Vec<Complex<T>>) -> Result<Self> {
        let n = linalg::norm_sqr(&amps);
        if amps.is_empty() || n <= T::zero() || !n.is_finite() {
            return Err(Error::NotNormalized(n.as_f64()));
        }
        let s = T::one() / n.sqrt();
        Ok(PureState {
            amps: amps.into_iter().map(|z| z * s).collect(),
        })
    }

    pub fn basis(d: usize, level: usize) -> Result<Self> {
        if level >= d {
            return Err(Error::InvalidDims(format!("level {level} out of range for d = {d}")));
        }
        let mut amps = vec![cz(); d];
        amps[level] = cre(T::one());
        Ok(PureState { amps })
    }

    pub fn d(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn apply(&self, u: &CMatrix<T>) -> Result<Self> {
        if u.rows() != self.d() || u.cols() != self.d() {
            return Err(Error::DimensionMismatch("unitary does not match state dimension".into()));
        }
        Ok(PureState {
            amps: u.matvec(&self.amps),
        })
    }
}

/// Coefficients of `|x⟩^{⊗M}` in the symmetric basis:
/// `√(M!) Π_i x_i^{m_i} / √(m_i!)`.
pub fn pure_power<T: Real>(x: &PureState<T>, total: usize) -> Result<Vec<Complex<T>>> {
    let n = linalg::norm_sqr(x.amplitudes()).as_f64();
    if (n - 1.0).abs() > T::tolerances().norm {
        return Err(Error::NotNormalized(n));
    }
    let basis = BasisIndex::new(x.d(), total)?;
    basis
        .vectors()
        .iter()
        .map(|m| {
            let weight = T::count(multinomial(m.counts())?).sqrt();
            let prod = m
                .counts()
                .iter()
                .zip(x.amplitudes())
                .fold(cre(T::one()), |acc, (&c, &xi)| acc * xi.powu(c as u32));
            Ok(prod * weight)
        })
        .collect()
}

/// `|x⟩⟨x|^{⊗M}` as a symmetric density.
pub fn pure_power_density<T: Real>(x: &PureState<T>, total: usize) -> Result<SymDensity<T>> {
    SymDensity::from_pure(x.d(), total, &pure_power(x, total)?)
}

/// Symmetric-basis coefficients `⟨m| v_1 ⊗ … ⊗ v_M⟩` of a product of
/// single-system vectors.
///
/// Each coefficient sums the product amplitudes over the distinct strings
/// with level counts `m`, weighted by `√(Π m_i! / M!)`.
pub fn symmetric_projection<T: Real>(factors: &[&PureState<T>]) -> Result<Vec<Complex<T>>> {
    let total = factors.len();
    let d = factors.first().map(|f| f.d()).ok_or_else(|| {
        Error::InvalidDims("symmetric projection needs at least one factor".into())
    })?;
    if factors.iter().any(|f| f.d() != d) {
        return Err(Error::DimensionMismatch("factors over different d".into()));
    }
    let basis = BasisIndex::new(d, total)?;
    basis
        .vectors()
        .iter()
        .map(|m| {
            let norm = (T::one() / T::count(multinomial(m.counts())?)).sqrt();
            let mut counts = m.counts().to_vec();
            let mut sum = cz();
            string_products(&mut counts, factors, 0, cre(T::one()), &mut sum);
            Ok(sum * norm)
        })
        .collect()
}

fn string_products<T: Real>(
    counts: &mut [usize],
    factors: &[&PureState<T>],
    pos: usize,
    acc: Complex<T>,
    sum: &mut Complex<T>,
) {
    if pos == factors.len() {
        *sum += acc;
        return;
    }
    for level in 0..counts.len() {
        if counts[level] > 0 {
            counts[level] -= 1;
            let a = acc * factors[pos].amplitudes()[level];
            string_products(counts, factors, pos + 1, a, sum);
            counts[level] += 1;
        }
    }
}

/// Single-system reduced density operator of a symmetric state, closed form.
///
/// Diagonal: `Σ_m λ_{m,m} m_i / M`. Off-diagonal `(i, j)`:
/// `Σ_m λ_{m,m'} √(m_i (m_j + 1)) / M` with `m' = m - e_i + e_j`.
pub fn reduce_single<T: Real>(rho: &SymDensity<T>) -> Result<QuditDensity<T>> {
    let d = rho.d();
    let total = rho.total();
    if total == 0 {
        return Err(Error::InvalidDims("cannot reduce a state of zero systems".into()));
    }
    let basis = rho.basis();
    let lam = rho.matrix();
    let inv_m = T::one() / T::count(total as u64);
    let mut out = CMatrix::zeros(d, d);
    for (r, m) in basis.iter() {
        for i in 0..d {
            let mi = m.get(i);
            if mi == 0 {
                continue;
            }
            out[(i, i)] += lam[(r, r)] * (T::count(mi as u64) * inv_m);
            for j in (0..d).filter(|&j| j != i) {
                let mp = m.shifted(i, j).expect("m_i > 0");
                let rp = basis.rank_of(&mp)?;
                let w = (T::count((mi * (m.get(j) + 1)) as u64)).sqrt() * inv_m;
                out[(i, j)] += lam[(r, rp)] * w;
            }
        }
    }
    QuditDensity::from_matrix(out)
}

/// `⟨x|σ|x⟩`, clipped into `[0, 1]` when the excursion is within tolerance.
pub fn fidelity_pure<T: Real>(sigma: &QuditDensity<T>, x: &PureState<T>) -> Result<T> {
    if sigma.d() != x.d() {
        return Err(Error::DimensionMismatch(format!(
            "density has d = {}, pure state has d = {}",
            sigma.d(),
            x.d()
        )));
    }
    clip_fidelity(linalg::expectation(sigma.matrix(), x.amplitudes()))
}

pub(crate) fn clip_fidelity<T: Real>(z: Complex<T>) -> Result<T> {
    let tol = T::tolerances().clip;
    let f = z.re.as_f64();
    if z.im.abs().as_f64() > tol || f < -tol || f > 1.0 + tol || !f.is_finite() {
        return Err(Error::FidelityOutOfRange(f));
    }
    Ok(z.re.max(T::zero()).min(T::one()))
}

/// Validation diagnostics for a density operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub hermitian_deviation: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Anything with a square density matrix.
pub trait DensityMatrix<T> {
    fn density_matrix(&self) -> &CMatrix<T>;
}

impl<T> DensityMatrix<T> for SymDensity<T> {
    fn density_matrix(&self) -> &CMatrix<T> {
        &self.entries
    }
}

impl<T> DensityMatrix<T> for QuditDensity<T> {
    fn density_matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }
}

/// Hermiticity, unit trace and positivity, against the scalar's default
/// tolerances.
pub fn validate_density<T: Real>(rho: &impl DensityMatrix<T>) -> Diagnostics {
    validate_density_with(rho, &T::tolerances())
}

pub fn validate_density_with<T: Real>(
    rho: &impl DensityMatrix<T>,
    tol: &crate::scalar::Tolerances,
) -> Diagnostics {
    let m = rho.density_matrix();
    let hermitian_deviation = m.hermitian_deviation().as_f64();
    let tr = m.trace();
    let trace_deviation = (tr - cre(T::one())).norm().as_f64();
    let min_eigenvalue = m.min_hermitian_eigenvalue().as_f64();
    let pass = hermitian_deviation <= tol.hermitian
        && trace_deviation <= tol.trace
        && min_eigenvalue >= -tol.psd;
    Diagnostics {
        hermitian_deviation,
        trace_deviation,
        min_eigenvalue,
        pass,
    }
}
