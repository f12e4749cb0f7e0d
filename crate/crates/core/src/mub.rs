//! Mutually unbiased bases for prime `d` and the cloning attack on a QKD
//! protocol that uses all `d + 1` of them.
//!
//! Besides the standard basis, basis `k ∈ 1..=d` has states `t ∈ 1..=d`
//!
//! ```text
//! |ψ_t^k⟩ = d^{-1/2} Σ_j ω^{t (d - j)} ω^{-k s_j} |j⟩,   s_j = j + (j+1) + … + (d-1),
//! ```
//!
//! with `ω = exp(2πi/d)` and `s_d = 0`. For `d = 2` the phases are all real
//! and the formula repeats one basis, so the qubit family uses the X and Y
//! eigenbases instead.

use num_complex::Complex;
use num_rational::Rational64;
use serde::Serialize;

use crate::cloner::{fidelity_single, CloneMap};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{cre, Real};
use crate::states::{fidelity_pure, pure_power, pure_power_density, symmetric_projection, PureState, SymDensity};

pub fn is_prime(d: usize) -> bool {
    if d < 2 {
        return false;
    }
    (2..).take_while(|p| p * p <= d).all(|p| !d.is_multiple_of(p))
}

/// The `d + 1` bases; `bases[0]` is the standard basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MubFamily<T> {
    d: usize,
    bases: Vec<Vec<PureState<T>>>,
}

/// Worst-case deviations of a family from orthonormality and unbiasedness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapStats {
    /// `max |⟨ψ_t|ψ_t'⟩ - δ_tt'|` within a basis.
    pub orthonormality_deviation: f64,
    pub min_cross_overlap: f64,
    pub max_cross_overlap: f64,
    /// `max ||⟨ψ|φ⟩|² - 1/d|` across bases.
    pub unbiasedness_deviation: f64,
}

/// `s_j` for 1-based `j`; the empty sum at `j = d` is 0.
fn phase_exponent(j: usize, d: usize) -> usize {
    (j..d).sum()
}

impl<T: Real> MubFamily<T> {
    pub fn new(d: usize) -> Result<Self> {
        if !is_prime(d) {
            return Err(Error::NotPrime(d));
        }
        let mut bases = Vec::with_capacity(d + 1);
        bases.push((0..d).map(|i| PureState::basis(d, i)).collect::<Result<Vec<_>>>()?);
        if d == 2 {
            let s = T::FRAC_1_SQRT_2();
            let z = |re: T, im: T| Complex::new(re, im);
            let o = T::zero();
            bases.push(vec![
                PureState::new(vec![z(s, o), z(s, o)])?,
                PureState::new(vec![z(s, o), z(-s, o)])?,
            ]);
            bases.push(vec![
                PureState::new(vec![z(s, o), z(o, s)])?,
                PureState::new(vec![z(s, o), z(o, -s)])?,
            ]);
        } else {
            let amp = T::one() / T::count(d as u64).sqrt();
            for k in 1..=d {
                let basis = (1..=d)
                    .map(|t| {
                        let amps = (1..=d)
                            .map(|j| {
                                // exponent of ω, reduced mod d
                                let e = (t * (d - j) + (d - k % d) * (phase_exponent(j, d) % d)) % d;
                                let angle = T::TAU() * T::count(e as u64) / T::count(d as u64);
                                Complex::from_polar(amp, angle)
                            })
                            .collect();
                        PureState::new(amps)
                    })
                    .collect::<Result<Vec<_>>>()?;
                bases.push(basis);
            }
        }
        let family = MubFamily { d, bases };
        let stats = family.overlap_stats();
        let tol = T::tolerances();
        if stats.orthonormality_deviation > tol.norm || stats.unbiasedness_deviation > tol.psd {
            return Err(Error::ConstructionCheck(format!(
                "d = {d}: orthonormality deviation {:e}, unbiasedness deviation {:e}",
                stats.orthonormality_deviation, stats.unbiasedness_deviation
            )));
        }
        Ok(family)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn bases(&self) -> &[Vec<PureState<T>>] {
        &self.bases
    }

    pub fn state(&self, basis: usize, index: usize) -> &PureState<T> {
        &self.bases[basis][index]
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, usize, &PureState<T>)> {
        self.bases
            .iter()
            .enumerate()
            .flat_map(|(b, states)| states.iter().enumerate().map(move |(t, s)| (b, t, s)))
    }

    pub fn overlap_stats(&self) -> OverlapStats {
        let inv_d = 1.0 / self.d as f64;
        let mut stats = OverlapStats {
            orthonormality_deviation: 0.0,
            min_cross_overlap: f64::INFINITY,
            max_cross_overlap: 0.0,
            unbiasedness_deviation: 0.0,
        };
        for (b1, t1, s1) in self.states() {
            for (b2, t2, s2) in self.states() {
                let ip = linalg::inner(s1.amplitudes(), s2.amplitudes());
                if b1 == b2 {
                    let want = if t1 == t2 { cre(T::one()) } else { cre(T::zero()) };
                    let dev = (ip - want).norm().as_f64();
                    stats.orthonormality_deviation = stats.orthonormality_deviation.max(dev);
                } else {
                    let p = ip.norm_sqr().as_f64();
                    stats.min_cross_overlap = stats.min_cross_overlap.min(p);
                    stats.max_cross_overlap = stats.max_cross_overlap.max(p);
                    stats.unbiasedness_deviation = stats.unbiasedness_deviation.max((p - inv_d).abs());
                }
            }
        }
        stats
    }

    /// `(basis, index)` of the family member equal to `psi` up to a phase.
    pub fn locate(&self, psi: &PureState<T>) -> Result<(usize, usize)> {
        if psi.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "family has d = {}, state has d = {}",
                self.d,
                psi.d()
            )));
        }
        let mut best = (0, 0, f64::INFINITY);
        for (b, t, s) in self.states() {
            let deficit = 1.0 - linalg::inner(s.amplitudes(), psi.amplitudes()).norm_sqr().as_f64();
            if deficit < best.2 {
                best = (b, t, deficit);
            }
        }
        if best.2 > 1e-10 {
            return Err(Error::NotInFamily(best.2));
        }
        Ok((best.0, best.1))
    }
}

/// Constructs the family, verifying every invariant.
pub fn mub_family<T: Real>(d: usize) -> Result<MubFamily<T>> {
    MubFamily::new(d)
}

/// Branch decomposition of the 1 → 2 clone of a family state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MubCloneRecord {
    pub basis: usize,
    pub index: usize,
    /// Weight on `|2ψ_t⟩`.
    pub doubled_weight: f64,
    /// `(t', weight)` on the symmetric pair state `|ψ_t, ψ_t'⟩` for every `t' ≠ t`.
    pub cross_weights: Vec<(usize, f64)>,
    /// Sum of all branch weights.
    pub total_weight: f64,
    /// Frobenius distance between the clone output and the branch mixture.
    pub reconstruction_residual: f64,
}

impl MubCloneRecord {
    /// Largest deviation from the weights `2/(d+1)` and `1/(d+1)`.
    pub fn weight_deviation(&self, d: usize) -> f64 {
        let expected_doubled = 2.0 / (d as f64 + 1.0);
        let expected_cross = 1.0 / (d as f64 + 1.0);
        self.cross_weights
            .iter()
            .map(|&(_, w)| (w - expected_cross).abs())
            .fold((self.doubled_weight - expected_doubled).abs(), f64::max)
    }
}

/// Clones `psi` 1 → 2 with the universal machine and decomposes the output
/// in the basis of `psi`'s own family: the doubled state `|2ψ⟩` and the
/// normalized symmetric pairs `|ψ, ψ_t'⟩`.
pub fn clone_mub_state<T: Real>(family: &MubFamily<T>, psi: &PureState<T>) -> Result<MubCloneRecord> {
    let (basis, index) = family.locate(psi)?;
    let d = family.d();
    let member = family.state(basis, index);
    let input = SymDensity::from_pure(d, 1, member.amplitudes())?;
    let out = CloneMap::new(d, 1, 2)?.apply(&input)?;

    let doubled = pure_power(member, 2)?;
    let doubled_weight = linalg::expectation(out.matrix(), &doubled).re;
    let mut mixture = SymDensity::from_pure(d, 2, &doubled)?
        .matrix()
        .scale(cre(doubled_weight));
    let mut cross_weights = Vec::with_capacity(d - 1);
    for (t, other) in family.bases()[basis].iter().enumerate() {
        if t == index {
            continue;
        }
        let pair = symmetric_projection(&[member, other])?;
        let norm = linalg::norm_sqr(&pair).sqrt();
        let pair: Vec<_> = pair.into_iter().map(|z| z / norm).collect();
        let w = linalg::expectation(out.matrix(), &pair).re;
        mixture = mixture.add(&SymDensity::from_pure(d, 2, &pair)?.matrix().scale(cre(w)));
        cross_weights.push((t, w.as_f64()));
    }
    let total_weight = doubled_weight.as_f64() + cross_weights.iter().map(|&(_, w)| w).sum::<f64>();
    Ok(MubCloneRecord {
        basis,
        index,
        doubled_weight: doubled_weight.as_f64(),
        cross_weights,
        total_weight,
        reconstruction_residual: out.matrix().sub(&mixture).frobenius_norm().as_f64(),
    })
}

/// Receiver-copy fidelities under the symmetric 1 → 2 cloning attack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QkdReport {
    pub d: usize,
    pub states_checked: usize,
    pub min_fidelity: f64,
    pub max_fidelity: f64,
    pub mean_fidelity: f64,
    /// `(d + 3) / (2 (d + 1))`
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub analytic_fidelity: Rational64,
    /// `(d - 1) / (2 (d + 1))`
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub error_rate: Rational64,
}

/// `(d + 3) / (2 (d + 1))`
pub fn qkd_fidelity(d: usize) -> Rational64 {
    Rational64::new(d as i64 + 3, 2 * (d as i64 + 1))
}

/// `1 - F = (d - 1) / (2 (d + 1))`
pub fn qkd_error_rate(d: usize) -> Rational64 {
    Rational64::new(d as i64 - 1, 2 * (d as i64 + 1))
}

pub fn qkd_attack_report<T: Real>(d: usize) -> Result<QkdReport> {
    let family = MubFamily::<T>::new(d)?;
    qkd_attack_report_for(&family)
}

pub fn qkd_attack_report_for<T: Real>(family: &MubFamily<T>) -> Result<QkdReport> {
    let d = family.d();
    let map = CloneMap::new(d, 1, 2)?;
    let mut fids = Vec::new();
    for (_, _, psi) in family.states() {
        let sigma = map.reduced_output(&pure_power_density(psi, 1)?)?;
        fids.push(fidelity_pure(&sigma, psi)?.as_f64());
    }
    let analytic = qkd_fidelity(d);
    debug_assert_eq!(Some(analytic), fidelity_single(1, 2, d).ok());
    Ok(QkdReport {
        d,
        states_checked: fids.len(),
        min_fidelity: fids.iter().copied().fold(f64::INFINITY, f64::min),
        max_fidelity: fids.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_fidelity: fids.iter().sum::<f64>() / fids.len() as f64,
        analytic_fidelity: analytic,
        error_rate: qkd_error_rate(d),
    })
}
