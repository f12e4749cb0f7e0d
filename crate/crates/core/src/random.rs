//! Seeded random instances for property checks.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{self, CMatrix};
use crate::scalar::{cre, Real};
use crate::states::{PureState, SymDensity};
use crate::symbasis::dim_sym;

pub const DEFAULT_SEED: u64 = 0x5eed_c10e;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re), T::lit(im))
}

/// Haar-random pure state.
pub fn pure_state<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState<T> {
    let amps = (0..d).map(|_| gaussian(rng)).collect();
    PureState::normalized(amps).expect("gaussian vector is nonzero")
}

/// Random full-rank density over the symmetric basis: `G G† / Tr(G G†)`.
pub fn sym_density<T: Real, R: Rng + ?Sized>(d: usize, total: usize, rng: &mut R) -> Result<SymDensity<T>> {
    let n = dim_sym(d, total)?;
    let g = CMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    SymDensity::from_matrix(d, total, w.scale(cre(T::one() / tr)))
}

/// Random density of the given rank (`rank = 1` gives an entangled pure
/// symmetric state in general).
pub fn sym_density_of_rank<T: Real, R: Rng + ?Sized>(
    d: usize,
    total: usize,
    rank: usize,
    rng: &mut R,
) -> Result<SymDensity<T>> {
    let n = dim_sym(d, total)?;
    let g = CMatrix::from_fn(n, rank.max(1), |_, _| gaussian(rng));
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    SymDensity::from_matrix(d, total, w.scale(cre(T::one() / tr)))
}

/// Haar-random unitary via Gram–Schmidt on a complex Gaussian matrix.
pub fn unitary<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix<T> {
    let mut cols: Vec<Vec<Complex<T>>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex<T>> = (0..d).map(|_| gaussian(rng)).collect();
        for c in &cols {
            let p = linalg::inner(c, &v);
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= ci * p;
            }
        }
        let n = linalg::norm_sqr(&v).sqrt();
        if n > T::lit(1e-6) {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    CMatrix::from_fn(d, d, |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::validate_density;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = seeded(3);
        let u: CMatrix<f64> = unitary(4, &mut rng);
        let e = u.adjoint().matmul(&u).max_abs_diff(&CMatrix::identity(4));
        assert!(e < 1e-12);
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = seeded(11);
        for d in 2..=3 {
            for m in 1..=3 {
                let rho: SymDensity<f64> = sym_density(d, m, &mut rng).unwrap();
                assert!(validate_density(&rho).pass);
                let rho: SymDensity<f64> = sym_density_of_rank(d, m, 1, &mut rng).unwrap();
                assert!(validate_density(&rho).pass);
            }
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let a: PureState<f64> = pure_state(3, &mut seeded(9));
        let b: PureState<f64> = pure_state(3, &mut seeded(9));
        assert_eq!(a, b);
    }
}
