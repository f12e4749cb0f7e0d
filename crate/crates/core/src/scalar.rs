//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All floating-point code is written against [`Real`], which is implemented
//! for `f32` and `f64`. Exact quantities (dimensions, factorial ratios, the
//! closed-form fidelities) never go through `Real`; they live in integer and
//! [`Rational64`] arithmetic and are converted once at the end.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Validation tolerances appropriate for this precision.
    fn tolerances() -> Tolerances;

    /// Converts an `f64` literal. Never fails for finite inputs.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal")
    }

    /// Converts an integer count.
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("integer fits scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn tolerances() -> Tolerances {
        Tolerances::F64
    }
}

impl Real for f32 {
    fn tolerances() -> Tolerances {
        Tolerances::F32
    }
}

/// Tolerances used by state validation and normalization checks.
///
/// Stored as `f64` so diagnostics from either precision compare against the
/// same record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum `|ρ_ij - conj(ρ_ji)|`.
    pub hermitian: f64,
    /// Maximum `|Tr ρ - 1|`.
    pub trace: f64,
    /// Minimum eigenvalue must be at least `-psd`.
    pub psd: f64,
    /// Maximum `|‖x‖² - 1|` for pure states.
    pub norm: f64,
    /// Fidelity excursions outside `[0, 1]` up to this size are clipped.
    pub clip: f64,
}

impl Tolerances {
    pub const F64: Tolerances = Tolerances {
        hermitian: 1e-12,
        trace: 1e-12,
        psd: 1e-10,
        norm: 1e-12,
        clip: 1e-10,
    };

    pub const F32: Tolerances = Tolerances {
        hermitian: 1e-5,
        trace: 1e-5,
        psd: 1e-4,
        norm: 1e-5,
        clip: 1e-4,
    };
}

/// Converts an exact rational into the floating-point type.
pub fn to_real<T: Real>(r: Rational64) -> T {
    let numer = T::from_i64(*r.numer()).expect("i64 fits scalar");
    let denom = T::from_i64(*r.denom()).expect("i64 fits scalar");
    numer / denom
}

pub(crate) fn cz<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

pub(crate) fn cre<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
