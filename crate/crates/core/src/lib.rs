//! Universal quantum cloning of symmetric multi-qudit states.
//!
//! States of `M` identical `d`-level systems supported on the symmetric
//! subspace are stored in the occupation-number basis `|m⟩`, which has
//! `C(M + d - 1, d - 1)` elements instead of `d^M`. The `M → N` cloning
//! machine acts on that basis directly; its single-copy output is the input
//! reduction shrunk toward `I/d` by `M(N + d) / (N(M + d))`, for every
//! symmetric input, mixed or pure.
//!
//! - [`symbasis`]: occupation vectors, ranking, full-space embeddings.
//! - [`states`]: symmetric densities, single-system reductions, validation.
//! - [`cloner`]: the machine, its reduced output, and exact fidelity formulas.
//! - [`oracle`]: dense isometries and literal partial traces used as a check.
//! - [`mub`]: mutually unbiased bases for prime `d` and the cloning attack.
//! - [`pipeline`]: cascades with copy consumption and the strategy comparison.
//! - [`verify`]: the seeded property grid.
//!
//! ```
//! use symclone::{fidelity_single, CloneMap64, PureState64, pure_power_density, fidelity_pure};
//! use num_complex::Complex64;
//! use num_rational::Rational64;
//!
//! let x = PureState64::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
//! let sigma = CloneMap64::new(2, 1, 3).unwrap().reduced_output(&pure_power_density(&x, 1).unwrap()).unwrap();
//! assert!((fidelity_pure(&sigma, &x).unwrap() - 7.0 / 9.0).abs() < 1e-12);
//! assert_eq!(fidelity_single(1, 3, 2).unwrap(), Rational64::new(7, 9));
//! ```

pub mod cloner;
pub mod error;
pub mod linalg;
pub mod mub;
pub mod oracle;
pub mod pipeline;
pub mod random;
pub mod report;
pub mod scalar;
pub mod states;
pub mod symbasis;
pub mod verify;

pub use cloner::{
    bem_shrink, check_sum_identity, clone, extract_shrink, fidelity_from_shrink, fidelity_global, fidelity_single,
    reduced_output, CloneMap, ShrinkReport, SumIdentity, MAX_EXACT_SPAN,
};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use mub::{clone_mub_state, mub_family, qkd_attack_report, MubFamily, QkdReport};
pub use oracle::{build_isometry, oracle_clone, oracle_global_fidelity, oracle_reduce, IsometryMatrix};
pub use pipeline::{cascade, partial_keep, run_strategy_comparison, CascadeInput, ScenarioReport, Stage, StagePlan};
pub use report::{parse_state_file, to_json_string, StateFile};
pub use scalar::{Real, Tolerances};
pub use states::{
    fidelity_pure, pure_power, pure_power_density, reduce_single, validate_density, Diagnostics, PureState,
    QuditDensity, SymDensity,
};
pub use symbasis::{dim_sym, BasisIndex, OccupationVector, DEFAULT_ORACLE_BUDGET};
pub use verify::{run_verification, VerifyConfig, VerifyReport};

pub type SymDensity64 = SymDensity<f64>;
pub type SymDensity32 = SymDensity<f32>;
pub type QuditDensity64 = QuditDensity<f64>;
pub type QuditDensity32 = QuditDensity<f32>;
pub type PureState64 = PureState<f64>;
pub type PureState32 = PureState<f32>;
pub type CloneMap64 = CloneMap<f64>;
pub type CloneMap32 = CloneMap<f32>;
pub type CMatrix64 = CMatrix<f64>;
