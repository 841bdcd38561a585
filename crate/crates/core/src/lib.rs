//! # cbnorm
//!
//! Completely bounded (CB) norms and the CB minimal conditional entropy of
//! finite-dimensional quantum channels.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`linalg`] | Hermitian eigensolver wrappers, Schatten norms, partial traces, entropies, purification |
//! | [`random`] | Seeded Ginibre / Haar generators for states, channels and test instances |
//! | [`optimize`] | Quasi-Newton minimizer with multi-start driver |
//! | [`channels`] | Kraus/Choi/Stinespring representations and channel builders |
//! | [`vnorms`] | Vector-valued Schatten norms `(p,1)`, `(1,p)`, `(∞,p)` and the max-min identity |
//! | [`cbentropy`] | `ω_p`, `ν_p`, `S_CB,min`, the `p → 1⁺` limit formula and tensor checks |
//! | [`inequalities`] | Randomized verification suites for entropy and trace inequalities |
//! | [`cli`] | Command-line front end and JSON report schema |
//!
//! All entropies are reported in bits.
//!
//! ```
//! use cbnorm::channels::Channel;
//! use cbnorm::cbentropy::{omega_p, closed_form, ClosedForm};
//! use cbnorm::vnorms::NormParams;
//!
//! let dep = Channel::depolarizing(2, 0.5).unwrap();
//! let params = NormParams { restarts: 4, ..NormParams::default() };
//! let omega = omega_p(&dep, 2.0, &params, false).unwrap();
//! let exact = closed_form(ClosedForm::OmegaDep, 2, 0.5, 2.0).unwrap();
//! assert!((omega.value - exact).abs() < 1e-6);
//! ```

#![forbid(unsafe_code)]

pub mod cbentropy;
pub mod channels;
pub mod cli;
mod error;
pub mod inequalities;
pub mod linalg;
pub mod optimize;
pub mod random;
pub mod vnorms;

pub use error::{Error, Result};
pub use linalg::{BipartiteState, ComplexMatrix, DimSplit};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
