//! Numerical laboratory for averaging operators on the unit circle.
//!
//! The circle is `T = R/Z` with addition mod 1. For a real random variable
//! `Y` and a scale `t`, the averaging operator
//!
//! ```text
//! (A_t f)(x) = E f(x ⊕ tY)
//! ```
//!
//! is a Markov contraction on every `L_p(T)`, and `I − A_t` is invertible on
//! the subspace of mean-zero functions whenever the law of `tY mod 1` is not
//! concentrated on a finite subgroup. This crate discretizes `A_t` (circulant
//! grid weights, or exact Fourier multipliers), computes the spectral gap
//!
//! ```text
//! g_p(t) = inf { ‖(I − A_t) f‖_p / ‖f‖_p : f ≠ 0, ∫f = 0 }
//! ```
//!
//! exactly for `p ∈ {1, 2, ∞}` via circulant extreme-point formulas, fits the
//! constant in the `c·t²` lower bound over sweeps, and packages a suite of
//! named quantitative checks (contraction, telescoping, goodness of wrapped
//! sums, a Sobolev-type inequality, and the atomic-law counterexample search).

mod fft;

pub mod config;
pub mod error;
pub mod gap;
pub mod law;
pub mod operator;
pub mod report;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
pub use law::{Atom, LawSpec, RealDensity, WrappedDensity};
pub use operator::{FrequencySymbol, GridOperator, MultiplierOperator};
pub use torus::{GridFunction, Lp, TorusGrid, TrigPoly};
