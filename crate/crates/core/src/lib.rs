//! M-type smoothing splines.
//!
//! Fits `f` on `[0, 1]` by minimizing
//! `(1/n) Σ ρ((y_i - f(t_i))/σ) + λ ∫ {f⁽ᵐ⁾}²` for a convex loss `ρ`,
//! using a clamped B-spline basis with knots at the design points so that
//! every linear system is banded.
//!
//! - [`basis`]: B-spline bases, collocation and derivative matrices, exact
//!   penalty Gram matrices.
//! - [`loss`]: least squares, Huber, smoothed absolute / check loss, `Lp`.
//! - [`scale`]: Rice-type pseudo-residual scale, τ-scale, MAD.
//! - [`fit`]: IRLS solver and evaluation of fitted splines.
//! - [`select`]: weighted GCV and Nelder-Mead search over `log10 λ`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod banded;
pub mod basis;
pub mod error;
pub mod fit;
pub mod loss;
pub mod nelder_mead;
pub mod quadrature;
pub mod scale;
pub mod select;

pub use basis::{build_basis, build_basis_with_max_knots, BasisSystem, DesignData};
pub use error::{Error, Result};
pub use fit::{fit_spline, objective, predict, sobolev_norm_sq, FitOptions, ScaleMode, SplineFit, SplineProblem};
pub use loss::{irls_weight, LossSpec};
pub use scale::{mad, rice_scale, tau_scale, ScaleEstimate, ScaleMethod};
pub use select::{gcv_score, select_lambda, GcvCriterion, GcvEval, GcvResult, SearchOptions};
