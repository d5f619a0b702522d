//! # gaborstab
//!
//! Numerical toolkit for the local stability of Gabor (STFT) phase retrieval.
//!
//! The crate is organised the way the stability argument is assembled:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`tfcore`] | sampled signals, Fourier transform, STFT, closed-form ambiguity moduli |
//! | [`weights`] | translation stable weights, control functions, admissibility, SLPR constant |
//! | [`norms`] | mixed norm, spectrogram metric, phase-aligned distances, local deviation |
//! | [`poincare`] | weighted Poincare and Cheeger constants, log-concavity and auxiliary bounds |
//! | [`stabilitylab`] | lemma checks and end-to-end stability experiments |
//!
//! Conventions used throughout:
//!
//! ```text
//! V_g f(x, xi) = \int f(t) conj(g(t - x)) exp(-2 pi i xi t) dt
//! |F|_L(chi)   = || tau -> ||F||_{L2(B_1(tau))} ||_{L4(chi)}
//! d(phi, psi)  = || phi^2 - psi^2 ||_{L2}^{1/2}
//! ```
//!
//! Every computation is deterministic: reductions run in a fixed order and
//! parallel work (per time slice, per row) never reorders a floating-point sum.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::type_complexity)]

pub mod conv;
mod error;
pub mod norms;
pub mod poincare;
pub mod stabilitylab;
pub mod tfcore;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
