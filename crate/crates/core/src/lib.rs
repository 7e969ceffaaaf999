//! Teleportation fidelity of coherent states over a Braunstein–Kimble link with a
//! two-mode squeezed vacuum resource distributed through a lossy thermal channel.
//!
//! The sender mixes the input with one resource mode on a beam splitter of
//! transmissivity `T`, measures a rotated quadrature pair at angle `theta`, and the
//! receiver displaces with independent gains `g_q`, `g_p`. Everything is evaluated in
//! the characteristic-function picture, where the output state of the protocol stays
//! Gaussian and the overlap with the input coherent state has a closed form.
//!
//! The crate is organised around that closed form:
//!
//! * [`params`] — protocol/channel parameter structs, derived coefficients, and
//!   two-mode Gaussian resource states;
//! * [`fidelity`] — the fidelity kernel `(K1, K2, G)`, single-amplitude fidelity,
//!   amplitude-independent gain tuning, and its optimum over `theta` and `r`;
//! * [`averaging`] — fidelity averaged over line / circle / Gaussian ensembles of
//!   input amplitudes, with the corresponding closed-form optima;
//! * [`optimizer`] — deterministic multi-start Nelder–Mead over any subset of
//!   `(g_q, g_p, theta)`;
//! * [`oracle`] — an independent numerical route (2-D Gaussian integrals and nested
//!   quadrature straight from the characteristic functions) used to cross-check the
//!   closed forms.

// Reference values are frozen with every digit of the extended-precision
// computation that produced them, beyond what an f64 stores.
#![allow(clippy::excessive_precision)]
// Guards of the form `!(x > floor)` are deliberate: they must also trip on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod fidelity;
pub mod optimizer;
pub mod oracle;
pub mod params;

pub use averaging::{CircleDist, Distribution, GaussDist, LineDist};
pub use fidelity::{CoherentAmplitude, FidelityKernel};
pub use optimizer::{Bounds, FreeParamSet, OptimizationResult, ParamSpec};
pub use params::{ChannelParams, DerivedCoeffs, GaussianCF2, TeleporterParams};

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A constructor or entry point was handed a value outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The normalization `G = K1^2 - 4 K2^2` of the fidelity kernel came out
    /// non-positive or non-finite, so the Gaussian overlap integral is meaningless.
    /// Within the documented parameter domain this only happens through overflow
    /// (e.g. squeezing large enough that `cosh 2r` is infinite).
    #[error("kernel normalization K1^2 - 4 K2^2 is not a positive finite number (K1 = {k1:e}, K2 = {k2:e})")]
    NonPositiveG { k1: f64, k2: f64 },

    /// An objective handed to the optimizer evaluated to NaN or infinity.
    #[error("objective is not finite at g_q = {g_q}, g_p = {g_p}, theta = {theta}")]
    NonFiniteObjective { g_q: f64, g_p: f64, theta: f64 },

    /// A covariance matrix failed the symmetry / positivity checks for a Gaussian
    /// characteristic function.
    #[error("not a valid Gaussian characteristic function: {0}")]
    UnphysicalResource(String),

    /// The quadratic form of a 2-D Gaussian integral is not positive definite, so
    /// the integral diverges.
    #[error(
        "quadratic form is not positive definite (min eigenvalue {min_eig:e}); integral diverges"
    )]
    DivergentIntegral { min_eig: f64 },

    /// A squeezing-threshold solve found no interior maximum in `r` on the search
    /// interval: the fidelity is monotone there or the maximum sits on the boundary.
    #[error("no interior maximum in the squeezing parameter on (0, r_cap)")]
    NoInteriorMax,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParam(format!(
            "{name} must be finite, got {x}"
        )))
    }
}
