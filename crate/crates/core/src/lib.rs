//! Entrainment of a periodically forced phase oscillator under seasonal
//! block forcing.
//!
//! The system is the lifted two-torus flow
//!
//! ```text
//! x' = p/q + sigma + eta * f(x) + eps * g_lambda(y)
//! y' = 1
//! ```
//!
//! where `f` describes the oscillator nonlinearity and `g_lambda` is a
//! smoothed block function whose length `lambda` models the daylight
//! fraction of the season. The crate provides
//!
//! * [`forcing`] — closed-form Fourier coefficients of the smoothed block
//!   and its perturbed generalizations,
//! * [`dynamics`] — the stroboscopic Poincaré map, rotation numbers and
//!   p:q entrainment detection,
//! * [`normalform`] — the degree-2 Taylor–Fourier normal form and the
//!   resulting tongue-boundary and pocket predictions,
//! * [`scanner`] — parameter-plane sweeps with bisection-refined
//!   entrainment boundaries, emitted as CSV or PGM rasters.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`];
//! the `*64` aliases below fix `f64`, which is what the command line tool
//! and the validation suite use.

pub mod dynamics;
pub mod error;
pub mod forcing;
pub mod normalform;
pub mod scalar;
pub mod scanner;

pub use error::Error;
pub use scalar::Real;

/// `f64` Fourier series on the circle.
pub type FourierSeries64 = forcing::FourierSeries<f64>;
/// `f64` seasonal forcing description.
pub type SeasonalForcing64 = forcing::SeasonalForcing<f64>;
/// `f64` oscillator parameter set.
pub type OscillatorParams64 = dynamics::OscillatorParams<f64>;
/// `f64` lifted Poincaré map.
pub type LiftedMap64 = dynamics::LiftedMap<f64>;
/// `f64` Taylor–Fourier vector-field component.
pub type TaylorFourierField64 = normalform::TaylorFourierField<f64>;
/// `f64` reduced (co-moving) field.
pub type ReducedField64 = normalform::ReducedField<f64>;
/// `f64` scan grid.
pub type ScanGrid64 = scanner::ScanGrid<f64>;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
