//! Error type for parameter validation.

use thiserror::Error;

/// Errors raised while constructing domain objects.
///
/// All numerical operations are total on validated inputs, so this enum is
/// only produced by constructors and by the CLI argument layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter fell outside its documented range.
    #[error("{name} = {value} out of range ({requirement})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// The resonance label must consist of coprime positive integers.
    #[error("resonance label ({p}, {q}) must be coprime positive integers")]
    BadResonance { p: u32, q: u32 },

    /// A series flagged as real violated conjugate symmetry.
    #[error("coefficients violate conjugate symmetry at k = {k}")]
    NotConjugateSymmetric { k: i32 },
}
