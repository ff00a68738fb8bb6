//! Fourier representation of the smoothed seasonal block forcing.
//!
//! The raw forcing is a 1-periodic block of length `lambda`: the fraction
//! of the forcing period during which the Zeitgeber is "on". Its Fourier
//! coefficients are `g_0 = lambda` and
//!
//! ```text
//! g_k = i/(2 pi k) * (exp(-2 pi i k lambda) - 1),   k != 0.
//! ```
//!
//! The block is not smooth, so it is replaced by its convolution with a
//! normalized mollifier; on the coefficient level that multiplies `g_k` by
//! the mollifier transform evaluated at `k`. The zeros of the coefficient
//! curves `lambda -> g_k(lambda)` are unchanged by this, which is what makes
//! pinch locations smoother-independent.
//!
//! An optional perturbation (amplitude `beta`) detaches those coefficient
//! curves from zero while keeping the winter/summer endpoints intact, which
//! opens chains of stability pockets into a single pocket.

use num_complex::Complex;

use crate::error::Error;
use crate::scalar::{lit, tau, Real};
use crate::Result;

/// Finite complex Fourier series on the circle.
///
/// Stores only the nonzero coefficients, sorted by index. A series flagged
/// as real must satisfy `coeff(-k) = conj(coeff(k))`; this is checked on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries<T: Real> {
    terms: Vec<(i32, Complex<T>)>,
    kmax: u32,
    real: bool,
}

impl<T: Real> FourierSeries<T> {
    /// Builds a series from `(k, coefficient)` pairs. Duplicate indices are
    /// summed, exact zeros dropped.
    pub fn new(terms: impl IntoIterator<Item = (i32, Complex<T>)>, real: bool) -> Result<Self> {
        let mut merged: Vec<(i32, Complex<T>)> = Vec::new();
        for (k, c) in terms {
            match merged.binary_search_by_key(&k, |t| t.0) {
                Ok(i) => merged[i].1 = merged[i].1 + c,
                Err(i) => merged.insert(i, (k, c)),
            }
        }
        merged.retain(|(_, c)| c.re != T::zero() || c.im != T::zero());
        let kmax = merged.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0);
        let series = Self { terms: merged, kmax, real };
        if real {
            series.check_conjugate_symmetry()?;
        }
        Ok(series)
    }

    /// The empty (identically zero) series.
    pub fn zero() -> Self {
        Self { terms: Vec::new(), kmax: 0, real: true }
    }

    /// The series of `sin(2 pi t)`: coefficients `-i/2` at `k = 1` and
    /// `i/2` at `k = -1`. This is the default oscillator nonlinearity.
    pub fn sin() -> Self {
        let half = lit::<T>(0.5);
        Self {
            terms: vec![
                (-1, Complex::new(T::zero(), half)),
                (1, Complex::new(T::zero(), -half)),
            ],
            kmax: 1,
            real: true,
        }
    }

    fn check_conjugate_symmetry(&self) -> Result<()> {
        let tol = T::epsilon().sqrt();
        for &(k, c) in &self.terms {
            if k < 0 {
                continue;
            }
            let mirror = self.coeff(-k);
            let d = mirror - c.conj();
            let scale = T::one().max(c.norm());
            if d.norm() > tol * scale {
                return Err(Error::NotConjugateSymmetric { k });
            }
        }
        // Negative indices without a positive partner.
        for &(k, c) in &self.terms {
            if k >= 0 {
                continue;
            }
            if self.coeff(-k).norm() == T::zero() && c.norm() > tol {
                return Err(Error::NotConjugateSymmetric { k });
            }
        }
        Ok(())
    }

    /// Coefficient at index `k` (zero when absent).
    pub fn coeff(&self, k: i32) -> Complex<T> {
        match self.terms.binary_search_by_key(&k, |t| t.0) {
            Ok(i) => self.terms[i].1,
            Err(_) => Complex::new(T::zero(), T::zero()),
        }
    }

    /// Nonzero `(k, coefficient)` pairs in increasing `k`.
    pub fn terms(&self) -> &[(i32, Complex<T>)] {
        &self.terms
    }

    /// Largest |k| with a stored coefficient.
    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    /// Whether the series is flagged as representing a real function.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Complex evaluation `sum_k c_k exp(2 pi i k t)`.
    pub fn eval_complex(&self, t: T) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(k, c) in &self.terms {
            let phase = tau::<T>() * lit::<T>(k as f64) * t;
            acc = acc + c * Complex::new(phase.cos(), phase.sin());
        }
        acc
    }

    /// Real evaluation. For realness-flagged series this sums
    /// `c_0 + 2 sum_{k>0} Re(c_k e^{2 pi i k t})` and is the hot path of the
    /// integrator; otherwise it is the real part of [`Self::eval_complex`].
    pub fn eval_real(&self, t: T) -> T {
        if !self.real {
            return self.eval_complex(t).re;
        }
        let two = lit::<T>(2.0);
        let mut acc = self.coeff(0).re;
        for &(k, c) in &self.terms {
            if k <= 0 {
                continue;
            }
            let phase = tau::<T>() * lit::<T>(k as f64) * t;
            let (s, cphase) = (phase.sin(), phase.cos());
            acc = acc + two * (c.re * cphase - c.im * s);
        }
        acc
    }

    /// Derivative series `2 pi i k c_k`.
    pub fn derivative(&self) -> Self {
        let i2pi = Complex::new(T::zero(), tau::<T>());
        let terms = self
            .terms
            .iter()
            .map(|&(k, c)| (k, c * i2pi * Complex::new(lit::<T>(k as f64), T::zero())))
            .collect::<Vec<_>>();
        Self { terms, kmax: self.kmax, real: self.real }
    }
}

/// Mollifier used to smooth the block function.
///
/// The Gaussian is the working smoother; the squared-cosine bump exists to
/// demonstrate that measured pinch locations do not depend on the choice.
/// It is deliberately not exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoother<T: Real> {
    /// `phi(x) = sqrt(alpha/pi) exp(-alpha x^2)`; transform
    /// `exp(-pi^2 k^2 / alpha)`. The width comes from
    /// [`SeasonalForcing::alpha`].
    Gaussian,
    /// `phi(x) = cos^2(pi x / (2 w)) / w` on `[-w, w]`; transform
    /// `sinc(2 w k) / (1 - (2 w k)^2)`.
    CosineBump { half_width: T },
}

/// Seasonal block forcing: daylight fraction, smoothing width, truncation
/// order and perturbation amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalForcing<T: Real> {
    lambda: T,
    alpha: T,
    kmax: u32,
    beta: T,
    smoother: Smoother<T>,
}

/// Default Gaussian smoothing width.
pub const DEFAULT_ALPHA: f64 = 50.0;
/// Default truncation order.
pub const DEFAULT_KMAX: u32 = 64;
/// Highest harmonic of the perturbation shape.
pub const PERTURBATION_KMAX: i32 = 8;

impl<T: Real> SeasonalForcing<T> {
    /// Validates and builds a forcing description with Gaussian smoothing.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must be rejected too
    pub fn new(lambda: T, alpha: T, kmax: u32, beta: T) -> Result<Self> {
        if lambda < T::zero() || lambda > T::one() {
            return Err(Error::OutOfRange {
                name: "lambda",
                value: lambda.to_f64().unwrap_or(f64::NAN),
                requirement: "0 <= lambda <= 1",
            });
        }
        if !(alpha > T::zero()) {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: alpha.to_f64().unwrap_or(f64::NAN),
                requirement: "alpha > 0",
            });
        }
        if beta < T::zero() || beta > T::one() {
            return Err(Error::OutOfRange {
                name: "beta",
                value: beta.to_f64().unwrap_or(f64::NAN),
                requirement: "0 <= beta <= 1",
            });
        }
        if kmax == 0 {
            return Err(Error::OutOfRange {
                name: "kmax",
                value: 0.0,
                requirement: "kmax >= 1",
            });
        }
        Ok(Self { lambda, alpha, kmax, beta, smoother: Smoother::Gaussian })
    }

    /// The documented defaults at a given daylight fraction:
    /// `alpha = 50`, `K = 64`, `beta = 0`.
    pub fn with_defaults(lambda: T) -> Result<Self> {
        Self::new(lambda, lit(DEFAULT_ALPHA), DEFAULT_KMAX, T::zero())
    }

    /// Replaces the smoother (test plumbing for smoother-independence).
    pub fn with_smoother(mut self, smoother: Smoother<T>) -> Self {
        self.smoother = smoother;
        self
    }

    /// Returns a copy with a different daylight fraction.
    pub fn at_lambda(&self, lambda: T) -> Result<Self> {
        let mut sf = self.clone();
        if lambda < T::zero() || lambda > T::one() {
            return Err(Error::OutOfRange {
                name: "lambda",
                value: lambda.to_f64().unwrap_or(f64::NAN),
                requirement: "0 <= lambda <= 1",
            });
        }
        sf.lambda = lambda;
        Ok(sf)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn smoother(&self) -> Smoother<T> {
        self.smoother
    }

    /// Mollifier transform at integer frequency `k`.
    pub fn transform(&self, k: i32) -> T {
        match self.smoother {
            Smoother::Gaussian => gaussian_transform(k, self.alpha),
            Smoother::CosineBump { half_width } => cosine_bump_transform(k, half_width),
        }
    }

    /// Smoothed block coefficient `transform(k) * block_coeff(k, lambda)`.
    pub fn smoothed_coeff(&self, k: i32) -> Complex<T> {
        block_coeff(k, self.lambda).scale(self.transform(k))
    }

    /// Full coefficient including the perturbation:
    /// `smoothed_coeff(k) + beta * lambda (1 - lambda) * s_k`.
    ///
    /// The `lambda (1 - lambda)` factor keeps the winter and summer
    /// endpoints exact (all-off and all-on) for every `beta`.
    pub fn coeff(&self, k: i32) -> Complex<T> {
        let mut c = self.smoothed_coeff(k);
        if self.beta > T::zero() {
            let envelope = self.beta * self.lambda * (T::one() - self.lambda);
            c = c + perturbation_coeff::<T>(k).scale(envelope);
        }
        c
    }

    /// The forcing as a truncated Fourier series, `|k| <= kmax`.
    pub fn series(&self) -> FourierSeries<T> {
        let kmax = self.kmax as i32;
        let terms = (-kmax..=kmax).map(|k| (k, self.coeff(k)));
        FourierSeries::new(terms, true).expect("forcing coefficients are conjugate symmetric")
    }

    /// Evaluates the truncated forcing at time `t` (1-periodic).
    ///
    /// Coefficients are computed lazily per `k`; the integrator tabulates
    /// the series once per trajectory instead.
    pub fn eval(&self, t: T) -> T {
        let mut acc = self.coeff(0).re;
        let two = lit::<T>(2.0);
        for k in 1..=self.kmax as i32 {
            let c = self.coeff(k);
            let phase = tau::<T>() * lit::<T>(k as f64) * t;
            acc = acc + two * (c.re * phase.cos() - c.im * phase.sin());
        }
        acc
    }
}

/// Fourier coefficient of the raw block of length `lambda`.
///
/// `g_0 = lambda`, `g_k = i/(2 pi k) (exp(-2 pi i k lambda) - 1)` otherwise,
/// so `|g_k| = |sin(pi k lambda)| / (pi |k|)`.
pub fn block_coeff<T: Real>(k: i32, lambda: T) -> Complex<T> {
    if k == 0 {
        return Complex::new(lambda, T::zero());
    }
    let kf = lit::<T>(k as f64);
    let angle = -(tau::<T>() * kf * lambda);
    let num = Complex::new(angle.cos() - T::one(), angle.sin());
    let prefactor = Complex::new(T::zero(), T::one() / (tau::<T>() * kf));
    prefactor * num
}

/// Transform of the normalized Gaussian `sqrt(alpha/pi) exp(-alpha x^2)`
/// at frequency `k`: `exp(-pi^2 k^2 / alpha)`.
pub fn gaussian_transform<T: Real>(k: i32, alpha: T) -> T {
    let pi = T::PI();
    let kf = lit::<T>(k as f64);
    (-(pi * pi * kf * kf) / alpha).exp()
}

/// Transform of the normalized squared-cosine bump of half-width `w` at
/// frequency `k`: `sinc(2 w k) / (1 - (2 w k)^2)`, with the removable
/// singularity at `2 w k = 1` filled in.
pub fn cosine_bump_transform<T: Real>(k: i32, half_width: T) -> T {
    let s = lit::<T>(2.0) * half_width * lit::<T>(k as f64);
    if s == T::zero() {
        return T::one();
    }
    let one_minus_s2 = T::one() - s * s;
    if one_minus_s2.abs() < lit::<T>(1e-9) {
        // limit of sin(pi s) / (pi s (1 - s^2)) as |s| -> 1
        return lit::<T>(0.5);
    }
    let pis = T::PI() * s;
    pis.sin() / (pis * one_minus_s2)
}

/// Coefficients of the perturbation shape
/// `s(t) = sum_{j=1}^{8} 2^{1-j} sin(2 pi j t)`, i.e. `s_k = -i 2^{-k}` for
/// `1 <= k <= 8` and the conjugate at negative `k`.
///
/// The first harmonic matches `sin(2 pi t)`; the higher harmonics are what
/// detach the `k >= 2` coefficient curves from zero, so that chains of
/// pockets open for every low-order tongue and not just the main one.
pub fn perturbation_coeff<T: Real>(k: i32) -> Complex<T> {
    let a = k.unsigned_abs() as i32;
    if a == 0 || a > PERTURBATION_KMAX {
        return Complex::new(T::zero(), T::zero());
    }
    let mag = lit::<T>(0.5f64.powi(a));
    if k > 0 {
        Complex::new(T::zero(), -mag)
    } else {
        Complex::new(T::zero(), mag)
    }
}
