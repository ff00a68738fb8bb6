//! Degree-2 Taylor–Fourier normal form of the seasonal oscillator.
//!
//! The lifted vector field is graded by parameter degree, with
//! `degree(eta) = degree(eps) = 1` and `degree(sigma) = 2`. One
//! near-identity transformation generated by a field `Y = a(x, y) d/dx`
//! removes every non-resonant degree-1 term; the homological equation reads
//!
//! ```text
//! a_{k,l} = q f_{k,l} / (2 pi i (p k + q l)),     p k + q l != 0,
//! ```
//!
//! and the surviving degree-2 part is `sigma + (1/2) [Y, X_1]` projected
//! onto the resonance module `p k + q l = 0`. Written in the co-moving
//! coordinate `u = x - (p/q) y` this yields the reduced scalar field
//!
//! ```text
//! u' = sigma - (q/p) ( eta^2 sum_k f_k f_{-k}
//!                      + eps eta sum_m f_{mq} g_{-mp} e^{2 pi i m q u} ).
//! ```
//!
//! Stationary points of the reduced field are relative equilibria and
//! correspond to p:q periodic orbits of the oscillator, so the detuning
//! interval on which the reduced field has zeros predicts the measured
//! range of entrainment.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::dynamics::OscillatorParams;
use crate::forcing::{FourierSeries, SeasonalForcing};
use crate::scalar::{lit, tau, Real};

/// Parameter-degree exponents of a Taylor–Fourier coefficient.
///
/// The detuning slot counts twice toward the total degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Degree {
    pub eta: u8,
    pub eps: u8,
    pub detuning: u8,
}

impl Degree {
    pub const ETA: Degree = Degree { eta: 1, eps: 0, detuning: 0 };
    pub const EPS: Degree = Degree { eta: 0, eps: 1, detuning: 0 };
    pub const DETUNING: Degree = Degree { eta: 0, eps: 0, detuning: 1 };
    pub const ETA_EPS: Degree = Degree { eta: 1, eps: 1, detuning: 0 };

    /// Graded total degree: `eta + eps + 2 * detuning`.
    pub fn total(&self) -> u32 {
        self.eta as u32 + self.eps as u32 + 2 * self.detuning as u32
    }

    fn add(self, other: Degree) -> Degree {
        Degree {
            eta: self.eta + other.eta,
            eps: self.eps + other.eps,
            detuning: self.detuning + other.detuning,
        }
    }
}

/// x-component of a torus vector field as Taylor–Fourier coefficients
/// indexed by `(k, l, degree)`, representing
/// `sum c mu^degree e^{2 pi i (k x + l y)} d/dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorFourierField<T: Real> {
    coeffs: BTreeMap<(i32, i32, Degree), Complex<T>>,
    /// Hard truncation bound on |k| and |l|.
    kbound: u32,
    /// Set when a bracket pushed nonzero mass beyond `kbound`.
    lossy: bool,
}

impl<T: Real> TaylorFourierField<T> {
    pub fn new(kbound: u32) -> Self {
        Self { coeffs: BTreeMap::new(), kbound, lossy: false }
    }

    pub fn from_terms(
        kbound: u32,
        terms: impl IntoIterator<Item = ((i32, i32, Degree), Complex<T>)>,
    ) -> Self {
        let mut field = Self::new(kbound);
        for (idx, c) in terms {
            field.insert(idx, c);
        }
        field
    }

    fn insert(&mut self, idx: (i32, i32, Degree), c: Complex<T>) {
        if c.norm() == T::zero() {
            return;
        }
        if idx.0.unsigned_abs() > self.kbound || idx.1.unsigned_abs() > self.kbound {
            self.lossy = true;
            return;
        }
        let slot = self.coeffs.entry(idx).or_insert_with(|| Complex::new(T::zero(), T::zero()));
        *slot = *slot + c;
    }

    pub fn coeff(&self, k: i32, l: i32, degree: Degree) -> Complex<T> {
        self.coeffs
            .get(&(k, l, degree))
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i32, i32, Degree), &Complex<T>)> {
        self.coeffs.iter()
    }

    pub fn kbound(&self) -> u32 {
        self.kbound
    }

    /// Whether a bracket truncated away nonzero coefficients.
    pub fn is_lossy(&self) -> bool {
        self.lossy
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let coeffs = self.coeffs.iter().map(|(&idx, &c)| (idx, c * s)).collect();
        Self { coeffs, kbound: self.kbound, lossy: self.lossy }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.lossy = self.lossy || other.lossy;
        for (&idx, &c) in &other.coeffs {
            out.insert(idx, c);
        }
        out
    }

    /// Pointwise evaluation with parameter degrees already folded into the
    /// coefficients: `sum c e^{2 pi i (k x + l y)}`.
    pub fn eval(&self, x: T, y: T) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (&(k, l, _), &c) in &self.coeffs {
            let phase = tau::<T>() * (lit::<T>(k as f64) * x + lit::<T>(l as f64) * y);
            acc = acc + c * Complex::new(phase.cos(), phase.sin());
        }
        acc
    }

    /// Keeps only coefficients whose degree label equals `degree`.
    pub fn filter_degree(&self, degree: Degree) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|((_, _, d), _)| *d == degree)
            .map(|(&idx, &c)| (idx, c))
            .collect();
        Self { coeffs, kbound: self.kbound, lossy: self.lossy }
    }
}

/// Solves the homological equation `X_1^{nonres} + ad Y (X_0) = 0`.
///
/// Returns the generator `Y` with `a_{k,l} = q f_{k,l} / (2 pi i (pk + ql))`
/// on non-resonant indices; resonant coefficients cannot be removed and get
/// no generator mass (they simply pass through to the normal form).
pub fn homological_solve<T: Real>(
    x1: &TaylorFourierField<T>,
    p: u32,
    q: u32,
) -> TaylorFourierField<T> {
    let mut out = TaylorFourierField::new(x1.kbound);
    for (&(k, l, d), &c) in &x1.coeffs {
        let res = p as i64 * k as i64 + q as i64 * l as i64;
        if res == 0 {
            continue;
        }
        // 1 / (2 pi i m) = -i / (2 pi m)
        let denom = tau::<T>() * lit::<T>(res as f64);
        let a = c * Complex::new(T::zero(), -lit::<T>(q as f64) / denom);
        out.insert((k, l, d), a);
    }
    out
}

/// `ad Y (X_0) = [Y, X_0]` for `X_0 = (p/q) d/dx + d/dy`: multiplies each
/// coefficient by `-2 pi i (p k + q l) / q`.
pub fn ad_x0<T: Real>(y: &TaylorFourierField<T>, p: u32, q: u32) -> TaylorFourierField<T> {
    let mut out = TaylorFourierField::new(y.kbound);
    for (&(k, l, d), &c) in &y.coeffs {
        let res = p as i64 * k as i64 + q as i64 * l as i64;
        let factor = Complex::new(
            T::zero(),
            -(tau::<T>() * lit::<T>(res as f64) / lit::<T>(q as f64)),
        );
        out.insert((k, l, d), c * factor);
    }
    out
}

/// Lie bracket of two fields with only x-components:
/// `[a d/dx, f d/dx] = (a df/dx - f da/dx) d/dx`, i.e. the coefficient
/// convolution `h_K = sum_{K1 + K2 = K} 2 pi i (k2 - k1) a_{K1} f_{K2}`.
///
/// Output indices beyond twice the larger input bound are dropped and the
/// lossy flag is set if they carried mass.
pub fn lie_bracket_x<T: Real>(
    a: &TaylorFourierField<T>,
    f: &TaylorFourierField<T>,
) -> TaylorFourierField<T> {
    let bound = 2 * a.kbound.max(f.kbound);
    let mut out = TaylorFourierField::new(bound);
    for (&(k1, l1, d1), &c1) in &a.coeffs {
        for (&(k2, l2, d2), &c2) in &f.coeffs {
            let factor = Complex::new(T::zero(), tau::<T>() * lit::<T>((k2 - k1) as f64));
            out.insert((k1 + k2, l1 + l2, d1.add(d2)), factor * c1 * c2);
        }
    }
    out
}

/// Zeroes every coefficient violating the resonance condition
/// `p k + q l = 0`.
pub fn resonant_project<T: Real>(
    x: &TaylorFourierField<T>,
    p: u32,
    q: u32,
) -> TaylorFourierField<T> {
    let coeffs = x
        .coeffs
        .iter()
        .filter(|((k, l, _), _)| p as i64 * *k as i64 + q as i64 * *l as i64 == 0)
        .map(|(&idx, &c)| (idx, c))
        .collect();
    TaylorFourierField { coeffs, kbound: x.kbound, lossy: x.lossy }
}

/// The degree-1 field `X_1 = (eta f(x) + eps g(y)) d/dx` of a parameter
/// point, with numeric `eta`, `eps` folded in and degrees tagged.
pub fn degree_one_field<T: Real>(params: &OscillatorParams<T>) -> TaylorFourierField<T> {
    let forcing = params.forcing();
    let kmax = forcing.kmax().max(params.f_coeffs().kmax());
    let mut x1 = TaylorFourierField::new(kmax);
    for &(k, c) in params.f_coeffs().terms() {
        x1.insert((k, 0, Degree::ETA), c.scale(params.eta()));
    }
    for l in -(forcing.kmax() as i32)..=forcing.kmax() as i32 {
        let g = forcing.coeff(l);
        x1.insert((0, l, Degree::EPS), g.scale(params.eps()));
    }
    x1
}

/// Reduced co-moving field `u' = drift + sum_k c_k e^{2 pi i k u}`.
#[derive(Debug, Clone)]
pub struct ReducedField<T: Real> {
    /// Constant part (contains the detuning).
    pub drift: T,
    /// u-dependent part; harmonics sit at multiples of `q`.
    pub harmonics: FourierSeries<T>,
}

/// Grid used to bracket extrema of the reduced field.
const RANGE_GRID: usize = 1024;

impl<T: Real> ReducedField<T> {
    /// Evaluates `drift + harmonics(u)`.
    pub fn eval(&self, u: T) -> T {
        self.drift + self.harmonics.eval_real(u)
    }
}

fn reduce_resonant_field<T: Real>(
    resonant: &TaylorFourierField<T>,
    sigma: Option<T>,
) -> ReducedField<T> {
    let mut drift = sigma.unwrap_or_else(T::zero);
    let mut terms: BTreeMap<i32, Complex<T>> = BTreeMap::new();
    for (&(k, _, _), &c) in &resonant.coeffs {
        if k == 0 {
            drift = drift + c.re;
        } else {
            let slot = terms.entry(k).or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *slot = *slot + c;
        }
    }
    let harmonics = FourierSeries::new(terms, true)
        .expect("resonant part of a real field is conjugate symmetric");
    ReducedField { drift, harmonics }
}

/// Degree-2 normal form of the seasonal oscillator, reduced to the
/// co-moving coordinate.
///
/// Builds the degree-1 field, removes its non-resonant part with one
/// homological solve, keeps `sigma + (1/2) [Y, X_1]` on the resonance
/// module and maps `(k, l)` with `p k + q l = 0` to the u-harmonic `k`.
pub fn seasonal_normal_form<T: Real>(params: &OscillatorParams<T>) -> ReducedField<T> {
    let x1 = degree_one_field(params);
    let y = homological_solve(&x1, params.p(), params.q());
    let h = lie_bracket_x(&y, &x1);
    let resonant = resonant_project(&h, params.p(), params.q())
        .scale(Complex::new(lit::<T>(0.5), T::zero()));
    reduce_resonant_field(&resonant, Some(params.sigma()))
}

/// Minimum and maximum of the u-dependent part over a 1024-point grid,
/// each refined inside its bracketing cell.
///
/// A stationary point of the reduced field exists iff `-drift` lies inside
/// the returned interval.
pub fn stationary_range<T: Real>(rf: &ReducedField<T>) -> (T, T) {
    if rf.harmonics.terms().is_empty() {
        return (T::zero(), T::zero());
    }
    let n = RANGE_GRID;
    let mut min_val = T::infinity();
    let mut max_val = T::neg_infinity();
    let mut arg_min = 0usize;
    let mut arg_max = 0usize;
    for i in 0..n {
        let u = lit::<T>(i as f64 / n as f64);
        let v = rf.harmonics.eval_real(u);
        if v < min_val {
            min_val = v;
            arg_min = i;
        }
        if v > max_val {
            max_val = v;
            arg_max = i;
        }
    }
    let cell = |i: usize| {
        (
            lit::<T>((i as f64 - 1.0) / n as f64),
            lit::<T>((i as f64 + 1.0) / n as f64),
        )
    };
    let (lo, hi) = cell(arg_min);
    let refined_min = ternary_extremum(&rf.harmonics, lo, hi, false);
    let (lo, hi) = cell(arg_max);
    let refined_max = ternary_extremum(&rf.harmonics, lo, hi, true);
    (refined_min.min(min_val), refined_max.max(max_val))
}

fn ternary_extremum<T: Real>(series: &FourierSeries<T>, mut lo: T, mut hi: T, maximize: bool) -> T {
    let tol = lit::<T>(1e-12);
    let third = lit::<T>(1.0 / 3.0);
    while hi - lo > tol {
        let d = (hi - lo) * third;
        let m1 = lo + d;
        let m2 = hi - d;
        let v1 = series.eval_real(m1);
        let v2 = series.eval_real(m2);
        let keep_left = if maximize { v1 >= v2 } else { v1 <= v2 };
        if keep_left {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    series.eval_real((lo + hi) * lit::<T>(0.5))
}

/// Map `(sigma, lambda) -> (delta, mu)` for one parameter point:
/// general-model detuning and effective coupling amplitude.
///
/// `delta = sigma - eta^2 c1 - eps eta lambda c2` with
/// `c1 = (q/p) sum_{k != 0} f_k f_{-k}` and `c2 = (q/p) f_0`; `mu` is the
/// half-width of the eps-eta part of the reduced field, the quantity that
/// actually bounds the detuning range of stationary points.
pub fn map_to_general<T: Real>(params: &OscillatorParams<T>) -> (T, T) {
    let ratio = lit::<T>(params.q() as f64 / params.p() as f64);
    let f = params.f_coeffs();
    let mut sum = T::zero();
    for &(k, c) in f.terms() {
        if k != 0 {
            sum = sum + (c * f.coeff(-k)).re;
        }
    }
    let c1 = ratio * sum;
    let c2 = ratio * f.coeff(0).re;
    let delta = params.sigma()
        - params.eta() * params.eta() * c1
        - params.eps() * params.eta() * params.forcing().lambda() * c2;

    let x1 = degree_one_field(params);
    let y = homological_solve(&x1, params.p(), params.q());
    let h = lie_bracket_x(&y, &x1);
    let resonant = resonant_project(&h, params.p(), params.q())
        .scale(Complex::new(lit::<T>(0.5), T::zero()));
    let coupling = reduce_resonant_field(&resonant.filter_degree(Degree::ETA_EPS), None);
    let (mn, mx) = stationary_range(&coupling);
    (delta, (mx - mn) * lit::<T>(0.5))
}

/// Detuning interval on which the degree-2 normal form predicts a
/// stationary point, i.e. the predicted range of entrainment at daylight
/// fraction `lambda`. The `sigma` of `params` is ignored.
pub fn predicted_boundaries<T: Real>(params: &OscillatorParams<T>, lambda: T) -> (T, T) {
    let at = params
        .with_lambda(lambda)
        .expect("lambda validated by caller")
        .with_sigma(T::zero());
    let rf = seasonal_normal_form(&at);
    let (mn, mx) = stationary_range(&rf);
    (-rf.drift - mx, -rf.drift - mn)
}

/// First-order estimate of the tongue-center detuning, used to seed
/// numerical boundary searches.
///
/// The mean terms `eta f_0 + eps lambda` shift the rotation number at first
/// order even though they do not appear in the reduced coupling, so the
/// entrained interval is centered near
/// `-(eta f_0 + eps lambda) + (q/p) eta^2 sum_{k != 0} f_k f_{-k}`.
pub fn center_estimate<T: Real>(params: &OscillatorParams<T>) -> T {
    let ratio = lit::<T>(params.q() as f64 / params.p() as f64);
    let f = params.f_coeffs();
    let mut sum = T::zero();
    for &(k, c) in f.terms() {
        if k != 0 {
            sum = sum + (c * f.coeff(-k)).re;
        }
    }
    ratio * params.eta() * params.eta() * sum
        - params.eta() * f.coeff(0).re
        - params.eps() * params.forcing().lambda()
}

/// Number of stability pockets in the chain of the (p, q)-tongue predicted
/// from the leading coupling coefficient.
///
/// Counts interior zeros of `lambda -> |g_p(lambda)|` (with smoothing and
/// perturbation applied) on a 2048-point grid with local refinement, and
/// returns that count plus one. For the pure block this is exactly `p`; a
/// perturbation with nonvanishing harmonics detaches the curve from zero
/// and the chain opens into a single pocket.
pub fn pocket_count<T: Real>(p: u32, forcing: &SeasonalForcing<T>) -> u32 {
    let n = 2048usize;
    let amplitude = |lambda: T| -> T {
        forcing
            .at_lambda(lambda)
            .expect("grid lambda in range")
            .coeff(p as i32)
            .norm()
    };
    let values: Vec<T> = (0..=n)
        .map(|j| amplitude(lit::<T>(j as f64 / n as f64)))
        .collect();
    let peak = values.iter().copied().fold(T::zero(), T::max);
    if peak == T::zero() {
        return 1;
    }
    let zero_tol = peak * lit::<T>(1e-9);
    let mut zeros = 0u32;
    for j in 1..n {
        if values[j] <= values[j - 1] && values[j] <= values[j + 1] {
            // Refine the local minimum before classifying it as a zero.
            let lo = lit::<T>((j - 1) as f64 / n as f64);
            let hi = lit::<T>((j + 1) as f64 / n as f64);
            let v = ternary_min_scalar(&amplitude, lo, hi);
            if v < zero_tol {
                zeros += 1;
            }
        }
    }
    zeros + 1
}

fn ternary_min_scalar<T: Real>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let tol = lit::<T>(1e-12);
    let third = lit::<T>(1.0 / 3.0);
    while hi - lo > tol {
        let d = (hi - lo) * third;
        let m1 = lo + d;
        let m2 = hi - d;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f((lo + hi) * lit::<T>(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::block_coeff;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn sin_params(
        p: u32,
        q: u32,
        sigma: f64,
        eta: f64,
        eps: f64,
        lambda: f64,
    ) -> OscillatorParams<f64> {
        OscillatorParams::defaults(p, q, sigma, eta, eps, lambda).unwrap()
    }

    #[test]
    fn homological_solve_zeroes_resonant_indices() {
        let x1 = TaylorFourierField::from_terms(
            4,
            vec![((1, -1, Degree::ETA), Complex64::new(0.3, 0.7))],
        );
        let y = homological_solve(&x1, 1, 1);
        assert_eq!(y.coeff(1, -1, Degree::ETA), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn homological_solve_matches_fk_formula() {
        // (p,q) = (1,1), index (1,0) with coefficient -i eta / 2:
        // a = (-i eta/2) / (2 pi i) = -eta / (4 pi).
        let eta = 0.3;
        let x1 = TaylorFourierField::from_terms(
            4,
            vec![((1, 0, Degree::ETA), Complex64::new(0.0, -eta / 2.0))],
        );
        let y = homological_solve(&x1, 1, 1);
        let got = y.coeff(1, 0, Degree::ETA);
        assert!((got - Complex64::new(-eta / (4.0 * PI), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn homological_solve_matches_gl_formula() {
        // (p,q) = (2,1), index (0,1) with coefficient c eps:
        // a = c eps / (2 pi i), the a_{0,l} = eps g_l/(2 pi i l) rule at l=1.
        let c = Complex64::new(0.4, -0.2) * 0.05;
        let x1 = TaylorFourierField::from_terms(4, vec![((0, 1, Degree::EPS), c)]);
        let y = homological_solve(&x1, 2, 1);
        let expect = c / Complex64::new(0.0, 2.0 * PI);
        assert!((y.coeff(0, 1, Degree::EPS) - expect).norm() < 1e-16);
    }

    #[test]
    fn homological_equation_is_solved_exactly() {
        // X1_nonres + ad Y (X0) = 0, coefficient by coefficient.
        let mut rng = StdRng::seed_from_u64(7);
        let mut terms = Vec::new();
        for k in -3..=3i32 {
            for l in -3..=3i32 {
                let d = if rng.gen_bool(0.5) { Degree::ETA } else { Degree::EPS };
                terms.push((
                    (k, l, d),
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                ));
            }
        }
        let x1 = TaylorFourierField::from_terms(3, terms);
        for &(p, q) in &[(1u32, 1u32), (2, 1), (3, 2)] {
            let y = homological_solve(&x1, p, q);
            let residual = x1.add(&ad_x0(&y, p, q));
            for (&(k, l, d), &c) in residual.coeffs.iter() {
                let res = p as i64 * k as i64 + q as i64 * l as i64;
                if res != 0 {
                    assert!(c.norm() < 1e-12, "({k},{l},{d:?}) -> {c}");
                }
            }
        }
    }

    #[test]
    fn bracket_with_constant_is_derivative_scaling() {
        let a0 = Complex64::new(0.37, -0.11);
        let a = TaylorFourierField::from_terms(3, vec![((0, 0, Degree::EPS), a0)]);
        let f = TaylorFourierField::from_terms(
            3,
            vec![
                ((1, 2, Degree::ETA), Complex64::new(0.2, 0.5)),
                ((-2, 1, Degree::ETA), Complex64::new(-0.4, 0.1)),
            ],
        );
        let h = lie_bracket_x(&a, &f);
        for &(k, l) in &[(1i32, 2i32), (-2, 1)] {
            let expect = Complex64::new(0.0, 2.0 * PI * k as f64) * a0 * f.coeff(k, l, Degree::ETA);
            let got = h.coeff(k, l, Degree::ETA.add(Degree::EPS));
            assert!((got - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn bracket_of_field_with_itself_vanishes() {
        let f = TaylorFourierField::from_terms(
            3,
            vec![
                ((1, 0, Degree::ETA), Complex64::new(0.2, 0.5)),
                ((0, 2, Degree::ETA), Complex64::new(-0.4, 0.1)),
                ((-1, 1, Degree::ETA), Complex64::new(0.3, -0.3)),
            ],
        );
        let h = lie_bracket_x(&f, &f);
        for &c in h.coeffs.values() {
            assert!(c.norm() < 1e-15);
        }
    }

    #[test]
    fn bracket_matches_pointwise_oracle() {
        // Evaluate a f_x - f a_x on a grid and compare with the series of
        // the bracket.
        let mut rng = StdRng::seed_from_u64(42);
        let mut rand_field = |density: f64| {
            let mut terms = Vec::new();
            for k in -3..=3i32 {
                for l in -3..=3i32 {
                    if rng.gen_bool(density) {
                        terms.push((
                            (k, l, Degree::default()),
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        ));
                    }
                }
            }
            TaylorFourierField::from_terms(3, terms)
        };
        let a = rand_field(0.4);
        let f = rand_field(0.4);
        let h = lie_bracket_x(&a, &f);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for i in 0..64 {
            for j in 0..64 {
                let (x, y) = (i as f64 / 64.0, j as f64 / 64.0);
                let mut fx = Complex64::new(0.0, 0.0);
                let mut ax = Complex64::new(0.0, 0.0);
                for (&(k, l, _), &c) in f.coeffs.iter() {
                    let ph = Complex64::new(0.0, 2.0 * PI * (k as f64 * x + l as f64 * y)).exp();
                    fx += two_pi_i * k as f64 * c * ph;
                }
                for (&(k, l, _), &c) in a.coeffs.iter() {
                    let ph = Complex64::new(0.0, 2.0 * PI * (k as f64 * x + l as f64 * y)).exp();
                    ax += two_pi_i * k as f64 * c * ph;
                }
                let direct = a.eval(x, y) * fx - f.eval(x, y) * ax;
                let series = h.eval(x, y);
                assert!((direct - series).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn resonant_projection_keeps_resonance_module() {
        let mut terms = Vec::new();
        for k in -3..=3i32 {
            for l in -3..=3i32 {
                terms.push(((k, l, Degree::ETA), Complex64::new(1.0, 1.0)));
            }
        }
        let x = TaylorFourierField::from_terms(3, terms);
        let p11 = resonant_project(&x, 1, 1);
        for &(k, l, _) in p11.coeffs.keys() {
            assert_eq!(k + l, 0);
        }
        assert_eq!(p11.coeffs.len(), 7); // (m, -m), m = -3..=3
        let p21 = resonant_project(&x, 2, 1);
        for &(k, l, _) in p21.coeffs.keys() {
            assert_eq!(2 * k + l, 0);
        }
        assert_eq!(p21.coeffs.len(), 3); // m = -1, 0, 1 -> (m, -2m)
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = StdRng::seed_from_u64(3);
        let mut terms = Vec::new();
        for k in -4..=4i32 {
            for l in -4..=4i32 {
                if rng.gen_bool(0.3) {
                    terms.push(((k, l, Degree::ETA), Complex64::new(rng.gen(), rng.gen())));
                }
            }
        }
        let x = TaylorFourierField::from_terms(4, terms);
        let once = resonant_project(&x, 2, 1);
        let twice = resonant_project(&once, 2, 1);
        assert_eq!(once, twice);
    }

    #[test]
    fn normal_form_sin_drift_and_first_harmonic() {
        // f = sin, (1,1), lambda = 1/2, alpha = 50: drift sigma - eta^2/2,
        // first harmonic -eps eta e^{-pi^2/50} / (2 pi).
        let (sigma, eta, eps) = (0.0123, 0.17, 0.07);
        let params = sin_params(1, 1, sigma, eta, eps, 0.5);
        let rf = seasonal_normal_form(&params);
        assert!((rf.drift - (sigma - eta * eta / 2.0)).abs() < 1e-12);
        let expect = -eps * eta * (-PI * PI / 50.0).exp() / (2.0 * PI);
        let got = rf.harmonics.coeff(1);
        assert!((got - Complex64::new(expect, 0.0)).norm() < 1e-12, "got {got}");
        assert!(rf.harmonics.is_real());
    }

    #[test]
    fn normal_form_has_no_coupling_without_forcing() {
        let params = sin_params(1, 1, 0.02, 0.2, 0.0, 0.5);
        let rf = seasonal_normal_form(&params);
        assert!(rf.harmonics.terms().is_empty());
        assert!((rf.drift - (0.02 - 0.02)).abs() < 1e-14);
    }

    #[test]
    fn pipeline_matches_closed_form_for_random_inputs() {
        // Dual route: generic solve/bracket/project pipeline vs the
        // closed-form reduced coefficients
        //   drift = sigma - (q/p) eta^2 sum_{k!=0} f_k f_{-k}
        //   c_{mq} = -(q/p) eps eta f_{mq} g_{-mp}.
        let mut rng = StdRng::seed_from_u64(2024);
        for &(p, q) in &[(1u32, 1u32), (2, 1), (3, 2)] {
            let mut fterms = vec![(0, Complex64::new(rng.gen_range(-0.5..0.5), 0.0))];
            for k in 1..=4i32 {
                let c = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                fterms.push((k, c));
                fterms.push((-k, c.conj()));
            }
            let f = FourierSeries::new(fterms, true).unwrap();
            let forcing = SeasonalForcing::new(0.31, 50.0, 8, 0.2).unwrap();
            let (sigma, eta, eps) = (0.003, 0.09, 0.06);
            let params =
                OscillatorParams::new(p, q, sigma, eta, eps, forcing.clone(), f.clone(), 512)
                    .unwrap();
            let rf = seasonal_normal_form(&params);

            let ratio = q as f64 / p as f64;
            let mut sum = Complex64::new(0.0, 0.0);
            for &(k, c) in f.terms() {
                if k != 0 {
                    sum += c * f.coeff(-k);
                }
            }
            let drift_expect = sigma - ratio * eta * eta * sum.re;
            assert!((rf.drift - drift_expect).abs() < 1e-12);

            for m in -8..=8i64 {
                if m == 0 {
                    continue;
                }
                let k = m * q as i64;
                let l = -m * p as i64;
                if k.unsigned_abs() > 12 || l.unsigned_abs() > 12 {
                    continue;
                }
                let expect = -ratio * eps * eta * f.coeff(k as i32) * forcing.coeff(l as i32);
                let got = rf.harmonics.coeff(k as i32);
                assert!(
                    (got - expect).norm() < 1e-12,
                    "(p,q)=({p},{q}), m={m}: got {got}, expect {expect}"
                );
            }
        }
    }

    #[test]
    fn stationary_range_of_flat_field_is_zero() {
        let rf = ReducedField { drift: 0.3, harmonics: FourierSeries::zero() };
        assert_eq!(stationary_range(&rf), (0.0, 0.0));
    }

    #[test]
    fn stationary_range_of_single_harmonic() {
        // gamma sin(2 pi q u + chi) has range (-gamma, gamma).
        let (gamma, chi, q) = (0.7, 1.1f64, 2);
        let c = Complex64::new(0.0, -gamma / 2.0) * Complex64::new(chi.cos(), chi.sin());
        let harmonics = FourierSeries::new(vec![(q, c), (-q, c.conj())], true).unwrap();
        let rf = ReducedField { drift: 0.0, harmonics };
        let (mn, mx) = stationary_range(&rf);
        assert!((mn + gamma).abs() < 1e-6);
        assert!((mx - gamma).abs() < 1e-6);
    }

    #[test]
    fn predicted_width_closed_form_at_half_season() {
        let params = sin_params(1, 1, 0.0, 0.1, 0.1, 0.5);
        let (lo, hi) = predicted_boundaries(&params, 0.5);
        let width = hi - lo;
        let expect = 2.0 * 0.1 * 0.1 * (-PI * PI / 50.0).exp() / PI;
        assert!((width - expect).abs() < 1e-10, "width {width}, expect {expect}");
    }

    #[test]
    fn predicted_width_scales_like_sin_pi_lambda() {
        let params = sin_params(1, 1, 0.0, 0.1, 0.1, 0.5);
        let w = |lambda: f64| {
            let (lo, hi) = predicted_boundaries(&params, lambda);
            hi - lo
        };
        let ratio = w(0.25) / w(0.5);
        assert!((ratio - (PI / 4.0).sin()).abs() < 1e-9);
    }

    #[test]
    fn empty_interval_without_forcing_centered_at_quadratic_drift() {
        let params = sin_params(1, 1, 0.0, 0.2, 0.0, 0.5);
        let (lo, hi) = predicted_boundaries(&params, 0.5);
        assert!((hi - lo).abs() < 1e-14);
        // c1 = (q/p) sum f_k f_{-k} = 1/2 for sin.
        assert!((lo - 0.2 * 0.2 * 0.5).abs() < 1e-13);
    }

    #[test]
    fn mu_pinches_at_winter_summer_and_interior_chain_points() {
        let base = sin_params(1, 1, 0.0, 0.1, 0.1, 0.5);
        for &lambda in &[0.0, 1.0] {
            let (_, mu) = map_to_general(&base.with_lambda(lambda).unwrap());
            assert!(mu.abs() < 1e-15);
        }
        let two_pockets = sin_params(2, 1, 0.0, 0.1, 0.1, 0.5);
        let (_, mu) = map_to_general(&two_pockets);
        assert!(mu.abs() < 1e-15, "interior pinch of the 2-chain, mu = {mu}");
    }

    #[test]
    fn mu_is_maximal_at_mid_season_for_main_tongue() {
        let base = sin_params(1, 1, 0.0, 0.1, 0.1, 0.5);
        let mut best = (0.0, -1.0);
        for j in 0..=100 {
            let lambda = j as f64 / 100.0;
            let (_, mu) = map_to_general(&base.with_lambda(lambda).unwrap());
            if mu > best.1 {
                best = (lambda, mu);
            }
        }
        assert!((best.0 - 0.5).abs() < 1e-9, "argmax {}", best.0);
    }

    #[test]
    fn mu_vanishes_only_at_chain_points_and_detaches_with_beta() {
        let block = sin_params(2, 1, 0.0, 0.1, 0.1, 0.5);
        let mut interior_min: f64 = f64::INFINITY;
        for j in 1..2048 {
            let lambda = j as f64 / 2048.0;
            let (_, mu) = map_to_general(&block.with_lambda(lambda).unwrap());
            if (lambda - 0.5).abs() > 0.05 && lambda > 0.05 && lambda < 0.95 {
                interior_min = interior_min.min(mu);
            }
        }
        assert!(interior_min > 1e-7);
        // beta > 0: bounded away from zero everywhere inside.
        let forcing = SeasonalForcing::new(0.5, 50.0, 64, 0.3).unwrap();
        let perturbed =
            OscillatorParams::new(2, 1, 0.0, 0.1, 0.1, forcing, FourierSeries::sin(), 512).unwrap();
        let mut min_ratio: f64 = f64::INFINITY;
        for j in 1..2048 {
            let lambda = j as f64 / 2048.0;
            let envelope = lambda * (1.0 - lambda);
            let (_, mu) = map_to_general(&perturbed.with_lambda(lambda).unwrap());
            min_ratio = min_ratio.min(mu / envelope);
        }
        assert!(min_ratio > 1e-8, "min mu/envelope {min_ratio}");
    }

    #[test]
    fn mu_symmetric_for_pure_block() {
        let base = sin_params(1, 1, 0.0, 0.13, 0.08, 0.5);
        for j in 1..10 {
            let lambda = j as f64 / 10.0;
            let (_, a) = map_to_general(&base.with_lambda(lambda).unwrap());
            let (_, b) = map_to_general(&base.with_lambda(1.0 - lambda).unwrap());
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tongue_tip_is_straight_cone() {
        // Predicted half-width over eps*eta approaches the leading
        // amplitude 2 (q/p) |f_1 g_{-1}| as the coupling shrinks, within 2%,
        // also when f carries higher harmonics.
        let f = FourierSeries::new(
            vec![
                (1, Complex64::new(0.0, -0.5)),
                (-1, Complex64::new(0.0, 0.5)),
                (2, Complex64::new(0.1, 0.05)),
                (-2, Complex64::new(0.1, -0.05)),
            ],
            true,
        )
        .unwrap();
        let forcing = SeasonalForcing::new(0.31, 50.0, 16, 0.0).unwrap();
        let leading = 2.0 * f.coeff(1).norm() * forcing.coeff(-1).norm();
        for &scale in &[1e-2, 1e-3] {
            let params =
                OscillatorParams::new(1, 1, 0.0, scale, scale, forcing.clone(), f.clone(), 512)
                    .unwrap();
            let (lo, hi) = predicted_boundaries(&params, 0.31);
            let slope = (hi - lo) / 2.0 / (scale * scale);
            assert!(
                (slope - leading).abs() / leading < 0.02,
                "slope {slope}, leading {leading}"
            );
        }
    }

    #[test]
    fn center_estimate_tracks_mean_drift() {
        let params = sin_params(1, 1, 0.0, 0.1, 0.1, 0.5);
        let expect = 0.1 * 0.1 / 2.0 - 0.1 * 0.5;
        assert!((center_estimate(&params) - expect).abs() < 1e-14);
    }

    #[test]
    fn pocket_counts_for_pure_block_and_perturbation() {
        let block = SeasonalForcing::<f64>::new(0.5, 50.0, 64, 0.0).unwrap();
        assert_eq!(pocket_count(1, &block), 1);
        assert_eq!(pocket_count(2, &block), 2);
        assert_eq!(pocket_count(3, &block), 3);
        let perturbed = SeasonalForcing::<f64>::new(0.5, 50.0, 64, 0.3).unwrap();
        assert_eq!(pocket_count(2, &perturbed), 1);
        assert_eq!(pocket_count(3, &perturbed), 1);
    }

    #[test]
    fn degree_one_block_coefficients_feed_the_field() {
        let params = sin_params(1, 1, 0.0, 0.3, 0.7, 0.31);
        let x1 = degree_one_field(&params);
        let g1 = params.forcing().coeff(1);
        assert!((x1.coeff(0, 1, Degree::EPS) - g1 * 0.7).norm() < 1e-15);
        assert!((x1.coeff(1, 0, Degree::ETA) - Complex64::new(0.0, -0.15)).norm() < 1e-15);
        // Smoothing damps relative to the raw block value.
        let raw = block_coeff::<f64>(1, 0.31);
        assert!(g1.norm() < raw.norm());
    }

    proptest! {
        #[test]
        fn reduced_field_is_real_for_random_parameters(
            lambda in 0.05..0.95f64,
            eta in 0.0..0.3f64,
            eps in 0.0..0.3f64,
            beta in 0.0..1.0f64,
        ) {
            let forcing = SeasonalForcing::new(lambda, 50.0, 16, beta).unwrap();
            let params = OscillatorParams::new(
                1, 1, 0.01, eta, eps, forcing, FourierSeries::sin(), 512,
            ).unwrap();
            // Construction of the harmonics asserts conjugate symmetry.
            let rf = seasonal_normal_form(&params);
            for j in 0..16 {
                let u = j as f64 / 16.0;
                prop_assert!(rf.harmonics.eval_complex(u).im.abs() < 1e-12);
            }
        }
    }
}
