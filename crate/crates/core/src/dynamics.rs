//! Numerical flow of the lifted seasonal oscillator.
//!
//! The lift of the system lives on the plane:
//!
//! ```text
//! x' = p/q + sigma + eta f(x) + eps g_lambda(y),    y' = 1.
//! ```
//!
//! Because `y' = 1` exactly, integrating over one forcing period reduces to
//! the non-autonomous scalar equation `dx/dy = ...` which is advanced with
//! classical fixed-step RK4. The time-one map of the flow is the lift `F`
//! of the stroboscopic Poincaré map; `F(x + 1) = F(x) + 1`.
//!
//! Entrainment at resonance p:q means `F^q(x) = x + p` for some `x`, i.e. a
//! sign change of `G = F^q - id - p`. The unforced rational case, where `G`
//! vanishes identically, is reported separately as degenerate.

use std::sync::Arc;

use crate::error::Error;
use crate::forcing::{FourierSeries, SeasonalForcing};
use crate::scalar::{lit, tau, Real};
use crate::Result;

/// Number of grid points used to sample `G` in [`entrainment_test`].
pub const DETECTION_GRID: usize = 256;
/// `G` excursions below this threshold count as identically zero.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Bisection tolerance for the periodic-point witness.
pub const WITNESS_TOL: f64 = 1e-10;
/// Iterates discarded before averaging in [`rotation_number`].
pub const ROTATION_BURN_IN: u32 = 128;
/// Default integration steps per forcing period.
pub const DEFAULT_STEPS: u32 = 512;
/// Default iterate count for rotation numbers.
pub const DEFAULT_ROTATION_ITERS: u32 = 4096;

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// One point in parameter space: resonance label, detuning, coupling
/// strengths, forcing and integrator settings.
#[derive(Debug, Clone)]
pub struct OscillatorParams<T: Real> {
    p: u32,
    q: u32,
    sigma: T,
    eta: T,
    eps: T,
    forcing: SeasonalForcing<T>,
    f_coeffs: FourierSeries<T>,
    steps_per_period: u32,
}

impl<T: Real> OscillatorParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: u32,
        q: u32,
        sigma: T,
        eta: T,
        eps: T,
        forcing: SeasonalForcing<T>,
        f_coeffs: FourierSeries<T>,
        steps_per_period: u32,
    ) -> Result<Self> {
        if p == 0 || q == 0 || gcd(p, q) != 1 {
            return Err(Error::BadResonance { p, q });
        }
        if eta < T::zero() {
            return Err(Error::OutOfRange {
                name: "eta",
                value: eta.to_f64().unwrap_or(f64::NAN),
                requirement: "eta >= 0",
            });
        }
        if eps < T::zero() {
            return Err(Error::OutOfRange {
                name: "eps",
                value: eps.to_f64().unwrap_or(f64::NAN),
                requirement: "eps >= 0",
            });
        }
        if steps_per_period < 64 {
            return Err(Error::OutOfRange {
                name: "steps_per_period",
                value: steps_per_period as f64,
                requirement: "steps_per_period >= 64",
            });
        }
        if !f_coeffs.is_real() {
            return Err(Error::NotConjugateSymmetric { k: 0 });
        }
        Ok(Self { p, q, sigma, eta, eps, forcing, f_coeffs, steps_per_period })
    }

    /// `f = sin(2 pi psi)`, default forcing at daylight fraction `lambda`,
    /// 512 steps per period.
    pub fn defaults(p: u32, q: u32, sigma: T, eta: T, eps: T, lambda: T) -> Result<Self> {
        Self::new(
            p,
            q,
            sigma,
            eta,
            eps,
            SeasonalForcing::with_defaults(lambda)?,
            FourierSeries::sin(),
            DEFAULT_STEPS,
        )
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn forcing(&self) -> &SeasonalForcing<T> {
        &self.forcing
    }

    pub fn f_coeffs(&self) -> &FourierSeries<T> {
        &self.f_coeffs
    }

    pub fn steps_per_period(&self) -> u32 {
        self.steps_per_period
    }

    /// Frequency `omega = p/q + sigma`.
    pub fn omega(&self) -> T {
        lit::<T>(self.p as f64) / lit::<T>(self.q as f64) + self.sigma
    }

    pub fn with_sigma(&self, sigma: T) -> Self {
        let mut p = self.clone();
        p.sigma = sigma;
        p
    }

    pub fn with_eta(&self, eta: T) -> Result<Self> {
        let mut c = self.clone();
        if eta < T::zero() {
            return Err(Error::OutOfRange {
                name: "eta",
                value: eta.to_f64().unwrap_or(f64::NAN),
                requirement: "eta >= 0",
            });
        }
        c.eta = eta;
        Ok(c)
    }

    pub fn with_eps(&self, eps: T) -> Result<Self> {
        let mut c = self.clone();
        if eps < T::zero() {
            return Err(Error::OutOfRange {
                name: "eps",
                value: eps.to_f64().unwrap_or(f64::NAN),
                requirement: "eps >= 0",
            });
        }
        c.eps = eps;
        Ok(c)
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        let mut c = self.clone();
        c.forcing = self.forcing.at_lambda(lambda)?;
        Ok(c)
    }

    pub fn with_steps(&self, steps: u32) -> Result<Self> {
        if steps < 64 {
            return Err(Error::OutOfRange {
                name: "steps_per_period",
                value: steps as f64,
                requirement: "steps_per_period >= 64",
            });
        }
        let mut c = self.clone();
        c.steps_per_period = steps;
        Ok(c)
    }
}

/// Right-hand side of the lifted vector field at `(x, y)`.
pub fn rhs<T: Real>(x: T, y: T, params: &OscillatorParams<T>) -> (T, T) {
    let v = params.omega()
        + params.eta * params.f_coeffs.eval_real(x)
        + params.eps * params.forcing.eval(y);
    (v, T::one())
}

/// Forcing values tabulated on the RK4 half-step grid of one period.
///
/// The table depends only on the forcing (not on `sigma`, `eta`, `eps`), so
/// scans share it across every cell with the same daylight fraction.
#[derive(Debug, Clone)]
pub struct ForcingTable<T: Real> {
    values: Vec<T>,
    steps: u32,
}

impl<T: Real> ForcingTable<T> {
    pub fn new(forcing: &SeasonalForcing<T>, steps: u32) -> Self {
        let n = 2 * steps as usize;
        let mut values = vec![T::zero(); n + 1];
        let series = forcing.series();
        // Accumulate one harmonic at a time with a rotation recurrence:
        // much cheaper than n*K trig calls and accurate to ~n*eps.
        for &(k, c) in series.terms() {
            if k < 0 {
                continue;
            }
            if k == 0 {
                for v in values.iter_mut() {
                    *v = *v + c.re;
                }
                continue;
            }
            let two = lit::<T>(2.0);
            let step_angle = tau::<T>() * lit::<T>(k as f64) / lit::<T>(n as f64);
            let (dsin, dcos) = (step_angle.sin(), step_angle.cos());
            let mut cos_ph = T::one();
            let mut sin_ph = T::zero();
            for v in values.iter_mut() {
                *v = *v + two * (c.re * cos_ph - c.im * sin_ph);
                let next_cos = cos_ph * dcos - sin_ph * dsin;
                sin_ph = sin_ph * dcos + cos_ph * dsin;
                cos_ph = next_cos;
            }
        }
        Self { values, steps }
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }
}

/// Oscillator nonlinearity prepared for fast evaluation.
#[derive(Debug, Clone)]
struct Nonlinearity<T: Real> {
    mean: T,
    // (k, 2 Re c_k, 2 Im c_k) for k > 0
    terms: Vec<(T, T, T)>,
}

impl<T: Real> Nonlinearity<T> {
    fn new(series: &FourierSeries<T>) -> Self {
        let two = lit::<T>(2.0);
        let terms = series
            .terms()
            .iter()
            .filter(|&&(k, _)| k > 0)
            .map(|&(k, c)| (lit::<T>(k as f64), two * c.re, two * c.im))
            .collect();
        Self { mean: series.coeff(0).re, terms }
    }

    #[inline]
    fn eval(&self, x: T) -> T {
        let mut acc = self.mean;
        for &(k, re2, im2) in &self.terms {
            let phase = tau::<T>() * k * x;
            acc = acc + re2 * phase.cos() - im2 * phase.sin();
        }
        acc
    }
}

/// Lift of the stroboscopic Poincaré map, immutable once built.
#[derive(Debug, Clone)]
pub struct LiftedMap<T: Real> {
    params: OscillatorParams<T>,
    omega: T,
    nonlinearity: Nonlinearity<T>,
    table: Arc<ForcingTable<T>>,
}

impl<T: Real> LiftedMap<T> {
    pub fn new(params: &OscillatorParams<T>) -> Self {
        let table = Arc::new(ForcingTable::new(params.forcing(), params.steps_per_period()));
        Self::with_table(params, table)
    }

    /// Builds the evaluator around a pre-tabulated forcing (the table must
    /// match the params' forcing and step count).
    pub fn with_table(params: &OscillatorParams<T>, table: Arc<ForcingTable<T>>) -> Self {
        debug_assert_eq!(table.steps, params.steps_per_period());
        Self {
            params: params.clone(),
            omega: params.omega(),
            nonlinearity: Nonlinearity::new(params.f_coeffs()),
            table,
        }
    }

    pub fn params(&self) -> &OscillatorParams<T> {
        &self.params
    }

    pub fn steps(&self) -> u32 {
        self.params.steps_per_period()
    }

    #[inline]
    fn velocity(&self, x: T, g: T) -> T {
        self.omega + self.params.eta * self.nonlinearity.eval(x) + self.params.eps * g
    }

    /// Advances the lift through one forcing period: `x -> F(x)`.
    pub fn map(&self, x0: T) -> T {
        let n = self.params.steps_per_period() as usize;
        let h = T::one() / lit::<T>(n as f64);
        let half_h = h * lit::<T>(0.5);
        let sixth = h / lit::<T>(6.0);
        let two = lit::<T>(2.0);
        let g = &self.table.values;
        let mut x = x0;
        for j in 0..n {
            let k1 = self.velocity(x, g[2 * j]);
            let gm = g[2 * j + 1];
            let k2 = self.velocity(x + half_h * k1, gm);
            let k3 = self.velocity(x + half_h * k2, gm);
            let k4 = self.velocity(x + h * k3, g[2 * j + 2]);
            x = x + sixth * (k1 + two * (k2 + k3) + k4);
        }
        x
    }

    /// `F` iterated `n` times.
    pub fn iterate(&self, x0: T, n: u32) -> T {
        let mut x = x0;
        for _ in 0..n {
            x = self.map(x);
        }
        x
    }

    /// Residual `G(x) = F^q(x) - x - p`; zeros are p:q periodic points.
    pub fn residual(&self, x: T) -> T {
        self.iterate(x, self.params.q) - x - lit::<T>(self.params.p as f64)
    }
}

/// One application of the Poincaré map lift, `x0 -> F(x0)`.
pub fn poincare_map<T: Real>(x0: T, params: &OscillatorParams<T>) -> T {
    LiftedMap::new(params).map(x0)
}

/// Rotation number estimate `(F^n(x_b) - x_b) / n` with `x_b` the state
/// after a 128-iterate burn-in from `x0`.
///
/// Panics if `n_iter < 256`.
pub fn rotation_number<T: Real>(params: &OscillatorParams<T>, x0: T, n_iter: u32) -> T {
    let map = LiftedMap::new(params);
    rotation_number_with(&map, x0, n_iter)
}

/// [`rotation_number`] against a prebuilt evaluator.
pub fn rotation_number_with<T: Real>(map: &LiftedMap<T>, x0: T, n_iter: u32) -> T {
    assert!(n_iter >= 256, "rotation_number requires n_iter >= 256");
    let burned = map.iterate(x0, ROTATION_BURN_IN);
    (map.iterate(burned, n_iter) - burned) / lit::<T>(n_iter as f64)
}

/// Outcome of the p:q entrainment detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntrainmentTest<T: Real> {
    /// `G = F^q - id - p` changes sign: a periodic orbit exists.
    pub entrained: bool,
    /// `G` vanishes identically to tolerance (unforced rational case).
    pub degenerate: bool,
    /// A sign-change point of `G`, refined by bisection.
    pub witness: Option<T>,
}

/// Extrema of `G` over the detection grid, the raw material of both the
/// entrainment decision and boundary bisection.
pub fn residual_extrema<T: Real>(map: &LiftedMap<T>) -> (T, T) {
    let mut gmin = T::infinity();
    let mut gmax = T::neg_infinity();
    for i in 0..DETECTION_GRID {
        let x = lit::<T>(i as f64 / DETECTION_GRID as f64);
        let g = map.residual(x);
        gmin = gmin.min(g);
        gmax = gmax.max(g);
    }
    (gmin, gmax)
}

/// Samples `G` on a uniform 256-point grid and classifies the cell.
pub fn entrainment_test<T: Real>(params: &OscillatorParams<T>) -> EntrainmentTest<T> {
    entrainment_test_with(&LiftedMap::new(params))
}

/// [`entrainment_test`] against a prebuilt evaluator.
///
/// The witness bracket prefers a downward crossing of `G`: there
/// `(F^q)' < 1`, so the refined point is the attracting periodic point,
/// which is the useful start for rotation-number cross-checks.
pub fn entrainment_test_with<T: Real>(map: &LiftedMap<T>) -> EntrainmentTest<T> {
    let tol = lit::<T>(DEGENERACY_TOL);
    let grid = |i: usize| lit::<T>(i as f64 / DETECTION_GRID as f64);
    let mut gmin = T::infinity();
    let mut gmax = T::neg_infinity();
    let mut bracket: Option<(T, T)> = None;
    let mut down_bracket: Option<(T, T)> = None;
    let mut first = T::zero();
    let mut prev = T::zero();
    let mut scanned = 0usize;
    for i in 0..DETECTION_GRID {
        let x = grid(i);
        let g = map.residual(x);
        if i == 0 {
            first = g;
        }
        gmin = gmin.min(g);
        gmax = gmax.max(g);
        if i > 0 && (prev <= T::zero()) != (g <= T::zero()) {
            if bracket.is_none() {
                bracket = Some((grid(i - 1), x));
            }
            if down_bracket.is_none() && prev > T::zero() {
                down_bracket = Some((grid(i - 1), x));
            }
        }
        prev = g;
        scanned = i + 1;
        // Once a downward crossing with genuine excursion is in hand the
        // classification and witness can no longer change.
        if down_bracket.is_some() && gmax - gmin > tol {
            break;
        }
    }
    if scanned == DETECTION_GRID && (prev <= T::zero()) != (first <= T::zero()) {
        // Wrap-around sign change (G is 1-periodic).
        let wrap = Some((grid(DETECTION_GRID - 1), T::one()));
        if bracket.is_none() {
            bracket = wrap;
        }
        if down_bracket.is_none() && prev > T::zero() {
            down_bracket = wrap;
        }
    }
    let degenerate = gmin.abs().max(gmax.abs()) < tol;
    let entrained = gmin <= T::zero() && gmax >= T::zero() && gmax - gmin > tol;
    let witness = if entrained {
        down_bracket.or(bracket).map(|(a, b)| bisect_residual(map, a, b))
    } else {
        None
    };
    EntrainmentTest { entrained, degenerate, witness }
}

fn bisect_residual<T: Real>(map: &LiftedMap<T>, mut a: T, mut b: T) -> T {
    let tol = lit::<T>(WITNESS_TOL);
    let mut ga = map.residual(a);
    while b - a > tol {
        let mid = (a + b) * lit::<T>(0.5);
        let gm = map.residual(mid);
        if (ga <= T::zero()) == (gm <= T::zero()) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    (a + b) * lit::<T>(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn params(
        p: u32,
        q: u32,
        sigma: f64,
        eta: f64,
        eps: f64,
        lambda: f64,
    ) -> OscillatorParams<f64> {
        OscillatorParams::defaults(p, q, sigma, eta, eps, lambda).unwrap()
    }

    // Detuning at which the main tongue is centered to first order:
    // sigma + eps*lambda + eta*f_0 - eta^2/2 = 0 for f = sin, (1,1).
    fn sin_tongue_center(eta: f64, eps: f64, lambda: f64) -> f64 {
        eta * eta / 2.0 - eps * lambda
    }

    #[test]
    fn rejects_non_coprime_labels() {
        assert!(params_err(2, 4));
        assert!(params_err(0, 1));
    }

    fn params_err(p: u32, q: u32) -> bool {
        OscillatorParams::defaults(p, q, 0.0, 0.1, 0.1, 0.5).is_err()
    }

    #[test]
    fn rejects_coarse_integration() {
        let p = params(1, 1, 0.0, 0.1, 0.1, 0.5);
        assert!(p.with_steps(32).is_err());
    }

    #[test]
    fn rhs_unforced_is_unit_speed() {
        let p = params(1, 1, 0.0, 0.0, 0.0, 0.5);
        for i in 0..5 {
            let (vx, vy) = rhs(i as f64 * 0.17, i as f64 * 0.29, &p);
            assert!((vx - 1.0).abs() < 1e-15);
            assert_eq!(vy, 1.0);
        }
    }

    #[test]
    fn rhs_includes_sin_nonlinearity() {
        let p = params(1, 1, 0.0, 0.1, 0.0, 0.5);
        let (vx, _) = rhs(0.25, 0.9, &p);
        assert!((vx - (p.omega() + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn rhs_all_on_forcing_adds_eps() {
        let p = params(1, 1, 0.0, 0.0, 0.2, 1.0);
        for j in 0..9 {
            let (vx, _) = rhs(0.3, j as f64 / 9.0, &p);
            assert!((vx - (p.omega() + 0.2)).abs() < 1e-6);
        }
    }

    #[test]
    fn rigid_rotation_map_is_exact_translation() {
        let p = params(1, 1, -0.63, 0.0, 0.0, 0.5); // omega = 0.37
        for i in 0..5 {
            let x0 = i as f64 * 0.21;
            assert!((poincare_map(x0, &p) - x0 - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_equivariance() {
        let p = params(1, 1, 0.07, 0.15, 0.12, 0.3);
        let map = LiftedMap::new(&p);
        for i in 0..17 {
            let x = i as f64 / 17.0 * 3.0 - 1.5;
            assert!((map.map(x + 1.0) - map.map(x) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lift_orientation_preserved_in_diffeo_regime() {
        let p = params(1, 1, 0.02, 0.2, 0.2, 0.4);
        let map = LiftedMap::new(&p);
        let h = 1e-6;
        for i in 0..17 {
            let x = i as f64 / 17.0;
            let d = (map.map(x + h) - map.map(x - h)) / (2.0 * h);
            assert!(d > 0.0, "F' = {d} at x = {x}");
        }
    }

    #[test]
    fn step_halving_matches_fine_reference() {
        let p = params(1, 1, 0.0, 0.1, 0.1, 0.5);
        let fine = p.with_steps(16 * DEFAULT_STEPS).unwrap();
        let coarse_val = poincare_map(0.0, &p);
        let fine_val = poincare_map(0.0, &fine);
        assert!((coarse_val - fine_val).abs() < 1e-8);
    }

    #[test]
    fn step_halving_is_fourth_order() {
        // Defect against a much finer reference shrinks ~16x per halving.
        let base = params(1, 1, 0.013, 0.18, 0.15, 0.37);
        let reference = poincare_map(0.2, &base.with_steps(16384).unwrap());
        let d1 = (poincare_map(0.2, &base.with_steps(128).unwrap()) - reference).abs();
        let d2 = (poincare_map(0.2, &base.with_steps(256).unwrap()) - reference).abs();
        let ratio = d1 / d2;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "defect ratio {ratio} (d1 = {d1:.3e}, d2 = {d2:.3e})"
        );
    }

    #[test]
    fn rotation_number_of_rigid_rotation() {
        let p = params(1, 1, -0.63, 0.0, 0.0, 0.5);
        let rho = rotation_number(&p, 0.0, 4096);
        assert!((rho - 0.37).abs() < 1e-6);
    }

    #[test]
    fn rotation_number_locks_inside_main_tongue() {
        // sigma at the first-order tongue center; start the average from
        // the periodic point found by the entrainment test.
        let sigma = sin_tongue_center(0.1, 0.1, 0.5);
        let p = params(1, 1, sigma, 0.1, 0.1, 0.5);
        let t = entrainment_test(&p);
        assert!(t.entrained);
        let rho = rotation_number(&p, t.witness.unwrap(), 4096);
        assert!((rho - 1.0).abs() < 1e-6, "rho = {rho}");
    }

    #[test]
    fn rotation_number_near_rigid_far_from_tongue() {
        // Far outside the tongue the rotation number tracks the mean
        // frequency omega + eps*lambda to O(coupling^2).
        let p = params(1, 1, 0.3, 0.01, 0.01, 0.5);
        let rho = rotation_number(&p, 0.0, 4096);
        assert!((rho - (1.3 + 0.01 * 0.5)).abs() < 1e-3, "rho = {rho}");
    }

    #[test]
    fn rotation_number_is_start_point_independent() {
        // Locked case with solid contraction: both starts land on the same
        // periodic orbit well before the average begins.
        let sigma = sin_tongue_center(0.2, 0.2, 0.5);
        let locked = params(1, 1, sigma, 0.2, 0.2, 0.5);
        let a = rotation_number(&locked, 0.13, 4096);
        let b = rotation_number(&locked, 0.77, 4096);
        assert!((a - b).abs() < 1e-5);

        // Weakly coupled quasi-periodic case.
        let drifting = params(1, 1, -0.5858, 0.003, 0.003, 0.5);
        let a = rotation_number(&drifting, 0.13, 4096);
        let b = rotation_number(&drifting, 0.77, 4096);
        assert!((a - b).abs() < 1e-5, "difference {}", (a - b).abs());
    }

    #[test]
    fn rotation_number_monotone_in_omega() {
        // Where a periodic point exists, start the average on it; the
        // estimate is then flat at p/q across the plateau and strictly
        // increasing outside, within the stated slack.
        let base = params(1, 1, 0.0, 0.2, 0.2, 0.5);
        let center = sin_tongue_center(0.2, 0.2, 0.5);
        let mut last = f64::NEG_INFINITY;
        for i in 0..101 {
            let sigma = center - 0.03 + 0.06 * i as f64 / 100.0;
            let at = base.with_sigma(sigma);
            let x0 = entrainment_test(&at).witness.unwrap_or(0.0);
            let rho = rotation_number(&at, x0, 8192);
            assert!(rho >= last - 1e-7, "rho({sigma}) = {rho} < {last}");
            last = rho;
        }
    }

    #[test]
    fn degenerate_when_unforced_at_rational_frequency() {
        let p = params(1, 1, 0.0, 0.0, 0.0, 0.5);
        let t = entrainment_test(&p);
        assert!(t.degenerate);
        assert!(!t.entrained);
        assert!(t.witness.is_none());
    }

    #[test]
    fn entrained_inside_tongue_with_periodic_witness() {
        let sigma = sin_tongue_center(0.1, 0.1, 0.5);
        let p = params(1, 1, sigma, 0.1, 0.1, 0.5);
        let t = entrainment_test(&p);
        assert!(t.entrained);
        assert!(!t.degenerate);
        let w = t.witness.expect("witness");
        let map = LiftedMap::new(&p);
        assert!(map.residual(w).abs() < 1e-8);
    }

    #[test]
    fn not_entrained_outside_tongue() {
        let p = params(1, 1, 0.2, 0.01, 0.01, 0.5);
        let t = entrainment_test(&p);
        assert!(!t.entrained);
        assert!(!t.degenerate);
        // Cross-check with the rotation number.
        let rho = rotation_number(&p, 0.0, 4096);
        assert!((rho - 1.0).abs() > 1e-3);
    }

    #[test]
    fn detectors_agree_on_random_parameters() {
        // entrained <=> |rho - p/q| < 1e-5, sampled away from the tongue
        // boundaries where both detectors are unambiguous.
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let mut seen_locked = 0;
        let mut seen_free = 0;
        for _ in 0..50 {
            let eta = rng.gen_range(0.05..0.2);
            let eps = rng.gen_range(0.05..0.2);
            let lambda = rng.gen_range(0.2..0.8);
            let center = sin_tongue_center(eta, eps, lambda);
            // Half-width of the tongue to first order.
            let hw = 2.0 * eps * eta * (-std::f64::consts::PI.powi(2) / 50.0).exp()
                * (std::f64::consts::PI * lambda).sin().abs()
                / std::f64::consts::PI
                / 2.0;
            let inside = rng.gen_bool(0.5);
            let sigma = if inside {
                center + rng.gen_range(-0.3..0.3) * hw
            } else {
                center + rng.gen_range(4.0..20.0) * hw * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            };
            let p = params(1, 1, sigma, eta, eps, lambda).with_steps(128).unwrap();
            let t = entrainment_test(&p);
            let x0 = t.witness.unwrap_or(0.0);
            let rho = rotation_number(&p, x0, 32768);
            let locked = (rho - 1.0).abs() < 1e-5;
            assert_eq!(t.entrained, locked, "sigma = {sigma}, rho = {rho}");
            if locked {
                seen_locked += 1;
            } else {
                seen_free += 1;
            }
        }
        assert!(seen_locked > 5 && seen_free > 5);
    }

    #[test]
    fn forcing_table_matches_lazy_eval() {
        let sf = SeasonalForcing::with_defaults(0.31).unwrap();
        let table = ForcingTable::new(&sf, 128);
        for (j, &v) in table.values.iter().enumerate() {
            let t = j as f64 / 256.0;
            assert!((v - sf.eval(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn f32_map_runs() {
        let p = OscillatorParams::<f32>::defaults(1, 1, -0.63, 0.0, 0.0, 0.5).unwrap();
        assert!((poincare_map(0.0f32, &p) - 0.37).abs() < 1e-5);
    }
}
