//! Periodic spectral substrate: grids, transforms, Fourier multipliers,
//! the free propagator and Sobolev norms.
//!
//! A [`SpectralField`] keeps its Fourier coefficients in the normalisation of
//! the unitary line transform sampled on the box lattice `xi_k = 2*pi*k/L`,
//! so that `sum_k |m_k|^2 * (2*pi/L)` is the squared `L^2` norm of the field.
//! Under this convention discrete Sobolev norms are Riemann sums of their
//! continuum counterparts for band-limited, box-supported data.
//!
//! ```
//! use mmt_lab::{GridSpec, SpectralField};
//! use num_complex::Complex64;
//!
//! let grid = GridSpec::new(64, 2.0 * std::f64::consts::PI)?;
//! let u = SpectralField::plane_wave(grid, Complex64::new(0.5, 0.0), 3)?;
//!
//! // physical samples and coefficients are mutually inverse ...
//! let back = SpectralField::from_grid_values(grid, &u.to_grid_values())?;
//! assert!((back.mode(3)? - u.mode(3)?).norm() < 1e-14);
//!
//! // ... and the L^2 norm matches the closed form |A| * sqrt(L)
//! let expected = 0.5 * grid.box_length().sqrt();
//! assert!((u.l2_norm() - expected).abs() < 1e-12);
//! # Ok::<(), mmt_lab::SpectralError>(())
//! ```

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("num_modes must be a power of two >= 8, got {0}")]
    InvalidModeCount(usize),
    #[error("box_length must be positive and finite, got {0}")]
    InvalidBoxLength(f64),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("mode index {0} outside the frequency lattice")]
    ModeOutOfRange(i64),
}

/// Uniform periodic grid with `num_modes` points on a box of length `L`.
///
/// The frequency lattice is `xi_k = 2*pi*k/L`, `k = -N/2 .. N/2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    num_modes: usize,
    box_length: f64,
}

impl GridSpec {
    pub fn new(num_modes: usize, box_length: f64) -> Result<Self, SpectralError> {
        if num_modes < 8 || !num_modes.is_power_of_two() {
            return Err(SpectralError::InvalidModeCount(num_modes));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(SpectralError::InvalidBoxLength(box_length));
        }
        Ok(Self { num_modes, box_length })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Lattice spacing in frequency, `2*pi/L`.
    pub fn freq_spacing(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Grid spacing in space, `L/N`.
    pub fn grid_spacing(&self) -> f64 {
        self.box_length / self.num_modes as f64
    }

    /// Integer wavenumber for storage index `i` (FFT layout:
    /// `0, 1, .., N/2-1, -N/2, .., -1`).
    pub fn wavenumber_at(&self, i: usize) -> i64 {
        let n = self.num_modes as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of integer wavenumber `k`.
    pub fn index_of(&self, k: i64) -> Result<usize, SpectralError> {
        let n = self.num_modes as i64;
        if k < -n / 2 || k >= n / 2 {
            return Err(SpectralError::ModeOutOfRange(k));
        }
        Ok(k.rem_euclid(n) as usize)
    }

    /// Frequency `xi_k` for storage index `i`.
    pub fn frequency_at(&self, i: usize) -> f64 {
        self.wavenumber_at(i) as f64 * self.freq_spacing()
    }

    pub fn grid_points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.grid_spacing();
        (0..self.num_modes).map(move |j| j as f64 * h)
    }
}

pub(crate) fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap();
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// A complex field on a periodic box, held as Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    /// Coefficients in FFT storage order; `modes[i]` belongs to
    /// `xi = grid.frequency_at(i)`.
    modes: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(grid: GridSpec) -> Self {
        Self { grid, modes: vec![Complex64::new(0.0, 0.0); grid.num_modes()] }
    }

    /// Build from coefficients in FFT storage order.
    pub fn from_modes(grid: GridSpec, modes: Vec<Complex64>) -> Result<Self, SpectralError> {
        if modes.len() != grid.num_modes() {
            return Err(SpectralError::LengthMismatch { expected: grid.num_modes(), got: modes.len() });
        }
        Ok(Self { grid, modes })
    }

    /// Build from samples on the grid points `x_j = j*L/N`.
    pub fn from_grid_values(grid: GridSpec, values: &[Complex64]) -> Result<Self, SpectralError> {
        if values.len() != grid.num_modes() {
            return Err(SpectralError::LengthMismatch { expected: grid.num_modes(), got: values.len() });
        }
        let n = grid.num_modes();
        let mut buf = values.to_vec();
        plan(n, false).process(&mut buf);
        // DFT -> unitary-transform samples: m_k = (L / (N*sqrt(2*pi))) * X_k
        let scale = grid.box_length() / (n as f64 * (2.0 * PI).sqrt());
        for m in &mut buf {
            *m *= scale;
        }
        Ok(Self { grid, modes: buf })
    }

    /// Sample from a closure of `x` on the grid points.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let values: Vec<Complex64> = grid.grid_points().map(f).collect();
        Self::from_grid_values(grid, &values).expect("length matches by construction")
    }

    /// `A * exp(i*k*2*pi*x/L)`, a single lattice mode.
    pub fn plane_wave(grid: GridSpec, amplitude: Complex64, k: i64) -> Result<Self, SpectralError> {
        let mut field = Self::zero(grid);
        let idx = grid.index_of(k)?;
        // single mode of grid amplitude A has unitary coefficient A*L/sqrt(2*pi)
        field.modes[idx] = amplitude * grid.box_length() / (2.0 * PI).sqrt();
        Ok(field)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut [Complex64] {
        &mut self.modes
    }

    pub fn mode(&self, k: i64) -> Result<Complex64, SpectralError> {
        Ok(self.modes[self.grid.index_of(k)?])
    }

    /// Samples on the grid points.
    pub fn to_grid_values(&self) -> Vec<Complex64> {
        let n = self.grid.num_modes();
        let scale = (2.0 * PI).sqrt() / self.grid.box_length();
        let mut buf: Vec<Complex64> = self.modes.iter().map(|m| m * scale).collect();
        plan(n, true).process(&mut buf);
        buf
    }

    /// Apply a real multiplier `symbol(xi)` mode by mode.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for (i, m) in out.modes.iter_mut().enumerate() {
            *m *= symbol(self.grid.frequency_at(i));
        }
        out
    }

    /// Apply a complex multiplier `symbol(xi)` mode by mode.
    pub fn apply_complex_multiplier(&self, symbol: impl Fn(f64) -> Complex64) -> Self {
        let mut out = self.clone();
        for (i, m) in out.modes.iter_mut().enumerate() {
            *m = *m * symbol(self.grid.frequency_at(i));
        }
        out
    }

    /// `|D|^gamma`: multiply mode `k` by `|xi_k|^gamma`. The zero mode is
    /// annihilated for every `gamma != 0`; the symbol is singular there for
    /// negative `gamma` and the continuous extension vanishes for positive.
    pub fn fractional_derivative(&self, gamma: f64) -> Self {
        if gamma == 0.0 {
            return self.clone();
        }
        self.apply_multiplier(|xi| if xi == 0.0 { 0.0 } else { xi.abs().powf(gamma) })
    }

    /// `<D>^sigma`: multiply mode `k` by `(1 + xi_k^2)^(sigma/2)`.
    pub fn bessel_multiplier(&self, sigma: f64) -> Self {
        if sigma == 0.0 {
            return self.clone();
        }
        self.apply_multiplier(|xi| (1.0 + xi * xi).powf(sigma / 2.0))
    }

    /// Free evolution `exp(i*t*|xi|^alpha)` applied to every mode.
    pub fn linear_propagator(&self, t: f64, alpha: f64) -> Self {
        self.apply_complex_multiplier(|xi| {
            Complex64::from_polar(1.0, t * abs_pow(xi, alpha))
        })
    }

    /// `L^2` norm, computed from the mode side.
    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Discrete `H^s` norm: `(sum_k <xi_k>^(2s) |m_k|^2 * (2*pi/L))^(1/2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let dxi = self.grid.freq_spacing();
        let sum: f64 = self
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let xi = self.grid.frequency_at(i);
                (1.0 + xi * xi).powf(s) * m.norm_sqr()
            })
            .sum();
        (sum * dxi).sqrt()
    }

    /// Homogeneous counterpart with weights `|xi_k|^(2s)`; the zero mode is
    /// excluded from the sum.
    pub fn homogeneous_sobolev_norm(&self, s: f64) -> f64 {
        let dxi = self.grid.freq_spacing();
        let sum: f64 = self
            .modes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.wavenumber_at(*i) != 0)
            .map(|(i, m)| {
                let xi = self.grid.frequency_at(i);
                xi.abs().powf(2.0 * s) * m.norm_sqr()
            })
            .sum();
        (sum * dxi).sqrt()
    }

    /// True when the zero mode is negligible against the field size.
    pub fn is_mean_free(&self, rel_tol: f64) -> bool {
        let zero = self.modes[0].norm();
        let scale = self.modes.iter().map(|m| m.norm()).fold(0.0f64, f64::max);
        zero <= rel_tol * scale.max(f64::MIN_POSITIVE)
    }

    /// Embed the coefficients into a finer grid of `new_len >= N` points
    /// (same box). High modes are zero-filled.
    pub fn pad_to(&self, new_len: usize) -> Self {
        assert!(new_len >= self.grid.num_modes());
        let grid = GridSpec::new(new_len, self.grid.box_length()).expect("padded grid valid");
        let mut modes = vec![Complex64::new(0.0, 0.0); new_len];
        for (i, m) in self.modes.iter().enumerate() {
            let k = self.grid.wavenumber_at(i);
            modes[grid.index_of(k).expect("sublattice")] = *m;
        }
        Self { grid, modes }
    }

    /// Restrict the coefficients to a coarser lattice of `new_len` points,
    /// discarding modes outside its band.
    pub fn truncate_to(&self, new_len: usize) -> Self {
        assert!(new_len <= self.grid.num_modes());
        let grid = GridSpec::new(new_len, self.grid.box_length()).expect("truncated grid valid");
        let half = new_len as i64 / 2;
        let mut modes = vec![Complex64::new(0.0, 0.0); new_len];
        for (i, slot) in modes.iter_mut().enumerate() {
            let k = grid.wavenumber_at(i);
            if k >= -half && k < half {
                *slot = self.modes[self.grid.index_of(k).expect("superset lattice")];
            }
        }
        Self { grid, modes }
    }
}

/// `|x|^p` with the quadratic case taken exactly.
pub fn abs_pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if x == 0.0 {
        if p == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        x.abs().powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: GridSpec, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..grid.num_modes())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralField::from_modes(grid, modes).unwrap()
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(GridSpec::new(7, 1.0).is_err());
        assert!(GridSpec::new(24, 1.0).is_err());
        assert!(GridSpec::new(4, 1.0).is_err());
        assert!(GridSpec::new(64, 0.0).is_err());
        assert!(GridSpec::new(64, -2.0).is_err());
        assert!(GridSpec::new(64, 2.0 * PI).is_ok());
    }

    #[test]
    fn frequency_lattice_layout() {
        let g = GridSpec::new(8, 2.0 * PI).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber_at(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.index_of(-4).unwrap(), 4);
        assert!(g.index_of(4).is_err());
        assert_abs_diff_eq!(g.frequency_at(1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn round_trip_and_parseval() {
        let grid = GridSpec::new(128, 10.0).unwrap();
        let f = random_field(grid, 1);
        let back = SpectralField::from_grid_values(grid, &f.to_grid_values()).unwrap();
        for (a, b) in f.modes().iter().zip(back.modes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12 * f.l2_norm());
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12 * f.l2_norm());
        }
        // grid-side L2 against mode-side L2
        let h = grid.grid_spacing();
        let grid_l2: f64 = f.to_grid_values().iter().map(|v| v.norm_sqr() * h).sum::<f64>().sqrt();
        assert_relative_eq!(grid_l2, f.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn fractional_derivative_gamma_zero_is_identity() {
        let grid = GridSpec::new(64, 7.0).unwrap();
        let f = random_field(grid, 2);
        assert_eq!(f.fractional_derivative(0.0), f);
    }

    #[test]
    fn fractional_derivative_single_mode() {
        let grid = GridSpec::new(64, 2.0 * PI).unwrap();
        let f = SpectralField::plane_wave(grid, Complex64::new(1.0, 0.0), 3).unwrap();
        let beta = 0.7;
        let d = f.fractional_derivative(beta);
        let expect = f.mode(3).unwrap() * 3.0f64.powf(beta);
        assert_relative_eq!(d.mode(3).unwrap().re, expect.re, max_relative = 1e-13);
        assert_abs_diff_eq!(d.mode(5).unwrap().norm(), 0.0);
    }

    #[test]
    fn fractional_derivative_of_cosine() {
        // cos(2x) on L = 2*pi, gamma = 1 -> 2*cos(2x)
        let grid = GridSpec::new(64, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(grid, |x| Complex64::new((2.0 * x).cos(), 0.0));
        let d = f.fractional_derivative(1.0);
        let vals = d.to_grid_values();
        for (x, v) in grid.grid_points().zip(vals) {
            assert_abs_diff_eq!(v.re, 2.0 * (2.0 * x).cos(), epsilon = 1e-10);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn bessel_multiplier_examples() {
        let grid = GridSpec::new(32, 2.0 * PI).unwrap();
        let f = random_field(grid, 3);
        assert_eq!(f.bessel_multiplier(0.0), f);
        // zero mode untouched for any sigma
        let b = f.bessel_multiplier(3.3);
        assert_eq!(b.mode(0).unwrap(), f.mode(0).unwrap());
        // e^{ix}, sigma = 2 -> factor (1+1) = 2
        let e = SpectralField::plane_wave(grid, Complex64::new(1.0, 0.0), 1).unwrap();
        let be = e.bessel_multiplier(2.0);
        assert_relative_eq!(be.mode(1).unwrap().re, 2.0 * e.mode(1).unwrap().re, max_relative = 1e-14);
    }

    #[test]
    fn propagator_is_unitary_group() {
        let grid = GridSpec::new(64, 5.0).unwrap();
        let f = random_field(grid, 4);
        let alpha = 1.7;
        assert_eq!(f.linear_propagator(0.0, alpha), f);
        let g = f.linear_propagator(0.37, alpha);
        assert_relative_eq!(g.l2_norm(), f.l2_norm(), max_relative = 1e-12);
        let two_step = f.linear_propagator(0.2, alpha).linear_propagator(0.17, alpha);
        for (a, b) in g.modes().iter().zip(two_step.modes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12 * f.l2_norm());
        }
    }

    #[test]
    fn sobolev_norm_of_single_mode() {
        let grid = GridSpec::new(64, 2.0 * PI).unwrap();
        let amp = 0.8;
        let k = 5i64;
        let f = SpectralField::plane_wave(grid, Complex64::new(amp, 0.0), k).unwrap();
        let s = 1.3;
        // one-term sum: A * <k>^s * sqrt(L)
        let expect = amp * (1.0 + (k * k) as f64).powf(s / 2.0) * grid.box_length().sqrt();
        assert_relative_eq!(f.sobolev_norm(s), expect, max_relative = 1e-13);
        let hom = amp * (k as f64).powf(s) * grid.box_length().sqrt();
        assert_relative_eq!(f.homogeneous_sobolev_norm(s), hom, max_relative = 1e-13);
        assert_relative_eq!(f.sobolev_norm(0.0), f.l2_norm(), max_relative = 1e-14);
    }

    #[test]
    fn zero_field_norms_vanish() {
        let grid = GridSpec::new(16, 1.0).unwrap();
        let z = SpectralField::zero(grid);
        assert_eq!(z.sobolev_norm(2.0), 0.0);
        assert_eq!(z.homogeneous_sobolev_norm(-0.5), 0.0);
    }

    #[test]
    fn homogeneous_norm_one_matches_derivative() {
        let grid = GridSpec::new(128, 9.0).unwrap();
        let mut f = random_field(grid, 5);
        f.modes_mut()[0] = Complex64::new(0.0, 0.0);
        let dx = f.fractional_derivative(1.0);
        assert_relative_eq!(f.homogeneous_sobolev_norm(1.0), dx.l2_norm(), max_relative = 1e-10);
    }

    #[test]
    fn pad_truncate_round_trip() {
        let grid = GridSpec::new(32, 4.0).unwrap();
        let f = random_field(grid, 6);
        let back = f.pad_to(64).truncate_to(32);
        assert_eq!(f, back);
    }

    proptest! {
        #[test]
        fn prop_round_trip(seed in 0u64..1000) {
            let grid = GridSpec::new(64, 6.5).unwrap();
            let f = random_field(grid, seed);
            let back = SpectralField::from_grid_values(grid, &f.to_grid_values()).unwrap();
            let err: f64 = f.modes().iter().zip(back.modes())
                .map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-12 * f.l2_norm().max(1e-300));
        }

        #[test]
        fn prop_multiplier_semigroup(seed in 0u64..1000, a in -1.5f64..1.5, b in -1.5f64..1.5) {
            let grid = GridSpec::new(64, 6.5).unwrap();
            let mut f = random_field(grid, seed);
            f.modes_mut()[0] = Complex64::new(0.0, 0.0);
            let lhs = f.fractional_derivative(a).fractional_derivative(b);
            let rhs = f.fractional_derivative(a + b);
            let scale = rhs.l2_norm().max(lhs.l2_norm()).max(1e-300);
            let err: f64 = lhs.modes().iter().zip(rhs.modes())
                .map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-11 * scale);
        }

        #[test]
        fn prop_propagator_preserves_every_sobolev_norm(
            seed in 0u64..1000, s in -2.0f64..2.0, t in -3.0f64..3.0, alpha in 1.1f64..2.5
        ) {
            let grid = GridSpec::new(64, 6.5).unwrap();
            let f = random_field(grid, seed);
            let g = f.linear_propagator(t, alpha);
            prop_assert!((g.sobolev_norm(s) - f.sobolev_norm(s)).abs()
                <= 1e-11 * f.sobolev_norm(s).max(1e-300));
        }

        #[test]
        fn prop_derivative_commutes_with_propagator(
            seed in 0u64..1000, gamma in -1.0f64..1.5, t in -2.0f64..2.0
        ) {
            let grid = GridSpec::new(64, 6.5).unwrap();
            let f = random_field(grid, seed);
            let alpha = 1.6;
            let lhs = f.fractional_derivative(gamma).linear_propagator(t, alpha);
            let rhs = f.linear_propagator(t, alpha).fractional_derivative(gamma);
            let scale = lhs.l2_norm().max(1e-300);
            let err: f64 = lhs.modes().iter().zip(rhs.modes())
                .map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-11 * scale);
        }
    }
}
