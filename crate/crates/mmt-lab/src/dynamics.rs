//! The model's right-hand side, stiff time integrators, and conservation
//! monitors.
//!
//! The evolution is solved mode-side: with `u_hat` the coefficient vector,
//!
//! ```text
//! d/dt u_hat_k = i*|xi_k|^alpha * u_hat_k + i * Nhat(u)_k ,
//! N(u) = D^beta( |D^beta u|^2 D^beta u ).
//! ```
//!
//! The relative sign of the two terms is the one for which the flow is the
//! Hamiltonian flow of [`energy`]: both terms of `E` are then exactly
//! conserved quantities' parts (see `conservation_on_random_data`), the
//! kinetic part is dominated by `E(u_0)`, and mass is conserved as well.
//!
//! The linear phase is integrated exactly; the nonlinear part is advanced by
//! a fourth-order Runge--Kutta stage in either the exponential-time-
//! differencing form (`EtdRk4`) or the integrating-factor form (`IfRk4`).
//! Cubic products are formed pointwise on a zero-padded grid so that, at the
//! default pad factor 2, no aliased mode folds back into the retained band.

use crate::spectral::{abs_pow, plan, GridSpec, SpectralField};
use crate::ModelParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("dt must satisfy 0 < dt < t_end, got dt={dt}, t_end={t_end}")]
    BadTimeStep { dt: f64, t_end: f64 },
    #[error("dealias_pad_factor must be 1, 3/2 or 2, got {0}")]
    BadPadFactor(f64),
    #[error("record_stride must be positive")]
    BadRecordStride,
    #[error("initial data must be mean-free when beta != 0 (zero mode is annihilated by |xi|^beta)")]
    NotMeanFree,
    #[error("non-finite mode encountered at t = {time} (blow-up or instability)")]
    StepRejected { time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    EtdRk4,
    IfRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// 1, 3/2 or 2; 2 fully dealiases the cubic product.
    pub dealias_pad_factor: f64,
    pub scheme: Scheme,
    /// Monitors are recorded every this many steps (plus the final step).
    pub record_stride: usize,
    /// Keep full mode snapshots at the recorded steps.
    pub record_snapshots: bool,
    /// Drop the nonlinear term entirely (linear reference runs).
    pub disable_nonlinearity: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Self {
        Self {
            dt,
            t_end,
            dealias_pad_factor: 2.0,
            scheme,
            record_stride: 1,
            record_snapshots: false,
            disable_nonlinearity: false,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.t_end > self.dt) {
            return Err(DynamicsError::BadTimeStep { dt: self.dt, t_end: self.t_end });
        }
        if ![1.0, 1.5, 2.0].contains(&self.dealias_pad_factor) {
            return Err(DynamicsError::BadPadFactor(self.dealias_pad_factor));
        }
        if self.record_stride == 0 {
            return Err(DynamicsError::BadRecordStride);
        }
        Ok(())
    }
}

/// Time series of the conserved and monitored quantities along a run.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub mass_series: Vec<f64>,
    pub energy_series: Vec<f64>,
    /// Squared homogeneous `H^(alpha/2)` norm, the quantity bounded a priori
    /// by the initial energy.
    pub h_alpha_half_series: Vec<f64>,
    pub snapshots: Option<Vec<SpectralField>>,
}

/// Flat, serializable view of a finished run.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryDocument {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub cfg: IntegratorConfig,
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub h_half: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn document(
        &self,
        grid: GridSpec,
        params: ModelParams,
        cfg: IntegratorConfig,
    ) -> TrajectoryDocument {
        TrajectoryDocument {
            params,
            grid,
            cfg,
            times: self.times.clone(),
            mass: self.mass_series.clone(),
            energy: self.energy_series.clone(),
            h_half: self.h_alpha_half_series.clone(),
        }
    }
}

/// Map retained modes (FFT order, length `n`) into a padded spectrum of
/// length `m >= n`, returning grid samples on the fine grid.
fn padded_grid_values(modes: &[Complex64], grid: GridSpec, m: usize) -> Vec<Complex64> {
    let scale = (2.0 * PI).sqrt() / grid.box_length();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, mode) in modes.iter().enumerate() {
        let k = grid.wavenumber_at(i);
        buf[k.rem_euclid(m as i64) as usize] = mode * scale;
    }
    plan(m, true).process(&mut buf);
    buf
}

/// Forward transform of fine-grid samples, truncated to the retained band.
fn truncated_modes(mut values: Vec<Complex64>, grid: GridSpec) -> Vec<Complex64> {
    let n = grid.num_modes();
    let m = values.len();
    plan(m, false).process(&mut values);
    let scale = grid.box_length() / (m as f64 * (2.0 * PI).sqrt());
    (0..n)
        .map(|i| values[grid.wavenumber_at(i).rem_euclid(m as i64) as usize] * scale)
        .collect()
}

fn padded_len(grid: GridSpec, pad_factor: f64) -> usize {
    (grid.num_modes() as f64 * pad_factor).round() as usize
}

/// `N(u) = D^beta(|D^beta u|^2 D^beta u)` with zero-padded cubic product.
pub fn nonlinearity(u: &SpectralField, beta: f64, pad_factor: f64) -> SpectralField {
    let grid = u.grid();
    let w = u.fractional_derivative(beta);
    let m = padded_len(grid, pad_factor);
    let mut vals = padded_grid_values(w.modes(), grid, m);
    for v in &mut vals {
        *v = *v * v.norm_sqr();
    }
    let cubic = truncated_modes(vals, grid);
    SpectralField::from_modes(grid, cubic)
        .expect("length preserved")
        .fractional_derivative(beta)
}

/// `M(u) = ||u||_{L^2}^2`.
pub fn mass(u: &SpectralField) -> f64 {
    let n = u.l2_norm();
    n * n
}

/// `E(u) = int |D^(alpha/2) u|^2 + 1/2 |D^beta u|^4 dx`, the conserved
/// energy. The quartic integral is evaluated on a grid padded by
/// `pad_factor`, which makes the quadrature exact at factor 2.
pub fn energy(u: &SpectralField, params: &ModelParams, pad_factor: f64) -> f64 {
    let grid = u.grid();
    let dxi = grid.freq_spacing();
    let kinetic: f64 = u
        .modes()
        .iter()
        .enumerate()
        .map(|(i, m)| abs_pow(grid.frequency_at(i), params.alpha) * m.norm_sqr())
        .sum::<f64>()
        * dxi;
    let w = u.fractional_derivative(params.beta);
    let m = padded_len(grid, pad_factor);
    let vals = padded_grid_values(w.modes(), grid, m);
    let dx = grid.box_length() / m as f64;
    let quartic: f64 = vals.iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum::<f64>() * dx;
    kinetic + 0.5 * quartic
}

/// `phi_j(z) = (e^z - sum_{l<j} z^l/l!) / z^j`, evaluated stably.
fn phi(j: u32, z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Taylor series sum_m z^m / (m+j)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut fact = (1..=j as u64).product::<u64>() as f64;
        let mut sum = Complex64::new(1.0 / fact, 0.0);
        for m in 1..=16u64 {
            term *= z;
            fact *= (m + j as u64) as f64;
            sum += term / fact;
        }
        sum
    } else {
        let e = z.exp();
        match j {
            1 => (e - 1.0) / z,
            2 => (e - 1.0 - z) / (z * z),
            3 => (e - 1.0 - z - z * z / 2.0) / (z * z * z),
            _ => unreachable!("only phi_1..phi_3 are used"),
        }
    }
}

/// Precomputed per-mode exponentials and weights for one (grid, params, cfg).
pub struct Stepper {
    grid: GridSpec,
    beta: f64,
    pad_factor: f64,
    scheme: Scheme,
    disable_nonlinearity: bool,
    dt: f64,
    e_full: Vec<Complex64>,
    e_half: Vec<Complex64>,
    phi1_half: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: GridSpec, params: &ModelParams, cfg: &IntegratorConfig) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        let n = grid.num_modes();
        let dt = cfg.dt;
        let mut e_full = Vec::with_capacity(n);
        let mut e_half = Vec::with_capacity(n);
        let mut phi1_half = Vec::with_capacity(n);
        let mut f1 = Vec::with_capacity(n);
        let mut f2 = Vec::with_capacity(n);
        let mut f3 = Vec::with_capacity(n);
        for i in 0..n {
            let z = Complex64::new(0.0, abs_pow(grid.frequency_at(i), params.alpha) * dt);
            e_full.push(z.exp());
            e_half.push((z / 2.0).exp());
            phi1_half.push(phi(1, z / 2.0));
            let (p1, p2, p3) = (phi(1, z), phi(2, z), phi(3, z));
            f1.push(p1 - 3.0 * p2 + 4.0 * p3);
            f2.push(p2 - 2.0 * p3);
            f3.push(4.0 * p3 - p2);
        }
        Ok(Self {
            grid,
            beta: params.beta,
            pad_factor: cfg.dealias_pad_factor,
            scheme: cfg.scheme,
            disable_nonlinearity: cfg.disable_nonlinearity,
            dt,
            e_full,
            e_half,
            phi1_half,
            f1,
            f2,
            f3,
        })
    }

    /// `i * Nhat(u)`, the nonlinear part of the mode-side vector field.
    fn rhs(&self, modes: &[Complex64]) -> Vec<Complex64> {
        if self.disable_nonlinearity {
            return vec![Complex64::new(0.0, 0.0); modes.len()];
        }
        let field = SpectralField::from_modes(self.grid, modes.to_vec()).expect("length preserved");
        let nl = nonlinearity(&field, self.beta, self.pad_factor);
        nl.modes().iter().map(|m| Complex64::i() * m).collect()
    }

    pub fn advance(&self, modes: &[Complex64]) -> Vec<Complex64> {
        match self.scheme {
            Scheme::EtdRk4 => self.advance_etd(modes),
            Scheme::IfRk4 => self.advance_if(modes),
        }
    }

    fn advance_etd(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = u.len();
        let h = self.dt;
        let n1 = self.rhs(u);
        let stage = |base: &[Complex64], nl: &[Complex64]| -> Vec<Complex64> {
            (0..n)
                .map(|i| self.e_half[i] * base[i] + 0.5 * h * self.phi1_half[i] * nl[i])
                .collect()
        };
        let a = stage(u, &n1);
        let n2 = self.rhs(&a);
        let b = stage(u, &n2);
        let n3 = self.rhs(&b);
        let c: Vec<Complex64> = (0..n)
            .map(|i| {
                self.e_half[i] * a[i] + 0.5 * h * self.phi1_half[i] * (2.0 * n3[i] - n1[i])
            })
            .collect();
        let n4 = self.rhs(&c);
        (0..n)
            .map(|i| {
                self.e_full[i] * u[i]
                    + h * (self.f1[i] * n1[i]
                        + 2.0 * self.f2[i] * (n2[i] + n3[i])
                        + self.f3[i] * n4[i])
            })
            .collect()
    }

    fn advance_if(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = u.len();
        let h = self.dt;
        let k1 = self.rhs(u);
        let u2: Vec<Complex64> =
            (0..n).map(|i| self.e_half[i] * (u[i] + 0.5 * h * k1[i])).collect();
        let k2 = self.rhs(&u2);
        let u3: Vec<Complex64> =
            (0..n).map(|i| self.e_half[i] * u[i] + 0.5 * h * k2[i]).collect();
        let k3 = self.rhs(&u3);
        let u4: Vec<Complex64> =
            (0..n).map(|i| self.e_full[i] * u[i] + h * self.e_half[i] * k3[i]).collect();
        let k4 = self.rhs(&u4);
        (0..n)
            .map(|i| {
                self.e_full[i] * u[i]
                    + h / 6.0
                        * (self.e_full[i] * k1[i]
                            + 2.0 * self.e_half[i] * (k2[i] + k3[i])
                            + k4[i])
            })
            .collect()
    }
}

/// One time step of the full equation. Builds the per-mode tables on every
/// call; [`integrate`] amortises them across a run.
pub fn step(
    u: &SpectralField,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<SpectralField, DynamicsError> {
    let stepper = Stepper::new(u.grid(), params, cfg)?;
    let out = stepper.advance(u.modes());
    if out.iter().any(|m| !m.re.is_finite() || !m.im.is_finite()) {
        return Err(DynamicsError::StepRejected { time: cfg.dt });
    }
    Ok(SpectralField::from_modes(u.grid(), out).expect("length preserved"))
}

/// Run the equation from `u0` to `t_end`, recording monitors every
/// `record_stride` steps (the initial and final states are always recorded).
pub fn integrate(
    u0: &SpectralField,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord, DynamicsError> {
    cfg.validate()?;
    if params.beta != 0.0 && !u0.is_mean_free(1e-10) {
        return Err(DynamicsError::NotMeanFree);
    }
    let stepper = Stepper::new(u0.grid(), params, cfg)?;
    let steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;

    let mut record = TrajectoryRecord {
        times: Vec::new(),
        mass_series: Vec::new(),
        energy_series: Vec::new(),
        h_alpha_half_series: Vec::new(),
        snapshots: cfg.record_snapshots.then(Vec::new),
    };
    let push = |t: f64, field: &SpectralField, record: &mut TrajectoryRecord| {
        record.times.push(t);
        record.mass_series.push(mass(field));
        record.energy_series.push(energy(field, params, cfg.dealias_pad_factor));
        let h = field.homogeneous_sobolev_norm(params.alpha / 2.0);
        record.h_alpha_half_series.push(h * h);
        if let Some(snaps) = record.snapshots.as_mut() {
            snaps.push(field.clone());
        }
    };

    let mut current = u0.clone();
    push(0.0, &current, &mut record);
    for i in 1..=steps {
        let out = stepper.advance(current.modes());
        let t = i as f64 * cfg.dt;
        if out.iter().any(|m| !m.re.is_finite() || !m.im.is_finite()) {
            return Err(DynamicsError::StepRejected { time: t });
        }
        current = SpectralField::from_modes(u0.grid(), out).expect("length preserved");
        if i % cfg.record_stride == 0 || i == steps {
            push(t, &current, &mut record);
        }
    }
    Ok(record)
}

/// Exact single-mode solution `A e^{ikx} e^{i(|k|^alpha + |k|^{4 beta} A^2) t}`
/// on a box of length `L`, used as a solver oracle.
pub fn plane_wave_solution(
    grid: GridSpec,
    amplitude: f64,
    k: i64,
    params: &ModelParams,
    t: f64,
) -> SpectralField {
    let dk = 2.0 * PI / grid.box_length();
    let xi = k as f64 * dk;
    let rotation =
        abs_pow(xi, params.alpha) + abs_pow(xi, 4.0 * params.beta) * amplitude * amplitude;
    SpectralField::plane_wave(grid, Complex64::from_polar(amplitude, rotation * t), k)
        .expect("wavenumber inside lattice")
}
