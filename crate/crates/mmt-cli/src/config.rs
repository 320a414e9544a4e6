//! JSON run-configuration schemas and their translation into validated
//! library types. Every failure surfaces as a [`CliError::Config`] naming
//! the offending field, which the front end turns into exit code 1.

use crate::CliError;
use mmt_lab::dynamics::{IntegratorConfig, Scheme};
use mmt_lab::probe::{FamilyTag, ProbeSpec};
use mmt_lab::{generators, GridSpec, ModelParams, SpectralField};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub num_modes: usize,
    pub box_length: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(self.num_modes, self.box_length)
            .map_err(|e| CliError::Config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub s: f64,
}

impl ParamsConfig {
    pub fn build(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.alpha, self.beta, self.s)
            .map_err(|e| CliError::Config(format!("params: {e}")))
    }
}

fn default_pad() -> f64 {
    2.0
}
fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_pad")]
    pub dealias_pad_factor: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub record_snapshots: bool,
    #[serde(default)]
    pub disable_nonlinearity: bool,
}

fn default_scheme() -> Scheme {
    Scheme::EtdRk4
}

impl IntegratorSection {
    pub fn build(&self) -> Result<IntegratorConfig, CliError> {
        let mut cfg = IntegratorConfig::new(self.dt, self.t_end, self.scheme);
        cfg.dealias_pad_factor = self.dealias_pad_factor;
        cfg.record_stride = self.record_stride;
        cfg.record_snapshots = self.record_snapshots;
        cfg.disable_nonlinearity = self.disable_nonlinearity;
        cfg.validate().map_err(|e| CliError::Config(format!("integrator: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    PlaneWave { amplitude: f64, k: i64 },
    GaussianPacket { sigma: f64, k0: i64, amplitude: f64 },
    RandomBandlimited { band: i64, seed: u64, amplitude: f64 },
}

impl InitialData {
    pub fn build(&self, grid: GridSpec, seed_override: Option<u64>) -> Result<SpectralField, CliError> {
        Ok(match *self {
            InitialData::PlaneWave { amplitude, k } => {
                if k == 0 || k.unsigned_abs() as usize >= grid.num_modes() / 2 {
                    return Err(CliError::Config(format!(
                        "initial_data.k: wavenumber {k} outside the nonzero lattice range"
                    )));
                }
                generators::plane_wave(grid, amplitude, k)
            }
            InitialData::GaussianPacket { sigma, k0, amplitude } => {
                if !(sigma > 0.0) {
                    return Err(CliError::Config(format!(
                        "initial_data.sigma: must be positive, got {sigma}"
                    )));
                }
                generators::gaussian_packet(grid, sigma, k0, amplitude)
            }
            InitialData::RandomBandlimited { band, seed, amplitude } => {
                if band < 1 || band as usize >= grid.num_modes() / 2 {
                    return Err(CliError::Config(format!(
                        "initial_data.band: {band} outside 1..num_modes/2"
                    )));
                }
                generators::random_bandlimited(grid, band, seed_override.unwrap_or(seed), amplitude)
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub integrator: IntegratorSection,
    pub initial_data: InitialData,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// "HHH", "HLL" or "LLL".
    pub family: String,
    pub params: ParamsConfig,
    pub t: f64,
    pub eps: f64,
    /// Inclusive range of base-2 exponents for the frequency sweep.
    pub n_exponents: [u32; 2],
    #[serde(default = "default_quad")]
    pub quad_points: usize,
    #[serde(default = "default_out")]
    pub out_points: usize,
}

fn default_quad() -> usize {
    128
}
fn default_out() -> usize {
    64
}

impl ProbeConfig {
    pub fn build(&self) -> Result<ProbeSpec, CliError> {
        let family = match self.family.as_str() {
            "HHH" => FamilyTag::Hhh,
            "HLL" => FamilyTag::Hll,
            "LLL" => FamilyTag::Lll,
            other => {
                return Err(CliError::Config(format!(
                    "family: unknown value {other:?} (expected HHH, HLL or LLL)"
                )))
            }
        };
        let params = self.params.build()?;
        let [lo, hi] = self.n_exponents;
        if lo > hi {
            return Err(CliError::Config(format!(
                "n_exponents: range [{lo}, {hi}] is empty"
            )));
        }
        let spec = ProbeSpec {
            family,
            params,
            t: self.t,
            eps: self.eps,
            n_list: (lo..=hi).map(|e| f64::powi(2.0, e as i32)).collect(),
            quad_points: self.quad_points,
            out_points: self.out_points,
        };
        spec.validate().map_err(|e| CliError::Config(format!("probe spec: {e}")))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub alpha: f64,
    pub beta_range: [f64; 2],
    pub s_range: [f64; 2],
    pub resolution: usize,
    #[serde(default)]
    pub delta: f64,
}

impl MapConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.resolution < 2 {
            return Err(CliError::Config(format!(
                "resolution: must be at least 2, got {}",
                self.resolution
            )));
        }
        if self.beta_range[0] >= self.beta_range[1] {
            return Err(CliError::Config("beta_range: empty interval".into()));
        }
        if self.s_range[0] >= self.s_range[1] {
            return Err(CliError::Config("s_range: empty interval".into()));
        }
        Ok(())
    }
}

fn default_bench_n() -> Vec<f64> {
    vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0]
}
fn default_bench_l() -> Vec<f64> {
    vec![1.0, 4.0, 16.0]
}
fn default_resolution() -> usize {
    48
}
fn default_samples() -> usize {
    20_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HRangeSection {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub alpha: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Case tags, e.g. ["b1", ..., "t3"].
    pub cases: Vec<String>,
    pub alphas: Vec<f64>,
    #[serde(default = "default_bench_n")]
    pub n_sweep: Vec<f64>,
    #[serde(default = "default_bench_l")]
    pub l_sweep: Vec<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub seed: u64,
    /// Optional direct range checks of the resonance sum on dyadic annuli.
    #[serde(default)]
    pub h_range: Vec<HRangeSection>,
}
