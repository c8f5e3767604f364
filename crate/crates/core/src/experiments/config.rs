//! Experiment configuration.
//!
//! The on-disk format is TOML with one section per pipeline stage. Every
//! physical quantity carries its unit in the field name. Optional fields are
//! filled in by [`TrialConfig::resolve`] so that persisted configs are fully
//! explicit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::digitizer::{DecimationPlan, DEFAULT_FACTOR, DEFAULT_LPF_CUTOFF_HZ};
use crate::error::{Error, Result};
use crate::photonic::{ModulatorParams, NoiseSpec, PdParams};
use crate::waveforms::{four_tone, samples_per_chip, tone_bins, FilterKind, FilterSpec, TimeGrid, ToneSpec};

/// Amplitude ratios (v_code / v_pi) named in the reference experiment.
pub const REFERENCE_AMPLITUDES: [f64; 4] = [0.5, 0.432, 0.243, 0.177];

/// Named ratios plus interpolated points, in decreasing order.
pub const DEFAULT_AMPLITUDES: [f64; 8] = [0.5, 0.432, 0.35, 0.3, 0.28, 0.243, 0.21, 0.177];

/// Shipped default: four-tone, 500 MHz-bandlimited PRBS, noiseless.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../configs/default.config");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 10e9,
            n_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub tones: Vec<ToneSpec>,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self { tones: four_tone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrbsConfig {
    pub seed: u16,
    pub chip_rate_hz: f64,
    pub n_chips: usize,
    /// Transmit-side bandwidth limit; absent means an ideal NRZ code.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    pub filter_kind: FilterKind,
    pub filter_taps: usize,
}

impl Default for PrbsConfig {
    fn default() -> Self {
        Self {
            seed: 0x7FFF,
            chip_rate_hz: 500e6,
            n_chips: 1000,
            bandwidth_hz: None,
            filter_kind: FilterKind::BrickwallFft,
            filter_taps: 201,
        }
    }
}

impl PrbsConfig {
    pub fn filter(&self) -> Option<FilterSpec> {
        self.bandwidth_hz.map(|cutoff| FilterSpec {
            kind: self.filter_kind,
            cutoff,
            taps: self.filter_taps,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulatorConfig {
    pub v_pi_volts: f64,
    /// Defaults to `v_pi_volts` (minimum transmission).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_dc_volts: Option<f64>,
    pub v_code_volts: f64,
}

impl Default for ModulatorConfig {
    fn default() -> Self {
        Self {
            v_pi_volts: 1.0,
            v_dc_volts: None,
            v_code_volts: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverConfig {
    pub lpf_cutoff_hz: f64,
    pub lpf_kind: FilterKind,
    pub lpf_taps: usize,
    pub decimation_factor: usize,
    pub position: usize,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            lpf_cutoff_hz: DEFAULT_LPF_CUTOFF_HZ,
            lpf_kind: FilterKind::BrickwallFft,
            lpf_taps: 201,
            decimation_factor: DEFAULT_FACTOR,
            position: 16,
        }
    }
}

impl ReceiverConfig {
    pub fn filter(&self) -> FilterSpec {
        FilterSpec {
            kind: self.lpf_kind,
            cutoff: self.lpf_cutoff_hz,
            taps: self.lpf_taps,
        }
    }

    pub fn plan(&self) -> DecimationPlan {
        DecimationPlan {
            factor: self.decimation_factor,
            position: self.position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Defaults to `2 × tones + 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparsity_budget: Option<usize>,
    pub residual_tol: f64,
    pub dictionary_f_max_hz: f64,
    /// Build the sensing matrix with gain `pd_gain/2` regardless of bias.
    pub assume_unit_gain: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sparsity_budget: None,
            residual_tol: 1e-6,
            dictionary_f_max_hz: 250e6,
            assume_unit_gain: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Exact,
    SmallSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub amplitude_ratios: Vec<f64>,
    pub positions: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            amplitude_ratios: DEFAULT_AMPLITUDES.to_vec(),
            positions: (1..=20).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TrialConfig {
    pub grid: GridConfig,
    pub signal: SignalConfig,
    pub prbs: PrbsConfig,
    pub modulator: ModulatorConfig,
    pub photodetector: PdParams,
    pub noise: NoiseSpec,
    pub receiver: ReceiverConfig,
    pub solver: SolverConfig,
    pub model: ModelKind,
    pub sweep: SweepConfig,
}

fn field_err(field: &str, e: impl std::fmt::Display) -> Error {
    Error::Config {
        path: field.to_string(),
        message: e.to_string(),
    }
}

impl TrialConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrialConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: "<toml>".into(),
            message: e.to_string(),
        })?;
        cfg.resolve()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: format!("cannot read config: {e}"),
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { path: field, message } => Error::Config {
                path: format!("{}: {}", path.display(), field),
                message,
            },
            other => other,
        })
    }

    /// The shipped default configuration.
    pub fn shipped_default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG_TOML).expect("shipped default config is valid")
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Materialize optional fields and validate geometry.
    pub fn resolve(mut self) -> Result<Self> {
        if self.modulator.v_dc_volts.is_none() {
            self.modulator.v_dc_volts = Some(self.modulator.v_pi_volts);
        }
        if self.solver.sparsity_budget.is_none() {
            self.solver.sparsity_budget = Some(2 * self.signal.tones.len() + 1);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.sample_rate_hz, self.grid.n_samples).map_err(|e| field_err("grid", e))
    }

    pub fn modulator_params(&self) -> ModulatorParams {
        ModulatorParams {
            v_pi: self.modulator.v_pi_volts,
            v_dc: self.modulator.v_dc_volts.unwrap_or(self.modulator.v_pi_volts),
            v_code: self.modulator.v_code_volts,
        }
    }

    pub fn sparsity_budget(&self) -> usize {
        self.solver.sparsity_budget.unwrap_or(2 * self.signal.tones.len() + 1)
    }

    pub fn amplitude_ratio(&self) -> f64 {
        self.modulator.v_code_volts / self.modulator.v_pi_volts
    }

    /// Copy with `v_code = ratio · v_pi`.
    pub fn with_amplitude_ratio(&self, ratio: f64) -> Self {
        let mut c = self.clone();
        c.modulator.v_code_volts = ratio * c.modulator.v_pi_volts;
        c
    }

    pub fn with_position(&self, position: usize) -> Self {
        let mut c = self.clone();
        c.receiver.position = position;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        tone_bins(&self.signal.tones, &grid).map_err(|e| field_err("signal.tones", e))?;

        if self.prbs.n_chips == 0 {
            return Err(field_err("prbs.n_chips", "must be positive"));
        }
        if self.prbs.seed == 0 || self.prbs.seed > 0x7FFF {
            return Err(field_err("prbs.seed", "must be a nonzero 15-bit value"));
        }
        let spc = samples_per_chip(&grid, self.prbs.chip_rate_hz).map_err(|e| field_err("prbs.chip_rate_hz", e))?;
        if spc * self.prbs.n_chips != grid.n_samples() {
            return Err(field_err(
                "prbs.n_chips",
                format!(
                    "{} chips x {} samples/chip does not span {} samples",
                    self.prbs.n_chips,
                    spc,
                    grid.n_samples()
                ),
            ));
        }
        if let Some(bw) = self.prbs.bandwidth_hz {
            if !(bw > 0.0 && bw < grid.nyquist()) {
                return Err(field_err("prbs.bandwidth_hz", format!("{bw} Hz outside (0, Nyquist)")));
            }
            if self.prbs.filter_kind == FilterKind::WindowedSincFir && self.prbs.filter_taps.is_multiple_of(2) {
                return Err(field_err("prbs.filter_taps", "must be odd"));
            }
        }

        self.modulator_params()
            .validate()
            .map_err(|e| field_err("modulator", e))?;
        self.photodetector
            .validate()
            .map_err(|e| field_err("photodetector", e))?;
        self.noise.validate().map_err(|e| field_err("noise", e))?;

        let r = &self.receiver;
        if !(r.lpf_cutoff_hz > 0.0 && r.lpf_cutoff_hz < grid.nyquist()) {
            return Err(field_err(
                "receiver.lpf_cutoff_hz",
                format!("{} Hz outside (0, Nyquist)", r.lpf_cutoff_hz),
            ));
        }
        if r.lpf_kind == FilterKind::WindowedSincFir && r.lpf_taps.is_multiple_of(2) {
            return Err(field_err("receiver.lpf_taps", "must be odd"));
        }
        let plan = r.plan();
        let m = plan
            .indices(grid.n_samples())
            .map_err(|e| field_err("receiver.decimation_factor", e))?
            .len();
        if r.position > spc {
            return Err(field_err(
                "receiver.position",
                format!("position {} exceeds {} samples per chip", r.position, spc),
            ));
        }

        let budget = self.sparsity_budget();
        if budget > m {
            return Err(field_err(
                "solver.sparsity_budget",
                format!("{budget} exceeds the {m} measurements"),
            ));
        }
        if !(self.solver.residual_tol.is_finite() && self.solver.residual_tol >= 0.0) {
            return Err(field_err("solver.residual_tol", "must be >= 0"));
        }
        let f = self.solver.dictionary_f_max_hz;
        if !(f >= 0.0 && f < grid.nyquist()) || grid.bin_of(f).is_none() {
            return Err(field_err(
                "solver.dictionary_f_max_hz",
                format!("{f} Hz must be on-grid and below Nyquist"),
            ));
        }

        for (i, &a) in self.sweep.amplitude_ratios.iter().enumerate() {
            if !(a > 0.0 && a <= 0.5) {
                return Err(field_err(
                    &format!("sweep.amplitude_ratios[{i}]"),
                    format!("{a} outside (0, 0.5]"),
                ));
            }
        }
        for (i, &p) in self.sweep.positions.iter().enumerate() {
            if p == 0 || p > spc {
                return Err(field_err(
                    &format!("sweep.positions[{i}]"),
                    format!("{p} outside 1..={spc}"),
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
