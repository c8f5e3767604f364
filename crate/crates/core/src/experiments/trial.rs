use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ModelKind, TrialConfig};
use crate::digitizer::{decimate, lowpass, MeasurementVector};
use crate::dsp::amplitude_spectrum;
use crate::error::{Error, Result};
use crate::photonic::{mzm_output, mzm_small_signal, photodetect, NoiseSpec};
use crate::reconstruction::{
    gain_model, omp, reconstruct_signal, reconstruction_error, Dictionary, SensingBank, SparseSolution, StopReason,
};
use crate::waveforms::{
    bandlimit, chips_to_waveform, generate_chip_sequence, synthesize_multitone, ChipSequence, FilterSpec, TimeGrid,
    Unit, Waveform,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Single-sided amplitude spectra on the dictionary frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectra {
    pub frequencies_hz: Vec<f64>,
    pub original_rad: Vec<f64>,
    pub reconstructed_rad: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_fingerprint: String,
    pub amplitude_ratio: f64,
    pub position: usize,
    pub error: f64,
    pub support: Vec<usize>,
    pub support_frequencies_hz: Vec<f64>,
    pub coefficients_rad: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub stop: StopReason,
    pub spectra: Spectra,
    pub runtime_s: f64,
    pub config: TrialConfig,
}

/// Intermediate signals of one trial, for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub signal: Waveform,
    pub prbs_drive: Waveform,
    pub optical: Waveform,
    pub detected: Waveform,
    pub measurements: MeasurementVector,
    pub solution: SparseSolution,
    pub reconstruction: Waveform,
    pub error: f64,
}

/// Parts of a config that the cached state depends on.
#[derive(Debug, Clone, PartialEq)]
struct ContextKey {
    grid: (f64, usize),
    tones: Vec<crate::waveforms::ToneSpec>,
    prbs: super::config::PrbsConfig,
    ac_coupled: bool,
    lpf: FilterSpec,
    factor: usize,
    f_max: f64,
}

impl ContextKey {
    fn of(c: &TrialConfig) -> Self {
        Self {
            grid: (c.grid.sample_rate_hz, c.grid.n_samples),
            tones: c.signal.tones.clone(),
            prbs: c.prbs.clone(),
            ac_coupled: c.photodetector.ac_coupled,
            lpf: c.receiver.filter(),
            factor: c.receiver.decimation_factor,
            f_max: c.solver.dictionary_f_max_hz,
        }
    }
}

/// State shared by all trials that differ only in PRBS amplitude, position,
/// noise, gain or solver settings.
#[derive(Debug, Clone)]
pub struct TrialContext {
    key: ContextKey,
    grid: TimeGrid,
    chips: ChipSequence,
    /// Transmitted code in units of `v_code` (bandlimited when configured).
    code_shape: Waveform,
    signal: Waveform,
    original_spectrum: Vec<f64>,
    dictionary: Dictionary,
    bank: SensingBank,
}

/// Deterministic per-trial noise seed.
fn trial_seed(base: u64, ratio: f64, position: usize) -> u64 {
    let mut z = base ^ ratio.to_bits().rotate_left(17) ^ (position as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl TrialContext {
    pub fn new(config: &TrialConfig, positions: &[usize]) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let chips = generate_chip_sequence(config.prbs.seed, config.prbs.n_chips, config.prbs.chip_rate_hz)?;
        let ideal = chips_to_waveform(&chips, &grid, 1.0)?;
        let shaped = match config.prbs.filter() {
            Some(spec) => bandlimit(&ideal, &spec)?,
            None => ideal,
        };
        let code_shape = Waveform::new(grid, shaped.into_samples(), Unit::Chips)?;
        let signal = synthesize_multitone(&config.signal.tones, &grid)?;
        let dictionary = Dictionary::new(&grid, config.solver.dictionary_f_max_hz)?;
        let original_spectrum = amplitude_spectrum(signal.samples(), dictionary.k_max());
        let bank = SensingBank::build(
            &dictionary,
            &config.photodetector,
            &chips,
            &config.receiver.filter(),
            config.receiver.decimation_factor,
            positions,
        )?;
        Ok(Self {
            key: ContextKey::of(config),
            grid,
            chips,
            code_shape,
            signal,
            original_spectrum,
            dictionary,
            bank,
        })
    }

    pub fn chips(&self) -> &ChipSequence {
        &self.chips
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn signal(&self) -> &Waveform {
        &self.signal
    }

    pub fn code_shape(&self) -> &Waveform {
        &self.code_shape
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn trace(&self, config: &TrialConfig) -> Result<TrialTrace> {
        if ContextKey::of(config) != self.key {
            return Err(Error::invalid("trial config is incompatible with the cached context"));
        }
        config.validate()?;
        if self.signal.energy() == 0.0 {
            return Err(Error::invalid(
                "signal has zero energy; reconstruction error is undefined",
            ));
        }
        let modulator = config.modulator_params();
        let prbs_drive = self.code_shape.scaled(modulator.v_code);
        let prbs_drive = Waveform::new(self.grid, prbs_drive.into_samples(), Unit::Volts)?;
        let optical = match config.model {
            ModelKind::Exact => mzm_output(&prbs_drive, &self.signal, &modulator)?,
            ModelKind::SmallSignal => mzm_small_signal(&self.code_shape, &self.signal, &modulator)?,
        };
        let noise = NoiseSpec {
            seed: trial_seed(config.noise.seed, config.amplitude_ratio(), config.receiver.position),
            ..config.noise
        };
        let detected = photodetect(&optical, &config.photodetector, &noise)?;
        let filtered = lowpass(&detected, &config.receiver.filter())?;
        let measurements = decimate(&filtered, &config.receiver.plan())?;

        let gain = gain_model(&modulator, &config.photodetector, config.solver.assume_unit_gain);
        let a = self.bank.matrix(gain, config.receiver.position)?;
        let solution = omp(
            &a.entries,
            &measurements.values,
            config.sparsity_budget(),
            config.solver.residual_tol,
        )
        .map_err(|e| Error::Solver(e.to_string()))?;
        let reconstruction = reconstruct_signal(&solution, &self.dictionary)?;
        let error = reconstruction_error(&reconstruction, &self.signal)?;
        Ok(TrialTrace {
            signal: self.signal.clone(),
            prbs_drive,
            optical,
            detected,
            measurements,
            solution,
            reconstruction,
            error,
        })
    }

    pub fn run(&self, config: &TrialConfig) -> Result<TrialRecord> {
        let start = Instant::now();
        let trace = self.trace(config)?;
        let reconstructed = amplitude_spectrum(trace.reconstruction.samples(), self.dictionary.k_max());
        let df = self.grid.frequency_resolution();
        let spectra = Spectra {
            frequencies_hz: (0..reconstructed.len()).map(|k| k as f64 * df).collect(),
            original_rad: self.original_spectrum.clone(),
            reconstructed_rad: reconstructed,
        };
        Ok(TrialRecord {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            config_fingerprint: config.fingerprint(),
            amplitude_ratio: config.amplitude_ratio(),
            position: config.receiver.position,
            error: trace.error,
            support_frequencies_hz: trace
                .solution
                .support
                .iter()
                .map(|&j| self.dictionary.frequency(j))
                .collect(),
            support: trace.solution.support,
            coefficients_rad: trace.solution.coefficients,
            residual_norms: trace.solution.residual_norms,
            stop: trace.solution.stop,
            spectra,
            runtime_s: start.elapsed().as_secs_f64(),
            config: config.clone(),
        })
    }
}

/// Generate, bandlimit, modulate, detect, filter, decimate, solve and score
/// one configuration.
pub fn run_single_trial(config: &TrialConfig) -> Result<TrialRecord> {
    let ctx = TrialContext::new(config, &[config.receiver.position])?;
    ctx.run(config)
}
