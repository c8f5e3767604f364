//! Time grids, PRBS drive waveforms and multi-tone test signals.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsp::SpectralFilter;
use crate::error::{Error, Result};

/// Relative slack used when checking that a ratio is an integer.
const INTEGER_SLACK: f64 = 1e-9;

fn as_integer(x: f64) -> Option<u64> {
    let r = x.round();
    if r >= 0.0 && (x - r).abs() <= INTEGER_SLACK * x.abs().max(1.0) {
        Some(r as u64)
    } else {
        None
    }
}

/// Uniform sampling grid. Duration is `n_samples / sample_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    sample_rate: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(sample_rate: f64, n_samples: usize) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if n_samples == 0 {
            return Err(Error::invalid("sample count must be positive"));
        }
        Ok(Self { sample_rate, n_samples })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn duration(&self) -> f64 {
        self.n_samples as f64 / self.sample_rate
    }

    /// Spacing of the discrete-frequency grid, `1 / duration`.
    pub fn frequency_resolution(&self) -> f64 {
        self.sample_rate / self.n_samples as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate
    }

    /// DFT bin index of an on-grid frequency, or `None` when off-grid.
    pub fn bin_of(&self, frequency: f64) -> Option<usize> {
        as_integer(frequency / self.frequency_resolution()).map(|k| k as usize)
    }
}

pub fn make_time_grid(sample_rate: f64, n_samples: usize) -> Result<TimeGrid> {
    TimeGrid::new(sample_rate, n_samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Volts,
    Radians,
    NormalizedIntensity,
    /// Dimensionless ±1 chip pattern.
    Chips,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::Volts => "volts",
            Unit::Radians => "radians",
            Unit::NormalizedIntensity => "normalized intensity",
            Unit::Chips => "chips",
        };
        f.write_str(s)
    }
}

/// Uniformly sampled real time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    grid: TimeGrid,
    samples: Vec<f64>,
    unit: Unit,
}

impl Waveform {
    pub fn new(grid: TimeGrid, samples: Vec<f64>, unit: Unit) -> Result<Self> {
        if samples.len() != grid.n_samples() {
            return Err(Error::invalid(format!(
                "waveform has {} samples but grid expects {}",
                samples.len(),
                grid.n_samples()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, samples, unit })
    }

    pub fn zeros(grid: TimeGrid, unit: Unit) -> Self {
        Self {
            grid,
            samples: vec![0.0; grid.n_samples()],
            unit,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|v| v * factor).collect(),
            unit: self.unit,
        }
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>, unit: Unit) -> Self {
        debug_assert_eq!(samples.len(), self.grid.n_samples());
        Self {
            grid: self.grid,
            samples,
            unit,
        }
    }

    pub(crate) fn ensure_same_grid(&self, other: &Waveform, what: &str) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::invalid(format!(
                "{what}: grid mismatch ({} S/s x {} vs {} S/s x {})",
                self.grid.sample_rate(),
                self.grid.n_samples(),
                other.grid.sample_rate(),
                other.grid.n_samples()
            )));
        }
        Ok(())
    }
}

/// Fibonacci LFSR for PRBS-15, polynomial x^15 + x^14 + 1.
///
/// Each step emits `b[n] = b[n-14] ^ b[n-15]`; the 15-bit state holds the
/// last fifteen outputs with the most recent in bit 0.
#[derive(Debug, Clone)]
pub struct Prbs15 {
    state: u16,
}

impl Prbs15 {
    pub const PERIOD: usize = (1 << 15) - 1;
    pub const DEFAULT_SEED: u16 = 0x7FFF;

    pub fn new(seed: u16) -> Result<Self> {
        if seed == 0 || seed > 0x7FFF {
            return Err(Error::invalid(format!(
                "PRBS-15 seed must be a nonzero 15-bit value, got {seed:#x}"
            )));
        }
        Ok(Self { state: seed })
    }

    pub fn state(&self) -> u16 {
        self.state
    }
}

impl Iterator for Prbs15 {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let bit = ((self.state >> 14) ^ (self.state >> 13)) & 1;
        self.state = ((self.state << 1) | bit) & 0x7FFF;
        Some(bit == 1)
    }
}

/// ±1 PRBS chips.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipSequence {
    chips: Vec<i8>,
    chip_rate: f64,
    seed: u16,
}

impl ChipSequence {
    /// Wraps an explicit chip pattern. Every entry must be +1 or -1.
    pub fn from_chips(chips: Vec<i8>, chip_rate: f64, seed: u16) -> Result<Self> {
        if chips.is_empty() {
            return Err(Error::invalid("chip sequence must not be empty"));
        }
        if let Some(i) = chips.iter().position(|&c| c != 1 && c != -1) {
            return Err(Error::invalid(format!("chip {i} is {} (expected ±1)", chips[i])));
        }
        if !(chip_rate.is_finite() && chip_rate > 0.0) {
            return Err(Error::invalid(format!("chip rate must be positive, got {chip_rate}")));
        }
        Ok(Self { chips, chip_rate, seed })
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn chip_rate(&self) -> f64 {
        self.chip_rate
    }

    pub fn seed(&self) -> u16 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self {
            chips: self.chips.iter().map(|c| -c).collect(),
            chip_rate: self.chip_rate,
            seed: self.seed,
        }
    }
}

/// PRBS-15 chips with bit `b` mapped to `2b - 1`.
pub fn generate_chip_sequence(seed: u16, n_chips: usize, chip_rate: f64) -> Result<ChipSequence> {
    if n_chips == 0 {
        return Err(Error::invalid("chip count must be positive"));
    }
    let chips = Prbs15::new(seed)?
        .take(n_chips)
        .map(|b| if b { 1 } else { -1 })
        .collect();
    ChipSequence::from_chips(chips, chip_rate, seed)
}

/// Integer samples-per-chip for a grid/chip-rate pair.
pub fn samples_per_chip(grid: &TimeGrid, chip_rate: f64) -> Result<usize> {
    match as_integer(grid.sample_rate() / chip_rate) {
        Some(spc) if spc >= 1 => Ok(spc as usize),
        _ => Err(Error::invalid(format!(
            "sample rate {} is not an integer multiple of chip rate {}",
            grid.sample_rate(),
            chip_rate
        ))),
    }
}

/// Non-return-to-zero drive: sample `i` carries `amplitude * chips[i / spc]`.
pub fn chips_to_waveform(chips: &ChipSequence, grid: &TimeGrid, amplitude_volts: f64) -> Result<Waveform> {
    let spc = samples_per_chip(grid, chips.chip_rate())?;
    if spc * chips.len() != grid.n_samples() {
        return Err(Error::invalid(format!(
            "{} chips x {} samples/chip does not span the {}-sample grid",
            chips.len(),
            spc,
            grid.n_samples()
        )));
    }
    let samples = chips
        .chips()
        .iter()
        .flat_map(|&c| std::iter::repeat_n(amplitude_volts * f64::from(c), spc))
        .collect();
    Waveform::new(*grid, samples, Unit::Volts)
}

/// One cosine component, `amplitude · cos(2π·frequency·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneSpec {
    #[serde(rename = "frequency_hz")]
    pub frequency: f64,
    /// Peak phase deviation in radians.
    #[serde(rename = "amplitude_rad")]
    pub amplitude: f64,
    #[serde(rename = "phase_rad", default)]
    pub phase: f64,
}

impl ToneSpec {
    pub fn new(frequency: f64, amplitude: f64, phase: f64) -> Self {
        Self {
            frequency,
            amplitude,
            phase,
        }
    }
}

/// Cap on the summed peak phase deviation of the default tone sets.
pub const DEFAULT_TOTAL_DEPTH_RAD: f64 = 0.2;

fn equal_tones(freqs_mhz: &[f64]) -> Vec<ToneSpec> {
    let a = DEFAULT_TOTAL_DEPTH_RAD / freqs_mhz.len() as f64;
    freqs_mhz.iter().map(|f| ToneSpec::new(f * 1e6, a, 0.0)).collect()
}

/// Synthetic four-tone default: 20, 45, 70, 100 MHz.
pub fn four_tone() -> Vec<ToneSpec> {
    equal_tones(&[20.0, 45.0, 70.0, 100.0])
}

/// Synthetic five-tone default: 20, 40, 60, 80, 100 MHz.
pub fn five_tone() -> Vec<ToneSpec> {
    equal_tones(&[20.0, 40.0, 60.0, 80.0, 100.0])
}

/// Checks tones are on-grid, below Nyquist and distinct; returns their bins.
pub fn tone_bins(tones: &[ToneSpec], grid: &TimeGrid) -> Result<Vec<usize>> {
    let mut bins = Vec::with_capacity(tones.len());
    for (i, t) in tones.iter().enumerate() {
        if !(t.frequency.is_finite() && t.frequency >= 0.0 && t.frequency < grid.nyquist()) {
            return Err(Error::invalid(format!(
                "tone {i} at {} Hz is outside [0, {} Hz)",
                t.frequency,
                grid.nyquist()
            )));
        }
        if !(t.amplitude.is_finite() && t.phase.is_finite()) {
            return Err(Error::invalid(format!(
                "tone {i} at {} Hz has non-finite parameters",
                t.frequency
            )));
        }
        let k = grid.bin_of(t.frequency).ok_or_else(|| {
            Error::invalid(format!(
                "tone {i} at {} Hz is off-grid (resolution {} Hz)",
                t.frequency,
                grid.frequency_resolution()
            ))
        })?;
        if bins.contains(&k) {
            return Err(Error::invalid(format!(
                "tone {i} duplicates frequency {} Hz",
                t.frequency
            )));
        }
        bins.push(k);
    }
    Ok(bins)
}

/// Phase-domain multi-tone drive in radians.
pub fn synthesize_multitone(tones: &[ToneSpec], grid: &TimeGrid) -> Result<Waveform> {
    let bins = tone_bins(tones, grid)?;
    let n = grid.n_samples();
    let mut samples = vec![0.0; n];
    for (tone, &k) in tones.iter().zip(&bins) {
        // Reduce k·i modulo n so the argument stays exact over long records.
        for (i, s) in samples.iter_mut().enumerate() {
            let idx = (k * i) % n;
            *s += tone.amplitude * (2.0 * PI * idx as f64 / n as f64 + tone.phase).cos();
        }
    }
    Waveform::new(*grid, samples, Unit::Radians)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    #[default]
    BrickwallFft,
    WindowedSincFir,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    #[serde(default)]
    pub kind: FilterKind,
    #[serde(rename = "cutoff_hz")]
    pub cutoff: f64,
    /// Odd tap count; only used by the FIR kind.
    #[serde(default = "default_taps")]
    pub taps: usize,
}

fn default_taps() -> usize {
    201
}

impl FilterSpec {
    pub fn brickwall(cutoff: f64) -> Self {
        Self {
            kind: FilterKind::BrickwallFft,
            cutoff,
            taps: default_taps(),
        }
    }

    pub fn fir(cutoff: f64, taps: usize) -> Self {
        Self {
            kind: FilterKind::WindowedSincFir,
            cutoff,
            taps,
        }
    }
}

/// Low-pass a drive waveform on its own grid.
pub fn bandlimit(waveform: &Waveform, spec: &FilterSpec) -> Result<Waveform> {
    let filter = SpectralFilter::new(spec, waveform.grid())?;
    Ok(waveform.with_samples(filter.apply(waveform.samples()), waveform.unit()))
}
