//! Dual-drive MZM intensity transfer and AC-coupled photodetection.
//!
//! The PRBS drive enters in volts scaled by `π / v_pi`; the signal drive is
//! already a phase in radians. With the static bias at `v_pi` the modulator
//! sits at minimum transmission and the PRBS swings it symmetrically to
//! `±α`, `α = π·v_code / v_pi`. `α = π/2` is the quadrature pair.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveforms::{Unit, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulatorParams {
    #[serde(rename = "v_pi_volts")]
    pub v_pi: f64,
    #[serde(rename = "v_dc_volts")]
    pub v_dc: f64,
    #[serde(rename = "v_code_volts")]
    pub v_code: f64,
}

impl ModulatorParams {
    /// Bias at minimum transmission (`v_dc = v_pi`).
    pub fn low_biased(v_pi: f64, v_code: f64) -> Result<Self> {
        let p = Self {
            v_pi,
            v_dc: v_pi,
            v_code,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_pi.is_finite() && self.v_pi > 0.0) {
            return Err(Error::invalid(format!("v_pi must be positive, got {}", self.v_pi)));
        }
        if !self.v_dc.is_finite() {
            return Err(Error::invalid("v_dc must be finite"));
        }
        let limit = self.v_pi / 2.0 * (1.0 + 1e-12);
        if !(self.v_code > 0.0 && self.v_code <= limit) {
            return Err(Error::invalid(format!(
                "v_code must lie in (0, v_pi/2], got {} with v_pi {}",
                self.v_code, self.v_pi
            )));
        }
        Ok(())
    }

    /// Bias swing `π·v_code / v_pi`.
    pub fn alpha(&self) -> f64 {
        PI * self.v_code / self.v_pi
    }

    pub fn code_ratio(&self) -> f64 {
        self.v_code / self.v_pi
    }

    /// Coefficient of the `s·x` mixing term, `sin(α)/2`.
    pub fn mixing_coefficient(&self) -> f64 {
        0.5 * self.alpha().sin()
    }

    /// Coefficient of the `x²` term, `cos(α)/4`.
    pub fn harmonic_coefficient(&self) -> f64 {
        0.25 * self.alpha().cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdParams {
    pub gain: f64,
    #[serde(default = "yes")]
    pub ac_coupled: bool,
}

fn yes() -> bool {
    true
}

impl Default for PdParams {
    fn default() -> Self {
        Self {
            gain: 1.0,
            ac_coupled: true,
        }
    }
}

impl PdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::invalid(format!(
                "photodetector gain must be positive, got {}",
                self.gain
            )));
        }
        Ok(())
    }
}

/// Stationary Gaussian receiver noise. Per-record variance is
/// `c_thermal + c_shot·m + c_rin·m²` with `m` the mean optical intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseSpec {
    #[serde(default)]
    pub c_thermal: f64,
    #[serde(default)]
    pub c_shot: f64,
    #[serde(default)]
    pub c_rin: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn thermal(variance: f64, seed: u64) -> Self {
        Self {
            c_thermal: variance,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_thermal", self.c_thermal),
            ("c_shot", self.c_shot),
            ("c_rin", self.c_rin),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "noise coefficient {name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.c_thermal == 0.0 && self.c_shot == 0.0 && self.c_rin == 0.0
    }

    pub fn variance(&self, mean_intensity: f64) -> f64 {
        self.c_thermal + self.c_shot * mean_intensity + self.c_rin * mean_intensity * mean_intensity
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Exact raised-cosine transfer,
/// `E = 1/2 + 1/2·cos(π·(v_dc + v_prbs)/v_pi + x)`.
pub fn mzm_output(prbs_drive: &Waveform, signal_drive: &Waveform, params: &ModulatorParams) -> Result<Waveform> {
    prbs_drive.ensure_same_grid(signal_drive, "mzm_output")?;
    let scale = PI / params.v_pi;
    let samples = prbs_drive
        .samples()
        .iter()
        .zip(signal_drive.samples())
        .map(|(&v, &x)| 0.5 + 0.5 * (scale * (params.v_dc + v) + x).cos())
        .collect();
    Ok(prbs_drive.with_samples(samples, Unit::NormalizedIntensity))
}

/// Second-order expansion about the minimum-transmission bias.
///
/// `chips` holds the PRBS in units of `v_code` (exactly ±1 for an ideal
/// code). With `φ_i = α·s_i` each sample is
/// `sin(φ_i)/2·x_i + cos(φ_i)/4·x_i² − cos(φ_i)/2 + 1/2`, which for ±1 chips is
/// `sin(α)/2·s_i·x_i + cos(α)/4·x_i² − cos(α)/2 + 1/2`.
pub fn mzm_small_signal(chips: &Waveform, signal_drive: &Waveform, params: &ModulatorParams) -> Result<Waveform> {
    chips.ensure_same_grid(signal_drive, "mzm_small_signal")?;
    let alpha = params.alpha();
    let samples = chips
        .samples()
        .iter()
        .zip(signal_drive.samples())
        .map(|(&s, &x)| {
            let (sin, cos) = (alpha * s).sin_cos();
            0.5 * sin * x + 0.25 * cos * x * x - 0.5 * cos + 0.5
        })
        .collect();
    Ok(chips.with_samples(samples, Unit::NormalizedIntensity))
}

/// Photocurrent to volts. AC coupling subtracts the record mean exactly.
pub fn photodetect(optical: &Waveform, pd: &PdParams, noise: &NoiseSpec) -> Result<Waveform> {
    pd.validate()?;
    noise.validate()?;
    let mean = optical.mean();
    let offset = if pd.ac_coupled { mean } else { 0.0 };
    let mut out: Vec<f64> = optical.samples().iter().map(|&e| pd.gain * (e - offset)).collect();
    let var = noise.variance(mean);
    if var > 0.0 {
        let sigma = var.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for v in &mut out {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += sigma * z;
        }
    }
    Ok(optical.with_samples(out, Unit::Volts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::{make_time_grid, TimeGrid};

    fn grid(n: usize) -> TimeGrid {
        make_time_grid(10e9, n).unwrap()
    }

    fn constant(n: usize, v: f64, unit: Unit) -> Waveform {
        Waveform::new(grid(n), vec![v; n], unit).unwrap()
    }

    fn params(v_dc: f64, v_code: f64) -> ModulatorParams {
        ModulatorParams {
            v_pi: 1.0,
            v_dc,
            v_code,
        }
    }

    #[test]
    fn exact_model_reference_points() {
        let x = constant(1, 0.0, Unit::Radians);
        let p = params(0.0, 0.5);
        let e = mzm_output(&constant(1, 0.0, Unit::Volts), &x, &p).unwrap();
        assert!((e.samples()[0] - 1.0).abs() < 1e-12);
        let p = params(1.0, 0.5);
        let e = mzm_output(&constant(1, 0.0, Unit::Volts), &x, &p).unwrap();
        assert!(e.samples()[0].abs() < 1e-12);
        let e = mzm_output(&constant(1, 0.5, Unit::Volts), &x, &p).unwrap();
        assert!((e.samples()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let p = params(1.0, 0.5);
        let a = constant(4, 0.0, Unit::Volts);
        let b = constant(5, 0.0, Unit::Radians);
        assert!(mzm_output(&a, &b, &p).is_err());
        assert!(mzm_small_signal(&a, &b, &p).is_err());
    }

    #[test]
    fn small_signal_examples() {
        let p = params(1.0, 0.5);
        let s = constant(1, 1.0, Unit::Chips);
        let x = constant(1, 0.1, Unit::Radians);
        let v = mzm_small_signal(&s, &x, &p).unwrap();
        assert!((v.samples()[0] - 0.55).abs() < 1e-15);

        let s = Waveform::new(grid(2), vec![1.0, -1.0], Unit::Chips).unwrap();
        let x = Waveform::new(grid(2), vec![0.03, -0.07], Unit::Radians).unwrap();
        let v = mzm_small_signal(&s, &x, &p).unwrap();
        assert!((v.samples()[0] - (0.5 * 0.03 + 0.5)).abs() < 1e-15);
        assert!((v.samples()[1] - (0.5 * 0.07 + 0.5)).abs() < 1e-15);

        for r in [0.1, 0.243, 0.432] {
            let p = params(1.0, r);
            let off = constant(3, 0.0, Unit::Radians);
            let v = mzm_small_signal(&constant(3, -1.0, Unit::Chips), &off, &p).unwrap();
            let base = (1.0 - p.alpha().cos()) / 2.0;
            assert!(v.samples().iter().all(|&e| (e - base).abs() < 1e-15));
        }
    }

    #[test]
    fn coefficient_monotonicity() {
        let ratios: Vec<f64> = (1..=50).map(|i| 0.01 * i as f64).collect();
        for w in ratios.windows(2) {
            let lo = params(1.0, w[0]);
            let hi = params(1.0, w[1]);
            assert!(hi.mixing_coefficient() > lo.mixing_coefficient());
            assert!(hi.harmonic_coefficient() < lo.harmonic_coefficient());
        }
        assert!(params(1.0, 0.5).harmonic_coefficient().abs() < 1e-16);
    }

    #[test]
    fn modulator_validation() {
        assert!(ModulatorParams::low_biased(1.0, 0.5).is_ok());
        assert!(ModulatorParams::low_biased(1.0, 0.6).is_err());
        assert!(ModulatorParams::low_biased(1.0, 0.0).is_err());
        assert!(ModulatorParams::low_biased(0.0, 0.1).is_err());
    }

    #[test]
    fn ac_coupling_removes_constant() {
        let e = constant(100, 0.37, Unit::NormalizedIntensity);
        let out = photodetect(&e, &PdParams::default(), &NoiseSpec::noiseless()).unwrap();
        assert!(out.samples().iter().all(|&v| v.abs() < 1e-15));
        assert_eq!(out.unit(), Unit::Volts);

        let dc = PdParams {
            gain: 2.0,
            ac_coupled: false,
        };
        let out = photodetect(&e, &dc, &NoiseSpec::noiseless()).unwrap();
        assert!(out.samples().iter().all(|&v| (v - 0.74).abs() < 1e-15));
    }

    #[test]
    fn noiseless_is_deterministic_and_zero_mean() {
        let n = 1000;
        let samples: Vec<f64> = (0..n).map(|i| 0.5 + 0.3 * ((i as f64) * 0.37).sin()).collect();
        let e = Waveform::new(grid(n), samples, Unit::NormalizedIntensity).unwrap();
        let a = photodetect(&e, &PdParams::default(), &NoiseSpec::noiseless()).unwrap();
        let b = photodetect(&e, &PdParams::default(), &NoiseSpec::noiseless()).unwrap();
        assert_eq!(a, b);
        assert!(a.mean().abs() < 1e-15);
    }

    #[test]
    fn thermal_noise_has_configured_variance() {
        let n = 20_000;
        let e = constant(n, 0.25, Unit::NormalizedIntensity);
        let v = 0.03_f64;
        let noise = NoiseSpec::thermal(v * v, 11);
        let clean = photodetect(&e, &PdParams::default(), &NoiseSpec::noiseless()).unwrap();
        let noisy = photodetect(&e, &PdParams::default(), &noise).unwrap();
        let diff: Vec<f64> = noisy
            .samples()
            .iter()
            .zip(clean.samples())
            .map(|(a, b)| a - b)
            .collect();
        let mean = diff.iter().sum::<f64>() / n as f64;
        let var = diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var / (v * v) - 1.0).abs() < 0.1, "variance ratio {}", var / (v * v));

        let again = photodetect(&e, &PdParams::default(), &noise).unwrap();
        assert_eq!(noisy, again);
    }

    #[test]
    fn noise_variance_model() {
        let n = NoiseSpec {
            c_thermal: 1.0,
            c_shot: 2.0,
            c_rin: 4.0,
            seed: 0,
        };
        assert_eq!(n.variance(0.5), 1.0 + 1.0 + 1.0);
        assert!(NoiseSpec {
            c_shot: -1.0,
            ..NoiseSpec::default()
        }
        .validate()
        .is_err());
    }
}
