//! Energy split of the detected intensity into its small-signal terms.
//!
//! With the instantaneous PRBS phase `φ(t) = π·v_prbs(t)/v_pi` the expansion
//! about minimum transmission is
//!
//! ```text
//! E ≈ sin φ/2 · x  +  cos φ/4 · x²  +  (1 − cos φ)/2
//!     mixed           second harmonic  signal independent
//! ```
//!
//! For an ideal ±1 code `φ = ±α` and the last two terms are a static
//! harmonic and a constant. A bandlimited code makes all three fluctuate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::TrialConfig;
use crate::error::Result;
use crate::waveforms::{bandlimit, chips_to_waveform, generate_chip_sequence, synthesize_multitone};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermEnergies {
    pub amplitude_ratio: f64,
    pub mixed: f64,
    pub second_harmonic: f64,
    pub signal_independent: f64,
    /// Energy of the signal-independent term after removing its mean.
    pub signal_independent_ac: f64,
}

impl TermEnergies {
    pub fn harmonic_to_mixed(&self) -> f64 {
        self.second_harmonic / self.mixed
    }
}

pub fn decompose_terms(config: &TrialConfig) -> Result<TermEnergies> {
    config.validate()?;
    let grid = config.grid()?;
    let modulator = config.modulator_params();
    let chips = generate_chip_sequence(config.prbs.seed, config.prbs.n_chips, config.prbs.chip_rate_hz)?;
    let mut drive = chips_to_waveform(&chips, &grid, modulator.v_code)?;
    if let Some(spec) = config.prbs.filter() {
        drive = bandlimit(&drive, &spec)?;
    }
    let x = synthesize_multitone(&config.signal.tones, &grid)?;

    let n = grid.n_samples() as f64;
    let mut mixed = 0.0;
    let mut harmonic = 0.0;
    let mut independent = 0.0;
    let mut independent_terms = Vec::with_capacity(grid.n_samples());
    for (&v, &xi) in drive.samples().iter().zip(x.samples()) {
        let (sin, cos) = (PI * v / modulator.v_pi).sin_cos();
        let m = 0.5 * sin * xi;
        let h = 0.25 * cos * xi * xi;
        let s = 0.5 - 0.5 * cos;
        mixed += m * m;
        harmonic += h * h;
        independent += s * s;
        independent_terms.push(s);
    }
    let mean = independent_terms.iter().sum::<f64>() / n;
    let independent_ac = independent_terms.iter().map(|s| (s - mean) * (s - mean)).sum();
    Ok(TermEnergies {
        amplitude_ratio: config.amplitude_ratio(),
        mixed,
        second_harmonic: harmonic,
        signal_independent: independent,
        signal_independent_ac: independent_ac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal() -> TrialConfig {
        let mut c = TrialConfig::shipped_default();
        c.prbs.bandwidth_hz = None;
        c
    }

    #[test]
    fn quadrature_has_no_harmonic() {
        let t = decompose_terms(&ideal()).unwrap();
        assert!(t.second_harmonic < 1e-30, "{}", t.second_harmonic);
        assert!(t.mixed > 0.0);
        assert!(t.signal_independent_ac < 1e-20);
    }

    #[test]
    fn harmonic_ratio_grows_as_bias_drops() {
        let base = ideal();
        let ratios: Vec<f64> = [0.5, 0.432, 0.35, 0.243, 0.177, 0.1]
            .iter()
            .map(|&a| {
                decompose_terms(&base.with_amplitude_ratio(a))
                    .unwrap()
                    .harmonic_to_mixed()
            })
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] > w[0], "{ratios:?}");
        }
    }

    #[test]
    fn bandlimited_code_makes_independent_term_fluctuate() {
        let t = decompose_terms(&TrialConfig::shipped_default()).unwrap();
        assert!(t.signal_independent_ac > 1.0);
        assert!(t.second_harmonic > 0.0);
    }
}
