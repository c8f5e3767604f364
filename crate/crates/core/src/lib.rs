//! Simulator for a microwave-photonic random demodulator.
//!
//! A PRBS and a multi-tone phase signal drive a dual-drive Mach-Zehnder
//! modulator biased at minimum transmission. The detected intensity is
//! low-pass filtered, decimated far below Nyquist and reconstructed with
//! orthogonal matching pursuit over a real Fourier dictionary. Shrinking the
//! PRBS amplitude (low biasing) trades mixing gain against the distortion a
//! bandlimited code injects.
//!
//! ```no_run
//! use rdsim_core::experiments::{run_single_trial, TrialConfig};
//!
//! let cfg = TrialConfig::shipped_default().with_amplitude_ratio(0.243);
//! let record = run_single_trial(&cfg).unwrap();
//! println!("error {}", record.error);
//! ```

pub mod cli;
pub mod digitizer;
pub mod dsp;
pub mod error;
pub mod experiments;
pub mod photonic;
pub mod reconstruction;
pub mod waveforms;

pub use error::{Error, Result};
