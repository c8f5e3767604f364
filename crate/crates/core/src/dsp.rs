//! Circular (whole-record) spectral filtering.
//!
//! Both filter kinds reduce to a real, even gain per DFT bin: the brickwall
//! mask is 0/1 and the windowed-sinc FIR is a zero-phase kernel centred on
//! sample 0, whose DFT is real. Applying the gain in the frequency domain
//! is therefore group-delay free and exactly periodic over the record.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::waveforms::{FilterKind, FilterSpec, TimeGrid};

type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn fft_pair(n: usize) -> FftPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, FftPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Forward DFT of a real sequence (unnormalized).
pub fn dft(samples: &[f64]) -> Vec<Complex64> {
    let (fwd, _) = fft_pair(samples.len());
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fwd.process(&mut buf);
    buf
}

/// Frequency in Hz of DFT bin `k` folded to `[0, fs/2]`.
pub fn bin_frequency(k: usize, grid: &TimeGrid) -> f64 {
    let n = grid.n_samples();
    let folded = k.min(n - k);
    folded as f64 * grid.sample_rate() / n as f64
}

/// Per-bin real gain realising a [`FilterSpec`] on one grid.
#[derive(Clone)]
pub struct SpectralFilter {
    gains: Arc<[f64]>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralFilter")
            .field("len", &self.gains.len())
            .finish()
    }
}

impl SpectralFilter {
    pub fn new(spec: &FilterSpec, grid: &TimeGrid) -> Result<Self> {
        let nyquist = grid.sample_rate() / 2.0;
        if !(spec.cutoff > 0.0 && spec.cutoff < nyquist) {
            return Err(Error::invalid(format!(
                "filter cutoff {} Hz must lie in (0, {} Hz)",
                spec.cutoff, nyquist
            )));
        }
        let n = grid.n_samples();
        let gains: Vec<f64> = match spec.kind {
            FilterKind::BrickwallFft => {
                // Relative slack so on-grid bins at exactly the cutoff survive rounding.
                let edge = spec.cutoff * (1.0 + 1e-12);
                (0..n)
                    .map(|k| if bin_frequency(k, grid) <= edge { 1.0 } else { 0.0 })
                    .collect()
            }
            FilterKind::WindowedSincFir => {
                let kernel = windowed_sinc(spec.cutoff / grid.sample_rate(), spec.taps)?;
                if kernel.len() > n {
                    return Err(Error::invalid(format!(
                        "FIR with {} taps is longer than the {}-sample record",
                        kernel.len(),
                        n
                    )));
                }
                let half = kernel.len() / 2;
                let mut circ = vec![0.0; n];
                for (t, &h) in kernel.iter().enumerate() {
                    let lag = t as isize - half as isize;
                    circ[lag.rem_euclid(n as isize) as usize] += h;
                }
                dft(&circ).into_iter().map(|c| c.re).collect()
            }
        };
        let (fwd, inv) = fft_pair(n);
        Ok(Self {
            gains: gains.into(),
            fwd,
            inv,
        })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gain(&self, bin: usize) -> f64 {
        self.gains[bin]
    }

    pub fn apply(&self, samples: &[f64]) -> Vec<f64> {
        assert_eq!(samples.len(), self.gains.len(), "filter length mismatch");
        let n = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (c, &g) in buf.iter_mut().zip(self.gains.iter()) {
            *c *= g;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }
}

/// Hamming-windowed sinc low-pass, unity DC gain. `cutoff` is in cycles/sample.
fn windowed_sinc(cutoff: f64, taps: usize) -> Result<Vec<f64>> {
    if taps == 0 || taps.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "FIR tap count must be odd and positive, got {taps}"
        )));
    }
    let mid = (taps / 2) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let m = i as f64 - mid;
            let sinc = if m == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * std::f64::consts::PI * cutoff * m).sin() / (std::f64::consts::PI * m)
            };
            let window = if taps == 1 {
                1.0
            } else {
                0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (taps - 1) as f64).cos()
            };
            sinc * window
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    Ok(h)
}

/// Single-sided amplitude spectrum on bins `0..=k_max`.
///
/// A tone `a·cos(2π k Δf t + φ)` shows up as `a` at bin `k`.
pub fn amplitude_spectrum(samples: &[f64], k_max: usize) -> Vec<f64> {
    let n = samples.len();
    let spec = dft(samples);
    (0..=k_max.min(n / 2))
        .map(|k| {
            let scale = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
            scale * spec[k].norm() / n as f64
        })
        .collect()
}
