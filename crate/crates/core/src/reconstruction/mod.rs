//! Fourier dictionary, random-demodulator sensing model, OMP and scoring.

mod dictionary;
mod omp;
mod sensing;

pub use dictionary::{build_dictionary, AtomKind, Dictionary};
pub use omp::{mutual_coherence, omp, SparseSolution, StopReason};
pub use sensing::{
    build_sensing_matrix, build_sensing_matrix_with_gain, chip_pattern, gain_model, mix_with_chips, SensingBank,
    SensingMatrix,
};

use crate::error::{Error, Result};
use crate::waveforms::Waveform;

/// Full-rate reconstruction `x′ = Σ c_j · atom_j`.
///
/// The sensing matrix already carries the mixing gain, so OMP coefficients
/// are in the signal's own units (radians) and need no further rescaling.
pub fn reconstruct_signal(solution: &SparseSolution, dictionary: &Dictionary) -> Result<Waveform> {
    dictionary.synthesize(&solution.support, &solution.coefficients)
}

/// Normalized squared error `‖x′ − x‖² / ‖x‖²`.
pub fn reconstruction_error(x_rec: &Waveform, x_true: &Waveform) -> Result<f64> {
    x_rec.ensure_same_grid(x_true, "reconstruction_error")?;
    let reference = x_true.energy();
    if reference == 0.0 {
        return Err(Error::invalid("reference signal has zero energy"));
    }
    let diff: f64 = x_rec
        .samples()
        .iter()
        .zip(x_true.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(diff / reference)
}
