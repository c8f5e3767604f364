//! Receiver-side low-pass filtering and fixed-stride decimation.
//!
//! Position `p` (1-based, within one chip) maps to the zero-based sample
//! offset `p - 1`. Output sample `k` is input sample `offset + k·factor`.

use serde::{Deserialize, Serialize};

use crate::dsp::SpectralFilter;
use crate::error::{Error, Result};
use crate::waveforms::{FilterSpec, Waveform};

pub const DEFAULT_FACTOR: usize = 200;
pub const DEFAULT_LPF_CUTOFF_HZ: f64 = 25e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecimationPlan {
    pub factor: usize,
    pub position: usize,
}

impl DecimationPlan {
    pub fn new(factor: usize, position: usize) -> Result<Self> {
        let plan = Self { factor, position };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factor == 0 {
            return Err(Error::invalid("decimation factor must be positive"));
        }
        if self.position == 0 || self.position > self.factor {
            return Err(Error::invalid(format!(
                "position {} must lie in 1..={}",
                self.position, self.factor
            )));
        }
        Ok(())
    }

    pub fn offset_samples(&self) -> usize {
        self.position - 1
    }

    pub fn n_output(&self, n_input: usize) -> usize {
        n_input / self.factor
    }

    /// Input indices read by this plan.
    pub fn indices(&self, n_input: usize) -> Result<Vec<usize>> {
        self.validate()?;
        let m = self.n_output(n_input);
        if m == 0 || self.offset_samples() + (m - 1) * self.factor >= n_input {
            return Err(Error::invalid(format!(
                "plan (factor {}, position {}) does not fit a {}-sample record",
                self.factor, self.position, n_input
            )));
        }
        Ok((0..m).map(|k| self.offset_samples() + k * self.factor).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub values: Vec<f64>,
    /// Samples per second after decimation.
    pub equivalent_rate: f64,
}

impl MeasurementVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn lowpass(waveform: &Waveform, spec: &FilterSpec) -> Result<Waveform> {
    let filter = SpectralFilter::new(spec, waveform.grid())?;
    Ok(waveform.with_samples(filter.apply(waveform.samples()), waveform.unit()))
}

pub fn decimate(waveform: &Waveform, plan: &DecimationPlan) -> Result<MeasurementVector> {
    let idx = plan.indices(waveform.len())?;
    Ok(MeasurementVector {
        values: idx.iter().map(|&i| waveform.samples()[i]).collect(),
        equivalent_rate: waveform.grid().sample_rate() / plan.factor as f64,
    })
}
