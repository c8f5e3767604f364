use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::dictionary::Dictionary;
use crate::digitizer::{decimate, DecimationPlan, MeasurementVector};
use crate::dsp::SpectralFilter;
use crate::error::{Error, Result};
use crate::photonic::{ModulatorParams, PdParams};
use crate::waveforms::{chips_to_waveform, ChipSequence, FilterSpec, Unit, Waveform};

/// Receiver's model of the measurement operator, `M × N`.
///
/// Column `j` is the decimated, low-passed, AC-coupled product
/// `g · s ⊙ atom_j` with `s` the ideal ±1 NRZ code.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    pub entries: DMatrix<f64>,
    pub gain: f64,
    pub plan: DecimationPlan,
    pub equivalent_rate: f64,
}

impl SensingMatrix {
    pub fn n_rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.entries.ncols()
    }

    /// `A · a` for a sparse coefficient set.
    pub fn apply_sparse(&self, support: &[usize], coefficients: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows()];
        for (&j, &c) in support.iter().zip(coefficients) {
            for (yi, a) in y.iter_mut().zip(self.entries.column(j).iter()) {
                *yi += c * a;
            }
        }
        y
    }
}

/// Assumed mixing gain `sin(α)/2 · pd_gain`, or `pd_gain/2` when the
/// receiver ignores the bias-dependent gain.
pub fn gain_model(modulator: &ModulatorParams, pd: &PdParams, assume_unit_gain: bool) -> f64 {
    let mixing = if assume_unit_gain {
        0.5
    } else {
        modulator.mixing_coefficient()
    };
    mixing * pd.gain
}

/// The ideal ±1 NRZ chip pattern on `grid`.
pub fn chip_pattern(chips: &ChipSequence, grid: &crate::waveforms::TimeGrid) -> Result<Waveform> {
    let w = chips_to_waveform(chips, grid, 1.0)?;
    let samples = w.samples().to_vec();
    Waveform::new(*grid, samples, Unit::Chips)
}

/// Ideal-code mixing followed by photodetector AC coupling:
/// `g · s ⊙ x`, minus its record mean when `pd.ac_coupled`.
pub fn mix_with_chips(x: &Waveform, chip_pattern: &Waveform, gain: f64, pd: &PdParams) -> Result<Waveform> {
    x.ensure_same_grid(chip_pattern, "mix_with_chips")?;
    let mut p: Vec<f64> = x
        .samples()
        .iter()
        .zip(chip_pattern.samples())
        .map(|(a, s)| gain * s * a)
        .collect();
    if pd.ac_coupled {
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        for v in &mut p {
            *v -= mean;
        }
    }
    Waveform::new(*x.grid(), p, Unit::Volts)
}

fn check_geometry(dictionary: &Dictionary, chips: &ChipSequence) -> Result<()> {
    let grid = dictionary.grid();
    if (chips.len() as f64 / chips.chip_rate() - grid.duration()).abs() > 1e-9 * grid.duration() {
        return Err(Error::invalid(format!(
            "{} chips at {} chips/s do not span the {} s record",
            chips.len(),
            chips.chip_rate(),
            grid.duration()
        )));
    }
    Ok(())
}

/// Builds the receiver's sensing matrix with the analytic gain.
pub fn build_sensing_matrix(
    dictionary: &Dictionary,
    modulator: &ModulatorParams,
    pd: &PdParams,
    chips: &ChipSequence,
    lpf: &FilterSpec,
    plan: &DecimationPlan,
) -> Result<SensingMatrix> {
    modulator.validate()?;
    build_sensing_matrix_with_gain(dictionary, gain_model(modulator, pd, false), pd, chips, lpf, plan)
}

/// Builds the sensing matrix for an explicit mixing gain. Every column runs
/// through the same `mix_with_chips → lowpass → decimate` chain as a
/// simulated signal.
pub fn build_sensing_matrix_with_gain(
    dictionary: &Dictionary,
    gain: f64,
    pd: &PdParams,
    chips: &ChipSequence,
    lpf: &FilterSpec,
    plan: &DecimationPlan,
) -> Result<SensingMatrix> {
    check_geometry(dictionary, chips)?;
    let grid = *dictionary.grid();
    let pattern = chip_pattern(chips, &grid)?;
    let filter = SpectralFilter::new(lpf, &grid)?;
    let m = plan.indices(grid.n_samples())?.len();
    let columns: Vec<MeasurementVector> = (0..dictionary.len())
        .into_par_iter()
        .map(|j| {
            let mixed = mix_with_chips(&dictionary.atom(j), &pattern, gain, pd)?;
            let filtered = mixed.with_samples(filter.apply(mixed.samples()), Unit::Volts);
            decimate(&filtered, plan)
        })
        .collect::<Result<_>>()?;
    let equivalent_rate = columns.first().map_or(0.0, |c| c.equivalent_rate);
    let entries = DMatrix::from_fn(m, dictionary.len(), |i, j| columns[j].values[i]);
    Ok(SensingMatrix {
        entries,
        gain,
        plan: *plan,
        equivalent_rate,
    })
}

/// Unit-gain sensing rows for several intra-chip positions, computed once
/// per chip pattern and receiver filter. Scaling by the gain afterwards
/// matches [`build_sensing_matrix_with_gain`] to rounding.
#[derive(Debug, Clone)]
pub struct SensingBank {
    factor: usize,
    rows: BTreeMap<usize, DMatrix<f64>>,
    equivalent_rate: f64,
}

impl SensingBank {
    pub fn build(
        dictionary: &Dictionary,
        pd: &PdParams,
        chips: &ChipSequence,
        lpf: &FilterSpec,
        factor: usize,
        positions: &[usize],
    ) -> Result<Self> {
        check_geometry(dictionary, chips)?;
        let grid = *dictionary.grid();
        let pattern = chip_pattern(chips, &grid)?;
        let filter = SpectralFilter::new(lpf, &grid)?;
        let mut plans = Vec::new();
        for &p in positions {
            let plan = DecimationPlan::new(factor, p)?;
            plans.push((p, plan.indices(grid.n_samples())?));
        }
        let per_atom: Vec<Vec<Vec<f64>>> = (0..dictionary.len())
            .into_par_iter()
            .map(|j| {
                let mixed = mix_with_chips(&dictionary.atom(j), &pattern, 1.0, pd)?;
                let filtered = filter.apply(mixed.samples());
                Ok(plans
                    .iter()
                    .map(|(_, idx)| idx.iter().map(|&i| filtered[i]).collect())
                    .collect())
            })
            .collect::<Result<_>>()?;
        let rows = plans
            .iter()
            .enumerate()
            .map(|(pi, (p, idx))| {
                let m = DMatrix::from_fn(idx.len(), dictionary.len(), |i, j| per_atom[j][pi][i]);
                (*p, m)
            })
            .collect();
        Ok(Self {
            factor,
            rows,
            equivalent_rate: grid.sample_rate() / factor as f64,
        })
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn matrix(&self, gain: f64, position: usize) -> Result<SensingMatrix> {
        let unit = self
            .rows
            .get(&position)
            .ok_or_else(|| Error::invalid(format!("position {position} not in sensing bank")))?;
        Ok(SensingMatrix {
            entries: unit * gain,
            gain,
            plan: DecimationPlan::new(self.factor, position)?,
            equivalent_rate: self.equivalent_rate,
        })
    }
}
