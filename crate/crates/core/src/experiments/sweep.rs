use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::TrialConfig;
use super::trial::{TrialContext, TrialRecord, SCHEMA_VERSION, TOOL_VERSION};
use crate::error::{Error, Result};

/// Testbed figures quoted alongside simulated results. Annotations only:
/// they are never used as pass/fail thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareReference {
    pub label: String,
    pub value: f64,
}

pub fn hardware_references() -> Vec<HardwareReference> {
    [
        ("max_error_reduction", 0.85),
        ("four_tone_500mhz_position16_ratio0.5_error", 0.519),
        ("four_tone_500mhz_position16_ratio0.243_error", 0.175),
        ("five_tone_500mhz_position16_ratio0.5_error", 0.498),
        ("five_tone_500mhz_position16_ratio0.243_error", 0.03),
        ("four_tone_1ghz_mean_error_quadrature", 0.322),
        ("four_tone_1ghz_mean_error_lowest_bias", 0.048),
        ("five_tone_1ghz_mean_error_quadrature", 0.342),
        ("five_tone_1ghz_mean_error_lowest_bias", 0.052),
    ]
    .into_iter()
    .map(|(label, value)| HardwareReference {
        label: label.to_string(),
        value,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingTrial {
    pub amplitude_ratio: f64,
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: TrialConfig,
    /// v_code / v_pi, in sweep order.
    pub amplitudes: Vec<f64>,
    pub positions: Vec<usize>,
    /// `error_grid[i][j]` for amplitude `i` and position `j`; `None` if the trial failed.
    pub error_grid: Vec<Vec<Option<f64>>>,
    pub mean_errors: Vec<Option<f64>>,
    /// Ratio whose mean error is the reduction baseline (0.5 when swept).
    pub reference_amplitude: Option<f64>,
    /// `1 − min(mean) / mean(reference)`.
    pub max_reduction: Option<f64>,
    pub hardware_reference: Vec<HardwareReference>,
    pub missing: Vec<MissingTrial>,
    pub records: Vec<TrialRecord>,
}

fn same_ratio(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

impl SweepReport {
    /// Assembles a report from records in any order.
    pub fn from_records(
        config: TrialConfig,
        amplitudes: Vec<f64>,
        positions: Vec<usize>,
        mut records: Vec<TrialRecord>,
        missing: Vec<MissingTrial>,
    ) -> Self {
        let rank = |r: &TrialRecord| {
            (
                amplitudes.iter().position(|&a| same_ratio(a, r.amplitude_ratio)),
                positions.iter().position(|&p| p == r.position),
            )
        };
        records.sort_by_key(|r| rank(r));

        let mut error_grid = vec![vec![None; positions.len()]; amplitudes.len()];
        for r in &records {
            if let (Some(i), Some(j)) = rank(r) {
                error_grid[i][j] = Some(r.error);
            }
        }
        let mean_errors: Vec<Option<f64>> = error_grid
            .iter()
            .map(|row| {
                let vals: Vec<f64> = row.iter().flatten().copied().collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();

        let reference_idx = amplitudes.iter().position(|&a| same_ratio(a, 0.5)).or_else(|| {
            amplitudes
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
        });
        let reference_amplitude = reference_idx.map(|i| amplitudes[i]);
        let best = mean_errors.iter().flatten().copied().reduce(f64::min);
        let max_reduction = match (reference_idx.and_then(|i| mean_errors[i]), best) {
            (Some(base), Some(best)) if base > 0.0 => Some(1.0 - best / base),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };

        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            config,
            amplitudes,
            positions,
            error_grid,
            mean_errors,
            reference_amplitude,
            max_reduction,
            hardware_reference: hardware_references(),
            missing,
            records,
        }
    }

    pub fn mean_at(&self, ratio: f64) -> Option<f64> {
        self.amplitudes
            .iter()
            .position(|&a| same_ratio(a, ratio))
            .and_then(|i| self.mean_errors[i])
    }
}

/// Runs every (amplitude, position) trial on the current rayon pool.
///
/// Trials share one cached context and are otherwise independent, so the
/// assembled report does not depend on execution order or thread count.
pub fn run_sweep(base: &TrialConfig, amplitudes: &[f64], positions: &[usize]) -> Result<SweepReport> {
    if amplitudes.is_empty() || positions.is_empty() {
        return Err(Error::invalid("sweep needs at least one amplitude and one position"));
    }
    let mut sweep_cfg = base.clone();
    sweep_cfg.sweep.amplitude_ratios = amplitudes.to_vec();
    sweep_cfg.sweep.positions = positions.to_vec();
    sweep_cfg.validate()?;
    let ctx = TrialContext::new(&sweep_cfg, positions)?;

    let jobs: Vec<(f64, usize)> = amplitudes
        .iter()
        .flat_map(|&a| positions.iter().map(move |&p| (a, p)))
        .collect();
    let outcomes: Vec<std::result::Result<TrialRecord, MissingTrial>> = jobs
        .par_iter()
        .map(|&(a, p)| {
            let cfg = sweep_cfg.with_amplitude_ratio(a).with_position(p);
            ctx.run(&cfg).map_err(|e| {
                log::warn!("trial amplitude {a} position {p} failed: {e}");
                MissingTrial {
                    amplitude_ratio: a,
                    position: p,
                    reason: e.to_string(),
                }
            })
        })
        .collect();

    let mut records = Vec::new();
    let mut missing = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(m) => missing.push(m),
        }
    }
    Ok(SweepReport::from_records(
        sweep_cfg,
        amplitudes.to_vec(),
        positions.to_vec(),
        records,
        missing,
    ))
}
