//! Single trials, amplitude × position sweeps, term diagnostics and reports.

pub mod config;
pub mod report;
pub mod sweep;
pub mod terms;
pub mod trial;

pub use config::{ModelKind, TrialConfig, DEFAULT_AMPLITUDES, REFERENCE_AMPLITUDES};
pub use report::{emit_report, load_records, report_from_records, ReportFormat};
pub use sweep::{run_sweep, HardwareReference, MissingTrial, SweepReport};
pub use terms::{decompose_terms, TermEnergies};
pub use trial::{run_single_trial, Spectra, TrialContext, TrialRecord, TrialTrace, SCHEMA_VERSION, TOOL_VERSION};
