//! Experiment orchestration for the low-rank recovery toolkit: seeded trial
//! sweeps, phase-transition search, and CSV/JSON/SVG reports.

pub mod config;
pub mod experiments;
pub mod phase;
pub mod records;
pub mod report;

pub use config::{parse_config, ConfigFile, Experiment, ExperimentConfig};
pub use experiments::{run_experiment, run_experiment_detailed, TrialOutcome};
pub use phase::{phase_transition, phase_transition_with_records, PhaseCurve};
pub use records::{parse_records_csv, write_records_csv, TrialRecord};
pub use report::{emit_report, ReportFormat};
