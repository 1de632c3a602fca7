//! Command-line facing layer: CSV ingestion, run configuration, result
//! envelopes, synthetic data and the dispatcher behind `rocinfer`.

pub mod config;
pub mod data;
pub mod envelope;
pub mod report;
pub mod run;
pub mod simulate;

pub use config::{Command, RunConfig, Settings};
pub use data::{ingest_csv, read_newdata, CsvColumns};
pub use envelope::{Payload, ResultEnvelope, ThresholdPayload, Timing, SCHEMA_VERSION};
pub use report::{summary_text, write_tidy_csv};
pub use run::{execute, run};
pub use simulate::{simulate_endosyn_like, simulate_subjects, SimulationParams};
