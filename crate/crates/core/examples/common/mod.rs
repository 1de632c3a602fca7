//! Shared helper: a synthetic endocrine-style sample held in memory.

use rocinfer::io::data::{read_sample, CsvColumns};
use rocinfer::io::{simulate_endosyn_like, SimulationParams};
use rocinfer::model::DiagnosticSample;

/// BMI by cardiovascular risk group (tag 0 = healthy) with the requested
/// covariates among `age` and `gender`.
pub fn endosyn(n: usize, seed: u64, covariates: &[&str]) -> DiagnosticSample {
    let mut csv = Vec::new();
    simulate_endosyn_like(n, seed, &SimulationParams::default(), &mut csv).expect("simulate");
    let cols = CsvColumns {
        marker: "bmi".into(),
        group: "cvd_idf".into(),
        tag: "0".into(),
        covariates: covariates.iter().map(|c| c.to_string()).collect(),
        factors: Vec::new(),
    };
    read_sample(&csv[..], &cols).expect("read")
}
