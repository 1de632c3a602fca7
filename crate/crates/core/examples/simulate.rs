//! Generates an endocrine-style data file and prints its marginal
//! summaries. Usage: `cargo run --example simulate -- [n] [seed] [out.csv]`.

use std::fs::File;

use rocinfer::io::{simulate_endosyn_like, simulate_subjects, SimulationParams};
use rocinfer::stats::{mean, quantile};
use rocinfer::summaries::mw_auc;

fn main() -> rocinfer::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().and_then(|v| v.parse().ok()).unwrap_or(2840);
    let seed = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(1);
    let p = SimulationParams::default();

    let s = simulate_subjects(n, seed, &p)?;
    let age: Vec<f64> = s.iter().map(|s| s.age).collect();
    let bmi: Vec<f64> = s.iter().map(|s| s.bmi).collect();
    let women = s.iter().filter(|s| s.women).count();
    let cases = s.iter().filter(|s| s.cvd).count();
    println!("n = {n}, women = {women}, prevalence = {:.4}", cases as f64 / n as f64);
    for (name, v) in [("age", &age), ("bmi", &bmi)] {
        println!(
            "{name}: mean {:.2}, quartiles {:.2} {:.2} {:.2}",
            mean(v),
            quantile(v, 0.25),
            quantile(v, 0.5),
            quantile(v, 0.75)
        );
    }
    let (h, d): (Vec<_>, Vec<_>) = s.iter().partition(|s| !s.cvd);
    let auc = mw_auc(&h.iter().map(|s| s.bmi).collect::<Vec<_>>(), &d.iter().map(|s| s.bmi).collect::<Vec<_>>());
    println!("pooled empirical AUC of bmi: {auc:.3}");

    if let Some(path) = args.get(2) {
        simulate_endosyn_like(n, seed, &p, File::create(path)?)?;
        println!("written to {path}");
    }
    Ok(())
}
