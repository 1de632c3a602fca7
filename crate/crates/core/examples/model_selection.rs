//! WAIC, LPML and DIC for a single normal against a Dirichlet process
//! mixture, pooled and conditional on age.

mod common;

use rocinfer::croc::{croc, CrocFormulas, CrocMethod, CrocOptions};
use rocinfer::diagnostics::FitCriteria;
use rocinfer::dpm::{McmcControl, PriorOverrides};
use rocinfer::model::CovariateFrame;
use rocinfer::pooled::{pooled_roc, PooledMethod, PooledOptions};

fn show(name: &str, h: &FitCriteria, d: &FitCriteria) {
    println!(
        "{name:<28} WAIC {:>9.1} {:>9.1}   LPML {:>9.1} {:>9.1}   DIC {:>9.1} {:>9.1}",
        h.waic, d.waic, h.lpml, d.lpml, h.dic, d.dic
    );
}

fn main() -> rocinfer::Result<()> {
    let sample = common::endosyn(2840, 6, &["age"]);
    let mcmc = McmcControl::new(2000, 500, 1)?;
    println!("each criterion: healthy, diseased");
    for l in [1, 10] {
        let overrides = PriorOverrides { l: Some(l), ..PriorOverrides::default() };
        let r = pooled_roc(&sample, PooledMethod::Dpm, &PooledOptions { overrides, mcmc, seed: 1, ..PooledOptions::default() })?;
        let f = r.fit.expect("criteria");
        show(&format!("pooled, L = {l}"), &f.healthy, &f.diseased);
    }
    let newdata = CovariateFrame::new().with_continuous("age", vec![40.0])?;
    for (formula, l) in [("bmi ~ age", 1), ("bmi ~ f(age, K = 3)", 10)] {
        let overrides = PriorOverrides { l: Some(l), ..PriorOverrides::default() };
        let opts = CrocOptions { overrides, mcmc, seed: 1, ..CrocOptions::default() };
        let r = croc(&sample, &CrocFormulas::shared(formula)?, &newdata, CrocMethod::Bnp, &opts)?;
        let f = r.fit.expect("criteria");
        show(&format!("{formula}, L = {l}"), &f.healthy, &f.diseased);
    }
    println!("\nLower WAIC and DIC and higher LPML favour a model.");
    Ok(())
}
