//! Optimal BMI cut-offs: the Youden index threshold for the whole
//! population, then age-specific thresholds at a fixed FPF of 0.3.

mod common;

use rocinfer::croc::{fit_croc, CrocFormulas, CrocMethod, CrocOptions};
use rocinfer::dpm::McmcControl;
use rocinfer::model::CovariateFrame;
use rocinfer::pooled::{fit_pooled, PooledMethod, PooledOptions};
use rocinfer::summaries::ThresholdCriterion;

fn main() -> rocinfer::Result<()> {
    let sample = common::endosyn(2840, 4, &["gender", "age"]);
    let opts = PooledOptions { mcmc: McmcControl::new(2000, 500, 1)?, seed: 5, ..PooledOptions::default() };
    let fit = fit_pooled(&sample, PooledMethod::Dpm, &opts)?;
    let yi = fit.thresholds(ThresholdCriterion::Yi, None)?;
    let r = &yi.rows[0];
    println!("Youden threshold {:.2} ({:.2}, {:.2})", r.threshold.est, r.threshold.lo, r.threshold.hi);
    if let Some(y) = &r.yi {
        println!("  YI {:.3}, FPF {:.3}, TPF {:.3}", y.est, r.fpf.est, r.tpf.est);
    }

    let ages = vec![25.0, 40.0, 55.0, 70.0];
    let newdata = CovariateFrame::new().with_continuous("age", ages.clone())?;
    let formulas = CrocFormulas::shared("bmi ~ f(age, K = 2)")?;
    let copts = CrocOptions { mcmc: McmcControl::new(1000, 300, 1)?, seed: 5, ..CrocOptions::default() };
    let cfit = fit_croc(&sample, &formulas, &newdata, CrocMethod::Bnp, &copts)?;
    let at = cfit.thresholds(ThresholdCriterion::Fpf, Some(0.3))?;
    println!("\nthresholds at FPF = 0.3");
    for (a, row) in ages.iter().zip(&at.rows) {
        println!("  age {a:>4}: {:.2} ({:.2}, {:.2}), TPF {:.3}", row.threshold.est, row.threshold.lo, row.threshold.hi, row.tpf.est);
    }
    Ok(())
}
