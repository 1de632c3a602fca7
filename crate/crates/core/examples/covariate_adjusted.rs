//! Covariate-adjusted ROC curve of BMI given gender and age, next to the
//! pooled curve that ignores the covariates.

mod common;

use rocinfer::aroc::{aroc, ArocMethod, ArocOptions};
use rocinfer::dpm::McmcControl;
use rocinfer::formula::Formula;
use rocinfer::pooled::{pooled_roc, PooledMethod, PooledOptions};

fn main() -> rocinfer::Result<()> {
    let sample = common::endosyn(2840, 3, &["gender", "age"]);
    let pooled = pooled_roc(&sample, PooledMethod::Empirical, &PooledOptions { bootstrap: 200, ..PooledOptions::default() })?;
    println!("pooled AUC {:.3} ({:.3}, {:.3})", pooled.auc.est, pooled.auc.lo, pooled.auc.hi);

    let opts = ArocOptions { bootstrap: 100, mcmc: McmcControl::new(1000, 300, 1)?, seed: 11, ..ArocOptions::default() };
    let fits = [
        (ArocMethod::Sp, "bmi ~ gender + f(age, by = gender, K = (0, 0))"),
        (ArocMethod::Kernel, "bmi ~ age"),
        (ArocMethod::Bnp, "bmi ~ gender + f(age, by = gender, K = (0, 0))"),
    ];
    for (method, formula) in fits {
        let r = aroc(&sample, &Formula::parse(formula)?, method, &opts)?;
        println!(
            "{:<24} AAUC {:.3} ({:.3}, {:.3})  YI {:.3} at FPF {:.3}",
            method.label(),
            r.aauc.est,
            r.aauc.lo,
            r.aauc.hi,
            r.yi.est,
            r.p_star.est
        );
    }
    println!("\np      pooled  AROC (bnp)");
    let bnp = aroc(&sample, &Formula::parse(fits[2].1)?, ArocMethod::Bnp, &opts)?;
    for k in (0..pooled.p.len()).step_by(20) {
        println!("{:.2}   {:.3}   {:.3}", pooled.p[k], pooled.roc.est[k], bnp.aroc.est[k]);
    }
    Ok(())
}
