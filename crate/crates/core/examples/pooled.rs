//! Pooled ROC curve of BMI with the four estimators, with the partial area
//! up to FPF = 0.1.

mod common;

use rocinfer::dpm::McmcControl;
use rocinfer::pooled::{pooled_roc, PooledMethod, PooledOptions};
use rocinfer::summaries::PaucControl;

fn main() -> rocinfer::Result<()> {
    let sample = common::endosyn(2840, 1, &[]);
    let opts = PooledOptions {
        pauc: Some(PaucControl::fpf(0.1)?),
        bootstrap: 200,
        bb_draws: 2000,
        mcmc: McmcControl::new(2000, 500, 1)?,
        seed: 123,
        ..PooledOptions::default()
    };
    for method in [PooledMethod::Empirical, PooledMethod::Kernel, PooledMethod::Bb, PooledMethod::Dpm] {
        let r = pooled_roc(&sample, method, &opts)?;
        let pauc = r.pauc.as_ref().map(|p| p.estimate.est).unwrap_or(f64::NAN);
        println!(
            "{:<20} AUC {:.3} ({:.3}, {:.3})  pAUC(FPF 0.1) {:.3}  ROC(0.1) {:.3}",
            method.label(),
            r.auc.est,
            r.auc.lo,
            r.auc.hi,
            pauc,
            r.roc.est[10]
        );
    }
    Ok(())
}
