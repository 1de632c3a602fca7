//! Model checking for a pooled DPM fit: quantile-residual QQ summary,
//! posterior predictive skewness and kurtosis, and effective sample sizes
//! of the posterior AUC chain.

mod common;

use rocinfer::diagnostics::effective_sample_size;
use rocinfer::dpm::McmcControl;
use rocinfer::model::Group;
use rocinfer::pooled::{fit_pooled, PooledMethod, PooledOptions};
use rocinfer::summaries::mixture_auc_closed;

fn main() -> rocinfer::Result<()> {
    let sample = common::endosyn(2840, 8, &[]);
    let opts = PooledOptions { mcmc: McmcControl::new(2000, 500, 1)?, seed: 2, ..PooledOptions::default() };
    let fit = fit_pooled(&sample, PooledMethod::Dpm, &opts)?;

    for (name, g) in [("healthy", Group::Healthy), ("diseased", Group::Diseased)] {
        let qq = fit.quantile_residuals(g)?;
        let pc = fit.predictive_check(g, 0)?;
        println!(
            "{name:<9} QQ within bands: {:<5} max |mean - theoretical| {:.3}",
            qq.within_bands(),
            qq.max_deviation()
        );
        println!(
            "          skewness {:.3} (p = {:.2}), kurtosis {:.3} (p = {:.2})",
            pc.skewness.observed,
            pc.skewness.p_value(),
            pc.kurtosis.observed,
            pc.kurtosis.p_value()
        );
    }

    let (h, d) = fit.dpm_draws().expect("DPM draws");
    let auc: Vec<f64> = (0..h.nsave()).map(|s| mixture_auc_closed(&h.mixture(s), &d.mixture(s))).collect();
    println!("\nposterior AUC draws: {}, ESS {:.0}", auc.len(), effective_sample_size(&auc));
    Ok(())
}
