//! Age- and gender-specific ROC curves: semiparametric, kernel and
//! Bayesian nonparametric fits evaluated on a small grid.

mod common;

use rocinfer::croc::{croc, CrocFormulas, CrocMethod, CrocOptions};
use rocinfer::dpm::McmcControl;
use rocinfer::model::CovariateFrame;

fn main() -> rocinfer::Result<()> {
    let sample = common::endosyn(1500, 2, &["gender", "age"]);
    let ages = [25.0, 40.0, 55.0, 70.0];

    let linear = CrocFormulas::shared("bmi ~ gender*age")?;
    let smooth = CrocFormulas::shared("bmi ~ gender + f(age, by = gender, K = (3, 3))")?;
    let genders: Vec<&str> = ["Men"; 4].into_iter().chain(["Women"; 4]).collect();
    let both = CovariateFrame::new()
        .with_categorical_levels("gender", &["Men".into(), "Women".into()], &genders)?
        .with_continuous("age", ages.iter().chain(&ages).copied().collect())?;
    let age_only = CovariateFrame::new().with_continuous("age", ages.to_vec())?;

    let opts = CrocOptions { bootstrap: 100, mcmc: McmcControl::new(1000, 300, 1)?, seed: 7, ..CrocOptions::default() };
    let sp = croc(&sample, &linear, &both, CrocMethod::Sp, &opts)?;
    let bnp = croc(&sample, &smooth, &both, CrocMethod::Bnp, &opts)?;
    println!("{:<8}{:>6}{:>18}{:>18}", "gender", "age", "AUC sp", "AUC bnp");
    for i in 0..both.nrows() {
        let g = if i < 4 { "Men" } else { "Women" };
        println!(
            "{g:<8}{:>6}{:>10.3} ±{:.3}{:>10.3} ±{:.3}",
            ages[i % 4],
            sp.rows[i].auc.est,
            0.5 * (sp.rows[i].auc.hi - sp.rows[i].auc.lo),
            bnp.rows[i].auc.est,
            0.5 * (bnp.rows[i].auc.hi - bnp.rows[i].auc.lo),
        );
    }

    let kernel = croc(&sample, &CrocFormulas::shared("bmi ~ age")?, &age_only, CrocMethod::Kernel, &opts)?;
    let b = kernel.bandwidths.expect("kernel bandwidths");
    println!("\nkernel (age only): mean bandwidths H {:.2}, D {:.2}", b.healthy.mean, b.diseased.mean);
    for (a, row) in ages.iter().zip(&kernel.rows) {
        println!("  age {a:>4}: AUC {:.3} ({:.3}, {:.3})", row.auc.est, row.auc.lo, row.auc.hi);
    }
    if let Some(fit) = bnp.fit {
        println!("\nbnp WAIC: H {:.1}, D {:.1}", fit.healthy.waic, fit.diseased.waic);
    }
    Ok(())
}
