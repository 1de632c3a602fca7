//! Acceptance suite. Prints one PASS/FAIL line per criterion:
//!
//! ```text
//! cargo test --release --test acceptance -- --nocapture
//! ```
//!
//! AC11 runs only when `ROCINFER_ENDOSYN` names a CSV export of the
//! original endosyn data (columns cvd_idf, age, gender, bmi).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rocinfer::aroc::{aroc, ArocMethod, ArocOptions};
use rocinfer::croc::{croc, fit_croc, CrocFormulas, CrocMethod, CrocOptions, EstCdf};
use rocinfer::diagnostics::effective_sample_size;
use rocinfer::dpm::{McmcControl, PriorOverrides};
use rocinfer::formula::Formula;
use rocinfer::io::{run, Command, RunConfig, Settings};
use rocinfer::io::{simulate_endosyn_like, SimulationParams};
use rocinfer::kernel::silverman_bandwidth;
use rocinfer::model::{CovariateFrame, DiagnosticSample, FpfGrid, Group};
use rocinfer::pooled::{fit_pooled, pooled_roc, PooledMethod, PooledOptions};
use rocinfer::sampling::{normal, RngStream, StreamRng};
use rocinfer::stats::{norm_cdf, norm_quantile};
use rocinfer::summaries::{
    mixture_auc_closed, roc_curve, simpson, threshold_grid, yi_threshold, PaucControl,
    ThresholdCriterion, SIMPSON_POINTS,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normals(rng: &mut StreamRng, n: usize, mean: f64, sd: f64) -> Vec<f64> {
    (0..n).map(|_| normal(rng, mean, sd)).collect()
}

fn uniforms(rng: &mut StreamRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

fn one_x(xh: &[f64], xd: &[f64]) -> CovariateFrame {
    CovariateFrame::new().with_continuous("x", xh.iter().chain(xd).copied().collect()).unwrap()
}

fn at_x(values: &[f64]) -> CovariateFrame {
    CovariateFrame::new().with_continuous("x", values.to_vec()).unwrap()
}

fn mcmc(nsave: usize, nburn: usize) -> McmcControl {
    McmcControl::new(nsave, nburn, 1).unwrap()
}

fn single_component() -> PriorOverrides {
    PriorOverrides { l: Some(1), ..PriorOverrides::default() }
}

fn binormal_roc(a: f64, p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        1.0
    } else {
        norm_cdf(a + norm_quantile(p))
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn brute_mann_whitney(h: &[f64], d: &[f64]) -> f64 {
    let mut s = 0.0;
    for &yd in d {
        for &yh in h {
            s += if yd > yh {
                1.0
            } else if yd == yh {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (h.len() * d.len()) as f64
}

fn ac1() -> Outcome {
    let mut worst: f64 = 0.0;
    let opts = PooledOptions { bootstrap: 50, ..PooledOptions::default() };
    for rep in 0..100u64 {
        let mut rng = RngStream::new(1000 + rep).rng();
        let nh = rng.random_range(1..=50);
        let nd = rng.random_range(1..=50);
        // integer values so that ties are frequent
        let h: Vec<f64> = (0..nh).map(|_| rng.random_range(0..12) as f64).collect();
        let d: Vec<f64> = (0..nd).map(|_| rng.random_range(2..14) as f64).collect();
        let r = pooled_roc(&DiagnosticSample::from_groups(&h, &d).unwrap(), PooledMethod::Empirical, &opts).unwrap();
        worst = worst.max((r.auc.est - brute_mann_whitney(&h, &d)).abs());
    }
    outcome(worst <= 1e-12, format!("max |AUC - Mann-Whitney| = {worst:.1e} over 100 datasets"))
}

fn ac2() -> Outcome {
    let target = norm_cdf(1.0 / 2f64.sqrt());
    let mut rng = RngStream::new(2).rng();
    let h = normals(&mut rng, 500, 0.0, 1.0);
    let d = normals(&mut rng, 500, 1.0, 1.0);
    let opts = PooledOptions { overrides: single_component(), mcmc: mcmc(2000, 500), seed: 2, ..PooledOptions::default() };
    let fit = fit_pooled(&DiagnosticSample::from_groups(&h, &d).unwrap(), PooledMethod::Dpm, &opts).unwrap();
    let pooled_auc = fit.roc().unwrap().auc.est;

    // closed mixture form against fixed-grid Simpson on the ROC curve, per draw
    let grid: Vec<f64> = (0..SIMPSON_POINTS).map(|i| i as f64 / (SIMPSON_POINTS - 1) as f64).collect();
    let (dh, dd) = fit.dpm_draws().unwrap();
    let mut worst_route: f64 = 0.0;
    for s in 0..dh.nsave() {
        let (mh, md) = (dh.mixture(s), dd.mixture(s));
        let by_simpson = simpson(&roc_curve(&mh, &md, &grid), 1.0 / (SIMPSON_POINTS - 1) as f64).unwrap();
        worst_route = worst_route.max((mixture_auc_closed(&mh, &md) - by_simpson).abs());
    }

    // x shifts both groups equally, so AUC(x) is the binormal value at every
    // x; checked at the centre of the covariate distribution
    let xh = uniforms(&mut rng, 500, 0.0, 1.0);
    let xd = uniforms(&mut rng, 500, 0.0, 1.0);
    let yh: Vec<f64> = xh.iter().map(|x| 2.0 * x + normal(&mut rng, 0.0, 1.0)).collect();
    let yd: Vec<f64> = xd.iter().map(|x| 1.0 + 2.0 * x + normal(&mut rng, 0.0, 1.0)).collect();
    let sample = DiagnosticSample::from_groups_with_covariates(&yh, &yd, Some(one_x(&xh, &xd))).unwrap();
    let f = CrocFormulas::shared("y ~ x").unwrap();
    let nd = at_x(&[0.5]);
    let sp = croc(&sample, &f, &nd, CrocMethod::Sp, &CrocOptions { bootstrap: 200, ..CrocOptions::default() }).unwrap();
    let bopts = CrocOptions { overrides: single_component(), mcmc: mcmc(2000, 500), seed: 2, ..CrocOptions::default() };
    let bnp = fit_croc(&sample, &f, &nd, CrocMethod::Bnp, &bopts).unwrap();
    let bnp_rows = bnp.roc().unwrap().rows;
    let (zh, zd) = bnp.ddp_newdata_rows().unwrap();
    let (ph, pd) = bnp.ddp_draws().unwrap();
    for s in 0..ph.nsave() {
        let (mh, md) = (ph.mixture_at(s, &zh[0]), pd.mixture_at(s, &zd[0]));
        let by_simpson = simpson(&roc_curve(&mh, &md, &grid), 1.0 / (SIMPSON_POINTS - 1) as f64).unwrap();
        worst_route = worst_route.max((mixture_auc_closed(&mh, &md) - by_simpson).abs());
    }

    let sp_dev = sp.rows.iter().map(|r| (r.auc.est - target).abs()).fold(0.0, f64::max);
    let bnp_dev = bnp_rows.iter().map(|r| (r.auc.est - target).abs()).fold(0.0, f64::max);
    let pass = (pooled_auc - target).abs() <= 0.03 && sp_dev <= 0.03 && bnp_dev <= 0.03 && worst_route <= 1e-3;
    outcome(
        pass,
        format!(
            "target {target:.5}: pooled dpm {pooled_auc:.4}, |cROC sp - target| {sp_dev:.4}, |cROC bnp - target| {bnp_dev:.4}; closed vs Simpson max {worst_route:.1e}"
        ),
    )
}

fn ac3() -> Outcome {
    let mut rng = RngStream::new(3).rng();
    let h = normals(&mut rng, 200, 0.0, 1.0);
    let d = normals(&mut rng, 200, 1.0, 1.0);
    let sample = DiagnosticSample::from_groups(&h, &d).unwrap();
    let opts = PooledOptions { bootstrap: 50, bb_draws: 5000, seed: 3, ..PooledOptions::default() };
    let bb = pooled_roc(&sample, PooledMethod::Bb, &opts).unwrap();
    let emp = pooled_roc(&sample, PooledMethod::Empirical, &opts).unwrap();
    let dauc = (bb.auc.est - emp.auc.est).abs();
    let droc = sup_diff(&bb.roc.est, &emp.roc.est);
    outcome(dauc <= 0.02 && droc <= 0.05, format!("|AUC_BB - AUC_emp| = {dauc:.4}, sup ROC gap = {droc:.4}"))
}

fn ac4() -> Outcome {
    let mut rng = RngStream::new(4).rng();
    let full = Some(PaucControl::fpf(1.0).unwrap());
    let mut lines = Vec::new();
    let mut pass = true;
    let mut record = |what: &str, gap: f64, tol: f64| {
        pass &= gap <= tol;
        lines.push(format!("{what} {gap:.1e}"));
    };

    let h = normals(&mut rng, 150, 0.0, 1.0);
    let d = normals(&mut rng, 120, 1.2, 1.5);
    let sample = DiagnosticSample::from_groups(&h, &d).unwrap();
    let opts = PooledOptions { pauc: full, bootstrap: 50, bb_draws: 1000, mcmc: mcmc(500, 200), ..PooledOptions::default() };
    for method in [PooledMethod::Empirical, PooledMethod::Kernel, PooledMethod::Bb, PooledMethod::Dpm] {
        let fit = fit_pooled(&sample, method, &opts).unwrap();
        let r = fit.roc().unwrap();
        let pauc = r.pauc.unwrap().estimate.est;
        let tol = if matches!(method, PooledMethod::Bb | PooledMethod::Empirical) { 1e-12 } else { 1e-3 };
        record(&format!("pooled {} pAUC", method.label()), (pauc - r.auc.est).abs(), tol);
        record(&format!("pooled {} TNF", method.label()), (fit.tnf_area().unwrap().est - r.auc.est).abs(), 1e-3);
    }

    let xh = uniforms(&mut rng, 200, 0.0, 1.0);
    let xd = uniforms(&mut rng, 200, 0.0, 1.0);
    let yh: Vec<f64> = xh.iter().map(|x| x + normal(&mut rng, 0.0, 0.5 + x)).collect();
    let yd: Vec<f64> = xd.iter().map(|x| 1.0 + 2.0 * x + normal(&mut rng, 0.0, 1.0)).collect();
    let sample = DiagnosticSample::from_groups_with_covariates(&yh, &yd, Some(one_x(&xh, &xd))).unwrap();
    let f = CrocFormulas::shared("y ~ x").unwrap();
    let nd = at_x(&[0.2, 0.5, 0.8]);
    let variants = [
        ("cROC sp normal", CrocMethod::Sp, EstCdf::Normal),
        ("cROC sp empirical", CrocMethod::Sp, EstCdf::Empirical),
        ("cROC kernel", CrocMethod::Kernel, EstCdf::Empirical),
        ("cROC bnp", CrocMethod::Bnp, EstCdf::Normal),
    ];
    for (name, method, est_cdf) in variants {
        let copts =
            CrocOptions { pauc: full, bootstrap: 30, est_cdf, mcmc: mcmc(500, 200), ..CrocOptions::default() };
        let fit = fit_croc(&sample, &f, &nd, method, &copts).unwrap();
        let r = fit.roc().unwrap();
        let tnf = fit.tnf_areas().unwrap();
        let tol = if est_cdf == EstCdf::Empirical && method != CrocMethod::Bnp { 1e-12 } else { 1e-3 };
        let pgap = r.rows.iter().map(|row| (row.pauc.as_ref().unwrap().estimate.est - row.auc.est).abs()).fold(0.0, f64::max);
        let tgap = r.rows.iter().zip(&tnf).map(|(row, t)| (t.est - row.auc.est).abs()).fold(0.0, f64::max);
        record(&format!("{name} pAUC"), pgap, tol);
        record(&format!("{name} TNF"), tgap, 1e-3);
    }

    let formula = Formula::parse("y ~ x").unwrap();
    for method in [ArocMethod::Sp, ArocMethod::Kernel, ArocMethod::Bnp] {
        let aopts = ArocOptions { pauc: full, bootstrap: 30, mcmc: mcmc(500, 200), ..ArocOptions::default() };
        let r = aroc(&sample, &formula, method, &aopts).unwrap();
        record(&format!("AROC {} pAUC", method.label()), (r.pauc.unwrap().estimate.est - r.aauc.est).abs(), 1e-3);
    }
    outcome(pass, lines.join(", "))
}

fn ac5() -> Outcome {
    let (mh, md) = (0.0, 2.0);
    let yi_true = 2.0 * norm_cdf(1.0) - 1.0;
    let fpf_true = norm_quantile(0.7);
    let mut rng = RngStream::new(5).rng();
    let h = normals(&mut rng, 3000, mh, 1.0);
    let d = normals(&mut rng, 3000, md, 1.0);
    let all: Vec<f64> = h.iter().chain(&d).copied().collect();
    let grid = threshold_grid(&all).unwrap();
    let step = grid[1] - grid[0];

    // the threshold search itself, on the exact distributions; estimated c*
    // are reported only, the argmax of a noisy Youden curve is not
    // grid-precise at any practical n
    let exact = yi_threshold(
        &rocinfer::cdf::NormalMixture::normal(mh, 1.0),
        &rocinfer::cdf::NormalMixture::normal(md, 1.0),
        &grid,
    );
    let mut pass = (exact.threshold - 1.0).abs() <= step && (exact.yi - yi_true).abs() <= 0.03;
    let mut lines = vec![format!("exact c* {:.4} (step {step:.4})", exact.threshold)];

    let sample = DiagnosticSample::from_groups(&h, &d).unwrap();
    let opts = PooledOptions { bootstrap: 50, bb_draws: 1000, mcmc: mcmc(1000, 300), ..PooledOptions::default() };
    for method in [PooledMethod::Empirical, PooledMethod::Kernel, PooledMethod::Bb, PooledMethod::Dpm] {
        let fit = fit_pooled(&sample, method, &opts).unwrap();
        let yi = fit.thresholds(ThresholdCriterion::Yi, None).unwrap().rows[0].clone();
        let at = fit.thresholds(ThresholdCriterion::Fpf, Some(0.3)).unwrap().rows[0].threshold.est;
        let yi_est = yi.yi.unwrap().est;
        pass &= (yi_est - yi_true).abs() <= 0.03 && (at - fpf_true).abs() <= 0.05;
        lines.push(format!("{} YI {yi_est:.4} c* {:.3} c(0.3) {at:.3}", method.label(), yi.threshold.est));
    }

    // covariate-specific at fixed x: both groups shifted by x
    let xh = uniforms(&mut rng, 1000, 0.0, 1.0);
    let xd = uniforms(&mut rng, 1000, 0.0, 1.0);
    let yh: Vec<f64> = xh.iter().map(|x| x + normal(&mut rng, mh, 1.0)).collect();
    let yd: Vec<f64> = xd.iter().map(|x| x + normal(&mut rng, md, 1.0)).collect();
    let sample = DiagnosticSample::from_groups_with_covariates(&yh, &yd, Some(one_x(&xh, &xd))).unwrap();
    let f = CrocFormulas::shared("y ~ x").unwrap();
    let x0 = 0.5;
    let copts =
        CrocOptions { bootstrap: 50, overrides: single_component(), mcmc: mcmc(1000, 300), ..CrocOptions::default() };
    for method in [CrocMethod::Sp, CrocMethod::Kernel, CrocMethod::Bnp] {
        let fit = fit_croc(&sample, &f, &at_x(&[x0]), method, &copts).unwrap();
        let yi = fit.thresholds(ThresholdCriterion::Yi, None).unwrap().rows[0].clone();
        let at = fit.thresholds(ThresholdCriterion::Fpf, Some(0.3)).unwrap().rows[0].threshold.est;
        let yi_est = yi.yi.unwrap().est;
        pass &= (yi_est - yi_true).abs() <= 0.03 && (at - (x0 + fpf_true)).abs() <= 0.05;
        lines.push(format!("cROC {} YI {yi_est:.4} c(0.3) {at:.3}", method.label()));
    }
    outcome(pass, format!("YI target {yi_true:.4}, c(0.3) target {fpf_true:.4}; {}", lines.join(", ")))
}

fn ac6() -> Outcome {
    // 50-digit evaluation of 0.9 * min(sd, IQR / 1.34) * 5^(-1/5) for 1..5
    const ORACLE: f64 = 0.973_584_622_850_635_8;
    let h = silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap().value;
    outcome((h - ORACLE).abs() <= 1e-5, format!("h = {h:.10}, oracle {ORACLE:.10}"))
}

fn ac7() -> Outcome {
    let p = FpfGrid::uniform(101).unwrap();
    let formula = Formula::parse("y ~ x").unwrap();
    let methods = [ArocMethod::Sp, ArocMethod::Kernel, ArocMethod::Bnp];
    let opts = |seed| ArocOptions { p: p.clone(), bootstrap: 50, mcmc: mcmc(1000, 300), seed, ..ArocOptions::default() };
    let mut pass = true;
    let mut lines = Vec::new();

    // (i) disease carries no information once x is accounted for
    let mut rng = RngStream::new(71).rng();
    let xh = uniforms(&mut rng, 500, 0.0, 1.0);
    let xd = uniforms(&mut rng, 500, 0.5, 1.0);
    let yh: Vec<f64> = xh.iter().map(|x| 3.0 * x + normal(&mut rng, 0.0, 1.0)).collect();
    let yd: Vec<f64> = xd.iter().map(|x| 3.0 * x + normal(&mut rng, 0.0, 1.0)).collect();
    let sample = DiagnosticSample::from_groups_with_covariates(&yh, &yd, Some(one_x(&xh, &xd))).unwrap();
    for m in methods {
        let r = aroc(&sample, &formula, m, &opts(71)).unwrap();
        pass &= (r.aauc.est - 0.5).abs() <= 0.04;
        lines.push(format!("null {} AAUC {:.3}", m.label(), r.aauc.est));
    }

    // (ii) diseased subjects sit at larger x, which raises their marker too:
    // the pooled curve lies above the AROC, which matches the common
    // covariate-specific curve ROC(p) = Phi(1 + Phi^-1(p))
    let mut rng = RngStream::new(72).rng();
    let xh = uniforms(&mut rng, 1000, 0.0, 1.0);
    let xd = uniforms(&mut rng, 1000, 0.5, 1.0);
    let yh: Vec<f64> = xh.iter().map(|x| 6.0 * x + normal(&mut rng, 0.0, 1.0)).collect();
    let yd: Vec<f64> = xd.iter().map(|x| 1.0 + 6.0 * x + normal(&mut rng, 0.0, 1.0)).collect();
    let sample = DiagnosticSample::from_groups_with_covariates(&yh, &yd, Some(one_x(&xh, &xd))).unwrap();
    let truth: Vec<f64> = p.as_slice().iter().map(|&q| binormal_roc(1.0, q)).collect();
    let pooled = pooled_roc(
        &DiagnosticSample::from_groups(&yh, &yd).unwrap(),
        PooledMethod::Empirical,
        &PooledOptions { p: p.clone(), bootstrap: 50, ..PooledOptions::default() },
    )
    .unwrap();
    for m in methods {
        let r = aroc(&sample, &formula, m, &opts(72)).unwrap();
        let to_croc = sup_diff(&r.aroc.est, &truth);
        let to_pooled = sup_diff(&r.aroc.est, &pooled.roc.est);
        let above = pooled.roc.est.iter().zip(&r.aroc.est).all(|(a, b)| a + 0.02 >= *b);
        pass &= to_croc <= 0.05 && to_pooled >= 0.1 && above;
        lines.push(format!("{} sup|AROC-cROC| {to_croc:.3} sup|AROC-pooled| {to_pooled:.3}", m.label()));
    }
    outcome(pass, lines.join(", "))
}

fn ac8() -> Outcome {
    let flexible = CrocFormulas::shared("y ~ f(x, K = 3)").unwrap();
    let linear = CrocFormulas::shared("y ~ x").unwrap();
    let nd = at_x(&[0.5]);
    let mut wins = 0;
    for rep in 0..20u64 {
        let mut rng = RngStream::new(800 + rep).rng();
        // sinusoidal mean with a bimodal error
        let mut group = |shift: f64| -> (Vec<f64>, Vec<f64>) {
            let x = uniforms(&mut rng, 200, 0.0, 1.0);
            let y = x
                .iter()
                .map(|&v| {
                    let mode = if rng.random::<f64>() < 0.5 { -1.2 } else { 1.2 };
                    shift + 2.0 * (2.0 * std::f64::consts::PI * v).sin() + normal(&mut rng, mode, 0.4)
                })
                .collect();
            (x, y)
        };
        let (xh, yh) = group(0.0);
        let (xd, yd) = group(1.0);
        let sample = DiagnosticSample::from_groups_with_covariates(&yh, &yd, Some(one_x(&xh, &xd))).unwrap();
        let fit = |f: &CrocFormulas, l: usize| {
            let o = CrocOptions {
                overrides: PriorOverrides { l: Some(l), ..PriorOverrides::default() },
                mcmc: mcmc(2000, 500),
                seed: rep,
                ..CrocOptions::default()
            };
            croc(&sample, f, &nd, CrocMethod::Bnp, &o).unwrap().fit.unwrap()
        };
        let (big, small) = (fit(&flexible, 10), fit(&linear, 1));
        let better = |a: &rocinfer::diagnostics::FitCriteria, b: &rocinfer::diagnostics::FitCriteria| {
            a.waic < b.waic && a.dic < b.dic && a.lpml > b.lpml
        };
        if better(&big.healthy, &small.healthy) && better(&big.diseased, &small.diseased) {
            wins += 1;
        }
    }
    outcome(wins >= 18, format!("flexible model preferred by WAIC, DIC and LPML in both groups in {wins}/20 replicates"))
}

fn ac9() -> Outcome {
    let mut qq = 0;
    let mut skew = 0;
    let opts = PooledOptions { mcmc: mcmc(500, 200), ..PooledOptions::default() };
    for rep in 0..100u64 {
        let mut rng = RngStream::new(900 + rep).rng();
        let h = normals(&mut rng, 100, 0.0, 1.0);
        let d = normals(&mut rng, 100, 1.5, 0.7);
        let o = PooledOptions { seed: rep, ..opts.clone() };
        let fit = fit_pooled(&DiagnosticSample::from_groups(&h, &d).unwrap(), PooledMethod::Dpm, &o).unwrap();
        let groups = [Group::Healthy, Group::Diseased];
        if groups.iter().all(|&g| fit.quantile_residuals(g).unwrap().within_bands()) {
            qq += 1;
        }
        if groups.iter().all(|&g| fit.predictive_check(g, 0).unwrap().skewness.covers(0.95)) {
            skew += 1;
        }
    }

    let phi: f64 = 0.9;
    let n = 50_000;
    let mut rng = RngStream::new(99).rng();
    let mut chain = Vec::with_capacity(n);
    let mut v = 0.0;
    for _ in 0..n {
        v = phi * v + normal(&mut rng, 0.0, 1.0);
        chain.push(v);
    }
    let ess = effective_sample_size(&chain);
    let closed = n as f64 * (1.0 - phi) / (1.0 + phi);
    let rel = (ess / closed - 1.0).abs();
    outcome(
        qq >= 90 && skew >= 90 && rel <= 0.3,
        format!("QQ within bands {qq}/100, skewness covered {skew}/100, ESS {ess:.0} vs {closed:.0} ({:.1}%)", 100.0 * rel),
    )
}

fn envelope_json(command: Command, settings: &Settings, workers: usize) -> String {
    let s = Settings { workers: Some(workers), ..settings.clone() };
    run(&RunConfig::new(command, s)).unwrap().deterministic_json().unwrap()
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("endo.csv");
    let mut a = Vec::new();
    let mut b = Vec::new();
    simulate_endosyn_like(400, 10, &SimulationParams::default(), &mut a).unwrap();
    simulate_endosyn_like(400, 10, &SimulationParams::default(), &mut b).unwrap();
    std::fs::write(&path, &a).unwrap();
    let base = Settings {
        data: Some(path),
        marker: Some("bmi".into()),
        group: Some("cvd_idf".into()),
        tag: Some("0".into()),
        nsave: Some(200),
        nburn: Some(50),
        bootstrap: Some(40),
        bb_draws: Some(500),
        newdata_points: Some(4),
        pauc_value: Some(0.2),
        seed: Some(10),
        ..Settings::default()
    };
    let formula = Some("bmi ~ gender + f(age, by = gender, K = (1, 1))".to_string());
    let linear = Some("bmi ~ gender + age".to_string());
    let mut runs: Vec<(Command, Settings)> = Vec::new();
    for m in ["emp", "kernel", "bb", "dpm"] {
        runs.push((Command::Pooled, Settings { method: Some(m.into()), ..base.clone() }));
    }
    for (m, f) in [("sp", &formula), ("kernel", &None), ("bnp", &formula)] {
        let f = f.clone().or(Some("bmi ~ age".into()));
        runs.push((Command::Croc, Settings { method: Some(m.into()), formula_h: f.clone(), ..base.clone() }));
        runs.push((Command::Aroc, Settings { method: Some(m.into()), formula_h: f, ..base.clone() }));
    }
    runs.push((Command::Threshold, Settings { method: Some("bb".into()), ..base.clone() }));
    runs.push((Command::Threshold, Settings { method: Some("bnp".into()), formula_h: linear, ..base.clone() }));

    let mut differing = Vec::new();
    for (command, s) in &runs {
        if envelope_json(*command, s, 1) != envelope_json(*command, s, 8) {
            differing.push(format!("{} {}", command.name(), s.method.clone().unwrap_or_default()));
        }
    }
    let same_data = a == b;
    outcome(
        differing.is_empty() && same_data,
        format!(
            "{} runs compared (workers 1 vs 8){}; simulate bytes identical: {same_data}",
            runs.len(),
            if differing.is_empty() { String::new() } else { format!(", differing: {}", differing.join(", ")) }
        ),
    )
}

fn ac11(path: PathBuf) -> Outcome {
    let base = Settings {
        data: Some(path),
        marker: Some("bmi".into()),
        group: Some("cvd_idf".into()),
        tag: Some("0".into()),
        seed: Some(123),
        ..Settings::default()
    };
    let auc = |command, s: Settings| -> f64 {
        let env = run(&RunConfig::new(command, s)).unwrap();
        match env.payload {
            rocinfer::io::Payload::Pooled(r) => r.auc.est,
            rocinfer::io::Payload::Aroc(r) => r.aauc.est,
            _ => unreachable!(),
        }
    };
    let emp = auc(Command::Pooled, Settings { method: Some("emp".into()), ..base.clone() });
    let dpm = auc(Command::Pooled, Settings { method: Some("dpm".into()), ..base.clone() });
    let aroc_bnp = auc(
        Command::Aroc,
        Settings {
            method: Some("bnp".into()),
            formula_h: Some("bmi ~ gender + f(age, by = gender, K = (0, 0))".into()),
            ..base
        },
    );
    let pass = (emp - 0.760).abs() <= 0.005 && (dpm - 0.758).abs() <= 0.01 && (aroc_bnp - 0.653).abs() <= 0.015;
    outcome(pass, format!("pooled emp {emp:.3}, pooled dpm {dpm:.3}, AROC bnp {aroc_bnp:.3}"))
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    run: Box<dyn FnOnce() -> Outcome>,
}

fn criterion(id: &'static str, title: &'static str, secs: Option<u64>, run: impl FnOnce() -> Outcome + 'static) -> Criterion {
    Criterion { id, title, limit: secs.map(Duration::from_secs), run: Box::new(run) }
}

#[test]
fn acceptance() {
    let mut criteria = vec![
        criterion("AC1", "empirical AUC equals brute-force Mann-Whitney", Some(5), ac1),
        criterion("AC2", "binormal oracle for DPM, semiparametric and DDP AUC", Some(180), ac2),
        criterion("AC3", "Bayesian bootstrap centres on the empirical curve", Some(30), ac3),
        criterion("AC4", "partial-area and TNF identities", None, ac4),
        criterion("AC5", "Youden and FPF threshold oracle", None, ac5),
        criterion("AC6", "Silverman bandwidth against high-precision value", None, ac6),
        criterion("AC7", "AROC null and covariate-shift properties", Some(300), ac7),
        criterion("AC8", "model-selection recovery", Some(1200), ac8),
        criterion("AC9", "diagnostics calibration", None, ac9),
        criterion("AC10", "determinism across worker counts", None, ac10),
    ];
    let endosyn = std::env::var_os("ROCINFER_ENDOSYN").map(PathBuf::from);
    if let Some(path) = endosyn.clone() {
        criteria.push(criterion("AC11", "original endosyn headline numbers", None, move || ac11(path)));
    }

    let mut failed = Vec::new();
    for c in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run));
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let in_time = c.limit.is_none_or(|l| took <= l);
        let limit = c.limit.map(|l| format!(" (limit {} s)", l.as_secs())).unwrap_or_default();
        let status = if pass && in_time { "PASS" } else { "FAIL" };
        println!("{} {status} {}: {detail} [{:.1} s{limit}]", c.id, c.title, took.as_secs_f64());
        if status == "FAIL" {
            failed.push(c.id);
        }
    }
    if endosyn.is_none() {
        println!("AC11 SKIP original endosyn headline numbers: set ROCINFER_ENDOSYN to a CSV export to run");
    }
    assert!(failed.is_empty(), "failed: {}", failed.join(", "));
}

