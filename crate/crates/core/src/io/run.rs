use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use crate::aroc::{aroc, ArocMethod, ArocOptions};
use crate::croc::{croc, default_newdata, fit_croc, CrocFit, CrocFormulas, CrocMethod, CrocOptions};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::io::config::{Command, RunConfig};
use crate::io::data::{ingest_csv, read_newdata, CsvColumns};
use crate::io::envelope::{Payload, ResultEnvelope, ThresholdPayload, Timing};
use crate::io::report::{summary_text, write_tidy_csv};
use crate::io::simulate::{simulate_endosyn_like, SimulationParams};
use crate::model::{CovariateFrame, DiagnosticSample};
use crate::pooled::{fit_pooled, pooled_roc, PooledMethod, PooledOptions};
use crate::summaries::ThresholdCriterion;

/// Newdata grid length along the first continuous covariate.
const DEFAULT_NEWDATA_POINTS: usize = 50;

fn load_sample(cfg: &RunConfig, covariates: Vec<String>) -> Result<DiagnosticSample> {
    let s = &cfg.settings;
    let cols = CsvColumns {
        marker: s.marker.clone().unwrap_or_default(),
        group: s.group.clone().unwrap_or_default(),
        tag: s.tag.clone().unwrap_or_default(),
        covariates,
        factors: s.factors.clone().unwrap_or_default(),
    };
    ingest_csv(s.data.as_ref().expect("validated"), &cols)
}

fn croc_formulas(cfg: &RunConfig) -> Result<Option<CrocFormulas>> {
    let s = &cfg.settings;
    match (&s.formula_h, &s.formula_d) {
        (None, None) => Ok(None),
        (Some(f), None) | (None, Some(f)) => CrocFormulas::shared(f).map(Some),
        (Some(h), Some(d)) => CrocFormulas::parse(h, d).map(Some),
    }
}

fn newdata_for(cfg: &RunConfig, sample: &DiagnosticSample, formulas: &CrocFormulas) -> Result<CovariateFrame> {
    match &cfg.settings.newdata {
        Some(path) => read_newdata(path, sample.covariates(), &formulas.variables()),
        None => default_newdata(sample, formulas, cfg.settings.newdata_points.unwrap_or(DEFAULT_NEWDATA_POINTS)),
    }
}

fn pooled_options(cfg: &RunConfig) -> Result<PooledOptions> {
    let s = &cfg.settings;
    let d = PooledOptions::default();
    Ok(PooledOptions {
        p: cfg.fpf_grid()?,
        pauc: cfg.pauc()?,
        bootstrap: s.bootstrap.unwrap_or(d.bootstrap),
        bandwidth: s.bandwidth.unwrap_or(d.bandwidth),
        bb_draws: s.bb_draws.unwrap_or(d.bb_draws),
        overrides: cfg.overrides(),
        mcmc: cfg.mcmc()?,
        standardise: s.standardise.unwrap_or(d.standardise),
        density_points: s.density_points,
        keep_ensemble: s.keep_ensemble.unwrap_or(false),
        seed: cfg.seed(),
        ..d
    })
}

fn croc_options(cfg: &RunConfig) -> Result<CrocOptions> {
    let s = &cfg.settings;
    let d = CrocOptions::default();
    Ok(CrocOptions {
        p: cfg.fpf_grid()?,
        pauc: cfg.pauc()?,
        bootstrap: s.bootstrap.unwrap_or(d.bootstrap),
        est_cdf: s.est_cdf.unwrap_or(d.est_cdf),
        kernel_order: s.kernel_order.unwrap_or(d.kernel_order),
        overrides: cfg.overrides(),
        mcmc: cfg.mcmc()?,
        standardise: s.standardise.unwrap_or(d.standardise),
        density_points: s.density_points,
        keep_ensemble: s.keep_ensemble.unwrap_or(false),
        extrapolate: s.extrapolate.unwrap_or(false),
        seed: cfg.seed(),
        ..d
    })
}

fn aroc_options(cfg: &RunConfig) -> Result<ArocOptions> {
    let s = &cfg.settings;
    let d = ArocOptions::default();
    Ok(ArocOptions {
        p: cfg.fpf_grid()?,
        pauc: cfg.pauc()?,
        bootstrap: s.bootstrap.unwrap_or(d.bootstrap),
        est_cdf: s.est_cdf.unwrap_or(d.est_cdf),
        kernel_order: s.kernel_order.unwrap_or(d.kernel_order),
        overrides: cfg.overrides(),
        mcmc: cfg.mcmc()?,
        standardise: s.standardise.unwrap_or(d.standardise),
        keep_ensemble: s.keep_ensemble.unwrap_or(false),
        extrapolate: s.extrapolate.unwrap_or(false),
        seed: cfg.seed(),
        ..d
    })
}

fn threshold_payload(cfg: &RunConfig) -> Result<(DiagnosticSample, Payload)> {
    let criterion = cfg.settings.criterion.unwrap_or(ThresholdCriterion::Yi);
    let target = cfg.settings.target_fpf;
    match croc_formulas(cfg)? {
        Some(formulas) => {
            let sample = load_sample(cfg, formulas.variables())?;
            let method: CrocMethod = cfg.parse_method("sp")?;
            let newdata = newdata_for(cfg, &sample, &formulas)?;
            let fit: CrocFit = fit_croc(&sample, &formulas, &newdata, method, &croc_options(cfg)?)?;
            let result = fit.thresholds(criterion, target)?;
            let payload = ThresholdPayload { method: cfg.method_or("sp"), newdata: Some(newdata), result };
            Ok((sample, Payload::Threshold(payload)))
        }
        None => {
            let sample = load_sample(cfg, Vec::new())?;
            let method: PooledMethod = cfg.parse_method("emp")?;
            let result = fit_pooled(&sample, method, &pooled_options(cfg)?)?.thresholds(criterion, target)?;
            let payload = ThresholdPayload { method: cfg.method_or("emp"), newdata: None, result };
            Ok((sample, Payload::Threshold(payload)))
        }
    }
}

fn estimate(cfg: &RunConfig) -> Result<(DiagnosticSample, Payload)> {
    match cfg.command {
        Command::Pooled => {
            let sample = load_sample(cfg, Vec::new())?;
            let method: PooledMethod = cfg.parse_method("emp")?;
            let r = pooled_roc(&sample, method, &pooled_options(cfg)?)?;
            Ok((sample, Payload::Pooled(r)))
        }
        Command::Croc => {
            let formulas = croc_formulas(cfg)?.expect("validated");
            let sample = load_sample(cfg, formulas.variables())?;
            let method: CrocMethod = cfg.parse_method("sp")?;
            let newdata = newdata_for(cfg, &sample, &formulas)?;
            let r = croc(&sample, &formulas, &newdata, method, &croc_options(cfg)?)?;
            Ok((sample, Payload::Croc(r)))
        }
        Command::Aroc => {
            let formula = Formula::parse(cfg.settings.formula_h.as_deref().expect("validated"))?;
            let sample = load_sample(cfg, formula.variables())?;
            let method: ArocMethod = cfg.parse_method("sp")?;
            let r = aroc(&sample, &formula, method, &aroc_options(cfg)?)?;
            Ok((sample, Payload::Aroc(r)))
        }
        Command::Threshold => threshold_payload(cfg),
        Command::Simulate => Err(Error::Config("`simulate` writes data, not results; use `execute`".into())),
    }
}

/// Runs an estimation subcommand on a dedicated pool of `workers` threads.
/// Results are identical for any worker count.
pub fn run(cfg: &RunConfig) -> Result<ResultEnvelope> {
    cfg.validate()?;
    let workers = cfg.workers();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let start = Instant::now();
    let (sample, payload) = pool.install(|| estimate(cfg))?;
    let timing = Timing { elapsed_seconds: start.elapsed().as_secs_f64(), workers };
    Ok(ResultEnvelope::new(cfg.clone(), timing, sample.missing(), payload))
}

fn create(path: &std::path::Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Runs a subcommand and writes its outputs: the result JSON to `out` (or
/// stdout), the text summary to `summary`, and the tidy CSV if requested.
/// For `simulate` the generated CSV goes to `out` (or stdout).
pub fn execute<W: Write>(cfg: &RunConfig, summary: &mut W) -> Result<Option<ResultEnvelope>> {
    let s = &cfg.settings;
    if cfg.command == Command::Simulate {
        let n = s.n.unwrap_or(2840);
        let params = SimulationParams::default();
        match &s.out {
            Some(path) => simulate_endosyn_like(n, cfg.seed(), &params, create(path)?)?,
            None => simulate_endosyn_like(n, cfg.seed(), &params, std::io::stdout().lock())?,
        }
        return Ok(None);
    }
    let env = run(cfg)?;
    let json = env.to_json()?;
    match &s.out {
        Some(path) => {
            let mut f = create(path)?;
            f.write_all(json.as_bytes())?;
            f.write_all(b"\n")?;
            f.flush()?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(json.as_bytes())?;
            stdout.write_all(b"\n")?;
        }
    }
    summary.write_all(summary_text(&env).as_bytes())?;
    if let Some(path) = &s.csv {
        let mut f = create(path)?;
        write_tidy_csv(&env, &mut f)?;
        f.flush()?;
    }
    Ok(Some(env))
}
