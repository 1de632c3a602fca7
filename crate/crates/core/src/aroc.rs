//! Covariate-adjusted ROC curves from diseased placement values
//! `U = 1 - F_H(y_D | x_D)`: the AROC is the distribution function of `U`.
//! The healthy conditional CDF comes from a linear model (normal or
//! empirical errors), a kernel location-scale model, or a dependent DPM
//! combined with Bayesian bootstrap weights over the diseased sample.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::{CdfModel, EmpiricalCdf, ErrorCdf, LocationScaleCdf};
use crate::croc::{design_rows, kernel_covariate, ols_fit, CrocFormulas, EstCdf};
use crate::design::{build_design_covering, FittedDesign, OlsSolver};
use crate::diagnostics::{FitCriteria, LogLikMatrix};
use crate::dpm::{fit_ddp, DdpDraws, DdpPrior, McmcControl, PriorOverrides, AUTO_COMPONENTS};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::kernel::{Bandwidths, LocationScaleFit};
use crate::model::{Affine, CovariateFrame, DiagnosticSample, FpfGrid};
use crate::pooled::SampleSizes;
use crate::sampling::{dirichlet_flat, labels, resample_indices, RngStream};
use crate::stats::{Band, Interval};
use crate::summaries::{
    placement_pauc, placement_roc, uniform_weights, PaucControl, PaucFocus, PaucSummary, ThresholdCriterion,
    ThresholdDraw, ThresholdResult, ThresholdRow,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArocMethod {
    Sp,
    Kernel,
    Bnp,
}

impl ArocMethod {
    pub fn is_bayesian(self) -> bool {
        self == ArocMethod::Bnp
    }

    pub fn label(self) -> &'static str {
        match self {
            ArocMethod::Sp => "semiparametric",
            ArocMethod::Kernel => "Kernel-based",
            ArocMethod::Bnp => "Bayesian nonparametric",
        }
    }
}

impl FromStr for ArocMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sp" => Ok(Self::Sp),
            "kernel" => Ok(Self::Kernel),
            "bnp" => Ok(Self::Bnp),
            _ => Err(Error::Config(format!("unknown covariate-adjusted method '{s}' (sp, kernel, bnp)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArocOptions {
    pub p: FpfGrid,
    pub pauc: Option<PaucControl>,
    /// Bootstrap replicates (both groups resampled, healthy model refitted).
    pub bootstrap: usize,
    pub est_cdf: EstCdf,
    pub kernel_order: usize,
    pub prior: Option<DdpPrior>,
    pub overrides: PriorOverrides,
    pub mcmc: McmcControl,
    pub standardise: bool,
    pub keep_ensemble: bool,
    pub extrapolate: bool,
    pub seed: u64,
}

impl Default for ArocOptions {
    fn default() -> Self {
        Self {
            p: FpfGrid::default(),
            pauc: None,
            bootstrap: 500,
            est_cdf: EstCdf::Normal,
            kernel_order: 1,
            prior: None,
            overrides: PriorOverrides::default(),
            mcmc: McmcControl::default(),
            standardise: true,
            keep_ensemble: false,
            extrapolate: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArocResult {
    pub method: ArocMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub est_cdf: Option<EstCdf>,
    pub p: Vec<f64>,
    pub aroc: Band,
    pub aauc: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauc: Option<PaucSummary>,
    /// `max_p {AROC(p) - p}` and its maximiser.
    pub yi: Interval,
    pub p_star: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<Vec<f64>>>,
    /// Healthy-group fit criteria (dependent DPM only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitCriteria>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<Bandwidths>,
    pub sample_sizes: SampleSizes,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Summary of one weighted step AROC.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSummary {
    pub aroc: Vec<f64>,
    pub aauc: f64,
    pub pauc: Option<f64>,
    pub yi: f64,
    pub p_star: f64,
}

/// Exact summaries of `AROC(p) = sum_j w_j 1(U_j <= p)`.
pub fn step_summary(u: &[f64], w: &[f64], p: &[f64], pauc: Option<PaucControl>) -> StepSummary {
    let mut idx: Vec<usize> = (0..u.len()).collect();
    idx.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    // The supremum of AROC(p) - p sits at a jump point (or p = 0).
    let (mut yi, mut p_star, mut cum) = (0.0, 0.0, 0.0);
    for (k, &i) in idx.iter().enumerate() {
        cum += w[i];
        let tied = idx.get(k + 1).is_some_and(|&j| u[j] == u[i]);
        if !tied && cum - u[i] > yi {
            yi = cum - u[i];
            p_star = u[i];
        }
    }
    let pauc = pauc.map(|c| match c.focus {
        PaucFocus::Fpf => placement_pauc(c, u, w, &[], &[]),
        PaucFocus::Tpf => {
            let p0 = step_inverse(u, w, &idx, c.value);
            let area: f64 = u.iter().zip(w).map(|(ui, wi)| wi * (1.0 - ui.max(p0))).sum();
            c.normalise(area - (1.0 - p0) * c.value)
        }
    });
    StepSummary {
        aroc: placement_roc(u, w, p),
        aauc: 1.0 - u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>(),
        pauc,
        yi,
        p_star,
    }
}

/// `inf {p : AROC(p) >= v}` for the step curve; `idx` sorts `u`.
fn step_inverse(u: &[f64], w: &[f64], idx: &[usize], v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let mut cum = 0.0;
    for &i in idx {
        cum += w[i];
        if cum >= v - 1e-12 {
            return u[i];
        }
    }
    1.0
}

/// Healthy conditional model: linear (with its training design) or kernel.
#[derive(Clone, Debug)]
enum Healthy {
    Linear { beta: Vec<f64>, sigma: f64, error: ErrorCdf },
    Kernel(Arc<LocationScaleFit>, ErrorCdf),
}

enum Evaluator {
    Linear(FittedDesign),
    Kernel(String),
}

/// Placement values and healthy model of one fit.
#[derive(Clone, Debug)]
struct Member {
    u: Vec<f64>,
    healthy: Healthy,
}

struct BnpState {
    draws: DdpDraws,
    yh: Vec<f64>,
    zh: DMatrix<f64>,
    yd: Vec<f64>,
    zd: Vec<Vec<f64>>,
    design: FittedDesign,
}

enum Kind {
    Located { est: Member, reps: Vec<Member>, bandwidths: Option<Bandwidths> },
    Bnp(Box<BnpState>),
}

pub struct ArocFit {
    method: ArocMethod,
    opts: ArocOptions,
    sizes: SampleSizes,
    evaluator: Evaluator,
    scale: Affine,
    params: crate::model::StandardisationParams,
    stream: RngStream,
    kind: Kind,
    warnings: Vec<String>,
}

/// Fits the healthy conditional model and computes diseased placement values.
pub fn fit_aroc(sample: &DiagnosticSample, formula: &Formula, method: ArocMethod, opts: &ArocOptions) -> Result<ArocFit> {
    let pauc = opts.pauc.map(PaucControl::validated).transpose()?;
    let opts = ArocOptions { pauc, ..opts.clone() };
    let split = sample.split_groups()?;
    let sizes = SampleSizes { healthy: split.n_healthy(), diseased: split.n_diseased() };
    let stream = RngStream::new(opts.seed);
    let mut warnings = Vec::new();
    let (evaluator, scale, params, kind) = match method {
        ArocMethod::Sp => {
            let design = build_design_covering(&split.healthy_cov, formula, Some(&split.diseased_cov))?;
            warnings.extend(design.warnings.iter().map(|w| format!("healthy: {w}")));
            let zd = design.fitted.predict(&split.diseased_cov, opts.extrapolate)?;
            let est_cdf = opts.est_cdf;
            let fit_linear = |z: &DMatrix<f64>, y: &[f64]| -> Result<Healthy> {
                let f = ols_fit(&OlsSolver::new(z)?, y, "healthy")?;
                let error = match est_cdf {
                    EstCdf::Normal => ErrorCdf::Normal,
                    EstCdf::Empirical => ErrorCdf::Empirical(Arc::new(EmpiricalCdf::new(&f.resid)?)),
                };
                Ok(Healthy::Linear { beta: f.beta, sigma: f.sigma, error })
            };
            let h = fit_linear(&design.z, &split.healthy)?;
            let est = Member { u: linear_placements(&h, &zd, &split.diseased), healthy: h };
            let outcomes: Vec<Result<Member>> = (0..opts.bootstrap)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream.substream(labels::BOOTSTRAP, b as u64).rng();
                    let ih = resample_indices(&mut rng, split.n_healthy());
                    let id = resample_indices(&mut rng, split.n_diseased());
                    let z = design.z.select_rows(&ih);
                    let y: Vec<f64> = ih.iter().map(|&i| split.healthy[i]).collect();
                    let h = fit_linear(&z, &y)?;
                    let zdb = zd.select_rows(&id);
                    let yd: Vec<f64> = id.iter().map(|&i| split.diseased[i]).collect();
                    Ok(Member { u: linear_placements(&h, &zdb, &yd), healthy: h })
                })
                .collect();
            let reps = keep_successful(outcomes, &mut warnings)?;
            (Evaluator::Linear(design.fitted), Affine::IDENTITY, None, Kind::Located { est, reps, bandwidths: None })
        }
        ArocMethod::Kernel => {
            let var = kernel_covariate(&CrocFormulas { healthy: formula.clone(), diseased: formula.clone() }, sample)?;
            let xh = split.healthy_cov.continuous(&var)?;
            let xd = split.diseased_cov.continuous(&var)?;
            let order = opts.kernel_order;
            let fit = LocationScaleFit::fit_lscv(xh, &split.healthy, order)?;
            warnings.extend(fit.warnings.iter().map(|w| format!("healthy: {w}")));
            let bw = fit.bandwidths();
            let wrap = |f: LocationScaleFit| -> Result<Healthy> {
                let error = ErrorCdf::Empirical(Arc::new(EmpiricalCdf::new(&f.residuals)?));
                Ok(Healthy::Kernel(Arc::new(f), error))
            };
            let h = wrap(fit)?;
            let est = Member { u: kernel_placements(&h, xd, &split.diseased)?, healthy: h };
            let outcomes: Vec<Result<Member>> = (0..opts.bootstrap)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream.substream(labels::BOOTSTRAP, b as u64).rng();
                    let ih = resample_indices(&mut rng, split.n_healthy());
                    let id = resample_indices(&mut rng, split.n_diseased());
                    let x: Vec<f64> = ih.iter().map(|&i| xh[i]).collect();
                    let y: Vec<f64> = ih.iter().map(|&i| split.healthy[i]).collect();
                    let h = wrap(LocationScaleFit::fit_with(&x, &y, order, bw)?)?;
                    let xdb: Vec<f64> = id.iter().map(|&i| xd[i]).collect();
                    let ydb: Vec<f64> = id.iter().map(|&i| split.diseased[i]).collect();
                    Ok(Member { u: kernel_placements(&h, &xdb, &ydb)?, healthy: h })
                })
                .collect();
            let reps = keep_successful(outcomes, &mut warnings)?;
            (Evaluator::Kernel(var), Affine::IDENTITY, None, Kind::Located { est, reps, bandwidths: Some(bw) })
        }
        ArocMethod::Bnp => {
            let (work, params) = sample.standardise(opts.standardise)?;
            let ws = work.split_groups()?;
            let design = build_design_covering(&ws.healthy_cov, formula, Some(&ws.diseased_cov))?;
            warnings.extend(design.warnings.iter().map(|w| format!("healthy: {w}")));
            let zd = design_rows(&design.fitted.predict(&ws.diseased_cov, opts.extrapolate)?);
            let prior = opts.overrides.apply_ddp(opts.prior.clone().unwrap_or_else(|| {
                DdpPrior::for_data(design.ncols(), AUTO_COMPONENTS, &ws.healthy, opts.standardise)
            }));
            let draws = fit_ddp(&ws.healthy, &design.z, &prior, &opts.mcmc, stream.substream(labels::CHAIN_HEALTHY, 0))?;
            let state = BnpState {
                draws,
                yh: ws.healthy,
                zh: design.z,
                yd: ws.diseased,
                zd,
                design: design.fitted.clone(),
            };
            let marker = params.marker;
            (Evaluator::Linear(design.fitted), marker, Some(params), Kind::Bnp(Box::new(state)))
        }
    };
    Ok(ArocFit {
        method,
        opts,
        sizes,
        evaluator,
        scale,
        params: params.unwrap_or_else(crate::model::StandardisationParams::identity),
        stream,
        kind,
        warnings,
    })
}

/// Fits and summarises in one step.
pub fn aroc(sample: &DiagnosticSample, formula: &Formula, method: ArocMethod, opts: &ArocOptions) -> Result<ArocResult> {
    fit_aroc(sample, formula, method, opts)?.roc()
}

/// Drops bootstrap replicates whose healthy refit failed (e.g. a factor
/// level missing from the resample), with a warning.
fn keep_successful(outcomes: Vec<Result<Member>>, warnings: &mut Vec<String>) -> Result<Vec<Member>> {
    let total = outcomes.len();
    let mut reps = Vec::with_capacity(total);
    let mut first_err = None;
    for o in outcomes {
        match o {
            Ok(m) => reps.push(m),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        if reps.is_empty() {
            return Err(e);
        }
        warnings.push(format!("{} of {total} bootstrap replicates skipped: {e}", total - reps.len()));
    }
    Ok(reps)
}

fn linear_placements(h: &Healthy, zd: &DMatrix<f64>, yd: &[f64]) -> Vec<f64> {
    let Healthy::Linear { beta, sigma, error } = h else { unreachable!("linear healthy model") };
    yd.iter()
        .enumerate()
        .map(|(j, &y)| {
            let mu: f64 = zd.row(j).iter().zip(beta).map(|(z, b)| z * b).sum();
            1.0 - error.cdf((y - mu) / sigma)
        })
        .collect()
}

fn kernel_placements(h: &Healthy, xd: &[f64], yd: &[f64]) -> Result<Vec<f64>> {
    let Healthy::Kernel(fit, error) = h else { unreachable!("kernel healthy model") };
    xd.iter()
        .zip(yd)
        .map(|(&x, &y)| {
            let mu = fit.mean(x)?;
            let sd = fit.variance(x)?.sqrt();
            Ok(1.0 - error.cdf((y - mu) / sd))
        })
        .collect()
}

impl ArocFit {
    pub fn method(&self) -> ArocMethod {
        self.method
    }

    pub fn sample_sizes(&self) -> SampleSizes {
        self.sizes
    }

    pub fn ddp_draws(&self) -> Option<&DdpDraws> {
        match &self.kind {
            Kind::Bnp(b) => Some(&b.draws),
            _ => None,
        }
    }

    pub fn members(&self) -> usize {
        match &self.kind {
            Kind::Located { reps, .. } => reps.len(),
            Kind::Bnp(b) => b.draws.nsave(),
        }
    }

    /// Placement values and Dirichlet weights of posterior draw `s`.
    fn draw(&self, b: &BnpState, s: usize) -> (Vec<f64>, Vec<f64>) {
        let u = b.yd.iter().zip(&b.zd).map(|(&y, z)| 1.0 - b.draws.mixture_at(s, z).cdf(y)).collect();
        let mut rng = self.stream.substream(labels::PLACEMENT_WEIGHTS, s as u64).rng();
        (u, dirichlet_flat(&mut rng, b.yd.len()))
    }

    /// Placement values of the plug-in fit, or their posterior mean.
    pub fn placement_values(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Located { est, .. } => est.u.clone(),
            Kind::Bnp(b) => {
                let n = b.draws.nsave().max(1) as f64;
                // Collected first so the summation order does not depend on scheduling.
                let draws: Vec<Vec<f64>> = (0..b.draws.nsave()).into_par_iter().map(|s| self.draw(b, s).0).collect();
                let mut sums = vec![0.0; b.yd.len()];
                for u in &draws {
                    sums.iter_mut().zip(u).for_each(|(a, v)| *a += v);
                }
                sums.iter().map(|v| v / n).collect()
            }
        }
    }

    /// Bayesian bootstrap weights of posterior draw `s` (dependent DPM only).
    pub fn placement_weights(&self, s: usize) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Bnp(b) if s < b.draws.nsave() => Some(self.draw(b, s).1),
            _ => None,
        }
    }

    fn summarise(&self, s: usize) -> StepSummary {
        let p = self.opts.p.as_slice();
        match &self.kind {
            Kind::Located { reps, .. } => {
                let u = &reps[s].u;
                step_summary(u, &uniform_weights(u.len()), p, self.opts.pauc)
            }
            Kind::Bnp(b) => {
                let (u, q) = self.draw(b, s);
                step_summary(&u, &q, p, self.opts.pauc)
            }
        }
    }

    pub fn roc(&self) -> Result<ArocResult> {
        let members: Vec<StepSummary> = (0..self.members()).into_par_iter().map(|s| self.summarise(s)).collect();
        let curves: Vec<Vec<f64>> = members.iter().map(|m| m.aroc.clone()).collect();
        let col = |f: fn(&StepSummary) -> f64| members.iter().map(f).collect::<Vec<f64>>();
        let (aauc, yi, p_star) = (col(|m| m.aauc), col(|m| m.yi), col(|m| m.p_star));
        let paucs: Vec<f64> = members.iter().filter_map(|m| m.pauc).collect();
        let (band, aauc, pauc, yi, p_star) = match &self.kind {
            Kind::Located { est, .. } => {
                let e = step_summary(&est.u, &uniform_weights(est.u.len()), self.opts.p.as_slice(), self.opts.pauc);
                (
                    Band::from_bootstrap(e.aroc, &curves),
                    Interval::from_bootstrap(e.aauc, &aauc),
                    e.pauc.map(|v| Interval::from_bootstrap(v, &paucs)),
                    Interval::from_bootstrap(e.yi, &yi),
                    Interval::from_bootstrap(e.p_star, &p_star),
                )
            }
            Kind::Bnp(_) => {
                if members.is_empty() {
                    return Err(Error::MissingDraws);
                }
                (
                    Band::from_ensemble(&curves),
                    Interval::from_ensemble(&aauc),
                    self.opts.pauc.map(|_| Interval::from_ensemble(&paucs)),
                    Interval::from_ensemble(&yi),
                    Interval::from_ensemble(&p_star),
                )
            }
        };
        let mut warnings = self.warnings.clone();
        let fit = match &self.kind {
            Kind::Bnp(b) => {
                let ll = LogLikMatrix::new(b.draws.log_likelihood(&b.yh, &b.zh))?.shifted(-self.scale.sd.ln());
                let fit = FitCriteria::from_loglik(&ll);
                warnings.extend(fit.warnings.iter().map(|w| format!("healthy: {w}")));
                Some(fit)
            }
            _ => None,
        };
        Ok(ArocResult {
            method: self.method,
            est_cdf: (self.method == ArocMethod::Sp).then_some(self.opts.est_cdf),
            p: self.opts.p.as_slice().to_vec(),
            aroc: band,
            aauc,
            pauc: self.opts.pauc.zip(pauc).map(|(c, estimate)| PaucSummary {
                focus: c.focus,
                value: c.value,
                normalised: true,
                estimate,
            }),
            yi,
            p_star,
            ensemble: self.opts.keep_ensemble.then_some(curves),
            fit,
            bandwidths: match &self.kind {
                Kind::Located { bandwidths, .. } => *bandwidths,
                Kind::Bnp(_) => None,
            },
            sample_sizes: self.sizes,
            warnings,
        })
    }

    /// Healthy conditional CDFs of one fit at every row of `frame` (working
    /// covariate scale for the dependent DPM).
    fn healthy_cdfs(&self, h: &Healthy, frame: &CovariateFrame) -> Result<Vec<LocationScaleCdf>> {
        match (h, &self.evaluator) {
            (Healthy::Linear { beta, sigma, error }, Evaluator::Linear(design)) => {
                let z = design.predict(frame, self.opts.extrapolate)?;
                Ok((0..z.nrows())
                    .map(|r| LocationScaleCdf {
                        mu: z.row(r).iter().zip(beta).map(|(a, b)| a * b).sum(),
                        sigma: *sigma,
                        error: error.clone(),
                    })
                    .collect())
            }
            (Healthy::Kernel(fit, error), Evaluator::Kernel(var)) => frame
                .continuous(var)?
                .iter()
                .map(|&x| {
                    fit.check_range(x)?;
                    Ok(LocationScaleCdf { mu: fit.mean(x)?, sigma: fit.variance(x)?.sqrt(), error: error.clone() })
                })
                .collect(),
            _ => unreachable!("healthy model matches its evaluator"),
        }
    }

    /// Covariate-specific thresholds `c_x = F_H^{-1}(1 - p* | x)` at the
    /// YI-optimal FPF `p*`, one row per `newdata` row on the original
    /// marker scale. The FPF column is `p*` and the TPF column `AROC(p*)`.
    pub fn thresholds(&self, newdata: &CovariateFrame) -> Result<ThresholdResult> {
        let to_draw = |c: f64, s: &StepSummary| ThresholdDraw {
            threshold: c,
            yi: s.yi,
            fpf: s.p_star,
            tpf: s.p_star + s.yi,
            sign: 1.0,
        };
        let nrows = newdata.nrows();
        let per_member: Vec<Vec<ThresholdDraw>> = match &self.kind {
            Kind::Located { reps, .. } => reps
                .par_iter()
                .enumerate()
                .map(|(s, m)| {
                    let sum = self.summarise(s);
                    let cdfs = self.healthy_cdfs(&m.healthy, newdata)?;
                    Ok(cdfs.iter().map(|f| to_draw(f.quantile(1.0 - sum.p_star), &sum)).collect())
                })
                .collect::<Result<_>>()?,
            Kind::Bnp(b) => {
                let work = self.params.apply_frame(newdata)?;
                let z = design_rows(&b.design.predict(&work, self.opts.extrapolate)?);
                (0..b.draws.nsave())
                    .into_par_iter()
                    .map(|s| {
                        let sum = self.summarise(s);
                        Ok(z.iter().map(|zr| to_draw(b.draws.mixture_at(s, zr).quantile(1.0 - sum.p_star), &sum)).collect())
                    })
                    .collect::<Result<_>>()?
            }
        };
        let est: Option<Vec<ThresholdDraw>> = match &self.kind {
            Kind::Located { est, .. } => {
                let sum = step_summary(&est.u, &uniform_weights(est.u.len()), self.opts.p.as_slice(), None);
                let cdfs = self.healthy_cdfs(&est.healthy, newdata)?;
                Some(cdfs.iter().map(|f| to_draw(f.quantile(1.0 - sum.p_star), &sum)).collect())
            }
            Kind::Bnp(_) => None,
        };
        if est.is_none() && per_member.is_empty() {
            return Err(Error::MissingDraws);
        }
        let rows = (0..nrows)
            .map(|r| {
                let draws: Vec<ThresholdDraw> = per_member.iter().map(|m| m[r]).collect();
                let row = match &est {
                    Some(e) => ThresholdRow::from_bootstrap(e[r], &draws, ThresholdCriterion::Yi),
                    None => ThresholdRow::from_ensemble(&draws, ThresholdCriterion::Yi),
                };
                row.destandardise(self.scale.mean, self.scale.sd)
            })
            .collect();
        Ok(ThresholdResult { criterion: ThresholdCriterion::Yi, target_fpf: None, rows })
    }
}
