//! Pooled ROC curves (no covariates): empirical, kernel, Bayesian bootstrap
//! and DPM estimators sharing one result type.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::{CdfModel, EmpiricalCdf, KernelCdf, NormalMixture};
use crate::diagnostics::{predictive_checks, quantile_residuals, FitCriteria, LogLikMatrix, PredictiveCheck, QqReport};
use crate::dpm::{fit_dpm, DpmDraws, DpmPrior, McmcControl, PriorOverrides};
use crate::error::{Error, Result};
use crate::kernel::{lscv_bandwidth, silverman_bandwidth, Bandwidth, BandwidthMethod, LscvTarget};
use crate::model::{Affine, DiagnosticSample, FpfGrid, Group};
use crate::sampling::{dirichlet_flat, labels, resample, RngStream};
use crate::stats::{Band, Interval};
use crate::summaries::{
    empirical_curve_summary, empirical_tnf_area, fpf_threshold, mixture_auc_closed, placement_pauc, placement_roc,
    placements, smooth_curve_summary, threshold_grid, threshold_target, tnf_area, yi_threshold, CurveSummary, PaucControl, PaucFocus,
    PaucSummary, ThresholdCriterion, ThresholdDraw, ThresholdResult, ThresholdRow,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PooledMethod {
    #[serde(rename = "emp")]
    Empirical,
    Kernel,
    Bb,
    Dpm,
}

impl PooledMethod {
    pub fn is_bayesian(self) -> bool {
        matches!(self, PooledMethod::Bb | PooledMethod::Dpm)
    }

    pub fn label(self) -> &'static str {
        match self {
            PooledMethod::Empirical => "Empirical",
            PooledMethod::Kernel => "Kernel-based",
            PooledMethod::Bb => "Bayesian bootstrap",
            PooledMethod::Dpm => "Bayesian DPM",
        }
    }
}

impl FromStr for PooledMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "emp" | "empirical" => Ok(Self::Empirical),
            "kernel" => Ok(Self::Kernel),
            "bb" => Ok(Self::Bb),
            "dpm" => Ok(Self::Dpm),
            _ => Err(Error::Config(format!("unknown pooled method '{s}' (emp, kernel, bb, dpm)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PooledOptions {
    pub p: FpfGrid,
    pub pauc: Option<PaucControl>,
    /// Bootstrap resamples for the frequentist estimators.
    pub bootstrap: usize,
    pub bandwidth: BandwidthMethod,
    /// Dirichlet weight draws for the Bayesian bootstrap.
    pub bb_draws: usize,
    pub prior_h: Option<DpmPrior>,
    pub prior_d: Option<DpmPrior>,
    /// Applied to both groups on top of the automatic or explicit priors.
    pub overrides: PriorOverrides,
    pub mcmc: McmcControl,
    pub standardise: bool,
    /// Grid length for posterior density summaries (DPM only).
    pub density_points: Option<usize>,
    pub keep_ensemble: bool,
    pub seed: u64,
}

impl Default for PooledOptions {
    fn default() -> Self {
        Self {
            p: FpfGrid::default(),
            pauc: None,
            bootstrap: 500,
            bandwidth: BandwidthMethod::Srt,
            bb_draws: 5000,
            prior_h: None,
            prior_d: None,
            overrides: PriorOverrides::default(),
            mcmc: McmcControl::default(),
            standardise: true,
            density_points: None,
            keep_ensemble: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub healthy: usize,
    pub diseased: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub healthy: FitCriteria,
    pub diseased: FitCriteria,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub band: Band,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupDensities {
    pub healthy: DensityEstimate,
    pub diseased: DensityEstimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupBandwidths {
    pub healthy: Bandwidth,
    pub diseased: Bandwidth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub method: PooledMethod,
    pub p: Vec<f64>,
    pub roc: Band,
    pub auc: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauc: Option<PaucSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<GroupDensities>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<GroupFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<GroupBandwidths>,
    pub sample_sizes: SampleSizes,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

type CdfPair = (Box<dyn CdfModel>, Box<dyn CdfModel>);

#[allow(clippy::large_enum_variant)]
enum Kind {
    Empirical,
    Kernel(GroupBandwidths),
    Bb,
    Dpm { h: DpmDraws, d: DpmDraws },
}

/// A fitted pooled estimator. Ensemble members (bootstrap resamples,
/// Bayesian bootstrap weights or posterior draws) are regenerated on demand
/// from indexed streams, so every summary is deterministic.
pub struct PooledFit {
    method: PooledMethod,
    opts: PooledOptions,
    yh: Vec<f64>,
    yd: Vec<f64>,
    scale: Affine,
    stream: RngStream,
    kind: Kind,
    warnings: Vec<String>,
}

fn pauc_summary(ctrl: PaucControl, estimate: Interval) -> PaucSummary {
    PaucSummary { focus: ctrl.focus, value: ctrl.value, normalised: true, estimate }
}

/// Fits a pooled estimator.
pub fn fit_pooled(sample: &DiagnosticSample, method: PooledMethod, opts: &PooledOptions) -> Result<PooledFit> {
    let pauc = opts.pauc.map(PaucControl::validated).transpose()?;
    let opts = PooledOptions { pauc, ..opts.clone() };
    let split = sample.split_groups()?;
    let stream = RngStream::new(opts.seed);
    let mut warnings = Vec::new();
    let standardise = method == PooledMethod::Dpm && opts.standardise;
    let scale = if standardise { Affine::fit(sample.marker(), "marker")? } else { Affine::IDENTITY };
    let yh: Vec<f64> = split.healthy.iter().map(|&v| scale.apply(v)).collect();
    let yd: Vec<f64> = split.diseased.iter().map(|&v| scale.apply(v)).collect();
    let kind = match method {
        PooledMethod::Empirical => Kind::Empirical,
        PooledMethod::Bb => Kind::Bb,
        PooledMethod::Kernel => {
            let bw = |y: &[f64], what: &str| -> Result<Bandwidth> {
                if y.len() < 2 || crate::stats::sd(y) == 0.0 {
                    return Err(Error::ZeroVariance(format!("{what} marker")));
                }
                match opts.bandwidth {
                    BandwidthMethod::Srt => silverman_bandwidth(y),
                    BandwidthMethod::Lscv => {
                        let r = lscv_bandwidth(&[], y, LscvTarget::Cdf)?;
                        Ok(r.bandwidth)
                    }
                }
            };
            let healthy = bw(&yh, "healthy")?;
            let diseased = bw(&yd, "diseased")?;
            for (g, b) in [("healthy", healthy), ("diseased", diseased)] {
                if b.method != opts.bandwidth {
                    warnings.push(format!("{g}: cross-validation degenerate, Silverman bandwidth used"));
                }
            }
            Kind::Kernel(GroupBandwidths { healthy, diseased })
        }
        PooledMethod::Dpm => {
            let ph = opts.overrides.apply_dpm(opts.prior_h.unwrap_or_else(|| DpmPrior::for_data(&yh, standardise)));
            let pd = opts.overrides.apply_dpm(opts.prior_d.unwrap_or_else(|| DpmPrior::for_data(&yd, standardise)));
            let (h, d) = rayon::join(
                || fit_dpm(&yh, &ph, &opts.mcmc, stream.substream(labels::CHAIN_HEALTHY, 0)),
                || fit_dpm(&yd, &pd, &opts.mcmc, stream.substream(labels::CHAIN_DISEASED, 0)),
            );
            Kind::Dpm { h: h?, d: d? }
        }
    };
    Ok(PooledFit { method, opts, yh, yd, scale, stream, kind, warnings })
}

/// Fits and summarises in one step.
pub fn pooled_roc(sample: &DiagnosticSample, method: PooledMethod, opts: &PooledOptions) -> Result<RocResult> {
    fit_pooled(sample, method, opts)?.roc()
}

impl PooledFit {
    pub fn method(&self) -> PooledMethod {
        self.method
    }

    pub fn sample_sizes(&self) -> SampleSizes {
        SampleSizes { healthy: self.yh.len(), diseased: self.yd.len() }
    }

    pub fn dpm_draws(&self) -> Option<(&DpmDraws, &DpmDraws)> {
        match &self.kind {
            Kind::Dpm { h, d } => Some((h, d)),
            _ => None,
        }
    }

    pub fn marker_scale(&self) -> Affine {
        self.scale
    }

    /// Number of ensemble members.
    pub fn members(&self) -> usize {
        match &self.kind {
            Kind::Empirical | Kind::Kernel(_) => self.opts.bootstrap,
            Kind::Bb => self.opts.bb_draws,
            Kind::Dpm { h, .. } => h.nsave(),
        }
    }

    fn bb_weights(&self, s: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = self.stream.substream(labels::BAYES_BOOT, s as u64).rng();
        let q1 = dirichlet_flat(&mut rng, self.yh.len());
        let q2 = dirichlet_flat(&mut rng, self.yd.len());
        (q1, q2)
    }

    fn resampled(&self, b: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = self.stream.substream(labels::BOOTSTRAP, b as u64).rng();
        let h = resample(&mut rng, &self.yh);
        let d = resample(&mut rng, &self.yd);
        (h, d)
    }

    /// Frequentist plug-in CDF pair; `None` for the Bayesian estimators.
    fn plugin(&self) -> Result<Option<CdfPair>> {
        Ok(match &self.kind {
            Kind::Empirical => {
                Some((Box::new(EmpiricalCdf::new(&self.yh)?), Box::new(EmpiricalCdf::new(&self.yd)?)))
            }
            Kind::Kernel(bw) => Some((
                Box::new(KernelCdf::new(&self.yh, bw.healthy.value)?),
                Box::new(KernelCdf::new(&self.yd, bw.diseased.value)?),
            )),
            _ => None,
        })
    }

    /// CDF pair of ensemble member `s` on the working scale.
    fn member(&self, s: usize) -> Result<CdfPair> {
        Ok(match &self.kind {
            Kind::Empirical => {
                let (h, d) = self.resampled(s);
                (Box::new(EmpiricalCdf::new(&h)?), Box::new(EmpiricalCdf::new(&d)?))
            }
            Kind::Kernel(bw) => {
                let (h, d) = self.resampled(s);
                (Box::new(KernelCdf::new(&h, bw.healthy.value)?), Box::new(KernelCdf::new(&d, bw.diseased.value)?))
            }
            Kind::Bb => {
                let (q1, q2) = self.bb_weights(s);
                (Box::new(EmpiricalCdf::weighted(&self.yh, &q1)?), Box::new(EmpiricalCdf::weighted(&self.yd, &q2)?))
            }
            Kind::Dpm { h, d } => (Box::new(h.mixture(s)), Box::new(d.mixture(s))),
        })
    }

    fn summarise_empirical(&self, yh: &[f64], yd: &[f64]) -> Result<CurveSummary> {
        empirical_curve_summary(yh, yd, self.opts.p.as_slice(), self.opts.pauc)
    }

    fn summarise_smooth(&self, fh: &dyn CdfModel, fd: &dyn CdfModel, auc: Option<f64>) -> CurveSummary {
        smooth_curve_summary(fh, fd, self.opts.p.as_slice(), self.opts.pauc, auc)
    }

    fn summarise_bb(&self, s: usize) -> CurveSummary {
        let (q1, q2) = self.bb_weights(s);
        let ud = placements(&self.yh, &q1, &self.yd, 1.0);
        let auc = 1.0 - ud.iter().zip(&q2).map(|(u, w)| u * w).sum::<f64>();
        let pauc = self.opts.pauc.map(|c| {
            let uh = if c.focus == PaucFocus::Tpf { placements(&self.yd, &q2, &self.yh, 1.0) } else { Vec::new() };
            placement_pauc(c, &ud, &q2, &uh, &q1)
        });
        CurveSummary { roc: placement_roc(&ud, &q2, self.opts.p.as_slice()), auc, pauc }
    }

    fn summarise_member(&self, s: usize) -> Result<CurveSummary> {
        match &self.kind {
            Kind::Empirical => {
                let (h, d) = self.resampled(s);
                self.summarise_empirical(&h, &d)
            }
            Kind::Kernel(bw) => {
                let (h, d) = self.resampled(s);
                let fh = KernelCdf::new(&h, bw.healthy.value)?;
                let fd = KernelCdf::new(&d, bw.diseased.value)?;
                Ok(self.summarise_smooth(&fh, &fd, None))
            }
            Kind::Bb => Ok(self.summarise_bb(s)),
            Kind::Dpm { h, d } => {
                let (mh, md) = (h.mixture(s), d.mixture(s));
                let auc = mixture_auc_closed(&mh, &md);
                Ok(self.summarise_smooth(&mh, &md, Some(auc)))
            }
        }
    }

    fn plugin_summary(&self) -> Result<Option<CurveSummary>> {
        Ok(match &self.kind {
            Kind::Empirical => Some(self.summarise_empirical(&self.yh, &self.yd)?),
            Kind::Kernel(bw) => {
                let fh = KernelCdf::new(&self.yh, bw.healthy.value)?;
                let fd = KernelCdf::new(&self.yd, bw.diseased.value)?;
                Some(self.summarise_smooth(&fh, &fd, None))
            }
            _ => None,
        })
    }

    /// ROC curve, AUC and optional partial area with intervals.
    pub fn roc(&self) -> Result<RocResult> {
        let members: Vec<CurveSummary> =
            (0..self.members()).into_par_iter().map(|s| self.summarise_member(s)).collect::<Result<_>>()?;
        let rows: Vec<Vec<f64>> = members.iter().map(|m| m.roc.clone()).collect();
        let aucs: Vec<f64> = members.iter().map(|m| m.auc).collect();
        let paucs: Vec<f64> = members.iter().filter_map(|m| m.pauc).collect();
        let (roc, auc, pauc) = match self.plugin_summary()? {
            Some(est) => (
                Band::from_bootstrap(est.roc, &rows),
                Interval::from_bootstrap(est.auc, &aucs),
                est.pauc.map(|v| Interval::from_bootstrap(v, &paucs)),
            ),
            None => {
                if members.is_empty() {
                    return Err(Error::MissingDraws);
                }
                (Band::from_ensemble(&rows), Interval::from_ensemble(&aucs), self.opts.pauc.map(|_| Interval::from_ensemble(&paucs)))
            }
        };
        let mut warnings = self.warnings.clone();
        let fit = match &self.kind {
            Kind::Dpm { h, d } => {
                let fit = GroupFit { healthy: self.criteria(h, &self.yh)?, diseased: self.criteria(d, &self.yd)? };
                warnings.extend(fit.healthy.warnings.iter().map(|w| format!("healthy: {w}")));
                warnings.extend(fit.diseased.warnings.iter().map(|w| format!("diseased: {w}")));
                Some(fit)
            }
            _ => None,
        };
        Ok(RocResult {
            method: self.method,
            p: self.opts.p.as_slice().to_vec(),
            roc,
            auc,
            pauc: self.opts.pauc.zip(pauc).map(|(c, iv)| pauc_summary(c, iv)),
            ensemble: self.opts.keep_ensemble.then_some(rows),
            densities: self.densities()?,
            fit,
            bandwidths: match &self.kind {
                Kind::Kernel(bw) => Some(*bw),
                _ => None,
            },
            sample_sizes: self.sample_sizes(),
            warnings,
        })
    }

    fn criteria(&self, draws: &DpmDraws, y: &[f64]) -> Result<FitCriteria> {
        let ll = LogLikMatrix::new(draws.log_likelihood(y))?.shifted(-self.scale.sd.ln());
        Ok(FitCriteria::from_loglik(&ll))
    }

    /// Posterior density bands on the original marker scale (DPM only).
    fn densities(&self) -> Result<Option<GroupDensities>> {
        let (Kind::Dpm { h, d }, Some(points)) = (&self.kind, self.opts.density_points) else {
            return Ok(None);
        };
        if points < 2 {
            return Err(Error::Config("density grid needs at least two points".into()));
        }
        let all: Vec<f64> = self.yh.iter().chain(&self.yd).map(|&v| self.scale.invert(v)).collect();
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
        let one = |draws: &DpmDraws| -> DensityEstimate {
            let rows: Vec<Vec<f64>> = (0..draws.nsave())
                .into_par_iter()
                .map(|s| {
                    let m = draws.mixture(s);
                    grid.iter().map(|&y| m.pdf(self.scale.apply(y)) / self.scale.sd).collect()
                })
                .collect();
            DensityEstimate {
                grid: grid.clone(),
                band: Band::from_ensemble(&rows),
                ensemble: self.opts.keep_ensemble.then_some(rows),
            }
        };
        Ok(Some(GroupDensities { healthy: one(h), diseased: one(d) }))
    }

    /// Area under the TNF representation of the curve, which must agree
    /// with the AUC.
    pub fn tnf_area(&self) -> Result<Interval> {
        let area = |fh: &dyn CdfModel, fd: &dyn CdfModel| -> f64 { tnf_area(fh, fd) };
        let member = |s: usize| -> Result<f64> {
            Ok(match &self.kind {
                Kind::Empirical => {
                    let (h, d) = self.resampled(s);
                    empirical_tnf_area(&h, &d)
                }
                Kind::Bb => {
                    let (q1, q2) = self.bb_weights(s);
                    // reverse placements with the complementary tie convention
                    placements(&self.yd, &q2, &self.yh, 0.0).iter().zip(&q1).map(|(u, w)| u * w).sum()
                }
                _ => {
                    let (fh, fd) = self.member(s)?;
                    area(fh.as_ref(), fd.as_ref())
                }
            })
        };
        let reps: Vec<f64> = (0..self.members()).into_par_iter().map(member).collect::<Result<_>>()?;
        Ok(match &self.kind {
            Kind::Empirical => Interval::from_bootstrap(
                empirical_tnf_area(&self.yh, &self.yd),
                &reps,
            ),
            Kind::Kernel(_) => {
                let (fh, fd) = self.plugin()?.expect("kernel plug-in");
                Interval::from_bootstrap(area(fh.as_ref(), fd.as_ref()), &reps)
            }
            _ => Interval::from_ensemble(&reps),
        })
    }

    /// Optimal threshold by the Youden index, or the threshold achieving a
    /// target FPF. Thresholds are on the original marker scale.
    pub fn thresholds(&self, criterion: ThresholdCriterion, target_fpf: Option<f64>) -> Result<ThresholdResult> {
        let target = threshold_target(criterion, target_fpf)?;
        let all: Vec<f64> = self.yh.iter().chain(&self.yd).copied().collect();
        let grid = threshold_grid(&all)?;
        let eval = |fh: &dyn CdfModel, fd: &dyn CdfModel| -> ThresholdDraw {
            match target {
                Some(t) => fpf_threshold(fh, fd, t),
                None => yi_threshold(fh, fd, &grid),
            }
        };
        let draws: Vec<ThresholdDraw> = (0..self.members())
            .into_par_iter()
            .map(|s| self.member(s).map(|(fh, fd)| eval(fh.as_ref(), fd.as_ref())))
            .collect::<Result<_>>()?;
        let row = match self.plugin()? {
            Some((fh, fd)) => ThresholdRow::from_bootstrap(eval(fh.as_ref(), fd.as_ref()), &draws, criterion),
            None => ThresholdRow::from_ensemble(&draws, criterion),
        };
        Ok(ThresholdResult {
            criterion,
            target_fpf: target,
            rows: vec![row.destandardise(self.scale.mean, self.scale.sd)],
        })
    }

    /// Quantile residuals of one group: per posterior draw for the Bayesian
    /// estimators, from the plug-in fit otherwise.
    pub fn quantile_residuals(&self, group: Group) -> Result<QqReport> {
        let y = match group {
            Group::Healthy => &self.yh,
            Group::Diseased => &self.yd,
        };
        let pick = |pair: CdfPair| match group {
            Group::Healthy => pair.0,
            Group::Diseased => pair.1,
        };
        let pit: Vec<Vec<f64>> = match self.plugin()? {
            Some(pair) => {
                let f = pick(pair);
                vec![y.iter().map(|&v| f.cdf(v)).collect()]
            }
            None => (0..self.members())
                .into_par_iter()
                .map(|s| {
                    let f = pick(self.member(s)?);
                    Ok(y.iter().map(|&v| f.cdf(v)).collect())
                })
                .collect::<Result<_>>()?,
        };
        quantile_residuals(&pit)
    }

    /// Posterior predictive check of one group (DPM only).
    pub fn predictive_check(&self, group: Group, n_rep_densities: usize) -> Result<PredictiveCheck> {
        let Kind::Dpm { h, d } = &self.kind else {
            return Err(Error::Config("predictive checks need the DPM estimator".into()));
        };
        let (draws, y, idx) = match group {
            Group::Healthy => (h, &self.yh, 0),
            Group::Diseased => (d, &self.yd, 1),
        };
        let observed: Vec<f64> = y.iter().map(|&v| self.scale.invert(v)).collect();
        let scale = self.scale;
        predictive_checks(draws.nsave(), &observed, n_rep_densities, self.stream.substream(labels::PREDICTIVE, idx), |s, _| {
            let m = draws.mixture(s);
            NormalMixture {
                weights: m.weights,
                means: m.means.iter().map(|&v| scale.invert(v)).collect(),
                sds: m.sds.iter().map(|&v| v * scale.sd).collect(),
            }
        })
    }
}
