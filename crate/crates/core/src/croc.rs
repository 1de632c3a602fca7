//! Covariate-specific ROC curves: induced linear regression (normal or
//! empirical errors), induced kernel location-scale regression, and a
//! Bayesian dependent DPM.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::{CdfModel, EmpiricalCdf, ErrorCdf, LocationScaleCdf};
use crate::design::{build_design, Design, OlsSolver};
use crate::diagnostics::{FitCriteria, LogLikMatrix};
use crate::dpm::{fit_ddp, DdpDraws, DdpPrior, McmcControl, PriorOverrides, AUTO_COMPONENTS};
use crate::error::{Error, Result};
use crate::formula::{Formula, Term};
use crate::kernel::{Bandwidths, LocationScaleFit};
use crate::model::{Affine, Column, CovariateFrame, DiagnosticSample, FpfGrid};
use crate::pooled::{DensityEstimate, GroupDensities, GroupFit, SampleSizes};
use crate::sampling::{labels, resample_indices, RngStream};
use crate::stats::{Band, Interval};
use crate::summaries::{
    empirical_curve_summary, empirical_tnf_area, fpf_threshold, mixture_auc_closed, smooth_curve_summary,
    threshold_grid, threshold_target, tnf_area, yi_threshold, CurveSummary, PaucControl, PaucSummary,
    ThresholdCriterion, ThresholdDraw, ThresholdResult, ThresholdRow,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrocMethod {
    Sp,
    Kernel,
    Bnp,
}

impl CrocMethod {
    pub fn is_bayesian(self) -> bool {
        self == CrocMethod::Bnp
    }

    pub fn label(self) -> &'static str {
        match self {
            CrocMethod::Sp => "semiparametric",
            CrocMethod::Kernel => "Kernel-based",
            CrocMethod::Bnp => "Bayesian nonparametric",
        }
    }
}

impl FromStr for CrocMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sp" => Ok(Self::Sp),
            "kernel" => Ok(Self::Kernel),
            "bnp" => Ok(Self::Bnp),
            _ => Err(Error::Config(format!("unknown covariate-specific method '{s}' (sp, kernel, bnp)"))),
        }
    }
}

/// Error distribution of the induced linear model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstCdf {
    #[default]
    Normal,
    Empirical,
}

impl FromStr for EstCdf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Self::Normal),
            "empirical" => Ok(Self::Empirical),
            _ => Err(Error::Config(format!("unknown error distribution '{s}' (normal, empirical)"))),
        }
    }
}

/// Regression formulas of the two groups. The response names the marker
/// column and is not otherwise used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrocFormulas {
    pub healthy: Formula,
    pub diseased: Formula,
}

impl CrocFormulas {
    pub fn parse(healthy: &str, diseased: &str) -> Result<Self> {
        Ok(Self { healthy: Formula::parse(healthy)?, diseased: Formula::parse(diseased)? })
    }

    /// The same formula for both groups.
    pub fn shared(formula: &str) -> Result<Self> {
        let f = Formula::parse(formula)?;
        Ok(Self { healthy: f.clone(), diseased: f })
    }

    pub fn variables(&self) -> Vec<String> {
        let mut out = self.healthy.variables();
        for v in self.diseased.variables() {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrocOptions {
    pub p: FpfGrid,
    pub pauc: Option<PaucControl>,
    /// Residual bootstrap replicates for the frequentist estimators.
    pub bootstrap: usize,
    pub est_cdf: EstCdf,
    /// Degree of the local polynomial mean fit (1 = local linear).
    pub kernel_order: usize,
    pub prior_h: Option<DdpPrior>,
    pub prior_d: Option<DdpPrior>,
    /// Applied to both groups on top of the automatic or explicit priors.
    pub overrides: PriorOverrides,
    pub mcmc: McmcControl,
    pub standardise: bool,
    pub density_points: Option<usize>,
    pub keep_ensemble: bool,
    /// Evaluate spline bases beyond the training range instead of failing.
    pub extrapolate: bool,
    pub seed: u64,
}

impl Default for CrocOptions {
    fn default() -> Self {
        Self {
            p: FpfGrid::default(),
            pauc: None,
            bootstrap: 500,
            est_cdf: EstCdf::Normal,
            kernel_order: 1,
            prior_h: None,
            prior_d: None,
            overrides: PriorOverrides::default(),
            mcmc: McmcControl::default(),
            standardise: true,
            density_points: None,
            keep_ensemble: false,
            extrapolate: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrocRow {
    pub roc: Band,
    pub auc: Interval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauc: Option<PaucSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<GroupDensities>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub term: String,
    pub estimate: Interval,
}

/// Regression coefficients per group (with `sigma` last) and the induced
/// ROC and TNF coefficients (`a` per design column, then `b`). The induced
/// blocks are empty unless both groups share one design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub healthy: Vec<CoefficientRow>,
    pub diseased: Vec<CoefficientRow>,
    pub roc: Vec<CoefficientRow>,
    pub tnf: Vec<CoefficientRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBandwidths {
    pub healthy: Bandwidths,
    pub diseased: Bandwidths,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CRocResult {
    pub method: CrocMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub est_cdf: Option<EstCdf>,
    pub p: Vec<f64>,
    pub newdata: CovariateFrame,
    /// One entry per newdata row.
    pub rows: Vec<CrocRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<GroupFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<KernelBandwidths>,
    pub sample_sizes: SampleSizes,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Location-scale model of one group evaluated at every newdata row.
#[derive(Clone, Debug)]
pub(crate) struct Conditional {
    pub(crate) mu: Vec<f64>,
    pub(crate) sigma: Vec<f64>,
    pub(crate) error: ErrorCdf,
}

impl Conditional {
    pub(crate) fn at(&self, r: usize) -> LocationScaleCdf {
        LocationScaleCdf { mu: self.mu[r], sigma: self.sigma[r], error: self.error.clone() }
    }

    /// `mu + sigma e` over the residuals; its empirical CDF is the model CDF.
    fn induced(&self, r: usize) -> Option<Vec<f64>> {
        match &self.error {
            ErrorCdf::Normal => None,
            ErrorCdf::Empirical(f) => Some(f.values().iter().map(|e| self.mu[r] + self.sigma[r] * e).collect()),
        }
    }
}

/// Regression coefficients and residual scale of both groups.
#[derive(Clone, Debug)]
struct Coefficients {
    beta_h: Vec<f64>,
    sigma_h: f64,
    beta_d: Vec<f64>,
    sigma_d: f64,
}

#[derive(Clone, Debug)]
struct Member {
    h: Conditional,
    d: Conditional,
    coef: Option<Coefficients>,
}

struct BnpState {
    h: DdpDraws,
    d: DdpDraws,
    yh: Vec<f64>,
    yd: Vec<f64>,
    zh: DMatrix<f64>,
    zd: DMatrix<f64>,
    new_h: Vec<Vec<f64>>,
    new_d: Vec<Vec<f64>>,
}

#[allow(clippy::large_enum_variant)]
enum Kind {
    Located { est: Member, reps: Vec<Member>, bandwidths: Option<KernelBandwidths> },
    Bnp(Box<BnpState>),
}

/// Healthy and diseased design rows at the newdata points.
pub type DesignRowPair<'a> = (&'a [Vec<f64>], &'a [Vec<f64>]);

/// A fitted covariate-specific estimator bound to its newdata frame.
pub struct CrocFit {
    method: CrocMethod,
    opts: CrocOptions,
    newdata: CovariateFrame,
    sizes: SampleSizes,
    /// Marker values of both groups on the working scale.
    all_y: Vec<f64>,
    scale: Affine,
    kind: Kind,
    coefficients: Option<CoefficientSummary>,
    warnings: Vec<String>,
}

/// Fits a covariate-specific estimator and prepares evaluation at `newdata`.
pub fn fit_croc(
    sample: &DiagnosticSample,
    formulas: &CrocFormulas,
    newdata: &CovariateFrame,
    method: CrocMethod,
    opts: &CrocOptions,
) -> Result<CrocFit> {
    let pauc = opts.pauc.map(PaucControl::validated).transpose()?;
    let opts = CrocOptions { pauc, ..opts.clone() };
    if newdata.nrows() == 0 {
        return Err(Error::Config("newdata has no rows".into()));
    }
    let split = sample.split_groups()?;
    let sizes = SampleSizes { healthy: split.n_healthy(), diseased: split.n_diseased() };
    let stream = RngStream::new(opts.seed);
    let mut fit = CrocFit {
        method,
        opts,
        newdata: newdata.clone(),
        sizes,
        all_y: sample.marker().to_vec(),
        scale: Affine::IDENTITY,
        kind: Kind::Located { est: placeholder(), reps: Vec::new(), bandwidths: None },
        coefficients: None,
        warnings: Vec::new(),
    };
    match method {
        CrocMethod::Sp => fit.fit_sp(sample, formulas, stream)?,
        CrocMethod::Kernel => fit.fit_kernel(sample, formulas, stream)?,
        CrocMethod::Bnp => fit.fit_bnp(sample, formulas, stream)?,
    }
    Ok(fit)
}

fn placeholder() -> Member {
    let c = Conditional { mu: Vec::new(), sigma: Vec::new(), error: ErrorCdf::Normal };
    Member { h: c.clone(), d: c, coef: None }
}

/// Fits and summarises in one step.
pub fn croc(
    sample: &DiagnosticSample,
    formulas: &CrocFormulas,
    newdata: &CovariateFrame,
    method: CrocMethod,
    opts: &CrocOptions,
) -> Result<CRocResult> {
    fit_croc(sample, formulas, newdata, method, opts)?.roc()
}

/// OLS fit of one group with `sigma^2 = SSR / (n - q)`.
#[derive(Clone, Debug)]
pub(crate) struct OlsFit {
    pub(crate) beta: Vec<f64>,
    pub(crate) fitted: Vec<f64>,
    pub(crate) sigma: f64,
    pub(crate) resid: Vec<f64>,
}

pub(crate) fn ols_fit(solver: &OlsSolver, y: &[f64], what: &str) -> Result<OlsFit> {
    let (n, q) = (y.len(), solver.design().ncols());
    if n <= q {
        return Err(Error::BadData(format!("{what}: {n} observations for {q} regression coefficients")));
    }
    let beta = solver.coefficients(y);
    let fitted: Vec<f64> = solver.fitted(&beta).iter().copied().collect();
    let ssr: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let sigma = (ssr / (n - q) as f64).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::ZeroVariance(format!("{what} residuals")));
    }
    let resid = y.iter().zip(&fitted).map(|(a, b)| (a - b) / sigma).collect();
    Ok(OlsFit { beta: beta.iter().copied().collect(), fitted, sigma, resid })
}

struct OlsGroup {
    solver: OlsSolver,
    znew: DMatrix<f64>,
    fit: OlsFit,
}

impl OlsGroup {
    fn new(design: &Design, y: &[f64], newdata: &CovariateFrame, extrapolate: bool, what: &str) -> Result<Self> {
        let solver = OlsSolver::new(&design.z)?;
        let znew = design.fitted.predict(newdata, extrapolate)?;
        let fit = ols_fit(&solver, y, what)?;
        Ok(Self { solver, znew, fit })
    }

    fn conditional(&self, fit: &OlsFit, est: EstCdf) -> Result<Conditional> {
        let mu: Vec<f64> = (0..self.znew.nrows())
            .map(|r| self.znew.row(r).iter().zip(&fit.beta).map(|(z, b)| z * b).sum())
            .collect();
        let error = match est {
            EstCdf::Normal => ErrorCdf::Normal,
            EstCdf::Empirical => ErrorCdf::Empirical(Arc::new(EmpiricalCdf::new(&fit.resid)?)),
        };
        Ok(Conditional { sigma: vec![fit.sigma; mu.len()], mu, error })
    }

    /// Refit on `fitted + sigma e*` with standardised residuals resampled.
    fn replicate<R: rand::Rng + ?Sized>(&self, rng: &mut R, what: &str) -> Result<OlsFit> {
        let idx = resample_indices(rng, self.fit.resid.len());
        let y: Vec<f64> =
            idx.iter().zip(&self.fit.fitted).map(|(&i, m)| m + self.fit.sigma * self.fit.resid[i]).collect();
        ols_fit(&self.solver, &y, what)
    }
}

/// Kernel location-scale fit with its training means and scales cached for
/// the residual bootstrap.
struct KernelGroup {
    x: Vec<f64>,
    fit: LocationScaleFit,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl KernelGroup {
    fn new(x: &[f64], y: &[f64], order: usize) -> Result<Self> {
        let fit = LocationScaleFit::fit_lscv(x, y, order)?;
        let mean = x.iter().map(|&v| fit.mean(v)).collect::<Result<Vec<_>>>()?;
        let sd = x.iter().map(|&v| fit.variance(v).map(f64::sqrt)).collect::<Result<Vec<_>>>()?;
        Ok(Self { x: x.to_vec(), fit, mean, sd })
    }

    fn conditional(fit: &LocationScaleFit, xnew: &[f64]) -> Result<Conditional> {
        let mu = xnew.iter().map(|&v| fit.mean(v)).collect::<Result<Vec<_>>>()?;
        let sigma = xnew.iter().map(|&v| fit.variance(v).map(f64::sqrt)).collect::<Result<Vec<_>>>()?;
        let error = ErrorCdf::Empirical(Arc::new(EmpiricalCdf::new(&fit.residuals)?));
        Ok(Conditional { mu, sigma, error })
    }

    fn replicate<R: rand::Rng + ?Sized>(&self, rng: &mut R, xnew: &[f64]) -> Result<Conditional> {
        let idx = resample_indices(rng, self.x.len());
        let res = &self.fit.residuals;
        let y: Vec<f64> = idx.iter().enumerate().map(|(i, &j)| self.mean[i] + self.sd[i] * res[j]).collect();
        let fit = LocationScaleFit::fit_with(&self.x, &y, self.fit.order, self.fit.bandwidths())?;
        Self::conditional(&fit, xnew)
    }
}

/// The single continuous covariate of a kernel model.
pub(crate) fn kernel_covariate(formulas: &CrocFormulas, sample: &DiagnosticSample) -> Result<String> {
    let single = |f: &Formula| match f.terms.as_slice() {
        [Term::Main(v)] => Some(v.clone()),
        _ => None,
    };
    match (single(&formulas.healthy), single(&formulas.diseased)) {
        (Some(a), Some(b)) if a == b => {
            sample.covariates().continuous(&a)?;
            Ok(a)
        }
        _ => Err(Error::Config("the kernel estimator needs exactly one continuous covariate, shared by both groups".into())),
    }
}

pub(crate) fn design_rows(z: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..z.nrows()).map(|i| z.row(i).iter().copied().collect()).collect()
}

impl CrocFit {
    fn fit_sp(&mut self, sample: &DiagnosticSample, formulas: &CrocFormulas, stream: RngStream) -> Result<()> {
        let split = sample.split_groups()?;
        let dh = build_design(&split.healthy_cov, &formulas.healthy)?;
        let dd = build_design(&split.diseased_cov, &formulas.diseased)?;
        let ext = self.opts.extrapolate;
        let gh = OlsGroup::new(&dh, &split.healthy, &self.newdata, ext, "healthy")?;
        let gd = OlsGroup::new(&dd, &split.diseased, &self.newdata, ext, "diseased")?;
        let est_cdf = self.opts.est_cdf;
        let member = |fh: &OlsFit, fd: &OlsFit| -> Result<Member> {
            Ok(Member {
                h: gh.conditional(fh, est_cdf)?,
                d: gd.conditional(fd, est_cdf)?,
                coef: Some(Coefficients {
                    beta_h: fh.beta.clone(),
                    sigma_h: fh.sigma,
                    beta_d: fd.beta.clone(),
                    sigma_d: fd.sigma,
                }),
            })
        };
        let est = member(&gh.fit, &gd.fit)?;
        let reps: Vec<Member> = (0..self.opts.bootstrap)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream.substream(labels::BOOTSTRAP, b as u64).rng();
                let fh = gh.replicate(&mut rng, "healthy")?;
                let fd = gd.replicate(&mut rng, "diseased")?;
                member(&fh, &fd)
            })
            .collect::<Result<_>>()?;
        let coefs: Vec<Coefficients> = reps.iter().filter_map(|m| m.coef.clone()).collect();
        self.coefficients = Some(coefficient_summary(
            &dh.fitted.labels,
            &dd.fitted.labels,
            est.coef.as_ref(),
            &coefs,
        ));
        self.warnings.extend(dh.warnings.iter().map(|w| format!("healthy: {w}")));
        self.warnings.extend(dd.warnings.iter().map(|w| format!("diseased: {w}")));
        self.kind = Kind::Located { est, reps, bandwidths: None };
        Ok(())
    }

    fn fit_kernel(&mut self, sample: &DiagnosticSample, formulas: &CrocFormulas, stream: RngStream) -> Result<()> {
        let var = kernel_covariate(formulas, sample)?;
        let split = sample.split_groups()?;
        let xh = split.healthy_cov.continuous(&var)?;
        let xd = split.diseased_cov.continuous(&var)?;
        let xnew = self.newdata.continuous(&var)?.to_vec();
        let order = self.opts.kernel_order;
        let (gh, gd) = rayon::join(|| KernelGroup::new(xh, &split.healthy, order), || {
            KernelGroup::new(xd, &split.diseased, order)
        });
        let (gh, gd) = (gh?, gd?);
        for &x in &xnew {
            gh.fit.check_range(x)?;
            gd.fit.check_range(x)?;
        }
        self.warnings.extend(gh.fit.warnings.iter().map(|w| format!("healthy: {w}")));
        self.warnings.extend(gd.fit.warnings.iter().map(|w| format!("diseased: {w}")));
        let est = Member {
            h: KernelGroup::conditional(&gh.fit, &xnew)?,
            d: KernelGroup::conditional(&gd.fit, &xnew)?,
            coef: None,
        };
        let reps: Vec<Member> = (0..self.opts.bootstrap)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream.substream(labels::BOOTSTRAP, b as u64).rng();
                let h = gh.replicate(&mut rng, &xnew)?;
                let d = gd.replicate(&mut rng, &xnew)?;
                Ok(Member { h, d, coef: None })
            })
            .collect::<Result<_>>()?;
        let bandwidths = Some(KernelBandwidths { healthy: gh.fit.bandwidths(), diseased: gd.fit.bandwidths() });
        self.kind = Kind::Located { est, reps, bandwidths };
        Ok(())
    }

    fn fit_bnp(&mut self, sample: &DiagnosticSample, formulas: &CrocFormulas, stream: RngStream) -> Result<()> {
        let standardise = self.opts.standardise;
        let (work, params) = sample.standardise(standardise)?;
        let split = work.split_groups()?;
        let dh = build_design(&split.healthy_cov, &formulas.healthy)?;
        let dd = build_design(&split.diseased_cov, &formulas.diseased)?;
        let newstd = params.apply_frame(&self.newdata)?;
        let new_h = design_rows(&dh.fitted.predict(&newstd, self.opts.extrapolate)?);
        let new_d = design_rows(&dd.fitted.predict(&newstd, self.opts.extrapolate)?);
        let auto = |d: &Design, y: &[f64]| DdpPrior::for_data(d.ncols(), AUTO_COMPONENTS, y, standardise);
        let ov = self.opts.overrides;
        let ph = ov.apply_ddp(self.opts.prior_h.clone().unwrap_or_else(|| auto(&dh, &split.healthy)));
        let pd = ov.apply_ddp(self.opts.prior_d.clone().unwrap_or_else(|| auto(&dd, &split.diseased)));
        let mcmc = self.opts.mcmc;
        let (h, d) = rayon::join(
            || fit_ddp(&split.healthy, &dh.z, &ph, &mcmc, stream.substream(labels::CHAIN_HEALTHY, 0)),
            || fit_ddp(&split.diseased, &dd.z, &pd, &mcmc, stream.substream(labels::CHAIN_DISEASED, 0)),
        );
        let (h, d) = (h?, d?);
        self.warnings.extend(dh.warnings.iter().map(|w| format!("healthy: {w}")));
        self.warnings.extend(dd.warnings.iter().map(|w| format!("diseased: {w}")));
        if ph.l == 1 && pd.l == 1 && dh.fitted.is_linear() && dd.fitted.is_linear() {
            match bnp_coefficients(sample, formulas, &dh, &dd, &h, &d, params.marker) {
                Ok(c) => self.coefficients = Some(c),
                Err(e) => self.warnings.push(format!("coefficient summary skipped: {e}")),
            }
        }
        self.scale = params.marker;
        self.all_y = work.marker().to_vec();
        self.kind = Kind::Bnp(Box::new(BnpState {
            h,
            d,
            yh: split.healthy,
            yd: split.diseased,
            zh: dh.z,
            zd: dd.z,
            new_h,
            new_d,
        }));
        Ok(())
    }

    pub fn method(&self) -> CrocMethod {
        self.method
    }

    pub fn newdata(&self) -> &CovariateFrame {
        &self.newdata
    }

    pub fn sample_sizes(&self) -> SampleSizes {
        self.sizes
    }

    pub fn marker_scale(&self) -> Affine {
        self.scale
    }

    /// Posterior draws of both groups (dependent DPM only).
    pub fn ddp_draws(&self) -> Option<(&DdpDraws, &DdpDraws)> {
        match &self.kind {
            Kind::Bnp(b) => Some((&b.h, &b.d)),
            _ => None,
        }
    }

    /// Newdata design rows of both groups on the working scale (dependent
    /// DPM only).
    pub fn ddp_newdata_rows(&self) -> Option<DesignRowPair<'_>> {
        match &self.kind {
            Kind::Bnp(b) => Some((&b.new_h, &b.new_d)),
            _ => None,
        }
    }

    pub fn coefficients(&self) -> Option<&CoefficientSummary> {
        self.coefficients.as_ref()
    }

    /// Bootstrap replicates or posterior draws.
    pub fn members(&self) -> usize {
        match &self.kind {
            Kind::Located { reps, .. } => reps.len(),
            Kind::Bnp(b) => b.h.nsave(),
        }
    }

    /// Conditional CDF pair of member `s` at newdata row `r`.
    fn cdfs(&self, s: usize, r: usize) -> (Box<dyn CdfModel>, Box<dyn CdfModel>) {
        match &self.kind {
            Kind::Located { reps, .. } => (Box::new(reps[s].h.at(r)), Box::new(reps[s].d.at(r))),
            Kind::Bnp(b) => (Box::new(b.h.mixture_at(s, &b.new_h[r])), Box::new(b.d.mixture_at(s, &b.new_d[r]))),
        }
    }

    fn summarise_located(&self, m: &Member, r: usize) -> Result<CurveSummary> {
        let p = self.opts.p.as_slice();
        match (m.h.induced(r), m.d.induced(r)) {
            (Some(yh), Some(yd)) => empirical_curve_summary(&yh, &yd, p, self.opts.pauc),
            _ => Ok(smooth_curve_summary(&m.h.at(r), &m.d.at(r), p, self.opts.pauc, None)),
        }
    }

    fn summarise_member(&self, s: usize, r: usize) -> Result<CurveSummary> {
        match &self.kind {
            Kind::Located { reps, .. } => self.summarise_located(&reps[s], r),
            Kind::Bnp(b) => {
                let (mh, md) = (b.h.mixture_at(s, &b.new_h[r]), b.d.mixture_at(s, &b.new_d[r]));
                let auc = mixture_auc_closed(&mh, &md);
                Ok(smooth_curve_summary(&mh, &md, self.opts.p.as_slice(), self.opts.pauc, Some(auc)))
            }
        }
    }

    fn summarise_row(&self, r: usize) -> Result<CrocRow> {
        let members: Vec<CurveSummary> =
            (0..self.members()).into_par_iter().map(|s| self.summarise_member(s, r)).collect::<Result<_>>()?;
        let curves: Vec<Vec<f64>> = members.iter().map(|m| m.roc.clone()).collect();
        let aucs: Vec<f64> = members.iter().map(|m| m.auc).collect();
        let paucs: Vec<f64> = members.iter().filter_map(|m| m.pauc).collect();
        let (roc, auc, pauc) = match &self.kind {
            Kind::Located { est, .. } => {
                let e = self.summarise_located(est, r)?;
                (
                    Band::from_bootstrap(e.roc, &curves),
                    Interval::from_bootstrap(e.auc, &aucs),
                    e.pauc.map(|v| Interval::from_bootstrap(v, &paucs)),
                )
            }
            Kind::Bnp(_) => {
                if members.is_empty() {
                    return Err(Error::MissingDraws);
                }
                (
                    Band::from_ensemble(&curves),
                    Interval::from_ensemble(&aucs),
                    self.opts.pauc.map(|_| Interval::from_ensemble(&paucs)),
                )
            }
        };
        Ok(CrocRow {
            roc,
            auc,
            pauc: self.opts.pauc.zip(pauc).map(|(c, estimate)| PaucSummary {
                focus: c.focus,
                value: c.value,
                normalised: true,
                estimate,
            }),
            ensemble: self.opts.keep_ensemble.then_some(curves),
            densities: self.densities(r)?,
        })
    }

    /// Curves, AUC and optional partial area per newdata row.
    pub fn roc(&self) -> Result<CRocResult> {
        let rows = (0..self.newdata.nrows()).map(|r| self.summarise_row(r)).collect::<Result<Vec<_>>>()?;
        let mut warnings = self.warnings.clone();
        let fit = match &self.kind {
            Kind::Bnp(b) => {
                let crit = |draws: &DdpDraws, y: &[f64], z: &DMatrix<f64>| -> Result<FitCriteria> {
                    let ll = LogLikMatrix::new(draws.log_likelihood(y, z))?.shifted(-self.scale.sd.ln());
                    Ok(FitCriteria::from_loglik(&ll))
                };
                let fit = GroupFit { healthy: crit(&b.h, &b.yh, &b.zh)?, diseased: crit(&b.d, &b.yd, &b.zd)? };
                warnings.extend(fit.healthy.warnings.iter().map(|w| format!("healthy: {w}")));
                warnings.extend(fit.diseased.warnings.iter().map(|w| format!("diseased: {w}")));
                Some(fit)
            }
            _ => None,
        };
        Ok(CRocResult {
            method: self.method,
            est_cdf: (self.method == CrocMethod::Sp).then_some(self.opts.est_cdf),
            p: self.opts.p.as_slice().to_vec(),
            newdata: self.newdata.clone(),
            rows,
            coefficients: self.coefficients.clone(),
            fit,
            bandwidths: match &self.kind {
                Kind::Located { bandwidths, .. } => *bandwidths,
                Kind::Bnp(_) => None,
            },
            sample_sizes: self.sizes,
            warnings,
        })
    }

    /// Posterior conditional density bands at newdata row `r` on the
    /// original marker scale (dependent DPM only).
    fn densities(&self, r: usize) -> Result<Option<GroupDensities>> {
        let (Kind::Bnp(b), Some(points)) = (&self.kind, self.opts.density_points) else {
            return Ok(None);
        };
        if points < 2 {
            return Err(Error::Config("density grid needs at least two points".into()));
        }
        let scale = self.scale;
        let lo = self.all_y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.all_y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let grid: Vec<f64> =
            (0..points).map(|i| scale.invert(lo + (hi - lo) * i as f64 / (points - 1) as f64)).collect();
        let one = |draws: &DdpDraws, z: &[f64]| -> DensityEstimate {
            let rows: Vec<Vec<f64>> = (0..draws.nsave())
                .into_par_iter()
                .map(|s| {
                    let m = draws.mixture_at(s, z);
                    grid.iter().map(|&y| m.pdf(scale.apply(y)) / scale.sd).collect()
                })
                .collect();
            DensityEstimate {
                grid: grid.clone(),
                band: Band::from_ensemble(&rows),
                ensemble: self.opts.keep_ensemble.then_some(rows),
            }
        };
        Ok(Some(GroupDensities { healthy: one(&b.h, &b.new_h[r]), diseased: one(&b.d, &b.new_d[r]) }))
    }

    /// Area under the TNF curve per newdata row; agrees with the AUC.
    pub fn tnf_areas(&self) -> Result<Vec<Interval>> {
        let located = |m: &Member, r: usize| -> f64 {
            match (m.h.induced(r), m.d.induced(r)) {
                (Some(yh), Some(yd)) => empirical_tnf_area(&yh, &yd),
                _ => tnf_area(&m.h.at(r), &m.d.at(r)),
            }
        };
        (0..self.newdata.nrows())
            .map(|r| {
                let reps: Vec<f64> = (0..self.members())
                    .into_par_iter()
                    .map(|s| match &self.kind {
                        Kind::Located { reps, .. } => located(&reps[s], r),
                        Kind::Bnp(_) => {
                            let (fh, fd) = self.cdfs(s, r);
                            tnf_area(fh.as_ref(), fd.as_ref())
                        }
                    })
                    .collect();
                Ok(match &self.kind {
                    Kind::Located { est, .. } => Interval::from_bootstrap(located(est, r), &reps),
                    Kind::Bnp(_) => {
                        if reps.is_empty() {
                            return Err(Error::MissingDraws);
                        }
                        Interval::from_ensemble(&reps)
                    }
                })
            })
            .collect()
    }

    /// Covariate-specific thresholds, one row per newdata row, on the
    /// original marker scale.
    pub fn thresholds(&self, criterion: ThresholdCriterion, target_fpf: Option<f64>) -> Result<ThresholdResult> {
        let target = threshold_target(criterion, target_fpf)?;
        let grid = threshold_grid(&self.all_y)?;
        let eval = |fh: &dyn CdfModel, fd: &dyn CdfModel| -> ThresholdDraw {
            match target {
                Some(t) => fpf_threshold(fh, fd, t),
                None => yi_threshold(fh, fd, &grid),
            }
        };
        let rows = (0..self.newdata.nrows())
            .map(|r| {
                let draws: Vec<ThresholdDraw> = (0..self.members())
                    .into_par_iter()
                    .map(|s| {
                        let (fh, fd) = self.cdfs(s, r);
                        eval(fh.as_ref(), fd.as_ref())
                    })
                    .collect();
                let row = match &self.kind {
                    Kind::Located { est, .. } => {
                        ThresholdRow::from_bootstrap(eval(&est.h.at(r), &est.d.at(r)), &draws, criterion)
                    }
                    Kind::Bnp(_) => {
                        if draws.is_empty() {
                            return Err(Error::MissingDraws);
                        }
                        ThresholdRow::from_ensemble(&draws, criterion)
                    }
                };
                Ok(row.destandardise(self.scale.mean, self.scale.sd))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ThresholdResult { criterion, target_fpf: target, rows })
    }
}

/// Per-draw raw-scale coefficients of a single-component linear dependent
/// DPM: the standardised mean surface is mapped back to the marker scale and
/// projected on the raw design by least squares.
fn destandardised_coefficients(
    draws: &DdpDraws,
    z_std: &DMatrix<f64>,
    raw: &OlsSolver,
    marker: Affine,
) -> Vec<(Vec<f64>, f64)> {
    (0..draws.nsave())
        .map(|s| {
            let beta = nalgebra::DVector::from_column_slice(&draws.coefficients[s][0]);
            let target: Vec<f64> = (z_std * beta).iter().map(|&m| marker.invert(m)).collect();
            let b = raw.coefficients(&target).iter().copied().collect();
            (b, marker.sd * draws.variances[s][0].sqrt())
        })
        .collect()
}

fn bnp_coefficients(
    sample: &DiagnosticSample,
    formulas: &CrocFormulas,
    dh: &Design,
    dd: &Design,
    h: &DdpDraws,
    d: &DdpDraws,
    marker: Affine,
) -> Result<CoefficientSummary> {
    let raw = sample.split_groups()?;
    let rh = OlsSolver::new(&build_design(&raw.healthy_cov, &formulas.healthy)?.z)?;
    let rd = OlsSolver::new(&build_design(&raw.diseased_cov, &formulas.diseased)?.z)?;
    let ch = destandardised_coefficients(h, &dh.z, &rh, marker);
    let cd = destandardised_coefficients(d, &dd.z, &rd, marker);
    let draws: Vec<Coefficients> = ch
        .into_iter()
        .zip(cd)
        .map(|((beta_h, sigma_h), (beta_d, sigma_d))| Coefficients { beta_h, sigma_h, beta_d, sigma_d })
        .collect();
    Ok(coefficient_summary(&dh.fitted.labels, &dd.fitted.labels, None, &draws))
}

/// Bootstrap summary when `est` is given, ensemble summary otherwise.
fn coefficient_summary(
    labels_h: &[String],
    labels_d: &[String],
    est: Option<&Coefficients>,
    members: &[Coefficients],
) -> CoefficientSummary {
    let block = |names: Vec<String>, f: &dyn Fn(&Coefficients) -> Vec<f64>| -> Vec<CoefficientRow> {
        let vals: Vec<Vec<f64>> = members.iter().map(f).collect();
        let point = est.map(f);
        names
            .into_iter()
            .enumerate()
            .map(|(k, term)| {
                let col: Vec<f64> = vals.iter().map(|v| v[k]).collect();
                let estimate = match &point {
                    Some(p) => Interval::from_bootstrap(p[k], &col),
                    None => Interval::from_ensemble(&col),
                };
                CoefficientRow { term, estimate }
            })
            .collect()
    };
    let with_sigma = |labels: &[String]| -> Vec<String> {
        labels.iter().cloned().chain(std::iter::once("sigma".to_string())).collect()
    };
    let with_b = |labels: &[String]| -> Vec<String> {
        labels.iter().cloned().chain(std::iter::once("b".to_string())).collect()
    };
    let shared = labels_h == labels_d;
    CoefficientSummary {
        healthy: block(with_sigma(labels_h), &|c| c.beta_h.iter().copied().chain([c.sigma_h]).collect()),
        diseased: block(with_sigma(labels_d), &|c| c.beta_d.iter().copied().chain([c.sigma_d]).collect()),
        roc: if shared {
            block(with_b(labels_h), &|c| {
                let a = c.beta_h.iter().zip(&c.beta_d).map(|(h, d)| (h - d) / c.sigma_d);
                a.chain([c.sigma_h / c.sigma_d]).collect()
            })
        } else {
            Vec::new()
        },
        tnf: if shared {
            block(with_b(labels_h), &|c| {
                let a = c.beta_d.iter().zip(&c.beta_h).map(|(d, h)| (d - h) / c.sigma_h);
                a.chain([c.sigma_d / c.sigma_h]).collect()
            })
        } else {
            Vec::new()
        },
    }
}

/// A prediction frame over the model covariates: every combination of
/// factor levels (first factor slowest) and, within each, the first
/// continuous covariate on `points` equally spaced values over the range
/// both groups share for that combination. Other continuous covariates sit
/// at their mean.
pub fn default_newdata(sample: &DiagnosticSample, formulas: &CrocFormulas, points: usize) -> Result<CovariateFrame> {
    if points == 0 {
        return Err(Error::Config("newdata grid needs at least one point".into()));
    }
    let split = sample.split_groups()?;
    let cov = sample.covariates();
    let vars = formulas.variables();
    let mut factors: Vec<(&str, &[String])> = Vec::new();
    let mut grid_var: Option<&str> = None;
    for name in &vars {
        match cov.column(name) {
            None => return Err(Error::MissingColumn(name.clone())),
            Some(Column::Categorical { levels, .. }) => factors.push((name, levels)),
            Some(Column::Continuous(_)) => {
                grid_var.get_or_insert(name);
            }
        }
    }

    // Level combinations, first factor varying slowest.
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for (_, levels) in &factors {
        combos = combos.into_iter().flat_map(|c| (0..levels.len()).map(move |l| [c.clone(), vec![l]].concat())).collect();
    }
    let matching = |frame: &CovariateFrame, combo: &[usize]| -> Result<Vec<f64>> {
        let x = frame.continuous(grid_var.expect("grid variable present"))?;
        let mut keep = vec![true; x.len()];
        for ((name, _), &l) in factors.iter().zip(combo) {
            if let Some(Column::Categorical { codes, .. }) = frame.column(name) {
                keep.iter_mut().zip(codes).for_each(|(k, &c)| *k &= c == l);
            }
        }
        Ok(x.iter().zip(&keep).filter(|(_, &k)| k).map(|(v, _)| *v).collect())
    };
    let range = |x: &[f64]| (x.iter().copied().fold(f64::INFINITY, f64::min), x.iter().copied().fold(f64::NEG_INFINITY, f64::max));

    let mut codes: Vec<Vec<usize>> = vec![Vec::new(); factors.len()];
    let mut grid: Vec<f64> = Vec::new();
    for combo in &combos {
        let values = match grid_var {
            None => vec![f64::NAN],
            Some(name) => {
                let (lh, hh) = range(&matching(&split.healthy_cov, combo)?);
                let (ld, hd) = range(&matching(&split.diseased_cov, combo)?);
                let (lo, hi) = (lh.max(ld), hh.min(hd));
                if !(lo <= hi) {
                    let at: Vec<String> = factors.iter().zip(combo).map(|((f, lv), &l)| format!("{f} = {}", lv[l])).collect();
                    return Err(Error::BadData(format!("`{name}` ranges of the two groups do not overlap at {}", at.join(", "))));
                }
                if points == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    // this form hits both ends exactly
                    (0..points)
                        .map(|i| {
                            let t = i as f64 / (points - 1) as f64;
                            lo * (1.0 - t) + hi * t
                        })
                        .collect()
                }
            }
        };
        for (k, &l) in combo.iter().enumerate() {
            codes[k].extend(std::iter::repeat_n(l, values.len()));
        }
        grid.extend(values);
    }

    let total = grid.len();
    let mut frame = CovariateFrame::empty(total);
    let mut fi = 0;
    for name in &vars {
        let col = match cov.column(name).expect("checked above") {
            Column::Categorical { levels, .. } => {
                fi += 1;
                Column::Categorical { levels: levels.clone(), codes: std::mem::take(&mut codes[fi - 1]) }
            }
            Column::Continuous(all) if Some(name.as_str()) == grid_var => Column::Continuous(grid.clone()),
            Column::Continuous(all) => Column::Continuous(vec![crate::stats::mean(all); total]),
        };
        frame.push(name.clone(), col)?;
    }
    Ok(frame)
}
