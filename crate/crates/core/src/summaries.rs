//! Accuracy summaries shared by every estimator: quadrature, Mann-Whitney
//! AUC, the closed-form mixture AUC, Youden index, partial areas and
//! threshold records.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cdf::{CdfModel, EmpiricalCdf, NormalMixture};
use crate::error::{Error, Result};
use crate::kernel::silverman_bandwidth;
use crate::stats::{norm_cdf, Interval};

/// Points of the internal quadrature grid used for areas.
pub const SIMPSON_POINTS: usize = 201;
/// Points of the shared threshold grid.
pub const THRESHOLD_POINTS: usize = 500;

/// Composite Simpson rule on an odd number (>= 3) of equally spaced values.
pub fn simpson(values: &[f64], spacing: f64) -> Result<f64> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) || !(spacing > 0.0) {
        return Err(Error::BadGrid);
    }
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(s * spacing / 3.0)
}

/// `SIMPSON_POINTS` equally spaced points over `[a, b]`.
pub fn quadrature_grid(a: f64, b: f64) -> Vec<f64> {
    let m = SIMPSON_POINTS - 1;
    (0..=m).map(|i| if i == m { b } else { a + (b - a) * i as f64 / m as f64 }).collect()
}

/// Simpson integral of `values` taken on `quadrature_grid(a, b)`.
pub fn integrate_on_grid(values: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    simpson(values, (b - a) / (SIMPSON_POINTS - 1) as f64).expect("fixed odd grid")
}

/// Mann-Whitney estimate of P(Y_D > Y_H) + P(Y_D = Y_H) / 2.
pub fn mw_auc(yh: &[f64], yd: &[f64]) -> f64 {
    let mut h = yh.to_vec();
    h.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for &d in yd {
        let below = h.partition_point(|v| *v < d);
        let upto = h.partition_point(|v| *v <= d);
        acc += below as f64 + 0.5 * (upto - below) as f64;
    }
    acc / (yh.len() as f64 * yd.len() as f64)
}

/// Weighted Mann-Whitney statistic; weights are normalised per group.
pub fn mw_auc_weighted(yh: &[f64], wh: &[f64], yd: &[f64], wd: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..yh.len()).collect();
    idx.sort_by(|&a, &b| yh[a].total_cmp(&yh[b]));
    let hs: Vec<f64> = idx.iter().map(|&i| yh[i]).collect();
    let th: f64 = wh.iter().sum();
    let mut cum = Vec::with_capacity(hs.len() + 1);
    cum.push(0.0);
    for &i in &idx {
        cum.push(cum.last().unwrap() + wh[i] / th);
    }
    let td: f64 = wd.iter().sum();
    yd.iter()
        .zip(wd)
        .map(|(&d, &w)| {
            let below = hs.partition_point(|v| *v < d);
            let upto = hs.partition_point(|v| *v <= d);
            w / td * (cum[below] + 0.5 * (cum[upto] - cum[below]))
        })
        .sum()
}

/// `sum_k sum_l w_Hk w_Dl Phi(b_kl / sqrt(1 + a_kl^2))` with
/// `b = (mu_Dl - mu_Hk) / sd_Dl` and `a = sd_Hk / sd_Dl`.
pub fn mixture_auc_closed(h: &NormalMixture, d: &NormalMixture) -> f64 {
    let mut auc = 0.0;
    for k in 0..h.weights.len() {
        for l in 0..d.weights.len() {
            let b = (d.means[l] - h.means[k]) / d.sds[l];
            let a = h.sds[k] / d.sds[l];
            auc += h.weights[k] * d.weights[l] * norm_cdf(b / (1.0 + a * a).sqrt());
        }
    }
    auc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaucFocus {
    Fpf,
    Tpf,
}

impl FromStr for PaucFocus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fpf" | "FPF" => Ok(Self::Fpf),
            "tpf" | "TPF" => Ok(Self::Tpf),
            _ => Err(Error::Config(format!("unknown pAUC focus '{s}' (fpf, tpf)"))),
        }
    }
}

/// Partial-area request: upper FPF bound `u1` in (0, 1] or lower TPF bound
/// `v1` in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaucControl {
    pub focus: PaucFocus,
    pub value: f64,
}

impl PaucControl {
    pub fn fpf(u1: f64) -> Result<Self> {
        Self { focus: PaucFocus::Fpf, value: u1 }.validated()
    }

    pub fn tpf(v1: f64) -> Result<Self> {
        Self { focus: PaucFocus::Tpf, value: v1 }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match self.focus {
            PaucFocus::Fpf => self.value > 0.0 && self.value <= 1.0,
            PaucFocus::Tpf => (0.0..1.0).contains(&self.value),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::Config(format!("partial area bound {} out of range for {:?} focus", self.value, self.focus)))
        }
    }

    /// Raw area divided by its maximum: `u1` or `1 - v1`.
    pub fn normalise(&self, raw: f64) -> f64 {
        pauc_normalise(raw, self.focus, self.value)
    }
}

pub fn pauc_normalise(raw: f64, focus: PaucFocus, bound: f64) -> f64 {
    match focus {
        PaucFocus::Fpf => raw / bound,
        PaucFocus::Tpf => raw / (1.0 - bound),
    }
}

/// Partial area reported with its request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaucSummary {
    pub focus: PaucFocus,
    pub value: f64,
    pub normalised: bool,
    pub estimate: Interval,
}

/// `ROC(p) = 1 - F_D(F_H^{-1}(1 - p))`, with ROC(0) = 0 and ROC(1) = 1.
pub fn roc_curve(fh: &dyn CdfModel, fd: &dyn CdfModel, p: &[f64]) -> Vec<f64> {
    let qs: Vec<f64> = p.iter().rev().map(|&v| 1.0 - v).collect();
    let mut cut = fh.quantiles(&qs);
    cut.reverse();
    p.iter()
        .zip(cut)
        .map(|(&pi, c)| {
            if pi <= 0.0 {
                0.0
            } else if pi >= 1.0 {
                1.0
            } else {
                1.0 - fd.cdf(c)
            }
        })
        .collect()
}

/// `ROC_TNF(p) = F_H(F_D^{-1}(1 - p))` where p is a TPF; TNF(0) = 1 and
/// TNF(1) = 0.
pub fn tnf_curve(fh: &dyn CdfModel, fd: &dyn CdfModel, p: &[f64]) -> Vec<f64> {
    let qs: Vec<f64> = p.iter().rev().map(|&v| 1.0 - v).collect();
    let mut cut = fd.quantiles(&qs);
    cut.reverse();
    p.iter()
        .zip(cut)
        .map(|(&pi, c)| {
            if pi <= 0.0 {
                1.0
            } else if pi >= 1.0 {
                0.0
            } else {
                fh.cdf(c)
            }
        })
        .collect()
}

/// Tolerance of the adaptive area integrals.
pub const AREA_TOL: f64 = 1e-7;
const AREA_PANELS: usize = 16;
const AREA_DEPTH: u32 = 40;

/// Adaptive Simpson integral of `f` over `[a, b]`, started from 16 equal
/// panels so that a steep edge near either end is not missed.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let w = (b - a) / AREA_PANELS as f64;
    let panel_tol = tol / AREA_PANELS as f64;
    (0..AREA_PANELS)
        .map(|k| {
            let (lo, hi) = (a + w * k as f64, if k + 1 == AREA_PANELS { b } else { a + w * (k + 1) as f64 });
            let (flo, fhi, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
            simpson_step(&f, lo, hi, flo, fm, fhi, whole, panel_tol, AREA_DEPTH)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `ROC(p)` at a single point.
pub fn roc_at(fh: &dyn CdfModel, fd: &dyn CdfModel, p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        1.0
    } else {
        1.0 - fd.cdf(fh.quantile(1.0 - p))
    }
}

/// `ROC_TNF(t)` at a single point.
pub fn tnf_at(fh: &dyn CdfModel, fd: &dyn CdfModel, t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        fh.cdf(fd.quantile(1.0 - t))
    }
}

/// AUC as the adaptive Simpson integral of the ROC curve.
pub fn auc_quadrature(fh: &dyn CdfModel, fd: &dyn CdfModel) -> f64 {
    adaptive_simpson(|p| roc_at(fh, fd, p), 0.0, 1.0, AREA_TOL)
}

/// Area under the TNF curve, which equals the AUC.
pub fn tnf_area(fh: &dyn CdfModel, fd: &dyn CdfModel) -> f64 {
    adaptive_simpson(|t| tnf_at(fh, fd, t), 0.0, 1.0, AREA_TOL)
}

/// Normalised partial area by adaptive Simpson quadrature; the TPF focus
/// integrates the TNF curve over `[v1, 1]`.
pub fn pauc_quadrature(fh: &dyn CdfModel, fd: &dyn CdfModel, ctrl: PaucControl) -> f64 {
    let raw = match ctrl.focus {
        PaucFocus::Fpf => adaptive_simpson(|p| roc_at(fh, fd, p), 0.0, ctrl.value, AREA_TOL),
        PaucFocus::Tpf => adaptive_simpson(|t| tnf_at(fh, fd, t), ctrl.value, 1.0, AREA_TOL),
    };
    ctrl.normalise(raw)
}

/// ROC ordinates with AUC and optional normalised partial area of one curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSummary {
    pub roc: Vec<f64>,
    pub auc: f64,
    pub pauc: Option<f64>,
}

/// `U_j = sum_i w_i [1(r_i > t_j) + tie 1(r_i = t_j)]`, weights summing to one.
pub fn placements(reference: &[f64], weights: &[f64], targets: &[f64], tie: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..reference.len()).collect();
    idx.sort_by(|&a, &b| reference[a].total_cmp(&reference[b]));
    let sorted: Vec<f64> = idx.iter().map(|&i| reference[i]).collect();
    // suffix[k] = total weight of sorted[k..]
    let mut suffix = vec![0.0; sorted.len() + 1];
    for k in (0..sorted.len()).rev() {
        suffix[k] = suffix[k + 1] + weights[idx[k]];
    }
    targets
        .iter()
        .map(|&t| {
            let below = sorted.partition_point(|v| *v < t);
            let upto = sorted.partition_point(|v| *v <= t);
            suffix[upto] + tie * (suffix[below] - suffix[upto])
        })
        .collect()
}

/// Weighted step ROC `sum_j w_j 1(U_j <= p)` with ROC(0) = 0, ROC(1) = 1.
pub fn placement_roc(u: &[f64], w: &[f64], p: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..u.len()).collect();
    idx.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let us: Vec<f64> = idx.iter().map(|&i| u[i]).collect();
    let mut cum = vec![0.0; us.len() + 1];
    for (k, &i) in idx.iter().enumerate() {
        cum[k + 1] = cum[k] + w[i];
    }
    p.iter()
        .map(|&pi| {
            if pi <= 0.0 {
                0.0
            } else if pi >= 1.0 {
                1.0
            } else {
                cum[us.partition_point(|v| *v <= pi + 1e-12)].min(1.0)
            }
        })
        .collect()
}

/// Closed-form normalised partial area of a placement-value step curve.
pub fn placement_pauc(ctrl: PaucControl, ud: &[f64], wd: &[f64], uh: &[f64], wh: &[f64]) -> f64 {
    let raw = match ctrl.focus {
        PaucFocus::Fpf => ctrl.value - ud.iter().zip(wd).map(|(u, w)| w * u.min(ctrl.value)).sum::<f64>(),
        PaucFocus::Tpf => uh.iter().zip(wh).map(|(u, w)| w * u.max(ctrl.value)).sum::<f64>() - ctrl.value,
    };
    ctrl.normalise(raw)
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}


/// Step-curve summary of two samples: empirical ROC, Mann-Whitney AUC and
/// exact partial areas (ties counted one half).
pub fn empirical_curve_summary(yh: &[f64], yd: &[f64], p: &[f64], pauc: Option<PaucControl>) -> Result<CurveSummary> {
    let (fh, fd) = (EmpiricalCdf::new(yh)?, EmpiricalCdf::new(yd)?);
    let pauc = pauc.map(|c| {
        let (wh, wd) = (uniform_weights(yh.len()), uniform_weights(yd.len()));
        let ud = placements(yh, &wh, yd, 0.5);
        let uh = placements(yd, &wd, yh, 0.5);
        placement_pauc(c, &ud, &wd, &uh, &wh)
    });
    Ok(CurveSummary { roc: roc_curve(&fh, &fd, p), auc: mw_auc(yh, yd), pauc })
}

/// Area under the TNF step curve of two samples; equals the Mann-Whitney AUC.
pub fn empirical_tnf_area(yh: &[f64], yd: &[f64]) -> f64 {
    let (wh, wd) = (uniform_weights(yh.len()), uniform_weights(yd.len()));
    placements(yd, &wd, yh, 0.5).iter().zip(&wh).map(|(u, w)| u * w).sum()
}

/// Smooth-curve summary; `auc` overrides quadrature when a closed form exists.
pub fn smooth_curve_summary(
    fh: &dyn CdfModel,
    fd: &dyn CdfModel,
    p: &[f64],
    pauc: Option<PaucControl>,
    auc: Option<f64>,
) -> CurveSummary {
    CurveSummary {
        roc: roc_curve(fh, fd, p),
        auc: auc.unwrap_or_else(|| auc_quadrature(fh, fd)),
        pauc: pauc.map(|c| pauc_quadrature(fh, fd, c)),
    }
}

/// Youden index `max_c |F_H(c) - F_D(c)|` over a threshold grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoudenPoint {
    pub yi: f64,
    pub threshold: f64,
    /// Sign of `F_H - F_D` at the optimum; -1 means the rule is reversed.
    pub sign: f64,
}

/// Scans `grid` in order; ties keep the smallest threshold.
pub fn youden(fh: &dyn CdfModel, fd: &dyn CdfModel, grid: &[f64]) -> YoudenPoint {
    let mut best = YoudenPoint { yi: f64::NEG_INFINITY, threshold: f64::NAN, sign: 1.0 };
    for &c in grid {
        let diff = fh.cdf(c) - fd.cdf(c);
        if diff.abs() > best.yi + 1e-14 {
            best = YoudenPoint { yi: diff.abs(), threshold: c, sign: if diff < 0.0 { -1.0 } else { 1.0 } };
        }
    }
    best
}

/// 500 equally spaced thresholds over `[min - h, max + h]`, `h` the
/// Silverman bandwidth of all marker values.
pub fn threshold_grid(all_y: &[f64]) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(all_y)?.value;
    let lo = all_y.iter().copied().fold(f64::INFINITY, f64::min) - h;
    let hi = all_y.iter().copied().fold(f64::NEG_INFINITY, f64::max) + h;
    let m = THRESHOLD_POINTS - 1;
    Ok((0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdCriterion {
    Yi,
    Fpf,
}

impl FromStr for ThresholdCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yi" | "YI" => Ok(Self::Yi),
            "fpf" | "FPF" => Ok(Self::Fpf),
            _ => Err(Error::Config(format!("unknown threshold criterion '{s}' (yi, fpf)"))),
        }
    }
}

/// Thresholds and attached fractions; one row per covariate value for the
/// conditional methods, a single row otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub criterion: ThresholdCriterion,
    /// Target FPF for the FPF criterion.
    pub target_fpf: Option<f64>,
    pub rows: Vec<ThresholdRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: Interval,
    pub yi: Option<Interval>,
    pub fpf: Interval,
    pub tpf: Interval,
    /// Sign of `F_H - F_D` at the YI optimum of the point estimate.
    pub sign: Option<f64>,
}

/// Per-fit threshold quantities before summarising over replicates/draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdDraw {
    pub threshold: f64,
    pub yi: f64,
    pub fpf: f64,
    pub tpf: f64,
    pub sign: f64,
}

/// Validated FPF target: required and inside (0, 1) for the FPF criterion,
/// ignored for YI.
pub fn threshold_target(criterion: ThresholdCriterion, target_fpf: Option<f64>) -> Result<Option<f64>> {
    match criterion {
        ThresholdCriterion::Fpf => {
            let t = target_fpf.ok_or_else(|| Error::Config("FPF criterion needs a target FPF".into()))?;
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::OutOfRange { value: t, lo: 0.0, hi: 1.0 });
            }
            Ok(Some(t))
        }
        ThresholdCriterion::Yi => Ok(None),
    }
}

/// YI criterion on one pair of CDFs.
pub fn yi_threshold(fh: &dyn CdfModel, fd: &dyn CdfModel, grid: &[f64]) -> ThresholdDraw {
    let y = youden(fh, fd, grid);
    let c = y.threshold;
    ThresholdDraw { threshold: c, yi: y.yi, fpf: 1.0 - fh.cdf(c), tpf: 1.0 - fd.cdf(c), sign: y.sign }
}

/// FPF criterion: `c = F_H^{-1}(1 - t)` with `TPF = 1 - F_D(c)`.
pub fn fpf_threshold(fh: &dyn CdfModel, fd: &dyn CdfModel, target: f64) -> ThresholdDraw {
    let c = fh.quantile(1.0 - target);
    let (fpf, tpf) = (1.0 - fh.cdf(c), 1.0 - fd.cdf(c));
    ThresholdDraw { threshold: c, yi: (tpf - fpf).abs(), fpf, tpf, sign: if tpf >= fpf { 1.0 } else { -1.0 } }
}

impl ThresholdRow {
    /// Summary from an ensemble of draws (mean and 2.5/97.5 percentiles).
    pub fn from_ensemble(draws: &[ThresholdDraw], criterion: ThresholdCriterion) -> Self {
        let col = |f: fn(&ThresholdDraw) -> f64| Interval::from_ensemble(&draws.iter().map(f).collect::<Vec<_>>());
        let sign = draws.iter().map(|d| d.sign).sum::<f64>();
        Self {
            threshold: col(|d| d.threshold),
            yi: (criterion == ThresholdCriterion::Yi).then(|| col(|d| d.yi)),
            fpf: col(|d| d.fpf),
            tpf: col(|d| d.tpf),
            sign: (criterion == ThresholdCriterion::Yi).then_some(if sign < 0.0 { -1.0 } else { 1.0 }),
        }
    }

    /// Plug-in estimate with bootstrap percentile intervals.
    pub fn from_bootstrap(est: ThresholdDraw, reps: &[ThresholdDraw], criterion: ThresholdCriterion) -> Self {
        let col = |e: f64, f: fn(&ThresholdDraw) -> f64| {
            Interval::from_bootstrap(e, &reps.iter().map(f).collect::<Vec<_>>())
        };
        Self {
            threshold: col(est.threshold, |d| d.threshold),
            yi: (criterion == ThresholdCriterion::Yi).then(|| col(est.yi, |d| d.yi)),
            fpf: col(est.fpf, |d| d.fpf),
            tpf: col(est.tpf, |d| d.tpf),
            sign: (criterion == ThresholdCriterion::Yi).then_some(est.sign),
        }
    }

    /// Maps the threshold interval back to the original marker scale.
    pub fn destandardise(mut self, mean: f64, sd: f64) -> Self {
        let f = |v: f64| v * sd + mean;
        self.threshold = Interval { est: f(self.threshold.est), lo: f(self.threshold.lo), hi: f(self.threshold.hi) };
        self
    }
}
