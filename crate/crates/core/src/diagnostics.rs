//! Model fit criteria (WAIC, DIC, LPML), posterior predictive checks,
//! quantile residuals and effective sample size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::{CdfModel, NormalMixture};
use crate::error::{Error, Result};
use crate::sampling::{categorical, labels, normal, RngStream};
use crate::stats::{log_sum_exp, mean, norm_quantile, quantile_sorted};

/// S x n matrix of per-draw, per-observation log densities.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLikMatrix {
    rows: Vec<Vec<f64>>,
    n: usize,
}

impl LogLikMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map(Vec::len).ok_or(Error::MissingDraws)?;
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimMismatch("log-likelihood rows differ in length".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NumericalCollapse("non-finite log-likelihood entry".into()));
        }
        Ok(Self { rows, n })
    }

    pub fn nsave(&self) -> usize {
        self.rows.len()
    }

    pub fn nobs(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Adds `offset` to every entry; used to move a density from the
    /// standardised to the original marker scale (`offset = -ln sd`).
    pub fn shifted(mut self, offset: f64) -> Self {
        self.rows.iter_mut().flatten().for_each(|v| *v += offset);
        self
    }

    fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    fn per_obs<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        (0..self.n).into_par_iter().map(|i| f(&self.column(i))).collect()
    }
}

fn log_mean_exp(v: &[f64]) -> f64 {
    log_sum_exp(v) - (v.len() as f64).ln()
}

fn sample_variance(v: &[f64]) -> f64 {
    // sample variance (n - 1), zero for a single draw
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Log pointwise predictive density.
pub fn lppd(ll: &LogLikMatrix) -> f64 {
    ll.per_obs(log_mean_exp).iter().sum()
}

/// Returns `(waic, penalty)`.
pub fn waic(ll: &LogLikMatrix) -> (f64, f64) {
    let lp = lppd(ll);
    let p: f64 = ll.per_obs(sample_variance).iter().sum();
    (-2.0 * (lp - p), p)
}

/// DIC with the plug-in deviance taken at the posterior mean of the
/// density, `D_hat = -2 sum_i ln mean_s f_s(y_i)`. Returns `(dic, penalty)`;
/// the penalty is non-negative by Jensen's inequality.
pub fn dic(ll: &LogLikMatrix) -> (f64, f64) {
    let d_hat = -2.0 * lppd(ll);
    dic_with_plugin(ll, d_hat)
}

/// DIC for an arbitrary plug-in deviance `d_hat`.
pub fn dic_with_plugin(ll: &LogLikMatrix, d_hat: f64) -> (f64, f64) {
    let d_bar = mean(&ll.rows.iter().map(|r| -2.0 * r.iter().sum::<f64>()).collect::<Vec<_>>());
    let p = d_bar - d_hat;
    (d_hat + 2.0 * p, p)
}

/// Returns `(lpml, cpo)` with harmonic-mean CPOs.
pub fn lpml(ll: &LogLikMatrix) -> (f64, Vec<f64>) {
    let log_cpo = ll.per_obs(|c| {
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        -log_mean_exp(&neg)
    });
    (log_cpo.iter().sum(), log_cpo.iter().map(|v| v.exp()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitCriteria {
    pub waic: f64,
    pub waic_penalty: f64,
    pub lpml: f64,
    pub dic: f64,
    pub dic_penalty: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FitCriteria {
    pub fn from_loglik(ll: &LogLikMatrix) -> Self {
        let (w, wp) = waic(ll);
        let (d, dp) = dic(ll);
        let (l, _) = lpml(ll);
        let mut warnings = Vec::new();
        if dp < 0.0 {
            warnings.push(format!("negative DIC penalty {dp:.4}"));
        }
        Self { waic: w, waic_penalty: wp, lpml: l, dic: d, dic_penalty: dp, warnings }
    }
}

/// Moment skewness `g1 = m3 / m2^1.5`.
pub fn skewness(y: &[f64]) -> f64 {
    let (m2, m3, _) = central_moments(y);
    if m2 == 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// Moment kurtosis `g2 = m4 / m2^2` (not excess).
pub fn kurtosis(y: &[f64]) -> f64 {
    let (m2, _, m4) = central_moments(y);
    if m2 == 0.0 {
        0.0
    } else {
        m4 / (m2 * m2)
    }
}

fn central_moments(y: &[f64]) -> (f64, f64, f64) {
    let m = mean(y);
    let n = y.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in y {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticCheck {
    pub observed: f64,
    pub replicates: Vec<f64>,
}

impl StatisticCheck {
    /// Whether the observed value lies in the central `level` interval of
    /// the replicates.
    pub fn covers(&self, level: f64) -> bool {
        let mut r = self.replicates.clone();
        r.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        let lo = quantile_sorted(&r, tail);
        let hi = quantile_sorted(&r, 1.0 - tail);
        self.observed >= lo && self.observed <= hi
    }

    /// Fraction of replicates at or above the observed value.
    pub fn p_value(&self) -> f64 {
        self.replicates.iter().filter(|&&v| v >= self.observed).count() as f64 / self.replicates.len().max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveCheck {
    pub skewness: StatisticCheck,
    pub kurtosis: StatisticCheck,
    /// Replicated datasets kept for density overlays.
    pub density_samples: Vec<Vec<f64>>,
}

pub const DENSITY_REPLICATES: usize = 500;

/// Posterior predictive check. `mixture_for(s, i)` gives the predictive
/// distribution of observation `i` under draw `s`; every draw produces one
/// replicate of the observed sample size.
pub fn predictive_checks<F>(
    nsave: usize,
    observed: &[f64],
    n_rep_densities: usize,
    stream: RngStream,
    mixture_for: F,
) -> Result<PredictiveCheck>
where
    F: Fn(usize, usize) -> NormalMixture + Sync,
{
    if nsave == 0 {
        return Err(Error::MissingDraws);
    }
    let n = observed.len();
    let reps: Vec<Vec<f64>> = (0..nsave)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream.substream(labels::PREDICTIVE, s as u64).rng();
            (0..n)
                .map(|i| {
                    let m = mixture_for(s, i);
                    let k = categorical(&mut rng, &m.weights)?;
                    Ok(normal(&mut rng, m.means[k], m.sds[k]))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let keep = n_rep_densities.min(nsave);
    let step = nsave as f64 / keep.max(1) as f64;
    let density_samples = (0..keep).map(|j| reps[(j as f64 * step) as usize].clone()).collect();
    Ok(PredictiveCheck {
        skewness: StatisticCheck { observed: skewness(observed), replicates: reps.iter().map(|r| skewness(r)).collect() },
        kurtosis: StatisticCheck { observed: kurtosis(observed), replicates: reps.iter().map(|r| kurtosis(r)).collect() },
        density_samples,
    })
}

/// Normal-QQ summary of quantile residuals across draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QqReport {
    pub theoretical: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl QqReport {
    /// Average distance from the diagonal against the average band
    /// half-width over the central 90% of plotting positions.
    pub fn within_bands(&self) -> bool {
        let n = self.theoretical.len();
        let (a, b) = ((n as f64 * 0.05) as usize, n - (n as f64 * 0.05) as usize);
        if b <= a {
            return true;
        }
        let dev = (a..b).map(|j| (self.mean[j] - self.theoretical[j]).abs()).sum::<f64>();
        let half = (a..b).map(|j| 0.5 * (self.hi[j] - self.lo[j])).sum::<f64>();
        dev <= half
    }

    pub fn max_deviation(&self) -> f64 {
        self.mean.iter().zip(&self.theoretical).map(|(m, t)| (m - t).abs()).fold(0.0, f64::max)
    }
}

/// Normal plotting positions `(j - a) / (n + 1 - 2a)`, `a = 3/8` for
/// `n <= 10` and `1/2` otherwise.
pub fn plotting_positions(n: usize) -> Vec<f64> {
    let a = if n <= 10 { 3.0 / 8.0 } else { 0.5 };
    (1..=n).map(|j| (j as f64 - a) / (n as f64 + 1.0 - 2.0 * a)).collect()
}

const PIT_CLAMP: f64 = 1e-12;

/// Quantile residuals from probability integral transforms `pit[s][j] =
/// F_s(y_j)`, one row per draw (a single row for a frequentist fit).
pub fn quantile_residuals(pit: &[Vec<f64>]) -> Result<QqReport> {
    let n = pit.first().map(Vec::len).ok_or(Error::MissingDraws)?;
    if n == 0 {
        return Err(Error::BadData("no observations for quantile residuals".into()));
    }
    let sorted: Vec<Vec<f64>> = pit
        .par_iter()
        .map(|row| {
            let mut r: Vec<f64> = row.iter().map(|&u| norm_quantile(u.clamp(PIT_CLAMP, 1.0 - PIT_CLAMP))).collect();
            r.sort_by(f64::total_cmp);
            r
        })
        .collect();
    let mut out = QqReport {
        theoretical: plotting_positions(n).into_iter().map(norm_quantile).collect(),
        mean: Vec::with_capacity(n),
        lo: Vec::with_capacity(n),
        hi: Vec::with_capacity(n),
    };
    for j in 0..n {
        let mut col: Vec<f64> = sorted.iter().map(|r| r[j]).collect();
        out.mean.push(mean(&col));
        col.sort_by(f64::total_cmp);
        out.lo.push(quantile_sorted(&col, 0.025));
        out.hi.push(quantile_sorted(&col, 0.975));
    }
    Ok(out)
}

/// Probability integral transforms of `y` under each of `models`.
pub fn pit_matrix<M: CdfModel>(models: &[M], y: &[f64]) -> Vec<Vec<f64>> {
    models.par_iter().map(|m| y.iter().map(|&v| m.cdf(v)).collect()).collect()
}

/// ESS with Geyer's initial monotone sequence estimator. A constant chain
/// has ESS equal to its length.
pub fn effective_sample_size(chain: &[f64]) -> f64 {
    let s = chain.len();
    if s < 4 {
        return s as f64;
    }
    let m = mean(chain);
    let c: Vec<f64> = chain.iter().map(|v| v - m).collect();
    let acov = |k: usize| c[..s - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / s as f64;
    let g0 = acov(0);
    if !(g0 > 0.0) {
        return s as f64;
    }
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < s {
        let pair = (acov(2 * k) + acov(2 * k + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        tau += 2.0 * pair;
        prev = pair;
        k += 1;
    }
    s as f64 / tau.max(1.0 / s as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpm::{fit_dpm, DpmPrior, McmcControl};
    use crate::sampling::std_normal;
    use crate::stats::norm_logpdf;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    fn hand() -> LogLikMatrix {
        LogLikMatrix::new(vec![vec![norm_logpdf(0.0, 0.0, 1.0)], vec![norm_logpdf(0.0, 0.0, 4.0)]]).unwrap()
    }

    #[test]
    fn hand_example_waic() {
        let (w, p) = waic(&hand());
        assert!((lppd(&hand()) - -1.206_620_605_7).abs() < 1e-9);
        assert!((p - 0.240_226_507_0).abs() < 1e-9);
        assert!((w - 2.893_694_225_2).abs() < 1e-9);
    }

    #[test]
    fn hand_example_dic_and_lpml() {
        let (d, p) = dic(&hand());
        assert!((p - 0.117_783_035_7).abs() < 1e-9);
        let d_bar = -(norm_logpdf(0.0, 0.0, 1.0) + norm_logpdf(0.0, 0.0, 4.0));
        assert!((d - (d_bar + p)).abs() < 1e-12);
        let (l, cpo) = lpml(&hand());
        assert!((cpo[0] - 0.265_961_520_3).abs() < 1e-9);
        assert!((l - -1.324_403_641_3).abs() < 1e-9);
    }

    #[test]
    fn single_draw_and_identical_draws() {
        let row = vec![-1.0, -2.0, -0.5];
        for s in [1, 3] {
            let ll = LogLikMatrix::new(vec![row.clone(); s]).unwrap();
            let (w, p) = waic(&ll);
            assert_eq!(p, 0.0);
            assert!((w - 7.0).abs() < 1e-12);
            let (d, dp) = dic(&ll);
            assert!(dp.abs() < 1e-12 && (d - 7.0).abs() < 1e-12);
            let (l, cpo) = lpml(&ll);
            assert!((l + 3.5).abs() < 1e-12);
            assert!((cpo[1] - (-2f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(LogLikMatrix::new(vec![]), Err(Error::MissingDraws)));
        assert!(LogLikMatrix::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(LogLikMatrix::new(vec![vec![f64::NEG_INFINITY]]).is_err());
    }

    #[test]
    fn moments_of_known_samples() {
        let y = [1.0, 2.0, 3.0, 4.0, 10.0];
        // central moments: m2 = 10, m3 = 36, m4 = 278.8
        assert!((skewness(&y) - 36.0 / 10f64.powf(1.5)).abs() < 1e-12);
        assert!((kurtosis(&y) - 2.788).abs() < 1e-12);
        assert!(skewness(&[-1.0, 0.0, 1.0]).abs() < 1e-15);
        assert!((kurtosis(&[-1.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ess_reference_chains() {
        let mut rng = RngStream::new(1).rng();
        let iid: Vec<f64> = (0..4000).map(|_| std_normal(&mut rng)).collect();
        let e = effective_sample_size(&iid);
        assert!((3200.0..=4800.0).contains(&e), "{e}");
        assert_eq!(effective_sample_size(&[2.0; 100]), 100.0);
        let phi: f64 = 0.9;
        let mut x = 0.0;
        let ar: Vec<f64> = (0..10000)
            .map(|_| {
                x = phi * x + (1.0 - phi * phi).sqrt() * std_normal(&mut rng);
                x
            })
            .collect();
        let e = effective_sample_size(&ar);
        let truth = 10000.0 * (1.0 - phi) / (1.0 + phi);
        assert!((e / truth - 1.0).abs() < 0.3, "{e} vs {truth}");
    }

    #[test]
    fn plotting_positions_convention() {
        let p = plotting_positions(4);
        assert!((p[0] - 0.625 / 4.25).abs() < 1e-15);
        let p = plotting_positions(20);
        assert!((p[0] - 0.025).abs() < 1e-15 && (p[19] - 0.975).abs() < 1e-15);
    }

    #[test]
    fn degenerate_pit_gives_zero_residuals() {
        let qq = quantile_residuals(&[vec![0.5; 8], vec![0.5; 8]]).unwrap();
        assert!(qq.mean.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn well_specified_residuals_within_bands_and_misfit_not() {
        let mut rng = RngStream::new(2).rng();
        let y: Vec<f64> = (0..300).map(|_| std_normal(&mut rng)).collect();
        let mc = McmcControl::new(300, 200, 1).unwrap();
        let d = fit_dpm(&y, &DpmPrior { l: 1, ..DpmPrior::default() }, &mc, RngStream::new(3)).unwrap();
        let mixes: Vec<_> = (0..d.nsave()).map(|s| d.mixture(s)).collect();
        let qq = quantile_residuals(&pit_matrix(&mixes, &y)).unwrap();
        assert!(qq.within_bands());

        let bi: Vec<f64> = (0..300).map(|i| std_normal(&mut rng) * 0.3 + if i % 2 == 0 { -2.0 } else { 2.0 }).collect();
        let d = fit_dpm(&bi, &DpmPrior { l: 1, ..DpmPrior::for_data(&bi, false) }, &mc, RngStream::new(4)).unwrap();
        let mixes: Vec<_> = (0..d.nsave()).map(|s| d.mixture(s)).collect();
        let qq = quantile_residuals(&pit_matrix(&mixes, &bi)).unwrap();
        let widest = qq.hi.iter().zip(&qq.lo).map(|(h, l)| 0.5 * (h - l)).fold(0.0, f64::max);
        assert!(qq.max_deviation() > widest);
        assert!(!qq.within_bands());
    }

    #[test]
    fn predictive_kurtosis_flags_misfit() {
        let mut rng = RngStream::new(5).rng();
        let bi: Vec<f64> = (0..400).map(|i| std_normal(&mut rng) * 0.3 + if i % 2 == 0 { -2.0 } else { 2.0 }).collect();
        let mc = McmcControl::new(500, 200, 1).unwrap();
        let d = fit_dpm(&bi, &DpmPrior { l: 1, ..DpmPrior::for_data(&bi, false) }, &mc, RngStream::new(6)).unwrap();
        let pc = predictive_checks(d.nsave(), &bi, 50, RngStream::new(7), |s, _| d.mixture(s)).unwrap();
        assert!(!pc.kurtosis.covers(0.99));
        assert_eq!(pc.density_samples.len(), 50);
        assert!(mean(&pc.skewness.replicates).abs() < 0.05);
        let again = predictive_checks(d.nsave(), &bi, 50, RngStream::new(7), |s, _| d.mixture(s)).unwrap();
        assert_eq!(pc, again);
    }

    proptest! {
        #[test]
        fn criteria_invariant_to_draw_order(seed in 0u64..1000, s in 2usize..20, n in 1usize..10) {
            let mut rng = RngStream::new(seed).rng();
            let mut rows: Vec<Vec<f64>> = (0..s).map(|_| (0..n).map(|_| -1.0 + std_normal(&mut rng)).collect()).collect();
            let a = LogLikMatrix::new(rows.clone()).unwrap();
            rows.shuffle(&mut rng);
            let b = LogLikMatrix::new(rows).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs());
            prop_assert!(close(waic(&a).0, waic(&b).0));
            prop_assert!(close(dic(&a).0, dic(&b).0));
            prop_assert!(close(lpml(&a).0, lpml(&b).0));
            // harmonic mean bound and Jensen
            prop_assert!(lpml(&a).0 <= lppd(&a) + 1e-9);
            prop_assert!(dic(&a).1 >= -1e-9);
            prop_assert!(waic(&a).1 >= 0.0);
        }
    }
}
