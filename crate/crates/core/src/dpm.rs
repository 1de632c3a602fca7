//! Blocked Gibbs samplers for the truncated Dirichlet process mixture of
//! normals and for the single-weights dependent DPM whose component means
//! are linear in a design matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cdf::NormalMixture;
use crate::error::{Error, Result};
use crate::sampling::{beta, categorical_log, gamma, mvn_from_precision, normal, stick_breaking, wishart, RngStream, StreamRng};
use crate::stats::{mean, variance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcControl {
    pub nsave: usize,
    pub nburn: usize,
    pub nskip: usize,
}

impl Default for McmcControl {
    fn default() -> Self {
        Self { nsave: 8000, nburn: 2000, nskip: 1 }
    }
}

impl McmcControl {
    pub fn new(nsave: usize, nburn: usize, nskip: usize) -> Result<Self> {
        Self { nsave, nburn, nskip }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.nsave == 0 || self.nskip == 0 {
            return Err(Error::Config("mcmc needs nsave >= 1 and nskip >= 1".into()));
        }
        Ok(self)
    }
}

/// Priors `mu ~ N(m0, S0)`, `sigma^-2 ~ Gamma(a, b)` (shape-rate),
/// `alpha ~ Gamma(a_alpha, b_alpha)`, with `L` mixture components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpmPrior {
    pub m0: f64,
    pub s0: f64,
    pub a: f64,
    pub b: f64,
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub l: usize,
}

/// Truncation level used by the automatic priors.
pub const AUTO_COMPONENTS: usize = 10;

impl Default for DpmPrior {
    /// Defaults for a standardised marker.
    fn default() -> Self {
        Self { m0: 0.0, s0: 10.0, a: 2.0, b: 2.0, a_alpha: 2.0, b_alpha: 2.0, l: AUTO_COMPONENTS }
    }
}

impl DpmPrior {
    /// Defaults scaled to the data when the marker is not standardised.
    pub fn for_data(y: &[f64], standardised: bool) -> Self {
        if standardised {
            return Self::default();
        }
        let s2 = variance(y).max(f64::MIN_POSITIVE);
        Self { m0: mean(y), s0: 10.0 * s2, b: 2.0 * s2, ..Self::default() }
    }

    pub fn validated(self) -> Result<Self> {
        let pos = [self.s0, self.a, self.b, self.a_alpha, self.b_alpha];
        if pos.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || self.l == 0 || !self.m0.is_finite() {
            return Err(Error::Config(format!("invalid DPM prior {self:?}")));
        }
        Ok(self)
    }
}

/// Scalar prior settings that replace the automatic (or explicit) values.
/// For the dependent DPM, `m0` sets the intercept mean and `s0`, `psi`
/// scale the identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorOverrides {
    pub m0: Option<f64>,
    pub s0: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub a_alpha: Option<f64>,
    pub b_alpha: Option<f64>,
    pub l: Option<usize>,
    pub nu: Option<f64>,
    pub psi: Option<f64>,
}

impl PriorOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply_dpm(&self, mut p: DpmPrior) -> DpmPrior {
        p.m0 = self.m0.unwrap_or(p.m0);
        p.s0 = self.s0.unwrap_or(p.s0);
        self.apply_common(&mut p.a, &mut p.b, &mut p.a_alpha, &mut p.b_alpha, &mut p.l);
        p
    }

    pub fn apply_ddp(&self, mut p: DdpPrior) -> DdpPrior {
        let q = p.dim();
        let eye = |v: f64| -> Vec<f64> { (0..q * q).map(|i| if i % (q + 1) == 0 { v } else { 0.0 }).collect() };
        if let (Some(m0), true) = (self.m0, q > 0) {
            p.m0[0] = m0;
        }
        if let Some(s0) = self.s0 {
            p.s0 = eye(s0);
        }
        if let Some(psi) = self.psi {
            p.psi = eye(psi);
        }
        p.nu = self.nu.unwrap_or(p.nu);
        self.apply_common(&mut p.a, &mut p.b, &mut p.a_alpha, &mut p.b_alpha, &mut p.l);
        p
    }

    fn apply_common(&self, a: &mut f64, b: &mut f64, aa: &mut f64, ba: &mut f64, l: &mut usize) {
        *a = self.a.unwrap_or(*a);
        *b = self.b.unwrap_or(*b);
        *aa = self.a_alpha.unwrap_or(*aa);
        *ba = self.b_alpha.unwrap_or(*ba);
        *l = self.l.unwrap_or(*l);
    }
}

/// Saved draws of a DPM fit; one row per saved iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpmDraws {
    pub weights: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub occupied: Vec<usize>,
}

impl DpmDraws {
    pub fn nsave(&self) -> usize {
        self.alpha.len()
    }

    pub fn mixture(&self, s: usize) -> NormalMixture {
        NormalMixture {
            weights: self.weights[s].clone(),
            means: self.means[s].clone(),
            sds: self.variances[s].iter().map(|v| v.sqrt()).collect(),
        }
    }

    /// Per-draw, per-observation log densities.
    pub fn log_likelihood(&self, y: &[f64]) -> Vec<Vec<f64>> {
        (0..self.nsave())
            .map(|s| {
                let m = self.mixture(s);
                y.iter().map(|&v| m.log_pdf(v)).collect()
            })
            .collect()
    }
}

/// Allocation and stick-breaking state shared by both samplers.
struct Sticks {
    w: Vec<f64>,
    log_w: Vec<f64>,
    sum_log_1mv: f64,
}

fn update_sticks(rng: &mut StreamRng, counts: &[usize], alpha: f64) -> Result<Sticks> {
    let l = counts.len();
    let mut v = vec![1.0; l];
    let mut tail: usize = counts.iter().sum();
    let mut sum_log_1mv = 0.0;
    for k in 0..l.saturating_sub(1) {
        tail -= counts[k];
        v[k] = beta(rng, 1.0 + counts[k] as f64, alpha + tail as f64)?;
        sum_log_1mv += (1.0 - v[k]).max(1e-300).ln();
    }
    let w = stick_breaking(&v)?;
    let log_w = w.iter().map(|x| x.ln()).collect();
    Ok(Sticks { w, log_w, sum_log_1mv })
}

fn update_alpha(rng: &mut StreamRng, a_alpha: f64, b_alpha: f64, l: usize, sum_log_1mv: f64) -> Result<f64> {
    if l == 1 {
        return gamma(rng, a_alpha, b_alpha);
    }
    gamma(rng, a_alpha + l as f64 - 1.0, b_alpha - sum_log_1mv)
}

/// Initial allocation: contiguous blocks of the order statistics.
fn initial_allocation(y: &[f64], l: usize) -> Vec<usize> {
    let n = y.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let groups = l.min(n).max(1);
    let mut z = vec![0; n];
    for (rank, &i) in idx.iter().enumerate() {
        z[i] = rank * groups / n;
    }
    z
}

fn allocate(
    rng: &mut StreamRng,
    z: &mut [usize],
    log_w: &[f64],
    loc: impl Fn(usize, usize) -> f64,
    y: &[f64],
    var: &[f64],
) -> Result<()> {
    let l = log_w.len();
    let prec: Vec<f64> = var.iter().map(|v| 1.0 / v).collect();
    let half_log_var: Vec<f64> = var.iter().map(|v| 0.5 * v.ln()).collect();
    let mut lp = vec![0.0; l];
    let mut scratch = vec![0.0; l];
    for i in 0..y.len() {
        for k in 0..l {
            let r = y[i] - loc(i, k);
            lp[k] = log_w[k] - half_log_var[k] - 0.5 * r * r * prec[k];
        }
        z[i] = categorical_log(rng, &lp, &mut scratch)?;
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalCollapse(format!("non-finite {what}")));
    }
    Ok(())
}

/// Blocked Gibbs sampler for a truncated DPM of normals.
pub fn fit_dpm(y: &[f64], prior: &DpmPrior, mcmc: &McmcControl, stream: RngStream) -> Result<DpmDraws> {
    let prior = prior.validated()?;
    let mcmc = mcmc.validated()?;
    if y.len() < 2 {
        return Err(Error::BadData("DPM fit needs at least two observations".into()));
    }
    let mut rng = stream.rng();
    let (n, l) = (y.len(), prior.l);
    let mut z = initial_allocation(y, l);
    let mut mu = vec![prior.m0; l];
    let mut var = vec![variance(y).max(1e-8); l];
    let mut alpha = prior.a_alpha / prior.b_alpha;
    let total = mcmc.nburn + mcmc.nsave * mcmc.nskip;
    let mut out = DpmDraws {
        weights: Vec::with_capacity(mcmc.nsave),
        means: Vec::with_capacity(mcmc.nsave),
        variances: Vec::with_capacity(mcmc.nsave),
        alpha: Vec::with_capacity(mcmc.nsave),
        occupied: Vec::with_capacity(mcmc.nsave),
    };
    let mut counts = vec![0usize; l];
    let mut sums = vec![0.0; l];
    for it in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        sums.iter_mut().for_each(|s| *s = 0.0);
        for i in 0..n {
            counts[z[i]] += 1;
            sums[z[i]] += y[i];
        }
        let sticks = update_sticks(&mut rng, &counts, alpha)?;
        for k in 0..l {
            let nk = counts[k] as f64;
            let prec = 1.0 / prior.s0 + nk / var[k];
            let m = (prior.m0 / prior.s0 + sums[k] / var[k]) / prec;
            mu[k] = normal(&mut rng, m, prec.recip().sqrt());
            let mut ss = 0.0;
            for i in 0..n {
                if z[i] == k {
                    ss += (y[i] - mu[k]).powi(2);
                }
            }
            var[k] = 1.0 / gamma(&mut rng, prior.a + 0.5 * nk, prior.b + 0.5 * ss)?;
        }
        check_finite(&mu, "component mean")?;
        check_finite(&var, "component variance")?;
        alpha = update_alpha(&mut rng, prior.a_alpha, prior.b_alpha, l, sticks.sum_log_1mv)?;
        allocate(&mut rng, &mut z, &sticks.log_w, |_, k| mu[k], y, &var)?;
        if it >= mcmc.nburn && (it - mcmc.nburn) % mcmc.nskip == mcmc.nskip - 1 {
            out.weights.push(sticks.w.clone());
            out.means.push(mu.clone());
            out.variances.push(var.clone());
            out.alpha.push(alpha);
            out.occupied.push(counts.iter().filter(|&&c| c > 0).count());
        }
    }
    Ok(out)
}

/// Priors for the dependent DPM: `beta_l ~ N(m, S)`, `m ~ N(m0, S0)`,
/// `S^-1 ~ Wishart(nu, (nu Psi)^-1)`, `sigma^-2 ~ Gamma(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdpPrior {
    pub m0: Vec<f64>,
    /// Row-major q x q.
    pub s0: Vec<f64>,
    pub nu: f64,
    /// Row-major q x q.
    pub psi: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub l: usize,
}

impl DdpPrior {
    /// Defaults for `q` design columns on a standardised marker.
    pub fn standard(q: usize, l: usize) -> Self {
        let eye: Vec<f64> = (0..q * q).map(|i| if i % (q + 1) == 0 { 1.0 } else { 0.0 }).collect();
        Self {
            m0: vec![0.0; q],
            s0: eye.iter().map(|v| 10.0 * v).collect(),
            nu: q as f64 + 2.0,
            psi: eye,
            a: 2.0,
            b: 2.0,
            a_alpha: 2.0,
            b_alpha: 2.0,
            l,
        }
    }

    /// Defaults scaled to the marker when it is not standardised; the first
    /// design column is taken to be the intercept.
    pub fn for_data(q: usize, l: usize, y: &[f64], standardised: bool) -> Self {
        let mut p = Self::standard(q, l);
        if !standardised {
            let s2 = variance(y).max(f64::MIN_POSITIVE);
            if q > 0 {
                p.m0[0] = mean(y);
            }
            p.s0.iter_mut().for_each(|v| *v *= s2);
            p.psi.iter_mut().for_each(|v| *v *= s2);
            p.b *= s2;
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.m0.len()
    }

    pub fn validated(self, q: usize) -> Result<Self> {
        if self.m0.len() != q || self.s0.len() != q * q || self.psi.len() != q * q {
            return Err(Error::DimMismatch(format!("prior dimensions do not match {q} design columns")));
        }
        let pos = [self.a, self.b, self.a_alpha, self.b_alpha];
        if pos.iter().any(|v| !(*v > 0.0)) || self.l == 0 || !(self.nu > q as f64 - 1.0) {
            return Err(Error::Config(format!("invalid dependent DPM prior (nu = {}, L = {})", self.nu, self.l)));
        }
        Ok(self)
    }
}

/// Saved draws of a dependent DPM fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdpDraws {
    pub weights: Vec<Vec<f64>>,
    /// `coefficients[s][l]` is the q-vector of component l.
    pub coefficients: Vec<Vec<Vec<f64>>>,
    pub variances: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub occupied: Vec<usize>,
}

impl DdpDraws {
    pub fn nsave(&self) -> usize {
        self.alpha.len()
    }

    /// Conditional mixture at design row `z`.
    pub fn mixture_at(&self, s: usize, z: &[f64]) -> NormalMixture {
        NormalMixture {
            weights: self.weights[s].clone(),
            means: self.coefficients[s].iter().map(|b| b.iter().zip(z).map(|(x, y)| x * y).sum()).collect(),
            sds: self.variances[s].iter().map(|v| v.sqrt()).collect(),
        }
    }

    pub fn log_likelihood(&self, y: &[f64], z: &DMatrix<f64>) -> Vec<Vec<f64>> {
        let rows: Vec<Vec<f64>> = (0..z.nrows()).map(|i| z.row(i).iter().copied().collect()).collect();
        (0..self.nsave())
            .map(|s| y.iter().zip(&rows).map(|(&v, r)| self.mixture_at(s, r).log_pdf(v)).collect())
            .collect()
    }
}

/// Blocked Gibbs sampler for the single-weights dependent DPM with
/// component means `z' beta_l`.
pub fn fit_ddp(
    y: &[f64],
    z: &DMatrix<f64>,
    prior: &DdpPrior,
    mcmc: &McmcControl,
    stream: RngStream,
) -> Result<DdpDraws> {
    let (n, q) = (z.nrows(), z.ncols());
    if y.len() != n {
        return Err(Error::DimMismatch(format!("{} responses but {n} design rows", y.len())));
    }
    let prior = prior.clone().validated(q)?;
    let mcmc = mcmc.validated()?;
    if n < 2 {
        return Err(Error::BadData("dependent DPM fit needs at least two observations".into()));
    }
    let l = prior.l;
    let mut rng = stream.rng();
    let m0 = DVector::from_column_slice(&prior.m0);
    let s0 = DMatrix::from_row_slice(q, q, &prior.s0);
    let s0_inv = s0.clone().try_inverse().ok_or(Error::NotSpd)?;
    let psi = DMatrix::from_row_slice(q, q, &prior.psi);
    let s0_inv_m0 = &s0_inv * &m0;

    let rows: Vec<DVector<f64>> = (0..n).map(|i| z.row(i).transpose()).collect();
    let outer: Vec<DMatrix<f64>> = rows.iter().map(|r| r * r.transpose()).collect();

    let mut alloc = initial_allocation(y, l);
    let mut m = m0.clone();
    let mut s_inv = (psi.clone()).try_inverse().ok_or(Error::NotSpd)?;
    let mut betas: Vec<DVector<f64>> = vec![m0.clone(); l];
    let mut var = vec![variance(y).max(1e-8); l];
    let mut alpha = prior.a_alpha / prior.b_alpha;
    let mut fitted = vec![0.0; n * l];

    let total = mcmc.nburn + mcmc.nsave * mcmc.nskip;
    let mut out = DdpDraws {
        weights: Vec::with_capacity(mcmc.nsave),
        coefficients: Vec::with_capacity(mcmc.nsave),
        variances: Vec::with_capacity(mcmc.nsave),
        alpha: Vec::with_capacity(mcmc.nsave),
        occupied: Vec::with_capacity(mcmc.nsave),
    };
    let mut counts = vec![0usize; l];
    for it in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        alloc.iter().for_each(|&k| counts[k] += 1);
        let sticks = update_sticks(&mut rng, &counts, alpha)?;

        let s_inv_m = &s_inv * &m;
        for k in 0..l {
            let mut ztz = DMatrix::<f64>::zeros(q, q);
            let mut zty = DVector::<f64>::zeros(q);
            for i in (0..n).filter(|&i| alloc[i] == k) {
                ztz += &outer[i];
                zty.axpy(y[i], &rows[i], 1.0);
            }
            let prec = &s_inv + ztz / var[k];
            let rhs = &s_inv_m + zty / var[k];
            betas[k] = mvn_from_precision(&mut rng, &rhs, &prec)?;
            let mut ssr = 0.0;
            for i in (0..n).filter(|&i| alloc[i] == k) {
                ssr += (y[i] - rows[i].dot(&betas[k])).powi(2);
            }
            var[k] = 1.0 / gamma(&mut rng, prior.a + 0.5 * counts[k] as f64, prior.b + 0.5 * ssr)?;
        }
        check_finite(&var, "component variance")?;
        if betas.iter().any(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::NumericalCollapse("non-finite component coefficients".into()));
        }

        let sum_beta = betas.iter().fold(DVector::<f64>::zeros(q), |acc, b| acc + b);
        let prec_m = &s0_inv + &s_inv * l as f64;
        m = mvn_from_precision(&mut rng, &(&s0_inv_m0 + &s_inv * sum_beta), &prec_m)?;
        let mut scatter = &psi * prior.nu;
        for b in &betas {
            let d = b - &m;
            scatter += &d * d.transpose();
        }
        let scale = scatter.try_inverse().ok_or(Error::NotSpd)?;
        let scale = (&scale + scale.transpose()) * 0.5;
        s_inv = wishart(&mut rng, prior.nu + l as f64, &scale)?;

        alpha = update_alpha(&mut rng, prior.a_alpha, prior.b_alpha, l, sticks.sum_log_1mv)?;

        for i in 0..n {
            for k in 0..l {
                fitted[i * l + k] = rows[i].dot(&betas[k]);
            }
        }
        allocate(&mut rng, &mut alloc, &sticks.log_w, |i, k| fitted[i * l + k], y, &var)?;

        if it >= mcmc.nburn && (it - mcmc.nburn) % mcmc.nskip == mcmc.nskip - 1 {
            out.weights.push(sticks.w.clone());
            out.coefficients.push(betas.iter().map(|b| b.iter().copied().collect()).collect());
            out.variances.push(var.clone());
            out.alpha.push(alpha);
            out.occupied.push(counts.iter().filter(|&&c| c > 0).count());
        }
    }
    Ok(out)
}

/// Prior mean and variance of the number of occupied components given the
/// concentration `alpha` and sample size `n`.
pub fn occupied_components_prior(alpha: f64, n: usize) -> (f64, f64) {
    if alpha <= 0.0 {
        return (0.0, 0.0);
    }
    let lg = ((alpha + n as f64) / alpha).ln();
    (alpha * lg, alpha * (lg - 1.0))
}

/// Mean and variance of a mixture (law of total variance).
pub fn mixture_mean_variance(m: &NormalMixture) -> (f64, f64) {
    (m.mean(), m.variance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::CdfModel;
    use crate::sampling::RngStream;
    use crate::stats::{norm_cdf, sd};
    use rand::Rng;

    fn normals(seed: u64, n: usize, m: f64, s: f64) -> Vec<f64> {
        let mut rng = RngStream::new(seed).rng();
        (0..n).map(|_| normal(&mut rng, m, s)).collect()
    }

    #[test]
    fn draws_are_valid_and_reproducible() {
        let y = normals(1, 200, 0.0, 1.0);
        let mc = McmcControl::new(200, 100, 2).unwrap();
        let a = fit_dpm(&y, &DpmPrior::default(), &mc, RngStream::new(9)).unwrap();
        let b = fit_dpm(&y, &DpmPrior::default(), &mc, RngStream::new(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.nsave(), 200);
        for s in 0..a.nsave() {
            assert!((a.weights[s].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(a.variances[s].iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn single_component_matches_conjugate_normal() {
        let y = normals(2, 1000, 1.5, 2.0);
        let prior = DpmPrior { l: 1, ..DpmPrior::for_data(&y, false) };
        let d = fit_dpm(&y, &prior, &McmcControl::new(2000, 500, 1).unwrap(), RngStream::new(3)).unwrap();
        let post_mu = mean(&d.means.iter().map(|m| m[0]).collect::<Vec<_>>());
        // posterior mean given sigma^2 ~ s^2: (m0/S0 + n ybar/s^2) / (1/S0 + n/s^2)
        let s2 = variance(&y);
        let oracle = (prior.m0 / prior.s0 + 1000.0 * mean(&y) / s2) / (1.0 / prior.s0 + 1000.0 / s2);
        // MC error of the mean is about sd(mu | y) / sqrt(2000) = 0.0014
        assert!((post_mu - oracle).abs() < 0.01, "{post_mu} vs {oracle}");
        let post_var = mean(&d.variances.iter().map(|v| v[0]).collect::<Vec<_>>());
        assert!((post_var - s2).abs() / s2 < 0.05);
    }

    #[test]
    fn bimodal_data_occupy_several_components() {
        let mut rng = RngStream::new(4).rng();
        let y: Vec<f64> = (0..400)
            .map(|_| if rng.random::<f64>() < 0.5 { normal(&mut rng, -2.0, 1.0) } else { normal(&mut rng, 2.0, 1.0) })
            .collect();
        let m = mean(&y);
        let s = sd(&y);
        let ys: Vec<f64> = y.iter().map(|v| (v - m) / s).collect();
        let d = fit_dpm(&ys, &DpmPrior::default(), &McmcControl::new(1000, 500, 1).unwrap(), RngStream::new(5)).unwrap();
        let occ = d.occupied.iter().sum::<usize>() as f64 / d.nsave() as f64;
        assert!(occ >= 2.0, "{occ}");
    }

    #[test]
    fn prior_sampling_without_data_signal() {
        // two observations carry almost no information: component atoms of
        // empty components come from the prior
        let y = [0.0, 0.1];
        let prior = DpmPrior { l: 10, ..DpmPrior::default() };
        let d = fit_dpm(&y, &prior, &McmcControl::new(4000, 200, 1).unwrap(), RngStream::new(6)).unwrap();
        let last: Vec<f64> = d.means.iter().map(|m| m[9]).collect();
        assert!(mean(&last).abs() < 0.2);
        assert!((variance(&last) / prior.s0 - 1.0).abs() < 0.1);
    }

    #[test]
    fn ddp_intercept_only_matches_dpm() {
        let y = normals(7, 500, 0.5, 1.0);
        let z = DMatrix::from_element(500, 1, 1.0);
        let mc = McmcControl::new(2000, 500, 1).unwrap();
        let prior = DdpPrior { l: 1, ..DdpPrior::standard(1, 1) };
        let d = fit_ddp(&y, &z, &prior, &mc, RngStream::new(8)).unwrap();
        let b0 = mean(&d.coefficients.iter().map(|c| c[0][0]).collect::<Vec<_>>());
        let p = fit_dpm(&y, &DpmPrior { l: 1, ..DpmPrior::default() }, &mc, RngStream::new(8)).unwrap();
        let mu = mean(&p.means.iter().map(|m| m[0]).collect::<Vec<_>>());
        assert!((b0 - mu).abs() < 0.02, "{b0} vs {mu}");
    }

    #[test]
    fn ddp_recovers_linear_coefficients() {
        let mut rng = RngStream::new(10).rng();
        let x: Vec<f64> = (0..1000).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| 2.0 + 3.0 * v + normal(&mut rng, 0.0, 0.5)).collect();
        let z = DMatrix::from_fn(1000, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let prior = DdpPrior { l: 1, ..DdpPrior::standard(2, 1) };
        let d = fit_ddp(&y, &z, &prior, &McmcControl::new(1000, 300, 1).unwrap(), RngStream::new(11)).unwrap();
        let b0 = mean(&d.coefficients.iter().map(|c| c[0][0]).collect::<Vec<_>>());
        let b1 = mean(&d.coefficients.iter().map(|c| c[0][1]).collect::<Vec<_>>());
        let ols = crate::design::OlsSolver::new(&z).unwrap().coefficients(&y);
        assert!((b0 - 2.0).abs() < 0.1 && (b1 - 3.0).abs() < 0.1);
        assert!((b0 - ols[0]).abs() < 0.02 && (b1 - ols[1]).abs() < 0.02);
        // single weight vector per draw, independent of x
        assert_eq!(d.weights[0].len(), 1);
    }

    #[test]
    fn ddp_dimension_mismatch() {
        let z = DMatrix::from_element(5, 2, 1.0);
        let r = fit_ddp(&[1.0; 4], &z, &DdpPrior::standard(2, 3), &McmcControl::new(1, 0, 1).unwrap(), RngStream::new(1));
        assert!(matches!(r, Err(Error::DimMismatch(_))));
        let r = fit_ddp(&[1.0; 5], &z, &DdpPrior::standard(3, 3), &McmcControl::new(1, 0, 1).unwrap(), RngStream::new(1));
        assert!(matches!(r, Err(Error::DimMismatch(_))));
    }

    #[test]
    fn mixture_cdf_and_moments() {
        let one = NormalMixture::normal(0.0, 1.0);
        assert_eq!(one.cdf(0.0), 0.5);
        let two = NormalMixture::new(vec![0.3, 0.7], vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let expect = 0.3 * norm_cdf(0.5) + 0.7 * norm_cdf(-0.25);
        assert!((two.cdf(0.5) - expect).abs() < 1e-15);
        let (m, v) = mixture_mean_variance(&two);
        assert!((m - 0.7).abs() < 1e-15);
        assert!((v - 3.31).abs() < 1e-12);
        let pm = NormalMixture { weights: vec![0.5, 0.5], means: vec![-1.0, 1.0], sds: vec![0.0, 0.0] };
        assert!((mixture_mean_variance(&pm).1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn occupied_components_formula() {
        let (m, v) = occupied_components_prior(1.0, 100);
        assert!((m - 101f64.ln()).abs() < 1e-12);
        assert!((v - (101f64.ln() - 1.0)).abs() < 1e-12);
        assert!((m - 4.615_120_516_841_261).abs() < 1e-12);
        let (m, _) = occupied_components_prior(2.0, 691);
        assert!((m - 11.695_765_637_3).abs() < 1e-9);
        assert!(occupied_components_prior(1e-12, 100).0 < 1e-9);
    }
}
