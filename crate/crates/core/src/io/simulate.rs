//! Synthetic endocrine-style data: gender, age, BMI and a binary
//! cardiovascular risk indicator. The generative equations are written
//! out in `docs/simulation.md`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{labels, truncated_normal, RngStream};

/// Parameters of the generator. Defaults are calibrated so that a file of
/// 2840 rows has about 1523 women, age quartiles near 29.6, 39.3 and 50.8
/// on [18.25, 84.66], BMI quartiles near 23.2, 26.2 and 29.7, and a
/// prevalence of 0.2433.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationParams {
    pub p_women: f64,
    /// Age quartile knots: minimum, three quartiles, maximum.
    pub age_knots: [f64; 5],
    /// Decay rate of the truncated exponential on the top age quartile.
    pub age_tail_rate: f64,
    /// BMI support; component draws are truncated to it.
    pub bmi_range: (f64, f64),
    /// Logit of the high-BMI component weight: intercept, per decade of
    /// age above 40, men.
    pub mix_logit: [f64; 3],
    /// Component means: intercept, per decade above 40, women shift.
    pub lean_mean: [f64; 3],
    pub high_mean: [f64; 3],
    pub lean_sd: f64,
    pub high_sd: f64,
    /// Disease logit slopes on BMI (centred at 26.24), age decade and men.
    /// The intercept is solved so the mean risk equals `prevalence`.
    pub risk_slopes: [f64; 3],
    pub prevalence: f64,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            p_women: 1523.0 / 2840.0,
            age_knots: [18.25, 29.57, 39.28, 50.84, 84.66],
            age_tail_rate: 0.060_812_632_909_130_73,
            bmi_range: (12.6, 46.2),
            mix_logit: [-0.8, 0.35, 0.3],
            lean_mean: [24.6, 0.9, -0.6],
            high_mean: [30.6, 0.9, -0.5],
            lean_sd: 2.6,
            high_sd: 3.8,
            risk_slopes: [0.14, 0.6, 0.35],
            prevalence: 0.2433,
        }
    }
}

/// One generated subject.
#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub women: bool,
    pub age: f64,
    pub bmi: f64,
    pub cvd: bool,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn draw_age<R: Rng>(rng: &mut R, p: &SimulationParams) -> f64 {
    let k = &p.age_knots;
    let u: f64 = rng.random();
    let q = ((u * 4.0) as usize).min(3);
    let v = u * 4.0 - q as f64;
    if q < 3 {
        k[q] + v * (k[q + 1] - k[q])
    } else {
        let w = k[4] - k[3];
        let lam = p.age_tail_rate;
        (k[3] - (-v * (-(-lam * w).exp_m1())).ln_1p() / lam).min(k[4])
    }
}

/// Draws `n` subjects from one seeded stream.
pub fn simulate_subjects(n: usize, seed: u64, p: &SimulationParams) -> Result<Vec<Subject>> {
    if !(0.0..=1.0).contains(&p.p_women) || !(p.prevalence > 0.0 && p.prevalence < 1.0) {
        return Err(Error::BadParameter("p_women must be in [0, 1] and prevalence in (0, 1)".into()));
    }
    let mut rng = RngStream::new(seed).substream(labels::SIMULATE, 0).rng();
    let mut subjects = Vec::with_capacity(n);
    for _ in 0..n {
        let women = rng.random::<f64>() < p.p_women;
        let age = draw_age(&mut rng, p);
        let z = (age - 40.0) / 10.0;
        let (wf, mf) = (f64::from(u8::from(women)), f64::from(u8::from(!women)));
        let high = rng.random::<f64>() < logistic(p.mix_logit[0] + p.mix_logit[1] * z + p.mix_logit[2] * mf);
        let (m, sd) = if high {
            (p.high_mean[0] + p.high_mean[1] * z + p.high_mean[2] * wf, p.high_sd)
        } else {
            (p.lean_mean[0] + p.lean_mean[1] * z + p.lean_mean[2] * wf, p.lean_sd)
        };
        let bmi = truncated_normal(&mut rng, m, sd, p.bmi_range.0, p.bmi_range.1)?;
        subjects.push(Subject { women, age, bmi, cvd: false });
    }

    let eta: Vec<f64> = subjects
        .iter()
        .map(|s| {
            let r = &p.risk_slopes;
            r[0] * (s.bmi - 26.24) + r[1] * (s.age - 40.0) / 10.0 + r[2] * f64::from(u8::from(!s.women))
        })
        .collect();
    let b0 = calibrate_intercept(&eta, p.prevalence);
    for (s, e) in subjects.iter_mut().zip(&eta) {
        s.cvd = rng.random::<f64>() < logistic(b0 + e);
    }
    Ok(subjects)
}

/// Intercept `b` with `mean(logistic(b + eta)) = target`, by bisection.
fn calibrate_intercept(eta: &[f64], target: f64) -> f64 {
    if eta.is_empty() {
        return (target / (1.0 - target)).ln();
    }
    let mean_risk = |b: f64| eta.iter().map(|e| logistic(b + e)).sum::<f64>() / eta.len() as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_risk(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Writes `n` generated rows as CSV (`cvd_idf,age,gender,bmi`), men first.
pub fn simulate_endosyn_like<W: Write>(n: usize, seed: u64, p: &SimulationParams, out: W) -> Result<()> {
    let subjects = simulate_subjects(n, seed, p)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cvd_idf", "age", "gender", "bmi"])?;
    for s in subjects.iter().filter(|s| !s.women).chain(subjects.iter().filter(|s| s.women)) {
        w.write_record([
            u8::from(s.cvd).to_string(),
            format!("{:.2}", s.age),
            if s.women { "Women" } else { "Men" }.to_string(),
            format!("{:.2}", s.bmi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::quantile_sorted;

    #[test]
    fn calibrated_marginals() {
        let s = simulate_subjects(2840, 1, &SimulationParams::default()).unwrap();
        let prev = s.iter().filter(|s| s.cvd).count() as f64 / 2840.0;
        assert!((0.22..=0.27).contains(&prev), "prevalence {prev}");
        let mut age: Vec<f64> = s.iter().map(|s| s.age).collect();
        age.sort_by(f64::total_cmp);
        assert!(age[0] >= 18.25 && age[2839] <= 84.66);
        for (q, target) in [(0.25, 29.57), (0.5, 39.28), (0.75, 50.84)] {
            let v = quantile_sorted(&age, q);
            assert!((v - target).abs() <= 1.0, "age quantile {q}: {v}");
        }
        let women = s.iter().filter(|s| s.women).count() as f64;
        assert!((women - 1523.0).abs() < 100.0);
    }

    #[test]
    fn bytes_are_deterministic_and_men_come_first() {
        let p = SimulationParams::default();
        let mut a = Vec::new();
        let mut b = Vec::new();
        simulate_endosyn_like(300, 9, &p, &mut a).unwrap();
        simulate_endosyn_like(300, 9, &p, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let first = text.lines().nth(1).unwrap();
        assert!(first.contains(",Men,"));
        let mut c = Vec::new();
        simulate_endosyn_like(300, 10, &p, &mut c).unwrap();
        assert_ne!(text.as_bytes(), &c[..]);
    }

    #[test]
    fn intercept_hits_target_mean_risk() {
        let eta = [-1.0, 0.0, 0.5, 2.0];
        let b = calibrate_intercept(&eta, 0.3);
        let m = eta.iter().map(|e| logistic(b + e)).sum::<f64>() / 4.0;
        assert!((m - 0.3).abs() < 1e-12);
    }
}
