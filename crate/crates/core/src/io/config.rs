use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ArgAction;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::BandwidthMethod;
use crate::croc::EstCdf;
use crate::dpm::{McmcControl, PriorOverrides};
use crate::model::FpfGrid;
use crate::summaries::{PaucControl, PaucFocus, ThresholdCriterion};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Pooled,
    Croc,
    Aroc,
    Threshold,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pooled => "pooled",
            Command::Croc => "croc",
            Command::Aroc => "aroc",
            Command::Threshold => "threshold",
            Command::Simulate => "simulate",
        }
    }
}

/// Every run setting, all optional. The same layer is read from a TOML
/// file (top-level keys plus a section per subcommand) and from command
/// line flags; flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Estimator: emp|kernel|bb|dpm (pooled) or sp|kernel|bnp (croc, aroc).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Input CSV with a header row.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Marker column.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marker: Option<String>,
    /// Column separating diseased from nondiseased subjects.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// Value of the group column that marks nondiseased subjects.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", deserialize_with = "string_or_number")]
    pub tag: Option<String>,
    /// Healthy-group formula; also the AROC formula.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_h: Option<String>,
    /// Diseased-group formula; defaults to the healthy one.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_d: Option<String>,
    /// Covariates read as categorical even if numeric (comma separated).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<String>>,
    /// CSV of covariate values for covariate-specific output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newdata: Option<PathBuf>,
    /// Grid length along the first continuous covariate when no newdata is given.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newdata_points: Option<usize>,
    /// Number of equally spaced FPF points.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_points: Option<usize>,
    /// Partial area focus: fpf (area up to an FPF) or tpf (area above a TPF).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pauc_focus: Option<PaucFocus>,
    /// Bound of the partial area; defaults the focus to fpf.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pauc_value: Option<f64>,
    /// Grid length of posterior density summaries (DPM fits).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_points: Option<usize>,
    /// Prior mean of the component means (intercepts for dependent mixtures).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    /// Prior variance of the component means (times identity for dependent mixtures).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    /// Shape of the gamma prior on component precisions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Rate of the gamma prior on component precisions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Shape of the gamma prior on the concentration parameter.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_alpha: Option<f64>,
    /// Rate of the gamma prior on the concentration parameter.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_alpha: Option<f64>,
    /// Truncation level of the mixtures.
    #[arg(long = "L", alias = "l")]
    #[serde(rename = "L", alias = "l")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Wishart degrees of freedom (dependent mixtures).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Wishart scale, times identity (dependent mixtures).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    /// Saved MCMC draws.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nsave: Option<usize>,
    /// Burn-in iterations.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nburn: Option<usize>,
    /// Thinning interval.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nskip: Option<usize>,
    /// Bootstrap resamples for the frequentist estimators.
    #[arg(long = "B", alias = "bootstrap")]
    #[serde(rename = "B", alias = "bootstrap")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    /// Dirichlet weight draws for the Bayesian bootstrap.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bb_draws: Option<usize>,
    /// Pooled kernel bandwidth: srt (Silverman) or lscv.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<BandwidthMethod>,
    /// Error distribution of the semiparametric fits: normal or empirical.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub est_cdf: Option<EstCdf>,
    /// Local polynomial degree of the kernel mean fit (0 or 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_order: Option<usize>,
    /// Threshold criterion: yi or fpf.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<ThresholdCriterion>,
    /// Target FPF for the fpf criterion.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_fpf: Option<f64>,
    /// Standardise marker and continuous covariates before Bayesian fits.
    #[arg(long, action = ArgAction::Set)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardise: Option<bool>,
    /// Keep every posterior or bootstrap curve in the output.
    #[arg(long, action = ArgAction::Set)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keep_ensemble: Option<bool>,
    /// Evaluate splines beyond the training range instead of failing.
    #[arg(long, action = ArgAction::Set)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolate: Option<bool>,
    /// Seed of all random streams (default 0).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    /// Result JSON (or generated CSV for `simulate`); stdout if absent.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Also write curves as tidy CSV.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub csv: Option<PathBuf>,
    /// Rows to generate (`simulate`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

/// Accepts `tag = 0` as well as `tag = "0"` in config files.
fn string_or_number<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        S(String),
        I(i64),
        F(f64),
    }
    Ok(Some(match Raw::deserialize(d)? {
        Raw::S(s) => s,
        Raw::I(i) => i.to_string(),
        Raw::F(f) => f.to_string(),
    }))
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Settings {
    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &Settings) -> Self {
        overlay!(self, top;
            method, data, marker, group, tag, formula_h, formula_d, factors, newdata, newdata_points,
            p_points, pauc_focus, pauc_value, density_points, m0, s0, a, b, a_alpha, b_alpha, l, nu, psi,
            nsave, nburn, nskip, bootstrap, bb_draws, bandwidth, est_cdf, kernel_order, criterion,
            target_fpf, standardise, keep_ensemble, extrapolate, seed, workers, out, csv, n,
        );
        self
    }

    /// Settings for `command` from TOML text: top-level keys, then the
    /// section named after the subcommand.
    pub fn from_toml(text: &str, command: Command) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config file: {e}")))?;
        let sections = ["pooled", "croc", "aroc", "threshold", "simulate"];
        let mut top = toml::Table::new();
        let mut own = toml::Table::new();
        for (k, v) in table {
            match v {
                toml::Value::Table(t) if k == command.name() => own = t,
                toml::Value::Table(_) if sections.contains(&k.as_str()) => {}
                toml::Value::Table(_) => return Err(Error::Config(format!("unknown config section [{k}]"))),
                v => {
                    top.insert(k, v);
                }
            }
        }
        let parse = |t: toml::Table| -> Result<Settings> {
            t.try_into().map_err(|e: toml::de::Error| Error::Config(format!("config file: {e}")))
        };
        Ok(parse(top)?.overlay(&parse(own)?))
    }

    pub fn from_file(path: &Path, command: Command) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, command)
    }
}

/// A subcommand with its merged settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub settings: Settings,
}

fn required<'a, T>(v: &'a Option<T>, name: &str, command: Command) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("`{}` needs --{name}", command.name())))
}

impl RunConfig {
    pub fn new(command: Command, settings: Settings) -> Self {
        Self { command, settings }
    }

    /// Checks the fields the subcommand needs.
    pub fn validate(&self) -> Result<()> {
        let (c, s) = (self.command, &self.settings);
        if c == Command::Simulate {
            return Ok(());
        }
        required(&s.data, "data", c)?;
        required(&s.marker, "marker", c)?;
        required(&s.group, "group", c)?;
        required(&s.tag, "tag", c)?;
        if matches!(c, Command::Croc | Command::Aroc) {
            required(&s.formula_h, "formula-h", c)?;
        }
        if s.pauc_focus.is_some() && s.pauc_value.is_none() {
            return Err(Error::Config("--pauc-focus needs --pauc-value".into()));
        }
        if s.workers == Some(0) {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        self.pauc()?;
        self.fpf_grid()?;
        self.mcmc()?;
        Ok(())
    }

    pub fn method_or(&self, default: &str) -> String {
        self.settings.method.clone().unwrap_or_else(|| default.to_string())
    }

    pub fn parse_method<M: FromStr<Err = Error>>(&self, default: &str) -> Result<M> {
        self.method_or(default).parse()
    }

    pub fn fpf_grid(&self) -> Result<FpfGrid> {
        FpfGrid::uniform(self.settings.p_points.unwrap_or(101))
    }

    /// Partial area request; the focus defaults to FPF.
    pub fn pauc(&self) -> Result<Option<PaucControl>> {
        match self.settings.pauc_value {
            None => Ok(None),
            Some(v) => {
                let focus = self.settings.pauc_focus.unwrap_or(PaucFocus::Fpf);
                PaucControl { focus, value: v }.validated().map(Some)
            }
        }
    }

    pub fn mcmc(&self) -> Result<McmcControl> {
        let d = McmcControl::default();
        let s = &self.settings;
        McmcControl::new(s.nsave.unwrap_or(d.nsave), s.nburn.unwrap_or(d.nburn), s.nskip.unwrap_or(d.nskip))
    }

    pub fn overrides(&self) -> PriorOverrides {
        let s = &self.settings;
        PriorOverrides {
            m0: s.m0,
            s0: s.s0,
            a: s.a,
            b: s.b,
            a_alpha: s.a_alpha,
            b_alpha: s.b_alpha,
            l: s.l,
            nu: s.nu,
            psi: s.psi,
        }
    }

    pub fn seed(&self) -> u64 {
        self.settings.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.settings.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML: &str = r#"
data = "endo.csv"
marker = "bmi"
group = "cvd_idf"
tag = 0
seed = 3
nsave = 100

[pooled]
method = "dpm"
L = 5
pauc_value = 0.1

[croc]
method = "bnp"
"#;

    #[test]
    fn sections_and_flags_layer() {
        let s = Settings::from_toml(TOML, Command::Pooled).unwrap();
        assert_eq!(s.method.as_deref(), Some("dpm"));
        assert_eq!(s.l, Some(5));
        assert_eq!(s.nsave, Some(100));
        let flags = Settings { seed: Some(9), method: Some("bb".into()), ..Settings::default() };
        let s = s.overlay(&flags);
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.method.as_deref(), Some("bb"));
        assert_eq!(s.marker.as_deref(), Some("bmi"));
        assert_eq!(s.tag.as_deref(), Some("0"));
        let c = Settings::from_toml(TOML, Command::Croc).unwrap();
        assert_eq!(c.method.as_deref(), Some("bnp"));
        assert_eq!(c.l, None);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let e = Settings::from_toml("colour = 1\n", Command::Pooled).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = Settings::from_toml("[other]\nx = 1\n", Command::Pooled).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn validation_reports_missing_fields() {
        let cfg = RunConfig::new(Command::Croc, Settings::from_toml(TOML, Command::Croc).unwrap());
        assert!(matches!(cfg.validate(), Err(Error::Config(m)) if m.contains("formula-h")));
        let cfg = RunConfig::new(Command::Pooled, Settings::from_toml(TOML, Command::Pooled).unwrap());
        cfg.validate().unwrap();
        assert_eq!(cfg.pauc().unwrap().unwrap().focus, PaucFocus::Fpf);
        assert_eq!(cfg.mcmc().unwrap().nsave, 100);
        assert_eq!(cfg.overrides().l, Some(5));
        assert!(RunConfig::new(Command::Simulate, Settings::default()).validate().is_ok());
    }
}
