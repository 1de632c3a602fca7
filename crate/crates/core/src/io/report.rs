//! Plain-text run summaries and tidy CSV emission of curves and
//! thresholds.

use std::fmt::Write as _;
use std::io::Write;

use crate::croc::CoefficientRow;
use crate::diagnostics::FitCriteria;
use crate::error::Result;
use crate::io::envelope::{Payload, ResultEnvelope};
use crate::kernel::Bandwidths;
use crate::model::{Column, CovariateFrame, MissingCounts};
use crate::pooled::SampleSizes;
use crate::stats::{Band, Interval};
use crate::summaries::{PaucFocus, PaucSummary, ThresholdCriterion};

const RULE: &str = "----------------------------------------------";

fn iv(i: &Interval) -> String {
    format!("{:.3} ({:.3}, {:.3})", i.est, i.lo, i.hi)
}

fn pauc_line(out: &mut String, what: &str, p: &PaucSummary) {
    let focus = match p.focus {
        PaucFocus::Fpf => "FPF",
        PaucFocus::Tpf => "TPF",
    };
    let _ = writeln!(out, "Partial area under the {what} ({focus} = {}): {}", p.value, iv(&p.estimate));
}

fn criteria(out: &mut String, groups: &[(&str, &FitCriteria)]) {
    out.push_str("\nModel selection criteria:\n");
    let _ = write!(out, "{:<15}", "");
    for (name, _) in groups {
        let _ = write!(out, "{name:>14}");
    }
    out.push('\n');
    type Getter = fn(&FitCriteria) -> f64;
    let rows: [(&str, Getter); 5] = [
        ("WAIC", |c| c.waic),
        ("WAIC (Penalty)", |c| c.waic_penalty),
        ("LPML", |c| c.lpml),
        ("DIC", |c| c.dic),
        ("DIC (Penalty)", |c| c.dic_penalty),
    ];
    for (label, f) in rows {
        let _ = write!(out, "{label:<15}");
        for (_, c) in groups {
            let _ = write!(out, "{:>14.3}", f(c));
        }
        out.push('\n');
    }
}

fn sizes(out: &mut String, n: SampleSizes, missing: MissingCounts) {
    out.push_str("\nSample sizes:\n");
    let _ = writeln!(out, "{:<26}{:>10}{:>12}", "", "Group H", "Group D");
    let _ = writeln!(out, "{:<26}{:>10}{:>12}", "Number of observations", n.healthy, n.diseased);
    let _ = writeln!(out, "{:<26}{:>10}{:>12}", "Number of missing data", missing.healthy, missing.diseased);
}

fn coefficients(out: &mut String, title: &str, rows: &[CoefficientRow], bayes: bool) {
    if rows.is_empty() {
        return;
    }
    let (e, q) = if bayes { ("Post. mean", "Post. 2.5%") } else { ("Estimate", "2.5%") };
    let _ = writeln!(out, "{title}:");
    let _ = writeln!(out, "{:<20}{e:>12}{q:>14}{:>14}", "", "97.5%");
    for r in rows {
        let _ = writeln!(out, "{:<20}{:>12.4}{:>14.4}{:>14.4}", r.term, r.estimate.est, r.estimate.lo, r.estimate.hi);
    }
    out.push('\n');
}

fn bandwidth_block(out: &mut String, h: &Bandwidths, d: Option<&Bandwidths>) {
    let header = |out: &mut String| {
        let _ = write!(out, "{:<16}{:>12}", "", "Group H");
        if d.is_some() {
            let _ = write!(out, "{:>12}", "Group D");
        }
        out.push('\n');
    };
    for (title, f) in [("Regression functions", (|b: &Bandwidths| b.mean) as fn(&Bandwidths) -> f64), ("Variance functions", |b| b.var)] {
        let _ = writeln!(out, "\n{title}:");
        header(out);
        let _ = write!(out, "{:<16}{:>12.6}", "Bandwidth:", f(h));
        if let Some(d) = d {
            let _ = write!(out, "{:>12.6}", f(d));
        }
        out.push('\n');
    }
}

fn cell(frame: &CovariateFrame, name: &str, row: usize) -> String {
    match frame.column(name) {
        Some(Column::Continuous(v)) => format!("{:.3}", v[row]),
        Some(Column::Categorical { levels, codes }) => levels[codes[row]].clone(),
        None => String::new(),
    }
}

/// The summary block printed after a run.
pub fn summary_text(env: &ResultEnvelope) -> String {
    let mut out = String::new();
    match &env.payload {
        Payload::Pooled(r) => {
            let _ = writeln!(out, "Approach: Pooled ROC curve - {}\n{RULE}", r.method.label());
            let _ = writeln!(out, "Area under the pooled ROC curve: {}", iv(&r.auc));
            if let Some(p) = &r.pauc {
                pauc_line(&mut out, "pooled ROC curve", p);
            }
            if let Some(f) = &r.fit {
                criteria(&mut out, &[("Group H", &f.healthy), ("Group D", &f.diseased)]);
                out.push('\n');
            }
            if let Some(b) = &r.bandwidths {
                let _ = writeln!(out, "\nBandwidths: Group H {:.6}, Group D {:.6}", b.healthy.value, b.diseased.value);
            }
            sizes(&mut out, r.sample_sizes, env.missing);
        }
        Payload::Croc(r) => {
            let _ = writeln!(out, "Approach: Conditional ROC curve - {}\n{RULE}", r.method.label());
            if let Some(c) = &r.coefficients {
                let bayes = r.method.is_bayesian();
                out.push_str("\nParametric coefficients\n");
                coefficients(&mut out, "Group H", &c.healthy, bayes);
                coefficients(&mut out, "Group D", &c.diseased, bayes);
                coefficients(&mut out, "ROC curve", &c.roc, bayes);
            }
            if let Some(b) = &r.bandwidths {
                bandwidth_block(&mut out, &b.healthy, Some(&b.diseased));
            }
            let names = r.newdata.names();
            if !r.rows.is_empty() {
                out.push_str("\nCovariate-specific AUC:\n");
                for n in names {
                    let _ = write!(out, "{n:>12}");
                }
                let _ = writeln!(out, "  AUC");
                for (i, row) in r.rows.iter().enumerate() {
                    for n in names {
                        let _ = write!(out, "{:>12}", cell(&r.newdata, n, i));
                    }
                    let _ = writeln!(out, "  {}", iv(&row.auc));
                }
            }
            if let Some(f) = &r.fit {
                criteria(&mut out, &[("Group H", &f.healthy), ("Group D", &f.diseased)]);
                out.push('\n');
            }
            sizes(&mut out, r.sample_sizes, env.missing);
        }
        Payload::Aroc(r) => {
            let _ = writeln!(out, "Approach: AROC {}\n{RULE}", r.method.label());
            let _ = writeln!(out, "Area under the covariate-adjusted ROC curve: {}", iv(&r.aauc));
            if let Some(p) = &r.pauc {
                pauc_line(&mut out, "covariate-adjusted ROC curve", p);
            }
            let _ = writeln!(out, "Youden index of the covariate-adjusted ROC curve: {}", iv(&r.yi));
            if let Some(b) = &r.bandwidths {
                bandwidth_block(&mut out, b, None);
            }
            if let Some(f) = &r.fit {
                criteria(&mut out, &[("Group H", f)]);
                out.push('\n');
            }
            sizes(&mut out, r.sample_sizes, env.missing);
        }
        Payload::Threshold(t) => {
            let crit = match t.result.criterion {
                ThresholdCriterion::Yi => "Youden index".to_string(),
                ThresholdCriterion::Fpf => format!("FPF = {}", t.result.target_fpf.unwrap_or(f64::NAN)),
            };
            let _ = writeln!(out, "Thresholds ({crit}) - {}\n{RULE}", t.method);
            let names: Vec<String> = t.newdata.as_ref().map(|f| f.names().to_vec()).unwrap_or_default();
            for (i, row) in t.result.rows.iter().enumerate() {
                if let Some(f) = &t.newdata {
                    let at: Vec<String> = names.iter().map(|n| format!("{n} = {}", cell(f, n, i))).collect();
                    let _ = writeln!(out, "{}:", at.join(", "));
                }
                let _ = writeln!(out, "  Threshold: {}", iv(&row.threshold));
                if let Some(y) = &row.yi {
                    let _ = writeln!(out, "  YI: {}", iv(y));
                }
                let _ = writeln!(out, "  FPF: {}", iv(&row.fpf));
                let _ = writeln!(out, "  TPF: {}", iv(&row.tpf));
            }
        }
    }
    for w in &env.warnings {
        let _ = writeln!(out, "Warning: {w}");
    }
    out
}

fn band_rows<W: Write>(w: &mut csv::Writer<W>, row: usize, p: &[f64], b: &Band) -> Result<()> {
    for (k, &pk) in p.iter().enumerate() {
        w.write_record([row.to_string(), pk.to_string(), b.est[k].to_string(), b.lo[k].to_string(), b.hi[k].to_string()])?;
    }
    Ok(())
}

/// Curves as `row,p,est,lo,hi` (one row index per covariate value), or
/// thresholds as `row,threshold,lo,hi,fpf,tpf`.
pub fn write_tidy_csv<W: Write>(env: &ResultEnvelope, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match &env.payload {
        Payload::Pooled(r) => {
            w.write_record(["row", "p", "est", "lo", "hi"])?;
            band_rows(&mut w, 0, &r.p, &r.roc)?;
        }
        Payload::Croc(r) => {
            w.write_record(["row", "p", "est", "lo", "hi"])?;
            for (i, row) in r.rows.iter().enumerate() {
                band_rows(&mut w, i, &r.p, &row.roc)?;
            }
        }
        Payload::Aroc(r) => {
            w.write_record(["row", "p", "est", "lo", "hi"])?;
            band_rows(&mut w, 0, &r.p, &r.aroc)?;
        }
        Payload::Threshold(t) => {
            w.write_record(["row", "threshold", "lo", "hi", "fpf", "tpf"])?;
            for (i, r) in t.result.rows.iter().enumerate() {
                w.write_record([
                    i.to_string(),
                    r.threshold.est.to_string(),
                    r.threshold.lo.to_string(),
                    r.threshold.hi.to_string(),
                    r.fpf.est.to_string(),
                    r.tpf.est.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
