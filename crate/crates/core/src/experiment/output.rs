use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::experiment::{mode_label, ExperimentOutcome, RunRecord, SpectrumTable};

/// Column set of every per-group summary table.
pub const SUMMARY_COLUMNS: [&str; 7] = ["m", "iterations", "theta_th", "theta_exp", "kappa_HM", "tau", "converged"];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.10e}"))
}

/// Writes via a temporary file and rename so readers never see partial files.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// `runs.csv`, `summary_<group>.csv` and `residuals/<id>.csv` under `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("residuals"))?;
    let mut index = String::from(
        "id,eta,preconditioner,weight,mode,m,iterations,converged,breakdown,theta_th,theta_exp,theta_sampled,\
         kappa_HM,tau,tau_exhausted,rho,bound_applicable,bound_satisfied,step_violations,full_relative_residual,residual_file\n",
    );
    for r in &outcome.records {
        let file = format!("residuals/{}.csv", r.id);
        let _ = writeln!(
            index,
            "{},{},{},{},{},{},{},{},{},{:.10e},{},{},{:.10e},{:.10e},{},{:.10e},{},{},{},{},{}",
            r.id,
            r.eta,
            r.preconditioner,
            r.weight.label(),
            mode_label(r.mode),
            r.m,
            r.report.iterations,
            r.report.converged,
            r.report.breakdown,
            r.bound.theta_th,
            opt(r.bound.theta_exp),
            opt(r.bound.theta_sampled),
            r.bound.kappa_hm,
            r.bound.tau,
            r.tau_exhausted,
            r.rho,
            r.bound_applicable,
            r.bound.bound_satisfied,
            r.bound.step_violations.len(),
            opt(r.report.full_relative_residual),
            file
        );
        write_atomic(&dir.join(&file), &residual_csv(r))?;
    }
    write_atomic(&dir.join("runs.csv"), &index)?;

    let mut groups: Vec<String> = Vec::new();
    for r in &outcome.records {
        if !groups.contains(&r.group()) {
            groups.push(r.group());
        }
    }
    for g in groups {
        let mut s = SUMMARY_COLUMNS.join(",");
        s.push('\n');
        for r in outcome.records.iter().filter(|r| r.group() == g) {
            let _ = writeln!(
                s,
                "{},{},{:.10e},{},{:.10e},{:.10e},{}",
                r.m,
                r.report.iterations,
                r.bound.theta_th,
                opt(r.bound.theta_exp),
                r.bound.kappa_hm,
                r.bound.tau,
                r.report.converged
            );
        }
        write_atomic(&dir.join(format!("summary_{g}.csv")), &s)?;
    }
    Ok(())
}

fn residual_csv(r: &RunRecord) -> String {
    let mut s = String::from("iteration,w_norm,h_norm\n");
    for (i, w) in r.report.residual_history.iter().enumerate() {
        let h = r.report.h_residual_history.get(i).copied();
        let _ = writeln!(s, "{i},{w:.16e},{}", h.map_or_else(|| "NA".into(), |v| format!("{v:.16e}")));
    }
    s
}

/// One matplotlib script per `(eta, preconditioner)` pair plotting the
/// relative residual histories of its runs. Returns the written paths.
pub fn emit_plots(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        log::warn!("no run records; no plot scripts written");
        return Ok(Vec::new());
    }
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots)?;
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in records {
        let key = (r.eta, r.preconditioner.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut written = Vec::new();
    for (eta, pre) in keys {
        let mut curves = String::new();
        for r in records.iter().filter(|r| r.eta == eta && r.preconditioner == pre) {
            let _ = writeln!(
                curves,
                "    (\"m={} {} {}\", \"{}.csv\"),",
                r.m,
                r.weight.label(),
                mode_label(r.mode),
                r.id
            );
        }
        let name = format!("plot_eta{eta}_{pre}");
        let script = format!(
            r#"#!/usr/bin/env python3
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
RESIDUALS = os.path.join(HERE, "..", "residuals")
CURVES = [
{curves}]

fig, ax = plt.subplots(figsize=(6, 4))
for label, name in CURVES:
    with open(os.path.join(RESIDUALS, name)) as fh:
        rows = list(csv.DictReader(fh))
    it = [int(r["iteration"]) for r in rows]
    w = [float(r["w_norm"]) for r in rows]
    ax.semilogy(it, [v / w[0] for v in w], label=label)
ax.set_xlabel("iteration")
ax.set_ylabel("relative residual")
ax.set_title("eta = {eta}, H = {pre}")
ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{name}.png"), dpi=150)
"#
        );
        let path = plots.join(format!("{name}.py"));
        write_atomic(&path, &script)?;
        written.push(path);
    }
    Ok(written)
}

/// `spectrum_eta<eta>.csv` files with columns `index,abs_lambda`.
pub fn write_spectra(tables: &[SpectrumTable], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for t in tables {
        let mut s = String::from("index,abs_lambda\n");
        for (i, v) in t.abs_lambda.iter().enumerate() {
            let _ = writeln!(s, "{},{v:.16e}", i + 1);
        }
        let path = dir.join(format!("spectrum_eta{}.csv", t.eta));
        write_atomic(&path, &s)?;
        out.push(path);
    }
    Ok(out)
}
