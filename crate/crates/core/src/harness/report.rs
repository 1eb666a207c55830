//! Tables and summaries from a directory of trial result files.
//!
//! Output is a pure function of the `*.json` files in the directory: methods
//! and seeds are sorted and numbers are printed with fixed precision, so
//! rerunning on the same inputs rewrites identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::{mean_curve, relative_curve, win_matrix};
use super::trial::TrialResult;
use crate::data::write_atomic;
use crate::error::{format_err, usage, Error, Result};

pub const BASELINE: &str = "random";

const SCHEMA: &str = r#"{"method": str, "config_digest": str, "seed": int, "accuracies": [float], "aulc": float}"#;

pub fn load_results(dir: &Path) -> Result<BTreeMap<String, Vec<TrialResult>>> {
    if !dir.is_dir() {
        return Err(usage!("{} is not a directory", dir.display()));
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(usage!(
            "{} holds no trial result files; expected *.json files of the form {SCHEMA}",
            dir.display()
        ));
    }
    let mut by_method: BTreeMap<String, Vec<TrialResult>> = BTreeMap::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let r: TrialResult = serde_json::from_str(&text)
            .map_err(|e| format_err!("{}: not a trial result ({e}); expected {SCHEMA}", p.display()))?;
        if r.accuracies.is_empty() || r.accuracies.iter().any(|a| !a.is_finite()) {
            return Err(format_err!("{}: accuracies must be a non-empty list of numbers", p.display()));
        }
        by_method.entry(r.method.clone()).or_default().push(r);
    }
    for rs in by_method.values_mut() {
        rs.sort_by_key(|r| r.seed);
        if rs.windows(2).any(|w| w[0].seed == w[1].seed) {
            return Err(format_err!("method {} has duplicate seeds", rs[0].method));
        }
    }
    Ok(by_method)
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub curves: PathBuf,
    pub relative: Option<PathBuf>,
    pub win_matrix: PathBuf,
    pub summary: PathBuf,
}

/// Write `curves.csv`, `relative.csv` (when a `random` baseline is present),
/// `winmatrix.csv` and `summary.txt` into `dir`.
pub fn report(dir: &Path) -> Result<ReportFiles> {
    let by_method = load_results(dir)?;

    let mut curves = String::from("method,cycle,mean,stderr,trials\n");
    for (name, rs) in &by_method {
        let (mean, se) = mean_curve(rs).map_err(|e| format_err!("{name}: {e}"))?;
        for (t, (m, s)) in mean.iter().zip(&se).enumerate() {
            writeln!(curves, "{name},{t},{m:.6},{s:.6},{}", rs.len()).unwrap();
        }
    }
    let curves_path = dir.join("curves.csv");
    write_atomic(&curves_path, curves.as_bytes())?;

    let relative_path = match by_method.get(BASELINE) {
        Some(base) => {
            let mut rel = String::from("method,cycle,points_over_random\n");
            for (name, rs) in &by_method {
                let curve = relative_curve(rs, base).map_err(|e| format_err!("{name}: {e}"))?;
                for (t, v) in curve.iter().enumerate() {
                    writeln!(rel, "{name},{t},{v:.4}").unwrap();
                }
            }
            let p = dir.join("relative.csv");
            write_atomic(&p, rel.as_bytes())?;
            Some(p)
        }
        None => None,
    };

    let w = win_matrix(&by_method).map_err(|e| format_err!("{e}"))?;
    let mut wm = String::from("method");
    for m in &w.methods {
        write!(wm, ",{m}").unwrap();
    }
    wm.push('\n');
    for (m, row) in w.methods.iter().zip(&w.values) {
        wm.push_str(m);
        for v in row {
            write!(wm, ",{v:.4}").unwrap();
        }
        wm.push('\n');
    }
    let wm_path = dir.join("winmatrix.csv");
    write_atomic(&wm_path, wm.as_bytes())?;

    let mut summary = String::new();
    writeln!(summary, "{:<24} {:>6} {:>10} {:>10} {:>10}", "method", "trials", "aulc", "stderr", "final").unwrap();
    for (name, rs) in &by_method {
        let n = rs.len() as f64;
        let mean = rs.iter().map(|r| r.aulc).sum::<f64>() / n;
        let se = if rs.len() > 1 {
            (rs.iter().map(|r| (r.aulc - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        let last = rs.iter().map(|r| *r.accuracies.last().unwrap()).sum::<f64>() / n;
        writeln!(summary, "{name:<24} {:>6} {mean:>10.4} {se:>10.4} {last:>10.4}", rs.len()).unwrap();
    }
    let summary_path = dir.join("summary.txt");
    write_atomic(&summary_path, summary.as_bytes())?;

    Ok(ReportFiles {
        curves: curves_path,
        relative: relative_path,
        win_matrix: wm_path,
        summary: summary_path,
    })
}
