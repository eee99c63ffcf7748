//! CSV reports and run manifests.
//!
//! Data rows hold one record each. After them comes one summary row per
//! (experiment, axis, metric), in order of first appearance, with `trial`
//! set to `summary`, an empty `seed`, the mean over trials in `value` and
//! the population standard deviation over trials in `wall_ms`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::runner::TrialRecord;

pub const HEADER: &str = "experiment,axis,trial,seed,metric,value,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub experiment: String,
    pub axis: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(records: &[TrialRecord]) -> Vec<Summary> {
    let mut groups: Vec<(String, String, String, Vec<f64>)> = Vec::new();
    for r in records {
        let exp = r.experiment.to_string();
        match groups
            .iter_mut()
            .find(|g| g.0 == exp && g.1 == r.axis && g.2 == r.metric)
        {
            Some(g) => g.3.push(r.value),
            None => groups.push((exp, r.axis.clone(), r.metric.clone(), vec![r.value])),
        }
    }
    groups
        .into_iter()
        .map(|(experiment, axis, metric, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            Summary {
                experiment,
                axis,
                metric,
                count: v.len(),
                mean,
                std: var.sqrt(),
            }
        })
        .collect()
}

pub fn to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        let ms = r.wall_ms.map(|m| format!("{m:.3}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.experiment, r.axis, r.trial, r.seed, r.metric, r.value, ms
        );
    }
    for s in summarize(records) {
        let _ = writeln!(
            out,
            "{},{},summary,,{},{},{}",
            s.experiment, s.axis, s.metric, s.mean, s.std
        );
    }
    out
}

/// `<out>.manifest`, next to the CSV.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

/// Writes the CSV to `path` and the resolved configuration beside it.
pub fn emit_report(records: &[TrialRecord], cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| BenchError::Io { path: p, source }
    };
    std::fs::write(path, to_csv(records)).map_err(io(path))?;
    let mpath = manifest_path(path);
    let mut cfg = cfg.clone();
    cfg.out = Some(path.to_path_buf());
    std::fs::write(&mpath, cfg.to_manifest()).map_err(io(&mpath))?;
    Ok(())
}
