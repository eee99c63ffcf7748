//! Experiment configuration.
//!
//! Settings are plain `key = value` pairs. A config file supplies a base
//! layer, command-line flags override it, and the resolved configuration is
//! written back out in the same format as the run manifest, so any manifest
//! can be fed to `--config` to reproduce its run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pam_core::ahn::Separation;
use pam_core::Mode;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Capacity,
    Correlation,
    Forgetting,
    Possibilities,
    Noise,
    Efficiency,
    ValidateIou,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Capacity,
        Experiment::Correlation,
        Experiment::Forgetting,
        Experiment::Possibilities,
        Experiment::Noise,
        Experiment::Efficiency,
        Experiment::ValidateIou,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Capacity => "capacity",
            Experiment::Correlation => "correlation",
            Experiment::Forgetting => "forgetting",
            Experiment::Possibilities => "possibilities",
            Experiment::Noise => "noise",
            Experiment::Efficiency => "efficiency",
            Experiment::ValidateIou => "validate-iou",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| BenchError::config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Pam,
    Ahn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Pam => "pam",
            ModelKind::Ahn => "ahn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pam" => Ok(ModelKind::Pam),
            "ahn" => Ok(ModelKind::Ahn),
            other => Err(BenchError::config(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Synthetic,
    Protein(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelKind,
    /// Input sizes; the sweep axis of `capacity`, otherwise the first is used.
    pub n_c: Vec<usize>,
    pub n_k: usize,
    /// Active bits for PAM patterns. AHN always uses `n_c / 2`.
    pub w: usize,
    pub separation: Separation,
    pub sample_width: usize,
    pub mode: Mode,
    pub trials: usize,
    pub seed: u64,
    pub corr: Vec<f64>,
    pub noise: Vec<f64>,
    /// Sequence lengths swept by `efficiency`.
    pub lengths: Vec<usize>,
    /// Number of sequences learned one after another in `forgetting`.
    pub sequences: usize,
    /// Sequence length for `forgetting` and `noise`.
    pub seq_len: usize,
    pub generations: usize,
    /// Normalized-IoU pass mark for capacity probes and word matching.
    pub threshold: f64,
    /// Longest sequence a capacity search will probe.
    pub max_len: usize,
    pub dataset: Dataset,
    pub protein_cap: usize,
    pub iou_grid: Vec<f64>,
    pub iou_n: usize,
    pub iou_pairs: usize,
    pub threads: Option<usize>,
    /// Record wall-clock time in the CSV. Off by default so reports are
    /// byte-reproducible; always on for `efficiency`.
    pub timing: bool,
    pub out: Option<PathBuf>,
}

/// Ordered `key = value` settings.
pub type Settings = BTreeMap<String, String>;

pub const KEYS: &[&str] = &[
    "experiment",
    "model",
    "nc",
    "nk",
    "w",
    "d",
    "beta",
    "sample_width",
    "mode",
    "trials",
    "seed",
    "corr",
    "noise",
    "lengths",
    "sequences",
    "seq_len",
    "generations",
    "threshold",
    "max_len",
    "dataset",
    "fasta",
    "protein_cap",
    "iou_grid",
    "iou_n",
    "iou_pairs",
    "threads",
    "timing",
    "out",
    "version",
];

pub fn parse_settings(text: &str) -> Result<Settings> {
    let mut out = Settings::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| BenchError::config(format!("line {}: expected key = value", k + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(BenchError::config(format!("line {}: unknown key {key:?}", k + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        BenchError::config(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_settings(&text)
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| BenchError::config(format!("invalid value {v:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(BenchError::config(format!("{key} needs at least one value")));
    }
    Ok(items)
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let get = |k: &str| s.get(k).map(String::as_str);
        let experiment: Experiment = get("experiment")
            .ok_or_else(|| BenchError::config("no experiment given"))?
            .parse()?;
        let model: ModelKind = get("model").map_or(Ok(ModelKind::Pam), str::parse)?;

        let separation = match (get("d"), get("beta")) {
            (Some(_), Some(_)) => return Err(BenchError::config("give either d or beta, not both")),
            (_, Some(b)) => Separation::Softmax { beta: parse_one("beta", b)? },
            (Some(d), None) => Separation::Polynomial { degree: parse_one("d", d)? },
            (None, None) => Separation::Polynomial { degree: 2 },
        };

        let default_nc = if experiment == Experiment::Capacity {
            vec![20, 40, 60, 80, 100]
        } else if experiment == Experiment::ValidateIou {
            vec![1000]
        } else {
            vec![100]
        };
        let default_corr = if experiment == Experiment::Correlation {
            vec![0.0, 0.25, 0.5]
        } else {
            vec![0.0]
        };
        let default_mode = if experiment == Experiment::Noise {
            Mode::Online
        } else {
            Mode::Offline
        };
        let default_seq_len = if experiment == Experiment::Noise { 200 } else { 10 };

        let list_or = |k: &str, d: Vec<f64>| get(k).map_or(Ok(d), |v| parse_list(k, v));
        let usize_or = |k: &str, d: usize| get(k).map_or(Ok(d), |v| parse_one(k, v));

        let dataset = match get("dataset").unwrap_or("synthetic") {
            "synthetic" => Dataset::Synthetic,
            "protein" => Dataset::Protein(
                get("fasta")
                    .map(PathBuf::from)
                    .ok_or_else(|| BenchError::config("dataset = protein needs fasta = <path>"))?,
            ),
            other => return Err(BenchError::config(format!("unknown dataset {other:?}"))),
        };

        let cfg = Self {
            experiment,
            model,
            n_c: get("nc").map_or(Ok(default_nc), |v| parse_list("nc", v))?,
            n_k: usize_or("nk", 4)?,
            w: usize_or("w", 5)?,
            separation,
            sample_width: usize_or("sample_width", 1)?,
            mode: get("mode").map_or(Ok(default_mode), |v| {
                v.parse().map_err(|e: pam_core::Error| BenchError::config(e.to_string()))
            })?,
            trials: usize_or("trials", 10)?,
            seed: get("seed").map_or(Ok(0), |v| parse_one("seed", v))?,
            corr: list_or("corr", default_corr)?,
            noise: list_or("noise", vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0])?,
            lengths: get("lengths").map_or(Ok(vec![10, 20, 50, 100, 200, 400]), |v| {
                parse_list("lengths", v)
            })?,
            sequences: usize_or("sequences", 10)?,
            seq_len: usize_or("seq_len", default_seq_len)?,
            generations: usize_or("generations", 50)?,
            threshold: get("threshold").map_or(Ok(0.9), |v| parse_one("threshold", v))?,
            max_len: usize_or("max_len", 4096)?,
            dataset,
            protein_cap: usize_or("protein_cap", pam_core::datasets::DEFAULT_PROTEIN_CAP)?,
            iou_grid: list_or("iou_grid", vec![0.05, 0.1, 0.3, 0.5])?,
            iou_n: usize_or("iou_n", 1000)?,
            iou_pairs: usize_or("iou_pairs", 1000)?,
            threads: get("threads").map(|v| parse_one("threads", v)).transpose()?,
            timing: get("timing").map_or(Ok(false), |v| parse_one("timing", v))?,
            out: get("out").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.n_c.contains(&0) {
            return fail("nc values must be positive".into());
        }
        if self.model == ModelKind::Pam {
            if self.n_k == 0 || self.w == 0 || self.sample_width == 0 {
                return fail("nk, w and sample_width must be at least 1".into());
            }
            if let Some(n) = self.n_c.iter().find(|&&n| n < self.w) {
                return fail(format!("w={} exceeds nc={n}", self.w));
            }
        }
        if self.model == ModelKind::Ahn {
            if let Some(n) = self.n_c.iter().find(|&&n| n < 2) {
                return fail(format!("AHN needs nc >= 2, got {n}"));
            }
            match self.separation {
                Separation::Polynomial { degree: 0 } => return fail("d must be at least 1".into()),
                Separation::Softmax { beta } if !(beta > 0.0 && beta.is_finite()) => {
                    return fail("beta must be positive".into())
                }
                _ => {}
            }
        }
        if let Some(c) = self.corr.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return fail(format!("correlation {c} not in [0,1)"));
        }
        if let Some(f) = self.noise.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return fail(format!("noise fraction {f} not in [0,1]"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return fail(format!("threshold {} not in (0,1]", self.threshold));
        }
        if self.max_len < 2 {
            return fail("max_len must be at least 2".into());
        }
        if self.experiment == Experiment::Noise && self.mode != Mode::Online {
            return fail("the noise experiment runs online generation only".into());
        }
        if matches!(self.experiment, Experiment::Forgetting | Experiment::Noise) && self.seq_len < 2 {
            return fail("seq_len must be at least 2".into());
        }
        if self.experiment == Experiment::Forgetting && self.sequences < 2 {
            return fail("forgetting needs at least 2 sequences".into());
        }
        if self.experiment == Experiment::Possibilities && self.generations == 0 {
            return fail("generations must be at least 1".into());
        }
        if self.lengths.iter().any(|&t| t < 2) {
            return fail("lengths must be at least 2".into());
        }
        if self.experiment == Experiment::ValidateIou {
            if self.iou_n == 0 || self.iou_pairs == 0 {
                return fail("iou_n and iou_pairs must be positive".into());
            }
            if let Some(p) = self.iou_grid.iter().find(|p| !(*p > &0.0 && *p <= &1.0)) {
                return fail(format!("iou grid value {p} not in (0,1]"));
            }
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1".into());
        }
        if self.protein_cap == 0 {
            return fail("protein_cap must be positive".into());
        }
        Ok(())
    }

    /// Resolved settings, one `key = value` per line.
    pub fn to_manifest(&self) -> String {
        let mut m: Vec<(&str, String)> = vec![
            ("version", env!("CARGO_PKG_VERSION").to_string()),
            ("experiment", self.experiment.to_string()),
            ("model", self.model.to_string()),
            ("nc", join(&self.n_c)),
            ("nk", self.n_k.to_string()),
            ("w", self.w.to_string()),
        ];
        match self.separation {
            Separation::Polynomial { degree } => m.push(("d", degree.to_string())),
            Separation::Softmax { beta } => m.push(("beta", beta.to_string())),
        }
        m.extend([
            ("sample_width", self.sample_width.to_string()),
            ("mode", self.mode.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("corr", join(&self.corr)),
            ("noise", join(&self.noise)),
            ("lengths", join(&self.lengths)),
            ("sequences", self.sequences.to_string()),
            ("seq_len", self.seq_len.to_string()),
            ("generations", self.generations.to_string()),
            ("threshold", self.threshold.to_string()),
            ("max_len", self.max_len.to_string()),
        ]);
        match &self.dataset {
            Dataset::Synthetic => m.push(("dataset", "synthetic".into())),
            Dataset::Protein(p) => {
                m.push(("dataset", "protein".into()));
                m.push(("fasta", p.display().to_string()));
            }
        }
        m.extend([
            ("protein_cap", self.protein_cap.to_string()),
            ("iou_grid", join(&self.iou_grid)),
            ("iou_n", self.iou_n.to_string()),
            ("iou_pairs", self.iou_pairs.to_string()),
            ("timing", self.timing.to_string()),
        ]);
        if let Some(t) = self.threads {
            m.push(("threads", t.to_string()));
        }
        if let Some(o) = &self.out {
            m.push(("out", o.display().to_string()));
        }
        m.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
