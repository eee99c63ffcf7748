//! Experiment protocols and the parallel trial driver.
//!
//! Every trial draws from its own stream, `Rng::for_stream(seed, trial)`,
//! so results do not depend on which thread ran what or in which order.

use std::time::Instant;

use pam_core::datasets::{gen_sequences, proteins_from_str, word_dataset, FastaOptions};
use pam_core::metrics::{
    backward_transfer, dataset_recall, expected_iou, jaccard, sequence_score,
    EvalMatrix,
};
use pam_core::sdr::{corrupt, random_sdr};
use pam_core::{Mode, Rng, Sdr};
use rand::RngCore;
use rayon::prelude::*;

use crate::config::{Dataset, Experiment, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::memory::ModelSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub axis: String,
    pub trial: usize,
    /// State of the trial's random stream before any draw.
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub wall_ms: Option<f64>,
}

/// Trains a fresh model on one sequence and checks the replay score.
fn probe(
    spec: &ModelSpec,
    mode: Mode,
    n_c: usize,
    t: usize,
    correlation: f64,
    threshold: f64,
    rng: &mut Rng,
) -> Result<bool> {
    let w = spec.pattern_width(n_c);
    let xs = gen_sequences(1, t, correlation, n_c, w, rng)?.sequences.remove(0);
    let mut model = spec.build(n_c, rng.next_u64())?;
    model.learn(&xs)?;
    let replay = model.replay(mode, &xs)?;
    Ok(sequence_score(&replay.patterns, &xs)? >= threshold)
}

/// Longest sequence a fresh model can learn and replay at `threshold`,
/// found by doubling from `T = 2` and then bisecting. Returns 0 when even
/// `T = 2` fails and `max_len` when the cap itself passes.
pub fn find_capacity(
    spec: &ModelSpec,
    mode: Mode,
    n_c: usize,
    correlation: f64,
    threshold: f64,
    max_len: usize,
    rng: &mut Rng,
) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(BenchError::config(format!("threshold {threshold} not in (0,1]")));
    }
    if max_len < 2 {
        return Err(BenchError::config("max_len must be at least 2"));
    }
    let pass = |t: usize, rng: &mut Rng| probe(spec, mode, n_c, t, correlation, threshold, rng);
    if !pass(2, rng)? {
        return Ok(0);
    }
    let mut lo = 2;
    let hi = loop {
        if lo == max_len {
            return Ok(max_len);
        }
        let t = (lo * 2).min(max_len);
        if pass(t, rng)? {
            lo = t;
        } else {
            break t;
        }
    };
    let mut hi = hi;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pass(mid, rng)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Learns `sequences` in order; after each one, replays every earlier one.
pub fn forgetting_matrix(
    spec: &ModelSpec,
    mode: Mode,
    n_c: usize,
    sequences: &[Vec<Sdr>],
    model_seed: u64,
) -> Result<EvalMatrix> {
    let mut model = spec.build(n_c, model_seed)?;
    let mut m = EvalMatrix::new(sequences.len());
    for (i, xs) in sequences.iter().enumerate() {
        model.learn(xs)?;
        for (j, earlier) in sequences[..i].iter().enumerate() {
            let replay = model.replay(mode, earlier)?;
            m.set(i, j, sequence_score(&replay.patterns, earlier)?)?;
        }
    }
    Ok(m)
}

/// Summary of one pass of offline generation over every word.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRound {
    /// Mean over words of the best sequence score against any vocabulary word.
    pub word_iou: f64,
    /// Fraction of the vocabulary produced in this or any earlier round.
    pub dataset_recall: f64,
    /// Generated steps that do not equal any codebook letter exactly.
    pub blend_steps: usize,
    /// Steps left empty because the model had nothing to predict.
    pub missing_steps: usize,
}

/// Trains on the word list one word at a time, then runs `generations`
/// rounds of offline generation seeded with each word's first letter.
pub fn possibilities_rounds(
    spec: &ModelSpec,
    n_c: usize,
    generations: usize,
    threshold: f64,
    rng: &mut Rng,
) -> Result<Vec<GenerationRound>> {
    let data = word_dataset(rng.next_u64(), n_c, spec.pattern_width(n_c))?;
    let vocab = &data.set.sequences;
    let letters: Vec<&Sdr> = data.codebook.entries().map(|(_, s)| s).collect();
    let mut model = spec.build(n_c, rng.next_u64())?;
    for word in vocab {
        model.learn(word)?;
    }
    let mut produced: Vec<Vec<Sdr>> = Vec::new();
    let mut rounds = Vec::with_capacity(generations);
    for _ in 0..generations {
        let mut iou_sum = 0.0;
        let mut blend_steps = 0;
        let mut missing_steps = 0;
        for word in vocab {
            let replay = model.replay(Mode::Offline, word)?;
            missing_steps += word.len() - 1 - replay.produced;
            blend_steps += replay.patterns[1..1 + replay.produced]
                .iter()
                .filter(|g| !letters.contains(g))
                .count();
            let mut best = f64::NEG_INFINITY;
            for v in vocab.iter().filter(|v| v.len() == word.len()) {
                best = best.max(sequence_score(&replay.patterns, v)?);
            }
            iou_sum += best;
            produced.push(replay.patterns);
        }
        rounds.push(GenerationRound {
            word_iou: iou_sum / vocab.len() as f64,
            dataset_recall: dataset_recall(&produced, vocab, threshold)?,
            blend_steps,
            missing_steps,
        });
    }
    Ok(rounds)
}

/// Online replay of a learned sequence whose observations after the first
/// are corrupted by `fraction`.
pub fn noisy_replay_score(
    spec: &ModelSpec,
    n_c: usize,
    xs: &[Sdr],
    fraction: f64,
    model_seed: u64,
    noise_rng: &mut Rng,
) -> Result<f64> {
    let mut model = spec.build(n_c, model_seed)?;
    model.learn(xs)?;
    let mut observed = Vec::with_capacity(xs.len());
    observed.push(xs[0].clone());
    for x in &xs[1..] {
        observed.push(corrupt(x, fraction, noise_rng)?);
    }
    let replay = model.replay(Mode::Online, &observed)?;
    Ok(sequence_score(&replay.patterns, xs)?)
}

/// Mean Jaccard over `pairs` independent random pairs with densities `p`, `q`.
pub fn empirical_iou(n: usize, p: f64, q: f64, pairs: usize, rng: &mut Rng) -> Result<f64> {
    let wp = (p * n as f64).round() as usize;
    let wq = (q * n as f64).round() as usize;
    let mut sum = 0.0;
    for _ in 0..pairs {
        let a = random_sdr(n, wp, rng)?;
        let b = random_sdr(n, wq, rng)?;
        sum += jaccard(&a, &b)?;
    }
    Ok(sum / pairs as f64)
}

/// One metric produced by a unit. `axis` overrides the unit's axis value
/// for protocols that report along a second dimension.
struct Value {
    axis: Option<String>,
    metric: String,
    value: f64,
    wall_ms: Option<f64>,
}

impl Value {
    fn new(metric: &str, value: f64) -> Self {
        Self::at(None, metric, value)
    }

    fn at(axis: Option<String>, metric: &str, value: f64) -> Self {
        Self {
            axis,
            metric: metric.to_string(),
            value,
            wall_ms: None,
        }
    }
}

struct Unit {
    axis: String,
    index: usize,
    trial: usize,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    spec: ModelSpec,
    fasta: Option<String>,
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn axes(cfg: &ExperimentConfig) -> Vec<String> {
    match cfg.experiment {
        Experiment::Capacity => cfg.n_c.iter().map(|n| n.to_string()).collect(),
        Experiment::Correlation => cfg.corr.iter().copied().map(fmt_f).collect(),
        Experiment::Forgetting => match cfg.dataset {
            Dataset::Synthetic => cfg.corr.iter().copied().map(fmt_f).collect(),
            Dataset::Protein(_) => vec!["protein".into()],
        },
        Experiment::Possibilities => vec!["words".into()],
        Experiment::Noise => cfg.noise.iter().copied().map(fmt_f).collect(),
        Experiment::Efficiency => cfg.lengths.iter().map(|t| t.to_string()).collect(),
        Experiment::ValidateIou => {
            let g = &cfg.iou_grid;
            g.iter()
                .flat_map(|p| g.iter().map(move |q| format!("{p}:{q}")))
                .collect()
        }
    }
}

impl Ctx<'_> {
    fn run_unit(&self, u: &Unit) -> Result<Vec<Value>> {
        let cfg = self.cfg;
        let spec = &self.spec;
        let mut rng = Rng::for_stream(cfg.seed, u.trial as u64);
        let n_c = cfg.n_c[0];
        let one = |metric: &str, v: f64| vec![Value::new(metric, v)];
        Ok(match cfg.experiment {
            Experiment::Capacity => {
                let n = cfg.n_c[u.index];
                let t = find_capacity(spec, cfg.mode, n, cfg.corr[0], cfg.threshold, cfg.max_len, &mut rng)?;
                one("t_max", t as f64)
            }
            Experiment::Correlation => {
                let c = cfg.corr[u.index];
                let t = find_capacity(spec, cfg.mode, n_c, c, cfg.threshold, cfg.max_len, &mut rng)?;
                one("t_max", t as f64)
            }
            Experiment::Forgetting => {
                let w = spec.pattern_width(n_c);
                let mut out = Vec::new();
                let sequences = match &self.fasta {
                    None => {
                        let c = cfg.corr[u.index];
                        gen_sequences(cfg.sequences, cfg.seq_len, c, n_c, w, &mut rng)?.sequences
                    }
                    Some(text) => {
                        let opts = FastaOptions {
                            codebook_seed: rng.next_u64(),
                            n: n_c,
                            w,
                            max_len: cfg.protein_cap,
                        };
                        let set = proteins_from_str(text, &opts)?;
                        out.push(Value::new("length_cap", set.max_len as f64));
                        out.push(Value::new("truncated", set.truncated as f64));
                        set.set
                            .sequences
                            .into_iter()
                            .filter(|s| s.len() >= 2)
                            .take(cfg.sequences)
                            .collect()
                    }
                };
                let m = forgetting_matrix(spec, cfg.mode, n_c, &sequences, rng.next_u64())?;
                out.insert(0, Value::new("bwt", backward_transfer(&m)?));
                out
            }
            Experiment::Possibilities => {
                let rounds = possibilities_rounds(spec, n_c, cfg.generations, cfg.threshold, &mut rng)?;
                let mut out = Vec::with_capacity(rounds.len() * 4);
                for (g, r) in rounds.iter().enumerate() {
                    let axis = Some((g + 1).to_string());
                    out.push(Value::at(axis.clone(), "word_iou", r.word_iou));
                    out.push(Value::at(axis.clone(), "dataset_recall", r.dataset_recall));
                    out.push(Value::at(axis.clone(), "blend_steps", r.blend_steps as f64));
                    out.push(Value::at(axis, "missing_steps", r.missing_steps as f64));
                }
                out
            }
            Experiment::Noise => {
                let f = cfg.noise[u.index];
                let w = spec.pattern_width(n_c);
                let xs = gen_sequences(1, cfg.seq_len, cfg.corr[0], n_c, w, &mut rng)?.sequences.remove(0);
                let model_seed = rng.next_u64();
                one("score", noisy_replay_score(spec, n_c, &xs, f, model_seed, &mut rng)?)
            }
            Experiment::Efficiency => {
                let t = cfg.lengths[u.index];
                let w = spec.pattern_width(n_c);
                // Warm-up probe, discarded.
                let warm = gen_sequences(1, 2, 0.0, n_c, w, &mut rng)?.sequences.remove(0);
                let mut m = spec.build(n_c, rng.next_u64())?;
                m.learn(&warm)?;
                m.replay(cfg.mode, &warm)?;
                let xs = gen_sequences(1, t, cfg.corr[0], n_c, w, &mut rng)?.sequences.remove(0);
                let mut m = spec.build(n_c, rng.next_u64())?;
                let start = Instant::now();
                m.learn(&xs)?;
                let replay = m.replay(cfg.mode, &xs)?;
                let ms = start.elapsed().as_secs_f64() * 1000.0;
                let score = sequence_score(&replay.patterns, &xs)?;
                vec![
                    Value { wall_ms: Some(ms), ..Value::new("wall_ms", ms) },
                    Value { wall_ms: Some(ms), ..Value::new("score", score) },
                ]
            }
            Experiment::ValidateIou => {
                let g = &cfg.iou_grid;
                let (p, q) = (g[u.index / g.len()], g[u.index % g.len()]);
                let emp = empirical_iou(cfg.iou_n, p, q, cfg.iou_pairs, &mut rng)?;
                let ana = expected_iou(p, q)?;
                vec![
                    Value::new("empirical", emp),
                    Value::new("analytic", ana),
                    Value::new("abs_error", (emp - ana).abs()),
                ]
            }
        })
    }
}

/// Runs every (axis value, trial) unit of the configured experiment.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let fasta = match (&cfg.dataset, cfg.experiment) {
        (Dataset::Protein(path), Experiment::Forgetting) => {
            Some(std::fs::read_to_string(path).map_err(|source| BenchError::Io {
                path: path.clone(),
                source,
            })?)
        }
        (Dataset::Protein(_), e) => {
            return Err(BenchError::config(format!(
                "the protein dataset applies to forgetting only, not {e}"
            )))
        }
        (Dataset::Synthetic, _) => None,
    };
    let ctx = Ctx {
        cfg,
        spec: ModelSpec::from_config(cfg),
        fasta,
    };
    let units: Vec<Unit> = axes(cfg)
        .into_iter()
        .enumerate()
        .flat_map(|(index, axis)| {
            (0..cfg.trials).map(move |trial| Unit {
                axis: axis.clone(),
                index,
                trial,
            })
        })
        .collect();

    let timed = cfg.experiment == Experiment::Efficiency;
    let run = |u: &Unit| -> Result<Vec<TrialRecord>> {
        let seed = Rng::for_stream(cfg.seed, u.trial as u64).state();
        let start = Instant::now();
        let values = ctx.run_unit(u)?;
        let elapsed = start.elapsed().as_secs_f64() * 1000.0;
        Ok(values
            .into_iter()
            .map(|v| TrialRecord {
                experiment: cfg.experiment,
                axis: v.axis.unwrap_or_else(|| u.axis.clone()),
                trial: u.trial,
                seed,
                metric: v.metric,
                value: v.value,
                wall_ms: v.wall_ms.or(cfg.timing.then_some(elapsed)),
            })
            .collect())
    };

    // Timed runs stay on one thread so measurements do not compete.
    let threads = if timed { Some(1) } else { cfg.threads };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| BenchError::config(format!("cannot start worker pool: {e}")))?;
    let per_unit: Vec<Result<Vec<TrialRecord>>> = pool.install(|| units.par_iter().map(run).collect());
    let mut out = Vec::new();
    for r in per_unit {
        out.extend(r?);
    }
    Ok(out)
}
