//! Evaluation metrics: Jaccard overlap, chance-corrected (normalized) IoU,
//! SDR capacity, sequence scores, backward transfer and dataset recall.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::sdr::Sdr;

/// `|a ∩ b| / |a ∪ b|`; two empty patterns are identical and score 1.
pub fn jaccard(a: &Sdr, b: &Sdr) -> Result<f64> {
    if a.size() != b.size() {
        return Err(Error::shape(format!(
            "jaccard of sizes {} and {}",
            a.size(),
            b.size()
        )));
    }
    let inter = a.overlap(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Expected IoU of two random SDRs with sparsities `p` and `q`:
/// `pq / (p + q - pq)`.
pub fn expected_iou(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::param(format!("sparsities ({p}, {q}) outside [0,1]")));
    }
    let denom = p + q - p * q;
    if denom <= 0.0 {
        return Err(Error::param("expected IoU undefined for two empty patterns"));
    }
    Ok(p * q / denom)
}

/// Chance-corrected IoU, `(IoU - E[IoU]) / (1 - E[IoU])`, using each
/// pattern's own sparsity. Identical patterns always score exactly 1.
pub fn normalized_iou(a: &Sdr, b: &Sdr) -> Result<f64> {
    let iou = jaccard(a, b)?;
    if a == b {
        return Ok(1.0);
    }
    let expected = expected_iou(a.sparsity(), b.sparsity())?;
    Ok((iou - expected) / (1.0 - expected))
}

/// `C(n, w)`, exactly.
pub fn sdr_capacity(n: u64, w: u64) -> Result<BigUint> {
    if w > n {
        return Err(Error::param(format!("w={w} exceeds n={n}")));
    }
    let w = w.min(n - w);
    let mut acc = BigUint::from(1u32);
    for i in 0..w {
        acc *= n - i;
        acc /= i + 1;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceScore {
    pub mean: f64,
    pub min: f64,
}

/// Per-step normalized IoU over every step after the first, which is the
/// provided seed and is not scored.
pub fn step_scores(pred: &[Sdr], truth: &[Sdr]) -> Result<Vec<f64>> {
    if pred.len() != truth.len() {
        return Err(Error::shape(format!(
            "prediction has {} steps, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    if truth.len() < 2 {
        return Err(Error::InvalidInput("need at least two steps to score".into()));
    }
    pred.iter()
        .zip(truth)
        .skip(1)
        .map(|(p, t)| normalized_iou(p, t))
        .collect()
}

pub fn sequence_score(pred: &[Sdr], truth: &[Sdr]) -> Result<f64> {
    Ok(sequence_score_detail(pred, truth)?.mean)
}

pub fn sequence_score_detail(pred: &[Sdr], truth: &[Sdr]) -> Result<SequenceScore> {
    let steps = step_scores(pred, truth)?;
    let mean = steps.iter().sum::<f64>() / steps.len() as f64;
    let min = steps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SequenceScore { mean, min })
}

/// Lower-triangular score table: `score(i, j)` is sequence `j` measured
/// after training sequence `i`, for `j < i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrix {
    n: usize,
    cells: Vec<Option<f64>>,
}

impl EvalMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cells: vec![None; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn set(&mut self, trained: usize, tested: usize, score: f64) -> Result<()> {
        if tested >= trained || trained >= self.n {
            return Err(Error::param(format!(
                "cell ({trained},{tested}) is not below the diagonal of a {0}x{0} table",
                self.n
            )));
        }
        self.cells[trained * self.n + tested] = Some(score);
        Ok(())
    }

    pub fn get(&self, trained: usize, tested: usize) -> Option<f64> {
        if trained >= self.n || tested >= self.n {
            return None;
        }
        self.cells[trained * self.n + tested]
    }

    pub fn populated(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(k, c)| c.map(|v| (k / n, k % n, v)))
    }
}

/// Mean over all populated entries.
pub fn backward_transfer(m: &EvalMatrix) -> Result<f64> {
    if m.len() < 2 {
        return Err(Error::param("backward transfer needs at least two sequences"));
    }
    let (sum, count) = m.populated().fold((0.0, 0usize), |(s, c), (_, _, v)| (s + v, c + 1));
    if count == 0 {
        return Err(Error::param("evaluation table has no populated entries"));
    }
    Ok(sum / count as f64)
}

/// Index of the vocabulary word that `generated` spells, if every letter
/// matches with normalized IoU at or above `threshold`.
pub fn match_word(generated: &[Sdr], vocab: &[Vec<Sdr>], threshold: f64) -> Option<usize> {
    vocab.iter().position(|word| {
        word.len() == generated.len()
            && word
                .iter()
                .zip(generated)
                .all(|(w, g)| normalized_iou(g, w).is_ok_and(|s| s >= threshold))
    })
}

/// Unique vocabulary words produced, divided by vocabulary size.
pub fn dataset_recall(generated: &[Vec<Sdr>], vocab: &[Vec<Sdr>], threshold: f64) -> Result<f64> {
    if vocab.is_empty() {
        return Err(Error::param("vocabulary is empty"));
    }
    let mut hit = vec![false; vocab.len()];
    for g in generated {
        if let Some(k) = match_word(g, vocab, threshold) {
            hit[k] = true;
        }
    }
    Ok(hit.iter().filter(|&&h| h).count() as f64 / vocab.len() as f64)
}
