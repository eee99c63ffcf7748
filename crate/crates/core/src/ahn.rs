//! Asymmetric Hopfield network in the universal Hopfield form.
//!
//! Recall of the next pattern for a query `ξ` is
//! `Σ_t x_{t+1} · sep(sim(x_t, ξ))` with a dot-product similarity over
//! bipolar vectors, then sign-binarised back to an [`Sdr`].

use crate::error::{Error, Result};
use crate::sdr::Sdr;
use crate::GenerateInput;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    /// `sign(s) * |s|^d`
    Polynomial { degree: u32 },
    /// Softmax over `beta * s_t`.
    Softmax { beta: f64 },
}

impl Separation {
    fn validate(&self) -> Result<()> {
        match *self {
            Separation::Polynomial { degree: 0 } => {
                Err(Error::param("polynomial degree must be at least 1"))
            }
            Separation::Softmax { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(Error::param("softmax beta must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    /// Applies the separation to every similarity score.
    pub fn apply(&self, scores: &[f64]) -> Vec<f64> {
        match *self {
            Separation::Polynomial { degree } => scores
                .iter()
                .map(|&s| {
                    // f64::signum(0.0) is 1.0
                    if s == 0.0 {
                        0.0
                    } else {
                        s.signum() * s.abs().powi(degree as i32)
                    }
                })
                .collect(),
            Separation::Softmax { beta } => {
                let scaled: Vec<f64> = scores.iter().map(|&s| beta * s).collect();
                let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exp: Vec<f64> = scaled.iter().map(|&v| (v - max).exp()).collect();
                let total: f64 = exp.iter().sum();
                exp.into_iter().map(|e| e / total).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AhnMemory {
    n: usize,
    keys: Vec<Vec<i8>>,
    projections: Vec<Vec<i8>>,
    sep: Separation,
}

impl AhnMemory {
    pub fn new(n: usize, sep: Separation) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("pattern size must be positive"));
        }
        sep.validate()?;
        Ok(Self {
            n,
            keys: Vec::new(),
            projections: Vec::new(),
            sep,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn separation(&self) -> Separation {
        self.sep
    }

    /// Number of stored key/projection pairs.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[Vec<i8>] {
        &self.keys
    }

    pub fn projections(&self) -> &[Vec<i8>] {
        &self.projections
    }

    /// Appends one `(x_t, x_{t+1})` pair per transition of `xs`.
    pub fn store_sequence(&mut self, xs: &[Sdr]) -> Result<()> {
        if xs.len() < 2 {
            return Err(Error::InvalidInput("sequence must have at least two patterns".into()));
        }
        if let Some(x) = xs.iter().find(|x| x.size() != self.n) {
            return Err(Error::shape(format!(
                "pattern size {} != memory size {}",
                x.size(),
                self.n
            )));
        }
        let bipolar: Vec<Vec<i8>> = xs.iter().map(Sdr::to_bipolar).collect();
        for pair in bipolar.windows(2) {
            self.keys.push(pair[0].clone());
            self.projections.push(pair[1].clone());
        }
        Ok(())
    }

    /// Weighted projection sum before binarisation.
    pub fn recall_raw(&self, query: &Sdr) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::State("recall from an empty memory".into()));
        }
        if query.size() != self.n {
            return Err(Error::shape(format!(
                "query size {} != memory size {}",
                query.size(),
                self.n
            )));
        }
        let q = query.to_bipolar();
        let scores: Vec<f64> = self
            .keys
            .iter()
            .map(|k| k.iter().zip(&q).map(|(&a, &b)| a as i64 * b as i64).sum::<i64>() as f64)
            .collect();
        let weights = self.sep.apply(&scores);
        let mut raw = vec![0.0f64; self.n];
        for (proj, &wt) in self.projections.iter().zip(&weights) {
            for (acc, &p) in raw.iter_mut().zip(proj) {
                *acc += p as f64 * wt;
            }
        }
        Ok(raw)
    }

    /// Entry `i` is active iff the raw recall is strictly positive.
    pub fn recall_next(&self, query: &Sdr) -> Result<Sdr> {
        let raw = self.recall_raw(query)?;
        let active = raw
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i as u32);
        Sdr::from_indices(self.n, active)
    }

    /// Offline feeds each recall back as the next query; online queries with
    /// the provided observation of the previous step.
    pub fn generate(&self, input: GenerateInput<'_>) -> Result<Vec<Sdr>> {
        match input {
            GenerateInput::Offline { seed, steps } => {
                if steps == 0 {
                    return Err(Error::InvalidInput("offline generation needs steps >= 1".into()));
                }
                let mut out = Vec::with_capacity(steps);
                let mut query = seed.clone();
                for _ in 0..steps {
                    let next = self.recall_next(&query)?;
                    out.push(next.clone());
                    query = next;
                }
                Ok(out)
            }
            GenerateInput::Online { observations } => {
                if observations.len() < 2 {
                    return Err(Error::InvalidInput(
                        "online generation needs at least two observations".into(),
                    ));
                }
                observations[..observations.len() - 1]
                    .iter()
                    .map(|q| self.recall_next(q))
                    .collect()
            }
        }
    }
}
