//! One interface over both sequence memories so protocols can treat them
//! alike.

use pam_core::ahn::{AhnMemory, Separation};
use pam_core::pam::{PamModel, PamParams};
use pam_core::{Error, GenerateInput, Mode, Result, Sdr};

use crate::config::{ExperimentConfig, ModelKind};

/// Everything needed to build a fresh model for a given input size.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_k: usize,
    pub w: usize,
    pub sample_width: usize,
    pub separation: Separation,
}

impl ModelSpec {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            kind: cfg.model,
            n_k: cfg.n_k,
            w: cfg.w,
            sample_width: cfg.sample_width,
            separation: cfg.separation,
        }
    }

    pub fn pam(n_k: usize, w: usize) -> Self {
        Self {
            kind: ModelKind::Pam,
            n_k,
            w,
            sample_width: 1,
            separation: Separation::Polynomial { degree: 2 },
        }
    }

    pub fn ahn(separation: Separation) -> Self {
        Self {
            kind: ModelKind::Ahn,
            n_k: 1,
            w: 1,
            sample_width: 1,
            separation,
        }
    }

    /// Active bits per input pattern. The Hopfield baseline works on dense
    /// bipolar patterns, so it always gets half the bits on.
    pub fn pattern_width(&self, n_c: usize) -> usize {
        match self.kind {
            ModelKind::Pam => self.w,
            ModelKind::Ahn => n_c / 2,
        }
    }

    pub fn build(&self, n_c: usize, seed: u64) -> Result<Memory> {
        Ok(match self.kind {
            ModelKind::Pam => {
                let mut p = PamParams::new(n_c, self.n_k, self.w);
                p.sample_width = self.sample_width;
                Memory::Pam(PamModel::new(p, seed)?)
            }
            ModelKind::Ahn => Memory::Ahn(AhnMemory::new(n_c, self.separation)?),
        })
    }
}

#[derive(Debug, Clone)]
pub enum Memory {
    Pam(PamModel),
    Ahn(AhnMemory),
}

/// A replayed sequence, aligned step for step with the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    /// Index 0 is the provided first pattern. Steps the model could not
    /// produce are padded with empty patterns.
    pub patterns: Vec<Sdr>,
    /// Steps actually produced before the model ran out of predictions.
    pub produced: usize,
}

impl Memory {
    pub fn learn(&mut self, xs: &[Sdr]) -> Result<()> {
        match self {
            Memory::Pam(m) => m.learn_sequence(xs).map(drop),
            Memory::Ahn(m) => m.store_sequence(xs),
        }
    }

    /// Offline rolls out `len - 1` steps from `observations[0]`; online
    /// feeds every observation.
    pub fn replay(&mut self, mode: Mode, observations: &[Sdr]) -> Result<Replay> {
        if observations.len() < 2 {
            return Err(Error::InvalidInput("replay needs at least two patterns".into()));
        }
        let input = match mode {
            Mode::Offline => GenerateInput::Offline {
                seed: &observations[0],
                steps: observations.len() - 1,
            },
            Mode::Online => GenerateInput::Online { observations },
        };
        let generated = match self {
            Memory::Pam(m) => m.generate(input)?.patterns,
            Memory::Ahn(m) => m.generate(input)?,
        };
        let produced = generated.len();
        let size = observations[0].size();
        let mut patterns = Vec::with_capacity(observations.len());
        patterns.push(observations[0].clone());
        patterns.extend(generated);
        patterns.resize(observations.len(), Sdr::empty(size));
        Ok(Replay { patterns, produced })
    }
}
