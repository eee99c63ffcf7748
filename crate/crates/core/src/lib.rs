//! Sequence memory over sparse distributed representations.
//!
//! * [`sdr`]: pattern types, set algebra, projections and sampling.
//! * [`pam`]: the Predictive Attractor Model (learning and generation).
//! * [`ahn`]: asymmetric Hopfield baseline with polynomial or softmax
//!   separation.
//! * [`metrics`]: IoU, normalized IoU, capacity, backward transfer.
//! * [`datasets`]: synthetic correlated sequences, FASTA proteins and the
//!   built-in four-letter word list.

pub mod ahn;
pub mod datasets;
pub mod error;
pub mod metrics;
pub mod pam;
pub mod rng;
pub mod sdr;

pub use error::{Error, Result};
pub use rng::Rng;
pub use sdr::{LatentKind, LatentSdr, Sdr};

use std::fmt;
use std::str::FromStr;

/// Generation protocol shared by both models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Only the first pattern is given; the rest is generated.
    Offline,
    /// Every (possibly noisy) observation is given.
    Online,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Offline => "offline",
            Mode::Online => "online",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offline" => Ok(Mode::Offline),
            "online" => Ok(Mode::Online),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

pub enum GenerateInput<'a> {
    /// Start pattern plus number of steps to roll out.
    Offline { seed: &'a Sdr, steps: usize },
    /// Full observed sequence, first element included; later elements may
    /// be noisy.
    Online { observations: &'a [Sdr] },
}

impl GenerateInput<'_> {
    pub fn mode(&self) -> Mode {
        match self {
            GenerateInput::Offline { .. } => Mode::Offline,
            GenerateInput::Online { .. } => Mode::Online,
        }
    }
}
