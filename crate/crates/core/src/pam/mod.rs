//! Predictive Attractor Model.
//!
//! Observations are [`Sdr`]s over `n_c` minicolumns. Each minicolumn holds
//! `n_k` context neurons; a latent state picks one neuron per active column.
//!
//! * `A` (transition, `n_c*n_k` square) maps the previous posterior state to
//!   logits over latent neurons. Thresholding the logits at `theta_a` gives
//!   the prior: a union of every possibility learned from that context.
//! * `B` (emission, `n_c` square) holds attractors over observation bits.
//!   Settling a partial or noisy pattern inside the predicted columns
//!   completes it to one learned possibility.
//!
//! Both matrices are learned one transition at a time with local Hebbian
//! updates and stay clamped to `[-1, 1]`.

mod persist;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sdr::{project_down, sample_from_union, LatentKind, LatentSdr, Sdr};
use crate::GenerateInput;

pub use persist::{FORMAT_VERSION, MAGIC};

#[derive(Debug, Clone, PartialEq)]
pub struct PamParams {
    pub n_c: usize,
    pub n_k: usize,
    /// Expected active bits per observation; thresholds scale with it.
    pub w: usize,
    pub eta_a_plus: f64,
    pub eta_a_minus: f64,
    pub eta_b_plus: f64,
    pub eta_b_minus: f64,
    pub theta_a: f64,
    pub theta_b: f64,
    pub max_attractor_iters: usize,
    pub max_transition_fit_iters: usize,
    pub weight_init_std: f64,
    /// Bits sampled from the predicted union to seed offline settling.
    pub sample_width: usize,
}

impl PamParams {
    pub fn new(n_c: usize, n_k: usize, w: usize) -> Self {
        Self {
            n_c,
            n_k,
            w,
            eta_a_plus: 0.1,
            eta_a_minus: 0.0,
            eta_b_plus: 0.1,
            eta_b_minus: -0.1,
            theta_a: 0.8 * w as f64,
            theta_b: 0.1 * w as f64,
            max_attractor_iters: 100,
            max_transition_fit_iters: 100,
            weight_init_std: 0.1,
            sample_width: 1,
        }
    }

    pub fn latent_size(&self) -> usize {
        self.n_c * self.n_k
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidParameter(m));
        if self.n_c == 0 || self.n_k == 0 || self.w == 0 {
            return fail("n_c, n_k and w must be at least 1".into());
        }
        if self.w > self.n_c {
            return fail(format!("w={} exceeds n_c={}", self.w, self.n_c));
        }
        if self.n_c > u32::MAX as usize / self.n_k {
            return fail("latent size does not fit in 32 bits".into());
        }
        if !(self.theta_a > 0.0) || !(self.theta_b > 0.0) {
            return fail("thresholds must be positive".into());
        }
        if self.max_attractor_iters == 0 || self.max_transition_fit_iters == 0 {
            return fail("iteration caps must be at least 1".into());
        }
        if !(self.eta_a_plus > 0.0) || !(self.eta_b_plus > 0.0) {
            return fail("potentiation rates must be positive".into());
        }
        if !(self.eta_b_minus < 0.0) || !(self.eta_a_minus <= 0.0) {
            return fail("eta_b_minus must be negative and eta_a_minus non-positive".into());
        }
        if !(self.weight_init_std >= 0.0) || !self.weight_init_std.is_finite() {
            return fail("weight_init_std must be finite and non-negative".into());
        }
        if self.sample_width == 0 {
            return fail("sample_width must be at least 1".into());
        }
        Ok(())
    }
}

/// Pre-threshold activations over latent neurons, flattened like
/// [`LatentSdr::flat`].
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    columns: usize,
    rows: usize,
    values: Vec<f64>,
}

impl Logits {
    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn get(&self, column: usize, row: usize) -> f64 {
        self.values[column * self.rows + row]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionStats {
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnStats {
    /// One entry per learned transition.
    pub transitions: Vec<TransitionStats>,
    /// Posterior state chosen for every pattern, including the start.
    pub posteriors: Vec<LatentSdr>,
    /// Indices of patterns whose cardinality differs from `params.w`.
    pub off_cardinality: Vec<usize>,
}

impl LearnStats {
    pub fn all_converged(&self) -> bool {
        self.transitions.iter().all(|t| t.converged)
    }

    pub fn total_iterations(&self) -> usize {
        self.transitions.iter().map(|t| t.iterations).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settled {
    pub pattern: Sdr,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepRecord {
    pub settle_iterations: usize,
    /// The first settle came back empty and a fresh sample was used.
    pub fallback: bool,
    /// Nothing survived the fallback either; the emitted pattern is empty.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    /// Generated (offline) or cleaned (online) observations for steps `1..`.
    pub patterns: Vec<Sdr>,
    pub steps: Vec<StepRecord>,
    /// Set when the prior became empty before the requested length; the
    /// step index (1-based) that had nothing to predict.
    pub exhausted_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PamModel {
    params: PamParams,
    transition: Vec<f32>,
    emission: Vec<f32>,
    start_rows: Vec<u32>,
    rng: Rng,
}

fn clamp_unit(v: f32) -> f32 {
    v.clamp(-1.0, 1.0)
}

impl PamModel {
    /// Weights drawn i.i.d. from `N(0, weight_init_std^2)` and clamped; the
    /// fixed start context gets one uniform row per column.
    pub fn new(params: PamParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = Rng::new(seed);
        let normal = Normal::new(0.0, params.weight_init_std)
            .map_err(|e| Error::param(e.to_string()))?;
        let latent = params.latent_size();
        let mut init = |len: usize| -> Vec<f32> {
            (0..len)
                .map(|_| clamp_unit(normal.sample(&mut rng) as f32))
                .collect()
        };
        let transition = init(latent * latent);
        let emission = init(params.n_c * params.n_c);
        let rows = params.n_k as u32;
        let start_rows = (0..params.n_c).map(|_| rng.random_range(0..rows)).collect();
        Ok(Self {
            params,
            transition,
            emission,
            start_rows,
            rng,
        })
    }

    pub fn params(&self) -> &PamParams {
        &self.params
    }

    /// Row-major, pre-synaptic neuron along rows.
    pub fn transition_weights(&self) -> &[f32] {
        &self.transition
    }

    pub fn emission_weights(&self) -> &[f32] {
        &self.emission
    }

    pub fn transition_weights_mut(&mut self) -> &mut [f32] {
        &mut self.transition
    }

    pub fn emission_weights_mut(&mut self) -> &mut [f32] {
        &mut self.emission
    }

    pub fn start_rows(&self) -> &[u32] {
        &self.start_rows
    }

    pub fn rng(&self) -> &Rng {
        &self.rng
    }

    fn check_observation(&self, x: &Sdr) -> Result<()> {
        if x.size() != self.params.n_c {
            return Err(Error::shape(format!(
                "observation size {} != n_c {}",
                x.size(),
                self.params.n_c
            )));
        }
        Ok(())
    }

    fn check_latent(&self, z: &LatentSdr) -> Result<()> {
        if z.columns() != self.params.n_c || z.rows() != self.params.n_k {
            return Err(Error::shape(format!(
                "latent state {}x{} != model {}x{}",
                z.columns(),
                z.rows(),
                self.params.n_c,
                self.params.n_k
            )));
        }
        Ok(())
    }

    /// Posterior for the first pattern of any sequence: `(↑x) ∩ m(a_0)`.
    pub fn start_posterior(&self, x: &Sdr) -> Result<LatentSdr> {
        self.check_observation(x)?;
        let rows = self.params.n_k as u32;
        let active = x
            .active()
            .iter()
            .map(|&c| c * rows + self.start_rows[c as usize])
            .collect();
        Ok(LatentSdr::from_sorted_unchecked(
            self.params.n_c,
            self.params.n_k,
            LatentKind::Posterior,
            active,
        ))
    }

    /// Logits `A · z_prev` and the thresholded prior.
    pub fn predict(&self, z_prev: &LatentSdr) -> Result<(Logits, LatentSdr)> {
        self.check_latent(z_prev)?;
        let latent = self.params.latent_size();
        let mut values = vec![0.0f64; latent];
        for &p in z_prev.flat() {
            let row = &self.transition[p as usize * latent..(p as usize + 1) * latent];
            for (acc, &a) in values.iter_mut().zip(row) {
                *acc += a as f64;
            }
        }
        let theta = self.params.theta_a;
        let active = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= theta)
            .map(|(q, _)| q as u32)
            .collect();
        let prior = LatentSdr::from_sorted_unchecked(
            self.params.n_c,
            self.params.n_k,
            LatentKind::Prior,
            active,
        );
        let logits = Logits {
            columns: self.params.n_c,
            rows: self.params.n_k,
            values,
        };
        Ok((logits, prior))
    }

    /// One neuron per active column of `x`. A uniquely predictive neuron
    /// wins outright; otherwise the winner is uniform among the predictive
    /// neurons, or among all rows when none is predictive.
    pub fn select_context(&mut self, logits: &Logits, x: &Sdr) -> Result<LatentSdr> {
        self.check_observation(x)?;
        if logits.columns != self.params.n_c || logits.rows != self.params.n_k {
            return Err(Error::shape("logits do not match model"));
        }
        let rows = self.params.n_k;
        let theta = self.params.theta_a;
        let mut active = Vec::with_capacity(x.len());
        let mut predictive = Vec::with_capacity(rows);
        for &c in x.active() {
            let base = c as usize * rows;
            predictive.clear();
            predictive.extend(
                (0..rows as u32).filter(|&j| logits.values[base + j as usize] >= theta),
            );
            let row = match predictive.len() {
                1 => predictive[0],
                0 => self.rng.random_range(0..rows as u32),
                n => predictive[self.rng.random_range(0..n as u32) as usize],
            };
            active.push(c * rows as u32 + row);
        }
        Ok(LatentSdr::from_sorted_unchecked(
            self.params.n_c,
            rows,
            LatentKind::Posterior,
            active,
        ))
    }

    /// `A[p, q] += eta_a_plus` when `q` fires in `z_post`, `eta_a_minus`
    /// otherwise, for every active pre-synaptic `p` in `z_prev`.
    pub fn update_transition(&mut self, z_prev: &LatentSdr, z_post: &LatentSdr) -> Result<()> {
        self.check_latent(z_prev)?;
        self.check_latent(z_post)?;
        let latent = self.params.latent_size();
        let plus = self.params.eta_a_plus as f32;
        let minus = self.params.eta_a_minus as f32;
        for &p in z_prev.flat() {
            let row = &mut self.transition[p as usize * latent..(p as usize + 1) * latent];
            if minus != 0.0 {
                let mut fired = z_post.flat().iter().peekable();
                for (q, a) in row.iter_mut().enumerate() {
                    let delta = if fired.next_if(|&&f| f as usize == q).is_some() {
                        plus
                    } else {
                        minus
                    };
                    *a = clamp_unit(*a + delta);
                }
            } else {
                for &q in z_post.flat() {
                    let a = &mut row[q as usize];
                    *a = clamp_unit(*a + plus);
                }
            }
        }
        Ok(())
    }

    /// Excitation within `x`, mutual inhibition between `x` and the other
    /// predicted possibilities `predicted_union \ x`.
    pub fn update_emission(&mut self, x: &Sdr, predicted_union: &Sdr) -> Result<()> {
        self.check_observation(x)?;
        self.check_observation(predicted_union)?;
        let n = self.params.n_c;
        let plus = self.params.eta_b_plus as f32;
        let minus = self.params.eta_b_minus as f32;
        let others = predicted_union.difference(x);
        for &a in x.active() {
            let a = a as usize;
            for &b in x.active() {
                let cell = &mut self.emission[a * n + b as usize];
                *cell = clamp_unit(*cell + plus);
            }
            for &d in others.active() {
                let d = d as usize;
                let fwd = &mut self.emission[a * n + d];
                *fwd = clamp_unit(*fwd + minus);
                let back = &mut self.emission[d * n + a];
                *back = clamp_unit(*back + minus);
            }
        }
        Ok(())
    }

    /// Iterates `x ← {i ∈ allowed : Σ_{a∈x} B[a,i] ≥ theta_b}` until a fixed
    /// point or `max_attractor_iters`.
    pub fn settle(&self, x_init: &Sdr, allowed: &Sdr) -> Result<Settled> {
        self.check_observation(x_init)?;
        self.check_observation(allowed)?;
        let n = self.params.n_c;
        let theta = self.params.theta_b;
        let mut state = x_init.clone();
        for iteration in 1..=self.params.max_attractor_iters {
            let next: Vec<u32> = allowed
                .active()
                .iter()
                .copied()
                .filter(|&i| {
                    let drive: f64 = state
                        .active()
                        .iter()
                        .map(|&a| self.emission[a as usize * n + i as usize] as f64)
                        .sum();
                    drive >= theta
                })
                .collect();
            if next == state.active() {
                return Ok(Settled {
                    pattern: state,
                    iterations: iteration,
                    converged: true,
                });
            }
            state = Sdr::from_sorted_unchecked(n, next);
        }
        Ok(Settled {
            pattern: state,
            iterations: self.params.max_attractor_iters,
            converged: false,
        })
    }

    /// Whether `z_prev → z_post` (emitting `x`) is fully learned: the prior
    /// covers the posterior, and `x` is reached by settling from itself and
    /// from each of its single bits inside the predicted columns.
    fn transition_fits(&self, prior: &LatentSdr, union: &Sdr, z_post: &LatentSdr, x: &Sdr) -> Result<bool> {
        if !z_post.is_subset(prior) {
            return Ok(false);
        }
        if self.settle(x, union)?.pattern != *x {
            return Ok(false);
        }
        for &b in x.active() {
            let seed = Sdr::from_sorted_unchecked(x.size(), vec![b]);
            if self.settle(&seed, union)?.pattern != *x {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Learns one sequence in a single streaming pass. Each transition is
    /// refit until it holds or `max_transition_fit_iters` is reached.
    pub fn learn_sequence(&mut self, xs: &[Sdr]) -> Result<LearnStats> {
        if xs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "sequence of length {} is too short to learn",
                xs.len()
            )));
        }
        for x in xs {
            self.check_observation(x)?;
        }
        let off_cardinality = xs
            .iter()
            .enumerate()
            .filter(|(_, x)| x.len() != self.params.w)
            .map(|(t, _)| t)
            .collect();

        let mut z_prev = self.start_posterior(&xs[0])?;
        let mut posteriors = vec![z_prev.clone()];
        let mut transitions = Vec::with_capacity(xs.len() - 1);
        for x in &xs[1..] {
            let (logits, _) = self.predict(&z_prev)?;
            let z_post = self.select_context(&logits, x)?;
            let mut stats = TransitionStats {
                iterations: 0,
                converged: false,
            };
            for _ in 0..self.params.max_transition_fit_iters {
                stats.iterations += 1;
                self.update_transition(&z_prev, &z_post)?;
                let (_, prior) = self.predict(&z_prev)?;
                let union = project_down(&prior);
                self.update_emission(x, &union)?;
                if self.transition_fits(&prior, &union, &z_post, x)? {
                    stats.converged = true;
                    break;
                }
            }
            transitions.push(stats);
            posteriors.push(z_post.clone());
            z_prev = z_post;
        }
        Ok(LearnStats {
            transitions,
            posteriors,
            off_cardinality,
        })
    }

    fn sample_and_settle(&mut self, union: &Sdr) -> Result<Settled> {
        let seed = sample_from_union(union, self.params.sample_width, &mut self.rng)?;
        self.settle(&seed, union)
    }

    /// Offline: roll out from a start pattern, sampling one possibility
    /// from each prior. Online: clean each provided observation against the
    /// prior before using it as context.
    pub fn generate(&mut self, input: GenerateInput<'_>) -> Result<Generation> {
        let (first, steps, observed) = match input {
            GenerateInput::Offline { seed, steps } => {
                if steps == 0 {
                    return Err(Error::InvalidInput("offline generation needs steps >= 1".into()));
                }
                (seed, steps, None)
            }
            GenerateInput::Online { observations } => {
                if observations.len() < 2 {
                    return Err(Error::InvalidInput(
                        "online generation needs at least two observations".into(),
                    ));
                }
                for x in observations {
                    self.check_observation(x)?;
                }
                (&observations[0], observations.len() - 1, Some(observations))
            }
        };
        let mut z_prev = self.start_posterior(first)?;
        let mut out = Generation {
            patterns: Vec::with_capacity(steps),
            steps: Vec::with_capacity(steps),
            exhausted_at: None,
        };
        for t in 1..=steps {
            let (logits, prior) = self.predict(&z_prev)?;
            if prior.is_empty() {
                out.exhausted_at = Some(t);
                break;
            }
            let union = project_down(&prior);
            let mut record = StepRecord::default();
            let mut settled = match observed {
                Some(obs) => self.settle(&obs[t], &union)?,
                None => self.sample_and_settle(&union)?,
            };
            record.settle_iterations = settled.iterations;
            if settled.pattern.is_empty() {
                record.fallback = true;
                settled = self.sample_and_settle(&union)?;
                record.settle_iterations += settled.iterations;
                record.empty = settled.pattern.is_empty();
            }
            z_prev = self.select_context(&logits, &settled.pattern)?;
            out.patterns.push(settled.pattern);
            out.steps.push(record);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests;
