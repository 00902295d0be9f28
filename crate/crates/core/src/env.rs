//! The bandit: hidden arm means drawn from `F`, Gaussian pulls, full accounting.
//!
//! Randomness is counter-based. Arm `i`'s hidden mean is read from ChaCha8
//! stream 0 at a position fixed by `i`; pull `j` of arm `i` reads stream
//! `i + 1` at a position fixed by `j`. Observations therefore depend only on
//! `(seed, arm, pull index)`, never on the order in which pulls are issued.

use std::io::Write;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DistributionSpec;

// 32-bit words reserved per draw; a normal sample rarely needs more than two u64.
const WORDS_PER_DRAW: u32 = 6;

/// How a block of `k` pulls of one arm is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Every pull draws its own normal variate.
    #[default]
    Exact,
    /// A block of `k` pulls draws one normal for the block mean
    /// (`X + sd * Z / sqrt(k)`), keyed at the block's first pull index.
    /// Same law for the block mean, `O(1)` cost per block.
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    New,
    Pull,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptRecord {
    pub step: u64,
    pub action: Action,
    pub arm_id: usize,
    /// Observed value, or the block mean for aggregated pulls; `None` for new arms.
    pub observation: Option<f64>,
    #[serde(skip_serializing_if = "is_one")]
    pub count: u64,
}

fn is_one(x: &u64) -> bool {
    *x == 1
}

/// Count and running mean of one arm's observations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMean {
    pub count: u64,
    pub mean: f64,
}

impl RunningMean {
    /// Merges a block of `k` observations with mean `block_mean`.
    ///
    /// Exact when every observation equals the current mean, so noiseless
    /// arms keep their hidden value bit-for-bit.
    pub fn merge(&mut self, k: u64, block_mean: f64) {
        if k == 0 {
            return;
        }
        if self.count == 0 {
            self.count = k;
            self.mean = block_mean;
            return;
        }
        self.count += k;
        self.mean += (block_mean - self.mean) * (k as f64 / self.count as f64);
    }
}

#[derive(Debug, Clone)]
pub struct BanditEnv {
    dist: DistributionSpec,
    noise_sd: f64,
    seed: u64,
    mode: NoiseMode,
    allow_nonunit_noise: bool,
    arms: Vec<f64>,
    pull_counts: Vec<u64>,
    total_pulls: u64,
    step: u64,
    transcript: Option<Vec<TranscriptRecord>>,
    rng: ChaCha8Rng,
}

impl BanditEnv {
    pub fn new(dist: DistributionSpec, noise_sd: f64, seed: u64) -> Result<Self> {
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(Error::invalid(
                "noise_sd",
                format!("must be finite and >= 0, got {noise_sd}"),
            ));
        }
        Ok(Self {
            dist,
            noise_sd,
            seed,
            mode: NoiseMode::Exact,
            allow_nonunit_noise: false,
            arms: Vec::new(),
            pull_counts: Vec::new(),
            total_pulls: 0,
            step: 0,
            transcript: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_noise_mode(mut self, mode: NoiseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_transcript(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    /// Lets schedules run with `noise_sd` outside `{0, 1}`.
    pub fn allow_nonunit_noise(mut self) -> Self {
        self.allow_nonunit_noise = true;
        self
    }

    pub fn dist(&self) -> &DistributionSpec {
        &self.dist
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise_mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    /// Schedules assume unit-variance noise; zero noise is accepted for oracle runs.
    pub fn check_noise_contract(&self) -> Result<()> {
        if self.noise_sd == 0.0 || self.noise_sd == 1.0 || self.allow_nonunit_noise {
            Ok(())
        } else {
            Err(Error::NonUnitNoise {
                noise_sd: self.noise_sd,
            })
        }
    }

    fn position(&mut self, stream: u64, index: u64) -> &mut ChaCha8Rng {
        self.rng.set_stream(stream);
        self.rng.set_word_pos(index as u128 * WORDS_PER_DRAW as u128);
        &mut self.rng
    }

    fn record(&mut self, action: Action, arm_id: usize, observation: Option<f64>, count: u64) {
        let step = self.step;
        self.step += 1;
        if let Some(t) = self.transcript.as_mut() {
            t.push(TranscriptRecord {
                step,
                action,
                arm_id,
                observation,
                count,
            });
        }
    }

    /// Draws a new arm `X ~ F` and returns its id.
    pub fn new_arm(&mut self) -> usize {
        let id = self.arms.len();
        let u: f64 = self.position(0, id as u64).sample(Open01);
        let x = self.dist.sample_from_uniform(u);
        self.arms.push(x);
        self.pull_counts.push(0);
        self.record(Action::New, id, None, 1);
        id
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm < self.arms.len() {
            Ok(())
        } else {
            Err(Error::UnknownArm {
                arm,
                arms: self.arms.len(),
            })
        }
    }

    fn normal(&mut self, arm: usize, index: u64) -> f64 {
        self.position(arm as u64 + 1, index).sample(StandardNormal)
    }

    /// One observation `X_arm + noise_sd * Z`.
    pub fn pull(&mut self, arm: usize) -> Result<f64> {
        self.check_arm(arm)?;
        let j = self.pull_counts[arm];
        let y = if self.noise_sd == 0.0 {
            self.arms[arm]
        } else {
            self.arms[arm] + self.noise_sd * self.normal(arm, j)
        };
        self.pull_counts[arm] += 1;
        self.total_pulls += 1;
        self.record(Action::Pull, arm, Some(y), 1);
        Ok(y)
    }

    /// Pulls `arm` `k` times and folds the observations into `acc`.
    pub fn pull_into(&mut self, arm: usize, k: u64, acc: &mut RunningMean) -> Result<()> {
        self.check_arm(arm)?;
        if k == 0 {
            return Ok(());
        }
        match self.mode {
            NoiseMode::Exact => {
                for _ in 0..k {
                    let y = self.pull(arm)?;
                    acc.merge(1, y);
                }
            }
            NoiseMode::Aggregated => {
                let j = self.pull_counts[arm];
                let block_mean = if self.noise_sd == 0.0 {
                    self.arms[arm]
                } else {
                    self.arms[arm] + self.noise_sd * self.normal(arm, j) / (k as f64).sqrt()
                };
                self.pull_counts[arm] += k;
                self.total_pulls += k;
                self.record(Action::Pull, arm, Some(block_mean), k);
                acc.merge(k, block_mean);
            }
        }
        Ok(())
    }

    /// `(M, per-arm pull counts)`.
    pub fn stats(&self) -> (u64, Vec<u64>) {
        (self.total_pulls, self.pull_counts.clone())
    }

    pub fn total_pulls(&self) -> u64 {
        self.total_pulls
    }

    pub fn pull_count(&self, arm: usize) -> Result<u64> {
        self.check_arm(arm)?;
        Ok(self.pull_counts[arm])
    }

    pub fn transcript(&self) -> Option<&[TranscriptRecord]> {
        self.transcript.as_deref()
    }

    /// Writes the transcript as newline-delimited JSON.
    pub fn write_transcript<W: Write>(&self, mut out: W) -> Result<()> {
        for rec in self.transcript.iter().flatten() {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Inspection hook for tests: the hidden arm means.
    #[doc(hidden)]
    pub fn hidden_means(&self) -> &[f64] {
        &self.arms
    }
}
