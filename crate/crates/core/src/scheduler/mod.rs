//! Pull allocation across arms: successive halving with optional tangent
//! breaks, the doubling trick, and the uniform and perfect baselines.
//!
//! Every arm is wrapped in a [`TrackedArm`] which caches the loss after each
//! real pull. A scheduler run keeps its own cursor per arm and reads losses
//! through the cache, so restarting with a larger budget never repeats work.

mod baselines;
mod halving;

use std::collections::BTreeMap;
use std::error::Error as StdError;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::Strategy;

pub use baselines::{perfect_strategy, uniform_allocation};
pub use halving::{
    initial_doubling_budget, pulls_with_tangent_breaks, run_with_doubling, successive_halving, tangent_prediction,
};

type BoxError = Box<dyn StdError + Send + Sync + 'static>;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("no arms to schedule")]
    NoArms,
    #[error("budget {budget} too small: need at least {required}")]
    InsufficientBudget { budget: usize, required: usize },
    #[error("unknown arm {0}")]
    UnknownArm(String),
    #[error("arm {id} failed: {source}")]
    Arm { id: String, source: BoxError },
}

/// A source of losses. Each pull consumes one batch of the arm's stream and
/// returns the loss afterwards.
pub trait Arm {
    type Error: StdError + Send + Sync + 'static;

    fn id(&self) -> &str;
    /// Number of pulls that exhaust the stream.
    fn stream_len(&self) -> usize;
    fn pull(&mut self) -> Result<f64, Self::Error>;
}

/// Arm plus the losses of all pulls made so far.
#[derive(Debug, Clone)]
pub struct TrackedArm<A> {
    arm: A,
    losses: Vec<f64>,
}

impl<A: Arm> TrackedArm<A> {
    pub fn new(arm: A) -> Self {
        TrackedArm {
            arm,
            losses: Vec::new(),
        }
    }

    /// Wraps an arm that has already been pulled, given its past losses.
    pub fn with_history(arm: A, losses: Vec<f64>) -> Self {
        TrackedArm { arm, losses }
    }

    pub fn id(&self) -> &str {
        self.arm.id()
    }

    pub fn inner(&self) -> &A {
        &self.arm
    }

    pub fn inner_mut(&mut self) -> &mut A {
        &mut self.arm
    }

    pub fn into_inner(self) -> A {
        self.arm
    }

    pub fn stream_len(&self) -> usize {
        self.arm.stream_len()
    }

    /// Real pulls performed so far.
    pub fn computed(&self) -> usize {
        self.losses.len()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    fn ensure(&mut self, pulls: usize) -> Result<(), SchedulerError> {
        let target = pulls.min(self.stream_len());
        while self.losses.len() < target {
            let loss = self.arm.pull().map_err(|e| SchedulerError::Arm {
                id: self.arm.id().to_string(),
                source: Box::new(e),
            })?;
            self.losses.push(loss);
        }
        Ok(())
    }

    /// Loss after `pulls` pulls, capped at what has been computed. An arm
    /// with no pulls reports 1.0.
    fn loss_at(&self, pulls: usize) -> f64 {
        let c = pulls.min(self.losses.len());
        if c == 0 {
            1.0
        } else {
            self.losses[c - 1]
        }
    }
}

/// One round of a scheduler run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: usize,
    /// Arms alive at the start of the round, in the order they were pulled.
    pub survivors: Vec<String>,
    pub pulls_per_arm: usize,
    pub cumulative_pulls: usize,
    /// Arms dropped by a tangent break during this round.
    #[serde(default)]
    pub broken: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerRun {
    pub strategy: Strategy,
    pub budget: usize,
    pub rounds: Vec<RoundRecord>,
    pub winner: String,
    /// Pulls issued by this run, whether or not they were served from cache.
    pub total_pulls: usize,
    pub tangent_break_count: usize,
    /// Pulls that actually reached an arm, summed over doublings.
    pub computations: usize,
    #[serde(default)]
    pub doublings: usize,
    /// Pull count of each arm at the end of the run.
    pub arm_pulls: BTreeMap<String, usize>,
}

/// Per-run pull counts over a set of tracked arms.
pub struct Cursors<'a, A> {
    pub(crate) arms: &'a mut [TrackedArm<A>],
    pub(crate) pos: Vec<usize>,
    pub(crate) total_pulls: usize,
    computed_at_start: usize,
}

impl<'a, A: Arm> Cursors<'a, A> {
    pub fn new(arms: &'a mut [TrackedArm<A>]) -> Self {
        let computed_at_start = arms.iter().map(TrackedArm::computed).sum();
        let pos = vec![0; arms.len()];
        Cursors {
            arms,
            pos,
            total_pulls: 0,
            computed_at_start,
        }
    }

    /// Advances arm `i` by one pull. Returns false if its stream is exhausted.
    pub fn step(&mut self, i: usize) -> Result<bool, SchedulerError> {
        if self.pos[i] >= self.arms[i].stream_len() {
            return Ok(false);
        }
        self.pos[i] += 1;
        self.arms[i].ensure(self.pos[i])?;
        self.total_pulls += 1;
        Ok(true)
    }

    pub fn pull_n(&mut self, i: usize, n: usize) -> Result<(), SchedulerError> {
        for _ in 0..n {
            if !self.step(i)? {
                break;
            }
        }
        Ok(())
    }

    pub fn loss(&self, i: usize, at: usize) -> f64 {
        self.arms[i].loss_at(at.min(self.pos[i]))
    }

    pub fn position(&self, i: usize) -> usize {
        self.pos[i]
    }

    pub fn exhausted(&self, i: usize) -> bool {
        self.pos[i] >= self.arms[i].stream_len()
    }

    pub fn id(&self, i: usize) -> &str {
        self.arms[i].id()
    }

    pub fn computations(&self) -> usize {
        self.arms.iter().map(TrackedArm::computed).sum::<usize>() - self.computed_at_start
    }

    pub fn arm_pulls(&self) -> BTreeMap<String, usize> {
        self.arms
            .iter()
            .zip(&self.pos)
            .map(|(a, &p)| (a.id().to_string(), p))
            .collect()
    }

    /// Sorts arm indices by (loss at `at`, id).
    pub fn rank(&self, members: &mut [usize], at: usize) {
        members.sort_by(|&a, &b| {
            self.loss(a, at)
                .total_cmp(&self.loss(b, at))
                .then_with(|| self.id(a).cmp(self.id(b)))
        });
    }
}

pub(crate) fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Deterministic arm over a loss function of the pull count, for tests and
/// benchmarks.
pub struct FnArm<F> {
    id: String,
    len: usize,
    pulls: usize,
    f: F,
}

impl<F: Fn(usize) -> f64> FnArm<F> {
    pub fn new(id: impl Into<String>, stream_len: usize, f: F) -> Self {
        FnArm {
            id: id.into(),
            len: stream_len,
            pulls: 0,
            f,
        }
    }

    pub fn pulls(&self) -> usize {
        self.pulls
    }
}

impl<F: Fn(usize) -> f64> Arm for FnArm<F> {
    type Error = std::convert::Infallible;

    fn id(&self) -> &str {
        &self.id
    }

    fn stream_len(&self) -> usize {
        self.len
    }

    fn pull(&mut self) -> Result<f64, Self::Error> {
        self.pulls += 1;
        Ok((self.f)(self.pulls))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_ceiling() {
        let got: Vec<usize> = [1, 2, 3, 4, 5, 8, 9, 16, 17].iter().map(|&n| ceil_log2(n)).collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 4, 4, 5]);
    }

    #[test]
    fn cache_serves_repeat_reads() {
        let mut arms = vec![TrackedArm::new(FnArm::new("a", 3, |k| 1.0 / k as f64))];
        {
            let mut c = Cursors::new(&mut arms);
            c.pull_n(0, 5).unwrap();
            assert_eq!(c.pos[0], 3);
            assert_eq!(c.total_pulls, 3);
            assert_eq!(c.loss(0, 10), 1.0 / 3.0);
        }
        let mut c = Cursors::new(&mut arms);
        c.pull_n(0, 2).unwrap();
        assert_eq!(c.computations(), 0);
        assert_eq!(c.arms[0].inner().pulls(), 3);
    }
}
