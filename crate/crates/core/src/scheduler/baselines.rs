use super::{Arm, Cursors, RoundRecord, SchedulerError, SchedulerRun, TrackedArm};
use crate::datamodel::Strategy;

/// Pulls every arm `budget / n` times and picks the lowest final loss.
pub fn uniform_allocation<A: Arm>(arms: &mut [TrackedArm<A>], budget: usize) -> Result<SchedulerRun, SchedulerError> {
    let n = arms.len();
    if n == 0 {
        return Err(SchedulerError::NoArms);
    }
    if budget < n {
        return Err(SchedulerError::InsufficientBudget { budget, required: n });
    }
    let per_arm = budget / n;
    let mut cur = Cursors::new(arms);
    for i in 0..n {
        cur.pull_n(i, per_arm)?;
    }
    let mut order: Vec<usize> = (0..n).collect();
    cur.rank(&mut order, per_arm);
    Ok(SchedulerRun {
        strategy: Strategy::Uniform,
        budget,
        rounds: vec![RoundRecord {
            round_index: 0,
            survivors: (0..n).map(|i| cur.id(i).to_string()).collect(),
            pulls_per_arm: per_arm,
            cumulative_pulls: per_arm,
            broken: Vec::new(),
        }],
        winner: cur.id(order[0]).to_string(),
        total_pulls: cur.total_pulls,
        tangent_break_count: 0,
        computations: cur.computations(),
        doublings: 0,
        arm_pulls: cur.arm_pulls(),
    })
}

/// Pulls only `oracle_winner`, to the end of its stream.
pub fn perfect_strategy<A: Arm>(
    arms: &mut [TrackedArm<A>],
    oracle_winner: &str,
) -> Result<SchedulerRun, SchedulerError> {
    if arms.is_empty() {
        return Err(SchedulerError::NoArms);
    }
    let idx = arms
        .iter()
        .position(|a| a.id() == oracle_winner)
        .ok_or_else(|| SchedulerError::UnknownArm(oracle_winner.to_string()))?;
    let len = arms[idx].stream_len();
    let mut cur = Cursors::new(arms);
    cur.pull_n(idx, len)?;
    Ok(SchedulerRun {
        strategy: Strategy::Perfect,
        budget: len,
        rounds: vec![RoundRecord {
            round_index: 0,
            survivors: vec![oracle_winner.to_string()],
            pulls_per_arm: len,
            cumulative_pulls: len,
            broken: Vec::new(),
        }],
        winner: oracle_winner.to_string(),
        total_pulls: cur.total_pulls,
        tangent_break_count: 0,
        computations: cur.computations(),
        doublings: 0,
        arm_pulls: cur.arm_pulls(),
    })
}
