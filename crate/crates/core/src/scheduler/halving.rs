use super::{ceil_log2, uniform_allocation, Arm, Cursors, RoundRecord, SchedulerError, SchedulerRun, TrackedArm};
use crate::datamodel::Strategy;

/// Value at `at` of the line through `(c_prev, l_prev)` and `(c, l)`.
pub fn tangent_prediction(c_prev: usize, l_prev: f64, c: usize, l: f64, at: usize) -> f64 {
    let slope = (l - l_prev) / (c as f64 - c_prev as f64);
    l + slope * (at as f64 - c as f64)
}

fn predict<A: Arm>(cur: &Cursors<'_, A>, i: usize, at: usize) -> f64 {
    let c = cur.position(i);
    if c < 2 {
        return 0.0;
    }
    let (prev, last) = (cur.loss(i, c - 1), cur.loss(i, c));
    // A rising segment contradicts the decreasing-curve assumption; treat
    // it as flat rather than projecting the rise.
    tangent_prediction(c - 1, prev.max(last), c, last, at)
}

/// Pulls each arm in `members` up to `r` times, dropping it as soon as the
/// line through its last two losses, evaluated at `cumulative`, is above
/// `threshold`. The line's slope is capped at zero. Returns the kept and
/// the dropped arms.
pub fn pulls_with_tangent_breaks<A: Arm>(
    cur: &mut Cursors<'_, A>,
    members: &[usize],
    r: usize,
    cumulative: usize,
    threshold: f64,
) -> Result<(Vec<usize>, Vec<usize>), SchedulerError> {
    let mut kept = Vec::with_capacity(members.len());
    let mut broken = Vec::new();
    for &i in members {
        let mut dropped = false;
        for _ in 0..r {
            if predict(cur, i, cumulative) > threshold {
                dropped = true;
                break;
            }
            if !cur.step(i)? {
                break;
            }
        }
        if dropped {
            broken.push(i);
        } else {
            kept.push(i);
        }
    }
    Ok((kept, broken))
}

/// Successive halving over `arms` with a total budget of `budget` pulls.
///
/// Round k pulls every survivor `budget / (|S_k| * ceil(log2 n))` times and
/// keeps the better half ranked by loss at the cumulative pull count, ties
/// by id. With `use_tangent`, the first half of the previous ranking is
/// pulled in full and its worst loss becomes the break threshold for the
/// second half.
pub fn successive_halving<A: Arm>(
    arms: &mut [TrackedArm<A>],
    budget: usize,
    use_tangent: bool,
) -> Result<SchedulerRun, SchedulerError> {
    let n = arms.len();
    if n == 0 {
        return Err(SchedulerError::NoArms);
    }
    let strategy = if use_tangent {
        Strategy::SuccessiveHalvingTangent
    } else {
        Strategy::SuccessiveHalving
    };
    let n_rounds = ceil_log2(n);
    let required = (n * n_rounds).max(1);
    if budget < required {
        return Err(SchedulerError::InsufficientBudget { budget, required });
    }

    let mut cur = Cursors::new(arms);
    let mut rounds = Vec::new();
    let mut breaks = 0;

    if n == 1 {
        cur.pull_n(0, budget)?;
        rounds.push(RoundRecord {
            round_index: 0,
            survivors: vec![cur.id(0).to_string()],
            pulls_per_arm: budget,
            cumulative_pulls: budget,
            broken: Vec::new(),
        });
    }

    let mut alive: Vec<usize> = (0..n).collect();
    let mut cumulative = 0;
    for k in 0..n_rounds {
        let size = alive.len();
        let r = budget / (size * n_rounds);
        cumulative += r;
        let half = size / 2;
        let (first, second) = alive.split_at(half);

        for &i in first {
            cur.pull_n(i, r)?;
        }
        let mut members = first.to_vec();
        let mut broken = Vec::new();
        if use_tangent && half > 0 {
            let threshold = first
                .iter()
                .map(|&i| cur.loss(i, cumulative))
                .fold(f64::NEG_INFINITY, f64::max);
            let (kept, dropped) = pulls_with_tangent_breaks(&mut cur, second, r, cumulative, threshold)?;
            members.extend(kept);
            broken = dropped;
        } else {
            for &i in second {
                cur.pull_n(i, r)?;
            }
            members.extend_from_slice(second);
        }
        breaks += broken.len();

        cur.rank(&mut members, cumulative);
        members.truncate(half.max(1));
        rounds.push(RoundRecord {
            round_index: k,
            survivors: alive.iter().map(|&i| cur.id(i).to_string()).collect(),
            pulls_per_arm: r,
            cumulative_pulls: cumulative,
            broken: broken.iter().map(|&i| cur.id(i).to_string()).collect(),
        });
        alive = members;
    }

    Ok(SchedulerRun {
        strategy,
        budget,
        rounds,
        winner: cur.id(alive[0]).to_string(),
        total_pulls: cur.total_pulls,
        tangent_break_count: breaks,
        computations: cur.computations(),
        doublings: 0,
        arm_pulls: cur.arm_pulls(),
    })
}

/// Smallest budget successive halving accepts for `n` arms.
pub fn initial_doubling_budget(n: usize) -> usize {
    ceil_log2(n).max(1) * n
}

/// Repeats `strategy` with budgets `B0, 2 B0, 4 B0, ...` until the winner
/// has consumed its whole stream. Losses are cached in the arms, so each
/// restart only computes pulls that no earlier run reached.
pub fn run_with_doubling<A: Arm>(
    arms: &mut [TrackedArm<A>],
    strategy: Strategy,
) -> Result<SchedulerRun, SchedulerError> {
    if arms.is_empty() {
        return Err(SchedulerError::NoArms);
    }
    let mut budget = initial_doubling_budget(arms.len());
    let mut computations = 0;
    let mut doublings = 0;
    loop {
        let mut run = match strategy {
            Strategy::SuccessiveHalving => successive_halving(arms, budget, false)?,
            Strategy::Uniform => uniform_allocation(arms, budget)?,
            _ => successive_halving(arms, budget, true)?,
        };
        computations += run.computations;
        let winner = arms
            .iter()
            .find(|a| a.id() == run.winner)
            .expect("winner is one of the arms");
        let done = run.arm_pulls[&run.winner] >= winner.stream_len();
        let next = budget.checked_mul(2);
        if done || next.is_none() {
            run.computations = computations;
            run.doublings = doublings;
            return Ok(run);
        }
        budget = next.unwrap_or(budget);
        doublings += 1;
    }
}
