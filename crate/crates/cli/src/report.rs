use std::fmt::Write as _;

use serde::Serialize;

use snoopy_core::estimator::{BerEstimate, SamplesToTarget};
use snoopy_core::study::ExtrapolationReport;
use snoopy_core::{Strategy, StudyOutcome, Verdict};

#[derive(Debug, Serialize)]
pub struct ArmRow {
    pub transformation_id: String,
    pub n_used: usize,
    pub err_1nn: f64,
    pub ber_estimate: f64,
}

/// Work done by a run. Wall time is only present with `--timing`, so the
/// default report depends on inputs alone.
#[derive(Debug, Serialize)]
pub struct CostSummary {
    pub pulls: usize,
    pub computations: usize,
    pub doublings: usize,
    pub tangent_breaks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub machine_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub machine_cost: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub verdict: Verdict,
    pub target_accuracy: f64,
    pub aggregate: f64,
    pub winner: String,
    pub gap: f64,
    pub strategy: Strategy,
    pub arms: Vec<ArmRow>,
    pub extrapolation: ExtrapolationReport,
    pub cost: CostSummary,
}

impl ReportDocument {
    pub fn new(outcome: &StudyOutcome, strategy: Strategy, timing: Option<(f64, f64)>) -> Self {
        let r = &outcome.result;
        ReportDocument {
            verdict: r.verdict,
            target_accuracy: r.target_accuracy,
            aggregate: r.aggregate,
            winner: r.winner.clone(),
            gap: r.gap,
            strategy,
            arms: r.per_arm.iter().map(row).collect(),
            extrapolation: outcome.extrapolation.clone(),
            cost: CostSummary {
                pulls: outcome.run.total_pulls,
                computations: outcome.run.computations,
                doublings: outcome.run.doublings,
                tangent_breaks: outcome.run.tangent_break_count,
                machine_seconds: timing.map(|t| t.0),
                machine_cost: timing.map(|t| t.1),
            },
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.verdict);
        let _ = writeln!(
            s,
            "target accuracy {:.4} (error <= {:.4}), estimate {:.4} from {}, gap {:+.4}",
            self.target_accuracy,
            1.0 - self.target_accuracy,
            self.aggregate,
            self.winner,
            self.gap
        );
        let width = self
            .arms
            .iter()
            .map(|a| a.transformation_id.len())
            .max()
            .unwrap_or(0)
            .max(3);
        let _ = writeln!(
            s,
            "\n{:<width$}  {:>9}  {:>8}  {:>8}",
            "arm", "n_used", "err_1nn", "estimate"
        );
        for a in &self.arms {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9}  {:>8.4}  {:>8.4}",
                a.transformation_id, a.n_used, a.err_1nn, a.ber_estimate
            );
        }
        let x = &self.extrapolation;
        let _ = write!(s, "\nextrapolation ({}): ", x.transformation_id);
        match (&x.fit, &x.samples) {
            (Some(fit), Some(samples)) => {
                let _ = writeln!(
                    s,
                    "alpha {:.4}, C_fit {:.4}, {}",
                    fit.alpha,
                    fit.intercept,
                    describe(samples)
                );
            }
            (Some(fit), None) => {
                let _ = writeln!(
                    s,
                    "alpha {:.4}, C_fit {:.4}, {}",
                    fit.alpha,
                    fit.intercept,
                    x.note.as_deref().unwrap_or("no projection")
                );
            }
            _ => {
                let _ = writeln!(s, "{}", x.note.as_deref().unwrap_or("not available"));
            }
        }
        let c = &self.cost;
        let _ = write!(
            s,
            "{} strategy: {} pulls, {} computed, {} doublings, {} tangent breaks",
            self.strategy, c.pulls, c.computations, c.doublings, c.tangent_breaks
        );
        if let (Some(secs), Some(cost)) = (c.machine_seconds, c.machine_cost) {
            let _ = write!(s, ", {secs:.3} s (${cost:.6})");
        }
        s.push('\n');
        s
    }
}

fn row(e: &BerEstimate) -> ArmRow {
    ArmRow {
        transformation_id: e.transformation_id.clone(),
        n_used: e.n_used,
        err_1nn: e.err_1nn,
        ber_estimate: e.value,
    }
}

pub fn describe(samples: &SamplesToTarget) -> String {
    match samples {
        SamplesToTarget::Needed { needed: 0 } => "target already met".into(),
        SamplesToTarget::Needed { needed } => format!("needed {needed} more samples"),
        SamplesToTarget::Unreachable => "UNREACHABLE".into(),
        SamplesToTarget::Untrustworthy { needed } => {
            format!("UNTRUSTWORTHY (projection of {needed} more samples is too far out)")
        }
    }
}
