//! Evaluation-cost versus algorithm-cost timing.

use std::time::Instant;

use rcmaes_core::rcmaes::{self, RestartPolicy};
use rcmaes_core::{Objective, RngStream};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const TIMING_EVALS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// Mean seconds for `evals` evaluations at random points, per function.
    pub t1: f64,
    /// Mean seconds for one policy run capped at `evals` evaluations.
    pub t2: f64,
    /// `(t2 − t1) / t1`.
    pub overhead: f64,
    pub evals: u64,
    pub functions: usize,
    pub policy: String,
}

impl TimingReport {
    pub fn from_times(t1: f64, t2: f64, evals: u64, functions: usize, policy: &RestartPolicy) -> Self {
        Self {
            t1,
            t2,
            overhead: (t2 - t1) / t1,
            evals,
            functions,
            policy: policy.to_string(),
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "T1 = {:.4} s  T2 = {:.4} s  (T2 - T1)/T1 = {:.4}  [{} evals, {} functions, {}]\n",
            self.t1, self.t2, self.overhead, self.evals, self.functions, self.policy
        )
    }
}

fn pass(problems: &[&(dyn Objective + Sync)], policy: RestartPolicy, evals: u64, seed: u64) -> Result<(f64, f64)> {
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for (k, p) in problems.iter().enumerate() {
        let bounds = p.bounds();
        let mut rng = RngStream::new(seed + k as u64);
        let points: Vec<Vec<f64>> = (0..evals)
            .map(|_| {
                (0..bounds.dim())
                    .map(|i| rng.uniform_in(bounds.lower()[i], bounds.upper()[i]))
                    .collect()
            })
            .collect();
        let start = Instant::now();
        let mut sink = 0.0;
        for x in &points {
            sink += p.evaluate(x);
        }
        std::hint::black_box(sink);
        t1 += start.elapsed().as_secs_f64();

        let start = Instant::now();
        let r = rcmaes::run(*p, evals, policy, &mut rng)?;
        std::hint::black_box(r.best_f);
        t2 += start.elapsed().as_secs_f64();
    }
    let n = problems.len() as f64;
    Ok((t1 / n, t2 / n))
}

/// Measures T1 and T2 over `problems`. One full pass is run first and
/// discarded to warm caches and the allocator.
pub fn measure_timing(
    problems: &[&(dyn Objective + Sync)],
    policy: RestartPolicy,
    evals: u64,
    seed: u64,
) -> Result<TimingReport> {
    if problems.is_empty() {
        return Err(rcmaes_core::Error::InvalidParameter("timing needs at least one problem".into()).into());
    }
    pass(problems, policy, evals, seed)?;
    let (t1, t2) = pass(problems, policy, evals, seed)?;
    Ok(TimingReport::from_times(t1, t2, evals, problems.len(), &policy))
}
