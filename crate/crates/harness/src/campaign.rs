//! Seeded campaigns over (policy × problem × run) cells.
//!
//! Cells run on a worker pool but results are collected in cell order and
//! written by a single thread, so the files do not depend on the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use rcmaes_core::rcmaes::{self, RestartPolicy};
use rcmaes_core::suite::{save_suite, ProblemInstance};
use rcmaes_core::{Objective, RngStream, RunResult};

use crate::config::Config;
use crate::error::{HarnessError, Result};

pub const FINALS_FILE: &str = "finals.csv";
pub const OPTIMA_FILE: &str = "optima.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const RESTARTS_FILE: &str = "restarts.csv";
pub const SUITE_FILE: &str = "problems.suite";
pub const HISTORY_DIR: &str = "histories";

pub const FINALS_HEADER: &str = "policy,problem,dim,run,evals_used,final_f,final_error";

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// One problem of a campaign with its known optimum value.
#[derive(Clone)]
pub struct CampaignProblem {
    pub id: String,
    pub objective: Arc<dyn Objective + Send + Sync>,
    pub optimum: f64,
}

impl CampaignProblem {
    pub fn new(id: impl Into<String>, objective: Arc<dyn Objective + Send + Sync>, optimum: f64) -> Self {
        Self {
            id: id.into(),
            objective,
            optimum,
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }
}

impl From<ProblemInstance> for CampaignProblem {
    fn from(p: ProblemInstance) -> Self {
        let optimum = p.spec.bias;
        Self::new(p.id.clone(), Arc::new(p), optimum)
    }
}

pub fn history_path(dir: &Path, policy: &RestartPolicy, problem: &str, run: usize) -> PathBuf {
    dir.join(HISTORY_DIR)
        .join(policy.to_string())
        .join(format!("{problem}_run{run:02}.csv"))
}

/// Outcome of one (policy, problem, run) cell.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub policy: RestartPolicy,
    pub problem: usize,
    /// 1-based run index.
    pub run: usize,
    pub seed: u64,
    pub max_evals: u64,
    pub result: std::result::Result<RunResult, String>,
}

#[derive(Clone)]
pub struct Campaign {
    pub problems: Vec<CampaignProblem>,
    pub policies: Vec<RestartPolicy>,
    pub runs: usize,
    pub budget_multiplier: u64,
    pub seed_offset: u64,
    /// Present when the problems came from a suite, so it can be archived.
    pub suite: Option<Vec<ProblemInstance>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignSummary {
    pub rows: usize,
    pub failures: usize,
    pub out_dir: PathBuf,
}

impl Campaign {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        cfg.validate()?;
        let suite = cfg.suite.problems()?;
        Ok(Self {
            problems: suite.iter().cloned().map(CampaignProblem::from).collect(),
            policies: cfg.campaign.parsed_policies()?,
            runs: cfg.campaign.runs,
            budget_multiplier: cfg.campaign.budget_multiplier,
            seed_offset: cfg.campaign.seed_offset,
            suite: Some(suite),
        })
    }

    pub fn max_evals(&self, problem: &CampaignProblem) -> u64 {
        self.budget_multiplier * problem.dim() as u64
    }

    /// Every cell, in output order.
    pub fn cells(&self) -> Vec<(RestartPolicy, usize, usize)> {
        let mut cells = Vec::with_capacity(self.policies.len() * self.problems.len() * self.runs);
        for policy in &self.policies {
            for p in 0..self.problems.len() {
                for run in 1..=self.runs {
                    cells.push((*policy, p, run));
                }
            }
        }
        cells
    }

    /// Runs every cell on `workers` threads and returns the outcomes in cell
    /// order. Nothing is written.
    pub fn execute(&self, workers: usize) -> Result<Vec<CellOutcome>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
        let cells = self.cells();
        Ok(pool.install(|| {
            cells
                .par_iter()
                .map(|&(policy, p, run)| self.run_cell(policy, p, run))
                .collect()
        }))
    }

    fn run_cell(&self, policy: RestartPolicy, p: usize, run: usize) -> CellOutcome {
        let problem = &self.problems[p];
        let seed = run as u64 + self.seed_offset;
        let max_evals = self.max_evals(problem);
        let mut rng = RngStream::new(seed);
        let result = rcmaes::run(problem.objective.as_ref(), max_evals, policy, &mut rng).map_err(|e| e.to_string());
        CellOutcome {
            policy,
            problem: p,
            run,
            seed,
            max_evals,
            result,
        }
    }

    /// Runs the campaign and writes its archive into `out_dir`.
    ///
    /// The directory is prepared before any run starts, so an unwritable
    /// location fails fast. Failed cells are logged and skipped; the summary
    /// counts them.
    pub fn run(&self, out_dir: &Path, workers: usize) -> Result<CampaignSummary> {
        fs::create_dir_all(out_dir.join(HISTORY_DIR)).map_err(|e| HarnessError::io(out_dir, e))?;
        self.write_optima(out_dir)?;
        if let Some(suite) = &self.suite {
            save_suite(out_dir.join(SUITE_FILE), suite)?;
        }
        let outcomes = self.execute(workers)?;
        self.write_outcomes(out_dir, &outcomes)
    }

    fn write_optima(&self, dir: &Path) -> Result<()> {
        let mut out = String::from("problem,dim,optimum\n");
        for p in &self.problems {
            let _ = writeln!(out, "{},{},{}", p.id, p.dim(), fmt_real(p.optimum));
        }
        write_file(&dir.join(OPTIMA_FILE), &out)
    }

    pub fn write_outcomes(&self, dir: &Path, outcomes: &[CellOutcome]) -> Result<CampaignSummary> {
        let mut finals = format!("{FINALS_HEADER}\n");
        let mut failures = String::from("policy,problem,run,error\n");
        let mut restarts = String::from("policy,problem,run,restart,eval_index\n");
        let mut rows = 0;
        let mut failed = 0;
        for cell in outcomes {
            let problem = &self.problems[cell.problem];
            match &cell.result {
                Ok(r) => {
                    rows += 1;
                    let _ = writeln!(
                        finals,
                        "{},{},{},{},{},{},{}",
                        cell.policy,
                        problem.id,
                        problem.dim(),
                        cell.run,
                        r.evals_used,
                        fmt_real(r.best_f),
                        fmt_real(r.best_f - problem.optimum)
                    );
                    for (k, rec) in r.restarts.iter().enumerate() {
                        let _ = writeln!(restarts, "{},{},{},{},{}", cell.policy, problem.id, cell.run, k + 1, rec.eval_index);
                    }
                    let path = history_path(dir, &cell.policy, &problem.id, cell.run);
                    if let Some(parent) = path.parent() {
                        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
                    }
                    let mut hist = String::from("evals,best_f\n");
                    for (e, f) in &r.history {
                        let _ = writeln!(hist, "{e},{}", fmt_real(*f));
                    }
                    write_file(&path, &hist)?;
                }
                Err(msg) => {
                    failed += 1;
                    eprintln!("run failed: {} on {} run {}: {msg}", cell.policy, problem.id, cell.run);
                    let _ = writeln!(failures, "{},{},{},\"{}\"", cell.policy, problem.id, cell.run, msg.replace('"', "'"));
                }
            }
        }
        write_file(&dir.join(FINALS_FILE), &finals)?;
        write_file(&dir.join(FAILURES_FILE), &failures)?;
        write_file(&dir.join(RESTARTS_FILE), &restarts)?;
        Ok(CampaignSummary {
            rows,
            failures: failed,
            out_dir: dir.to_path_buf(),
        })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcmaes_core::{Bounds, FnObjective};

    fn sphere_campaign(runs: usize) -> Campaign {
        let bounds = Bounds::uniform(3, -5.0, 5.0).unwrap();
        let obj = FnObjective::new(bounds, |x: &[f64]| 1.0 + x.iter().map(|v| v * v).sum::<f64>());
        Campaign {
            problems: vec![CampaignProblem::new("sphere3", Arc::new(obj), 1.0)],
            policies: vec![RestartPolicy::RCMAES],
            runs,
            budget_multiplier: 200,
            seed_offset: 0,
            suite: None,
        }
    }

    #[test]
    fn cell_order_and_seeds() {
        let c = sphere_campaign(3);
        let out = c.execute(2).unwrap();
        assert_eq!(out.iter().map(|o| o.run).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(out.iter().map(|o| o.seed).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(out.iter().all(|o| o.result.as_ref().unwrap().evals_used == 600));
    }

    #[test]
    fn archive_layout() {
        let dir = tempfile::tempdir().unwrap();
        let summary = sphere_campaign(3).run(dir.path(), 1).unwrap();
        assert_eq!((summary.rows, summary.failures), (3, 0));
        let finals = fs::read_to_string(dir.path().join(FINALS_FILE)).unwrap();
        assert_eq!(finals.lines().count(), 4);
        assert_eq!(finals.lines().next().unwrap(), FINALS_HEADER);
        assert!(history_path(dir.path(), &RestartPolicy::RCMAES, "sphere3", 2).exists());
    }

    #[test]
    fn failed_cells_are_logged_and_skipped() {
        let mut c = sphere_campaign(2);
        let obj = FnObjective::new(Bounds::uniform(3, -5.0, 5.0).unwrap(), |_: &[f64]| f64::NAN);
        c.problems.push(CampaignProblem::new("broken", Arc::new(obj), 1.0));
        let dir = tempfile::tempdir().unwrap();
        let summary = c.run(dir.path(), 2).unwrap();
        assert_eq!((summary.rows, summary.failures), (2, 2));
        let failures = fs::read_to_string(dir.path().join(FAILURES_FILE)).unwrap();
        assert_eq!(failures.lines().filter(|l| l.contains("broken")).count(), 2);
        let err = HarnessError::PartialFailure { failed: 2, total: 4 };
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn real_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789, f64::MAX] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
        }
    }
}
