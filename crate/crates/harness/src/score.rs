//! Scoring a campaign archive.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rcmaes_core::stats::{self, AccuracyTable, RankTable, Report, ResultMatrix, WtlRecord};
use serde::{Deserialize, Serialize};

use crate::campaign::{FINALS_FILE, OPTIMA_FILE};
use crate::error::{HarnessError, Result};

pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalRow {
    pub policy: String,
    pub problem: String,
    pub dim: usize,
    pub run: usize,
    pub evals_used: u64,
    pub final_f: f64,
    pub final_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimumRow {
    pub problem: String,
    pub dim: usize,
    pub optimum: f64,
}

pub fn read_finals(path: &Path) -> Result<Vec<FinalRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

pub fn read_optima(path: &Path) -> Result<Vec<OptimumRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

/// Assembles the `[policy][problem][run]` tensor. Every policy must have
/// every run of every problem; gaps are listed in the error.
pub fn result_matrix(rows: &[FinalRow]) -> Result<ResultMatrix> {
    let policies = first_seen(rows.iter().map(|r| r.policy.as_str()));
    let problems = first_seen(rows.iter().map(|r| r.problem.as_str()));
    let runs: BTreeSet<usize> = rows.iter().map(|r| r.run).collect();
    let mut cells: HashMap<(&str, &str, usize), f64> = HashMap::new();
    for r in rows {
        if cells.insert((&r.policy, &r.problem, r.run), r.final_f).is_some() {
            return Err(rcmaes_core::Error::ContractViolation(format!(
                "duplicate row for {} on {} run {}",
                r.policy, r.problem, r.run
            ))
            .into());
        }
    }
    let mut gaps = Vec::new();
    let mut finals = Vec::with_capacity(policies.len());
    for a in &policies {
        let mut per_alg = Vec::with_capacity(problems.len());
        for p in &problems {
            let mut cell = Vec::with_capacity(runs.len());
            for &i in &runs {
                match cells.get(&(a.as_str(), p.as_str(), i)) {
                    Some(v) => cell.push(*v),
                    None => gaps.push(format!("{a}/{p}/run{i}")),
                }
            }
            per_alg.push(cell);
        }
        finals.push(per_alg);
    }
    if !gaps.is_empty() {
        return Err(rcmaes_core::Error::IncompleteMatrix(format!("missing {}", gaps.join(", "))).into());
    }
    Ok(ResultMatrix::new(policies, problems, finals)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreOutput {
    pub subject: String,
    pub alpha: f64,
    pub ranks: RankTable,
    pub accuracy: AccuracyTable,
    pub wtl: Vec<WtlRecord>,
    pub report: Report,
}

/// Scores finals against per-problem optima. The subject defaults to the
/// first policy in the rows.
pub fn score(rows: &[FinalRow], optima: &[OptimumRow], subject: Option<&str>, alpha: f64) -> Result<ScoreOutput> {
    let m = result_matrix(rows)?;
    let fstar = m
        .problems()
        .iter()
        .map(|p| {
            optima
                .iter()
                .find(|o| &o.problem == p)
                .map(|o| o.optimum)
                .ok_or_else(|| HarnessError::Lookup(format!("no optimum for problem `{p}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let subject = subject.unwrap_or(&m.algorithms()[0]).to_string();
    let ranks = stats::friedman(&m);
    let accuracy = stats::accuracy(&m, &fstar)?;
    let wtl = stats::wtl(&m, &subject, alpha)?;
    let report = stats::rank_report(&ranks, &accuracy, &wtl)?;
    Ok(ScoreOutput {
        subject,
        alpha,
        ranks,
        accuracy,
        wtl,
        report,
    })
}

/// Reads `finals.csv` and `optima.csv` from a campaign directory, scores
/// them and writes `report.txt` and `report.json` next to them.
pub fn score_campaign(dir: &Path, subject: Option<&str>, alpha: f64) -> Result<ScoreOutput> {
    let rows = read_finals(&dir.join(FINALS_FILE))?;
    let optima = read_optima(&dir.join(OPTIMA_FILE))?;
    let out = score(&rows, &optima, subject, alpha)?;
    let text = format!(
        "subject: {}  alpha: {}\n{}",
        out.subject,
        out.alpha,
        out.report.to_text()
    );
    let path = dir.join(REPORT_TEXT);
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    let path = dir.join(REPORT_JSON);
    fs::write(&path, serde_json::to_string_pretty(&out)?).map_err(|e| HarnessError::io(&path, e))?;
    Ok(out)
}
