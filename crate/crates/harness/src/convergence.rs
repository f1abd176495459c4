//! Mean best-so-far error curves on a fixed `N_evals / D` grid.

use std::fs;
use std::path::{Path, PathBuf};

use rcmaes_core::rcmaes::RestartPolicy;

use crate::campaign::{fmt_real, history_path, FINALS_FILE, OPTIMA_FILE};
use crate::error::{HarnessError, Result};
use crate::score::{read_finals, read_optima};

pub const DEFAULT_POINTS: usize = 101;

/// Best-so-far value at `evals`: the last improvement at or before it.
/// Before the first improvement the first recorded value is used.
pub fn step_value(history: &[(u64, f64)], evals: f64) -> Option<f64> {
    let first = history.first()?;
    Some(
        history
            .iter()
            .take_while(|(e, _)| *e as f64 <= evals)
            .last()
            .unwrap_or(first)
            .1,
    )
}

/// Mean over runs of `best_f − f*` at each grid point (in evaluations).
pub fn mean_error_curve(histories: &[Vec<(u64, f64)>], optimum: f64, grid_evals: &[f64]) -> Vec<f64> {
    let used: Vec<&Vec<(u64, f64)>> = histories.iter().filter(|h| !h.is_empty()).collect();
    grid_evals
        .iter()
        .map(|&e| {
            let sum: f64 = used.iter().filter_map(|h| step_value(h, e)).map(|f| f - optimum).sum();
            sum / used.len() as f64
        })
        .collect()
}

pub fn read_history(path: &Path) -> Result<Vec<(u64, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceCurves {
    pub problem: String,
    /// Grid in `N_evals / D`.
    pub grid: Vec<f64>,
    pub policies: Vec<String>,
    /// Indexed `[policy][grid point]`.
    pub mean_error: Vec<Vec<f64>>,
}

impl ConvergenceCurves {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("evals_per_dim");
        for p in &self.policies {
            out.push(',');
            out.push_str(p);
        }
        out.push('\n');
        for (g, x) in self.grid.iter().enumerate() {
            out.push_str(&fmt_real(*x));
            for curve in &self.mean_error {
                out.push(',');
                out.push_str(&fmt_real(curve[g]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn convergence_file(dir: &Path, problem: &str) -> PathBuf {
    dir.join(format!("convergence_{problem}.csv"))
}

/// Builds the curves for one problem from a campaign directory and writes
/// them to `convergence_<problem>.csv`. The grid spans `[0, max evals_used]`.
pub fn export_convergence(dir: &Path, problem: &str, points: usize) -> Result<ConvergenceCurves> {
    let rows: Vec<_> = read_finals(&dir.join(FINALS_FILE))?
        .into_iter()
        .filter(|r| r.problem == problem)
        .collect();
    if rows.is_empty() {
        return Err(HarnessError::Lookup(format!("no runs for problem `{problem}`")));
    }
    let optimum = read_optima(&dir.join(OPTIMA_FILE))?
        .into_iter()
        .find(|o| o.problem == problem)
        .ok_or_else(|| HarnessError::Lookup(format!("no optimum for problem `{problem}`")))?
        .optimum;
    let dim = rows[0].dim as f64;
    let max_evals = rows.iter().map(|r| r.evals_used).max().unwrap_or(0) as f64;
    let points = points.max(2);
    let grid_evals: Vec<f64> = (0..points)
        .map(|k| max_evals * k as f64 / (points - 1) as f64)
        .collect();

    let mut policies: Vec<String> = Vec::new();
    for r in &rows {
        if !policies.contains(&r.policy) {
            policies.push(r.policy.clone());
        }
    }
    let mut mean_error = Vec::with_capacity(policies.len());
    for name in &policies {
        let policy: RestartPolicy = name.parse()?;
        let histories = rows
            .iter()
            .filter(|r| &r.policy == name)
            .map(|r| read_history(&history_path(dir, &policy, problem, r.run)))
            .collect::<Result<Vec<_>>>()?;
        mean_error.push(mean_error_curve(&histories, optimum, &grid_evals));
    }
    let curves = ConvergenceCurves {
        problem: problem.to_string(),
        grid: grid_evals.iter().map(|e| e / dim).collect(),
        policies,
        mean_error,
    };
    let path = convergence_file(dir, problem);
    fs::write(&path, curves.to_csv()).map_err(|e| HarnessError::io(&path, e))?;
    Ok(curves)
}
