//! Nonparametric scoring of a campaign: Friedman average ranks, pairwise
//! Mann–Whitney win/tie/loss counts and the bounded relative-error accuracy.

use std::fmt::Write as _;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Finals below `f*` by less than this are treated as round-off and clamped.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// Largest per-sample size handled by exact enumeration.
pub const EXACT_LIMIT: usize = 8;

/// Final objective values indexed `[algorithm][problem][run]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultMatrix {
    algorithms: Vec<String>,
    problems: Vec<String>,
    finals: Vec<Vec<Vec<f64>>>,
    runs: usize,
}

impl ResultMatrix {
    pub fn new(algorithms: Vec<String>, problems: Vec<String>, finals: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if algorithms.is_empty() || problems.is_empty() {
            return Err(Error::ContractViolation("result matrix is empty".into()));
        }
        if finals.len() != algorithms.len() {
            return Err(Error::DimensionMismatch {
                expected: algorithms.len(),
                found: finals.len(),
            });
        }
        let runs = finals[0].first().map_or(0, Vec::len);
        if runs == 0 {
            return Err(Error::ContractViolation("result matrix has no runs".into()));
        }
        for (k, per_alg) in finals.iter().enumerate() {
            if per_alg.len() != problems.len() {
                return Err(Error::IncompleteMatrix(format!(
                    "{} has {} problems, expected {}",
                    algorithms[k],
                    per_alg.len(),
                    problems.len()
                )));
            }
            for (j, cell) in per_alg.iter().enumerate() {
                if cell.len() != runs {
                    return Err(Error::IncompleteMatrix(format!(
                        "{} on {} has {} runs, expected {runs}",
                        algorithms[k],
                        problems[j],
                        cell.len()
                    )));
                }
                if let Some(v) = cell.iter().find(|v| !v.is_finite()) {
                    return Err(Error::ContractViolation(format!(
                        "non-finite final {v} for {} on {}",
                        algorithms[k], problems[j]
                    )));
                }
            }
        }
        Ok(Self {
            algorithms,
            problems,
            finals,
            runs,
        })
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn problems(&self) -> &[String] {
        &self.problems
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Finals of one algorithm on one problem, across runs.
    pub fn cell(&self, algorithm: usize, problem: usize) -> &[f64] {
        &self.finals[algorithm][problem]
    }

    pub fn algorithm_index(&self, name: &str) -> Result<usize> {
        self.algorithms
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAlgorithm(name.to_string()))
    }

    /// Applies `f` to every final value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let finals = self
            .finals
            .iter()
            .map(|a| a.iter().map(|c| c.iter().map(|v| f(*v)).collect()).collect())
            .collect();
        Self::new(self.algorithms.clone(), self.problems.clone(), finals)
    }
}

/// 1-based ranks in ascending order; tied values share the mean of the
/// positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankTable {
    pub algorithms: Vec<String>,
    /// Friedman score `R_k` per algorithm; lower is better.
    pub scores: Vec<f64>,
    /// Per-cell ranks indexed `[algorithm][problem][run]`.
    pub ranks: Vec<Vec<Vec<f64>>>,
}

/// Ranks the algorithms within every (run, problem) cell and averages.
pub fn friedman(m: &ResultMatrix) -> RankTable {
    let k = m.algorithms.len();
    let p = m.problems.len();
    let mut ranks = vec![vec![vec![0.0; m.runs]; p]; k];
    for j in 0..p {
        for i in 0..m.runs {
            let cell: Vec<f64> = (0..k).map(|a| m.finals[a][j][i]).collect();
            for (a, r) in average_ranks(&cell).into_iter().enumerate() {
                ranks[a][j][i] = r;
            }
        }
    }
    let cells = (p * m.runs) as f64;
    let scores = ranks
        .iter()
        .map(|per_alg| per_alg.iter().flatten().sum::<f64>() / cells)
        .collect();
    RankTable {
        algorithms: m.algorithms.clone(),
        scores,
        ranks,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    XWins,
    Tie,
    YWins,
}

impl Decision {
    pub fn flipped(self) -> Self {
        match self {
            Decision::XWins => Decision::YWins,
            Decision::Tie => Decision::Tie,
            Decision::YWins => Decision::XWins,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MwuResult {
    /// `U` of the first sample: the number of (x, y) pairs with `x > y`,
    /// ties counting one half.
    pub u: f64,
    pub p_value: f64,
    pub decision: Decision,
}

/// Two-sided Mann–Whitney U test where lower values are better.
///
/// Exact permutation enumeration when both samples have at most
/// [`EXACT_LIMIT`] values, otherwise the normal approximation with tie and
/// continuity correction.
pub fn mann_whitney(x: &[f64], y: &[f64], alpha: f64) -> Result<MwuResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::ContractViolation("Mann-Whitney needs two non-empty samples".into()));
    }
    let p_value = if x.len() <= EXACT_LIMIT && y.len() <= EXACT_LIMIT {
        mwu_exact_p(x, y)
    } else {
        mwu_normal_p(x, y)
    };
    let u = u_statistic(x, y);
    let half = (x.len() * y.len()) as f64 / 2.0;
    let decision = if p_value > alpha || u == half {
        Decision::Tie
    } else if u < half {
        Decision::XWins
    } else {
        Decision::YWins
    };
    Ok(MwuResult { u, p_value, decision })
}

fn pooled_ranks(x: &[f64], y: &[f64]) -> Vec<f64> {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    average_ranks(&pooled)
}

fn u_statistic(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let rank_sum: f64 = pooled_ranks(x, y)[..x.len()].iter().sum();
    rank_sum - n * (n + 1.0) / 2.0
}

/// Exact two-sided p-value: the share of all assignments of the pooled
/// midranks to the first sample whose `U` is at least as far from `nm/2`.
pub fn mwu_exact_p(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let total = n + y.len();
    assert!(total <= 2 * EXACT_LIMIT, "exact enumeration limited to {EXACT_LIMIT} per sample");
    // Doubled midranks are integers, so the comparison below is exact.
    let doubled: Vec<i64> = pooled_ranks(x, y).iter().map(|r| (2.0 * r).round() as i64).collect();
    let nm = (n * y.len()) as i64;
    let offset = (n * (n + 1)) as i64;
    let dev = |sum2: i64| (sum2 - offset - nm).abs();
    let observed = dev(doubled[..n].iter().sum());
    let (mut hits, mut count) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let sum2: i64 = (0..total).filter(|i| mask >> i & 1 == 1).map(|i| doubled[i]).sum();
        count += 1;
        if dev(sum2) >= observed {
            hits += 1;
        }
    }
    hits as f64 / count as f64
}

/// Normal approximation to the two-sided p-value, with tie-corrected
/// variance and a 0.5 continuity correction.
pub fn mwu_normal_p(x: &[f64], y: &[f64]) -> f64 {
    let (n, m) = (x.len() as f64, y.len() as f64);
    let big_n = n + m;
    let mut sorted: Vec<f64> = x.iter().chain(y).copied().collect();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * m / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let diff = (u_statistic(x, y) - n * m / 2.0).abs();
    let z = (diff - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemComparison {
    pub problem: String,
    pub u: f64,
    pub p_value: f64,
    /// From the subject's side: `XWins` means the subject won.
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WtlRecord {
    pub subject: String,
    pub opponent: String,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub per_problem: Vec<ProblemComparison>,
}

impl WtlRecord {
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.wins, self.ties, self.losses)
    }
}

/// Win/tie/loss of `subject` against `opponent` across all problems.
pub fn wtl_pair(m: &ResultMatrix, subject: &str, opponent: &str, alpha: f64) -> Result<WtlRecord> {
    let s = m.algorithm_index(subject)?;
    let o = m.algorithm_index(opponent)?;
    let mut rec = WtlRecord {
        subject: subject.to_string(),
        opponent: opponent.to_string(),
        wins: 0,
        ties: 0,
        losses: 0,
        per_problem: Vec::with_capacity(m.problems.len()),
    };
    for (j, problem) in m.problems.iter().enumerate() {
        let r = mann_whitney(m.cell(s, j), m.cell(o, j), alpha)?;
        match r.decision {
            Decision::XWins => rec.wins += 1,
            Decision::Tie => rec.ties += 1,
            Decision::YWins => rec.losses += 1,
        }
        rec.per_problem.push(ProblemComparison {
            problem: problem.clone(),
            u: r.u,
            p_value: r.p_value,
            decision: r.decision,
        });
    }
    Ok(rec)
}

/// Win/tie/loss of `subject` against every other algorithm.
pub fn wtl(m: &ResultMatrix, subject: &str, alpha: f64) -> Result<Vec<WtlRecord>> {
    m.algorithm_index(subject)?;
    m.algorithms
        .iter()
        .filter(|a| *a != subject)
        .map(|a| wtl_pair(m, subject, a, alpha))
        .collect()
}

/// `ε / (1 + ε)`, mapping `[0, ∞)` onto `[0, 1)`.
pub fn bounded_accuracy(eps: f64) -> f64 {
    if eps.is_infinite() {
        return 1.0;
    }
    eps / (1.0 + eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyTable {
    pub algorithms: Vec<String>,
    pub problems: Vec<String>,
    /// Mean relative error `ε`, indexed `[algorithm][problem]`.
    pub epsilon: Vec<Vec<f64>>,
    /// Bounded accuracy `E = ε / (1 + ε)`, indexed `[algorithm][problem]`.
    pub bounded: Vec<Vec<f64>>,
    /// Mean of `E` over problems, per algorithm.
    pub mean: Vec<f64>,
}

pub fn accuracy(m: &ResultMatrix, optima: &[f64]) -> Result<AccuracyTable> {
    if optima.len() != m.problems.len() {
        return Err(Error::DimensionMismatch {
            expected: m.problems.len(),
            found: optima.len(),
        });
    }
    if let Some((j, f)) = optima.iter().enumerate().find(|(_, f)| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::ContractViolation(format!(
            "optimum of {} is {f}; relative error needs f* > 0",
            m.problems[j]
        )));
    }
    let mut epsilon = Vec::with_capacity(m.algorithms.len());
    for (k, per_alg) in m.finals.iter().enumerate() {
        let mut row = Vec::with_capacity(optima.len());
        for (j, (cell, &fstar)) in per_alg.iter().zip(optima).enumerate() {
            let mut sum = 0.0;
            for &f in cell {
                let gap = f - fstar;
                if gap < -CLAMP_TOLERANCE {
                    return Err(Error::ContractViolation(format!(
                        "{} on {} reached {f}, below the optimum {fstar}",
                        m.algorithms[k], m.problems[j]
                    )));
                }
                sum += gap.max(0.0) / fstar;
            }
            row.push(sum / cell.len() as f64);
        }
        epsilon.push(row);
    }
    let bounded: Vec<Vec<f64>> = epsilon
        .iter()
        .map(|row| row.iter().map(|e| bounded_accuracy(*e)).collect())
        .collect();
    let mean = bounded
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();
    Ok(AccuracyTable {
        algorithms: m.algorithms.clone(),
        problems: m.problems.clone(),
        epsilon,
        bounded,
        mean,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub algorithm: String,
    pub accuracy: f64,
    pub accuracy_rank: f64,
    pub friedman: f64,
    pub friedman_rank: f64,
    /// Subject's W/T/L against this algorithm; `None` for the subject itself.
    pub wtl: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    /// Rows sorted by Friedman score, best first.
    pub rows: Vec<ReportRow>,
}

/// Combines the three scores into one comparison table.
pub fn rank_report(rank: &RankTable, acc: &AccuracyTable, wtl: &[WtlRecord]) -> Result<Report> {
    if rank.algorithms != acc.algorithms {
        return Err(Error::ContractViolation(
            "rank and accuracy tables cover different algorithms".into(),
        ));
    }
    if let Some(r) = wtl.iter().find(|r| !rank.algorithms.contains(&r.opponent)) {
        return Err(Error::UnknownAlgorithm(r.opponent.clone()));
    }
    let e_ranks = average_ranks(&acc.mean);
    let r_ranks = average_ranks(&rank.scores);
    let mut rows: Vec<ReportRow> = rank
        .algorithms
        .iter()
        .enumerate()
        .map(|(k, name)| ReportRow {
            algorithm: name.clone(),
            accuracy: acc.mean[k],
            accuracy_rank: e_ranks[k],
            friedman: rank.scores[k],
            friedman_rank: r_ranks[k],
            wtl: wtl.iter().find(|r| &r.opponent == name).map(WtlRecord::label),
        })
        .collect();
    rows.sort_by(|a, b| a.friedman.total_cmp(&b.friedman));
    Ok(Report { rows })
}

impl Report {
    /// Aligned text table with three decimals and ranks in parentheses.
    pub fn to_text(&self) -> String {
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.algorithm.clone(),
                    format!("{:.3} ({})", r.accuracy, r.accuracy_rank),
                    format!("{:.3} ({})", r.friedman, r.friedman_rank),
                    r.wtl.clone().unwrap_or_else(|| "-".into()),
                ]
            })
            .collect();
        let header = ["algorithm", "E", "R", "W/T/L"];
        let widths: Vec<usize> = (0..4)
            .map(|c| cells.iter().map(|r| r[c].chars().count()).chain([header[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, row: [&str; 4]| {
            let _ = writeln!(
                out,
                "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
                row[0],
                row[1],
                row[2],
                row[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
        };
        line(&mut out, header);
        for r in &cells {
            line(&mut out, [&r[0], &r[1], &r[2], &r[3]]);
        }
        out
    }
}
