//! Restart controller: nonlinear population schedule, convergence-triggered
//! restarts away from previously converged regions, and stochastic bound
//! repair. Two baseline policies (fixed population, IPOP-style doubling)
//! share the same loop for comparison campaigns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cma::{population_spread, CmaMode, CmaParams, CmaState};
use crate::error::{Error, Result};
use crate::model::{Bounds, Budget, Objective, RestartRecord, RngStream, RunResult};

/// Initial step size in normalized coordinates.
pub const INITIAL_SIGMA: f64 = 0.3;
/// Half-width of an exclusion box as a fraction of each coordinate's range.
pub const EXCLUSION_HALF_WIDTH: f64 = 0.05;
/// Rejection draws before a restart mean is accepted unconditionally.
pub const MAX_REJECTIONS: usize = 1000;
/// IPOP population growth stops at this multiple of the initial size.
pub const IPOP_CAP_FACTOR: usize = 10;

/// `N0 = D · max(2, 10·log10(N_max / D) − 20)`, rounded to the nearest integer.
pub fn initial_pop_size(dim: usize, max_evals: u64) -> Result<usize> {
    if dim == 0 || max_evals <= dim as u64 {
        return Err(Error::InvalidBudget { max_evals, dim });
    }
    let eta = (max_evals as f64 / dim as f64).log10();
    let factor = (10.0 * eta - 20.0).max(2.0);
    Ok((dim as f64 * factor).round() as usize)
}

/// `r = 1.7 − 0.01·D`.
pub fn reduction_exponent(dim: usize) -> f64 {
    // Scaled integer arithmetic keeps r exact at tabulated dimensions (r(70) == 1.0).
    (170.0 - dim as f64) / 100.0
}

/// Population size as a function of the elapsed budget fraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSchedule {
    pub n0: usize,
    pub r: f64,
    pub dim: usize,
    pub max_evals: u64,
}

impl PopulationSchedule {
    pub fn new(dim: usize, max_evals: u64) -> Result<Self> {
        Ok(Self {
            n0: initial_pop_size(dim, max_evals)?,
            r: reduction_exponent(dim),
            dim,
            max_evals,
        })
    }

    /// Unrounded `N0 − (N0 − D)·[1 − (1 − t)^r]`.
    pub fn raw_size_at(&self, t: f64) -> f64 {
        let n0 = self.n0 as f64;
        n0 - (n0 - self.dim as f64) * (1.0 - (1.0 - t).powf(self.r))
    }

    /// `floor(Np(t))`, clamped to at least `min(D, N0)` and at least 2.
    pub fn pop_size_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ContractViolation(format!("budget fraction {t} outside [0, 1]")));
        }
        let floor = self.raw_size_at(t).floor().max(0.0) as usize;
        Ok(floor.max(self.dim.min(self.n0)).max(2))
    }
}

/// Population-convergence test on the spread of one generation's fitnesses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTest {
    pub threshold: f64,
    pub epsilon: f64,
}

impl Default for ConvergenceTest {
    fn default() -> Self {
        Self {
            threshold: 1e-8,
            epsilon: 1e-12,
        }
    }
}

impl ConvergenceTest {
    /// `δ = (f_max − f_min) / max(|f_mean|, ε)`.
    pub fn delta(&self, f_max: f64, f_min: f64, f_mean: f64) -> f64 {
        (f_max - f_min) / f_mean.abs().max(self.epsilon)
    }

    pub fn is_converged(&self, f_max: f64, f_min: f64, f_mean: f64) -> bool {
        self.delta(f_max, f_min, f_mean) <= self.threshold
    }
}

/// Closed axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ExclusionBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }
}

/// Union of boxes around previously converged means.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionSet {
    boxes: Vec<ExclusionBox>,
}

impl ExclusionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn boxes(&self) -> &[ExclusionBox] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Adds a box with side length 10% of each range, clipped to `bounds`.
    pub fn add_around(&mut self, center: &[f64], bounds: &Bounds) {
        let (lower, upper) = (0..bounds.dim())
            .map(|i| {
                let half = EXCLUSION_HALF_WIDTH * bounds.range(i);
                (
                    (center[i] - half).max(bounds.lower()[i]),
                    (center[i] + half).min(bounds.upper()[i]),
                )
            })
            .unzip();
        self.boxes.push(ExclusionBox { lower, upper });
    }

    /// Adds an arbitrary box; used to build degenerate test covers.
    pub fn push(&mut self, b: ExclusionBox) {
        self.boxes.push(b);
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }
}

/// A restart mean and whether the rejection cap forced its acceptance.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartMean {
    pub point: Vec<f64>,
    pub capped: bool,
}

/// Uniform draw in `bounds` outside every exclusion box.
pub fn sample_restart_mean(bounds: &Bounds, exclusion: &ExclusionSet, rng: &mut RngStream) -> RestartMean {
    let draw = |rng: &mut RngStream| -> Vec<f64> {
        (0..bounds.dim())
            .map(|i| rng.uniform_in(bounds.lower()[i], bounds.upper()[i]))
            .collect()
    };
    let mut point = draw(rng);
    let mut rejections = 0;
    while exclusion.contains(&point) {
        if rejections == MAX_REJECTIONS {
            return RestartMean { point, capped: true };
        }
        rejections += 1;
        point = draw(rng);
    }
    RestartMean { point, capped: false }
}

/// Resamples each violated coordinate uniformly inside the strip adjacent to
/// the violated bound whose width is the violation magnitude (capped at the
/// full range). Non-finite coordinates are redrawn over the whole range.
pub fn repair_bounds(x: &mut [f64], bounds: &Bounds, rng: &mut RngStream) {
    for (i, v) in x.iter_mut().enumerate() {
        let (lo, hi) = (bounds.lower()[i], bounds.upper()[i]);
        let range = hi - lo;
        if !v.is_finite() {
            *v = rng.uniform_in(lo, hi);
        } else if *v > hi {
            let width = (*v - hi).min(range);
            *v = (hi - width * rng.uniform()).max(lo);
        } else if *v < lo {
            let width = (lo - *v).min(range);
            *v = (lo + width * rng.uniform()).min(hi);
        }
    }
}

/// Which population-size rule drives the restart loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartVariant {
    /// Nonlinear schedule plus exclusion-aware restarts.
    Rcmaes,
    /// `Np(0)` for every generation of every restart.
    FixedPopulation,
    /// `N0 · 2^k` on the k-th restart, capped at `10·N0`.
    IpopDoubling,
}

/// A restart variant combined with a covariance-update mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RestartPolicy {
    pub variant: RestartVariant,
    pub mode: CmaMode,
}

impl RestartPolicy {
    pub const RCMAES: RestartPolicy = RestartPolicy {
        variant: RestartVariant::Rcmaes,
        mode: CmaMode::Active,
    };

    pub fn new(variant: RestartVariant, mode: CmaMode) -> Self {
        Self { variant, mode }
    }
}

impl fmt::Display for RestartPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.variant {
            RestartVariant::Rcmaes => "rcmaes",
            RestartVariant::FixedPopulation => "fixed",
            RestartVariant::IpopDoubling => "ipop",
        };
        write!(f, "{v}-{}", self.mode.name())
    }
}

impl FromStr for RestartPolicy {
    type Err = Error;

    /// Parses `<variant>[-<mode>]`, e.g. `rcmaes-active`, `ipop-standard`, `fixed`.
    fn from_str(s: &str) -> Result<Self> {
        let (variant, mode) = match s.rsplit_once('-') {
            Some((v, m)) if m == "active" || m == "standard" => (v, m),
            _ => (s, "active"),
        };
        let variant = match variant {
            "rcmaes" => RestartVariant::Rcmaes,
            "fixed" => RestartVariant::FixedPopulation,
            "ipop" => RestartVariant::IpopDoubling,
            _ => return Err(Error::UnknownAlgorithm(s.to_string())),
        };
        let mode = if mode == "active" {
            CmaMode::Active
        } else {
            CmaMode::Standard
        };
        Ok(Self { variant, mode })
    }
}

/// Runs one seeded optimization of `objective` with at most `max_evals` evaluations.
///
/// The search distribution lives in `[0, 1]^D`; candidates are repaired there
/// and denormalized for evaluation. A restart is triggered when the spread of
/// the evaluated generation passes the convergence test; the converged mean
/// is then excluded from future restart draws (RCMAES variant only).
pub fn run(
    objective: &dyn Objective,
    max_evals: u64,
    policy: RestartPolicy,
    rng: &mut RngStream,
) -> Result<RunResult> {
    let bounds = objective.bounds();
    let dim = bounds.dim();
    let schedule = PopulationSchedule::new(dim, max_evals)?;
    let mut budget = Budget::new(max_evals)?;
    let unit = Bounds::unit(dim);
    let convergence = ConvergenceTest::default();

    let mut result = RunResult::new();
    let mut exclusion = ExclusionSet::new();
    let mut restart_index: u32 = 0;

    while !budget.is_exhausted() {
        let mean = match policy.variant {
            RestartVariant::Rcmaes => {
                let draw = sample_restart_mean(&unit, &exclusion, rng);
                if draw.capped {
                    result.capped_restart_draws += 1;
                }
                draw.point
            }
            _ => sample_restart_mean(&unit, &ExclusionSet::new(), rng).point,
        };
        let run_lambda = match policy.variant {
            RestartVariant::IpopDoubling => {
                let grown = schedule.n0.saturating_mul(1usize << restart_index.min(30));
                grown.min(IPOP_CAP_FACTOR * schedule.n0)
            }
            _ => schedule.n0,
        }
        .max(2);

        let mut state = CmaState::new(mean, INITIAL_SIGMA)?;
        let mut params: Option<CmaParams> = None;

        while !budget.is_exhausted() {
            let wanted = match policy.variant {
                RestartVariant::Rcmaes => schedule.pop_size_at(budget.fraction())?,
                _ => run_lambda,
            };
            let lambda = wanted.min(budget.remaining() as usize);
            if lambda < 2 {
                // Too few evaluations left for a selection step: spend them on
                // plain samples from the current distribution.
                let p = params.take().map_or_else(
                    || CmaParams::new(dim, 2, policy.mode),
                    |p| p.resized(2),
                )?;
                let mut generation = state.ask(&p, rng)?;
                generation.offspring.truncate(lambda);
                evaluate_generation(objective, &unit, &mut generation, &mut budget, &mut result, rng)?;
                break;
            }
            let p = match params.take() {
                Some(p) => p.resized(lambda)?,
                None => CmaParams::new(dim, lambda, policy.mode)?,
            };

            let mut generation = state.ask(&p, rng)?;
            evaluate_generation(objective, &unit, &mut generation, &mut budget, &mut result, rng)?;
            state.tell(&p, &generation)?;
            params = Some(p);

            let (f_max, f_min, f_mean) = population_spread(&generation.fitness)?;
            if convergence.is_converged(f_max, f_min, f_mean) {
                result.restarts.push(RestartRecord {
                    eval_index: budget.used_evals(),
                    converged_mean: bounds.denormalize(&state.mean)?,
                });
                exclusion.add_around(&state.mean, &unit);
                restart_index += 1;
                break;
            }
        }
    }
    result.evals_used = budget.used_evals();
    Ok(result)
}

fn evaluate_generation(
    objective: &dyn Objective,
    unit: &Bounds,
    generation: &mut crate::cma::Generation,
    budget: &mut Budget,
    result: &mut RunResult,
    rng: &mut RngStream,
) -> Result<()> {
    let bounds = objective.bounds();
    generation.fitness.clear();
    for x in generation.offspring.iter_mut() {
        repair_bounds(x, unit, rng);
        let raw = bounds.denormalize(x)?;
        let f = objective.evaluate(&raw);
        budget.consume(1)?;
        result.record_improvement(budget.used_evals(), f, &raw);
        generation.fitness.push(f);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnObjective;
    use proptest::prelude::*;

    #[test]
    fn initial_sizes_by_hand() {
        assert_eq!(initial_pop_size(10, 100_000).unwrap(), 200);
        assert_eq!(initial_pop_size(10, 1_000).unwrap(), 20);
        assert_eq!(initial_pop_size(30, 300_000).unwrap(), 600);
        assert!(matches!(
            initial_pop_size(10, 10),
            Err(Error::InvalidBudget { .. })
        ));
    }

    #[test]
    fn exponent_by_hand() {
        assert_eq!(reduction_exponent(70), 1.0);
        assert_eq!(reduction_exponent(100), 0.7);
        assert_eq!(reduction_exponent(10), 1.6);
    }

    #[test]
    fn schedule_boundaries_and_midpoint() {
        let s = PopulationSchedule::new(10, 100_000).unwrap();
        assert_eq!((s.n0, s.r), (200, 1.6));
        assert_eq!(s.pop_size_at(0.0).unwrap(), 200);
        assert_eq!(s.pop_size_at(1.0).unwrap(), 10);
        // 200 − 190·(1 − 0.5^1.6) ≈ 72.68
        assert!((s.raw_size_at(0.5) - 72.68).abs() < 0.01);
        assert_eq!(s.pop_size_at(0.5).unwrap(), 72);
        assert!(s.pop_size_at(1.5).is_err());
        assert!(s.pop_size_at(-0.1).is_err());
    }

    #[test]
    fn schedule_clamps_to_two() {
        let s = PopulationSchedule::new(1, 50).unwrap();
        assert!(s.pop_size_at(1.0).unwrap() >= 2);
    }

    proptest! {
        #[test]
        fn schedule_monotone(dim in 1usize..170, mult in 2u64..20_000) {
            let s = PopulationSchedule::new(dim, dim as u64 * mult).unwrap();
            let mut prev = usize::MAX;
            for k in 0..=100 {
                let np = s.pop_size_at(k as f64 / 100.0).unwrap();
                prop_assert!(np <= prev);
                prop_assert!(np >= dim.min(s.n0).max(2) && np <= s.n0.max(2));
                prev = np;
            }
        }
    }

    #[test]
    fn convergence_hand_cases() {
        let ct = ConvergenceTest::default();
        assert_eq!(ct.delta(5.0, 5.0, 5.0), 0.0);
        assert!(ct.is_converged(5.0, 5.0, 5.0));
        assert_eq!(ct.delta(3.0, 1.0, 2.0), 1.0);
        assert!(!ct.is_converged(3.0, 1.0, 2.0));
        assert_eq!(ct.delta(0.0, 0.0, 0.0), 0.0);
        assert!(ct.is_converged(0.0, 0.0, 0.0));
        // ε guard: spread 1e-21 around zero mean is 1e-9 relative to ε.
        assert!(ct.is_converged(1e-21, 0.0, 0.0));
        assert!(!ct.is_converged(1e-19, 0.0, 0.0));
    }

    #[test]
    fn restart_mean_without_exclusion_is_uniform_in_bounds() {
        let b = Bounds::uniform(3, -2.0, 5.0).unwrap();
        let mut rng = RngStream::new(1);
        for _ in 0..1000 {
            let m = sample_restart_mean(&b, &ExclusionSet::new(), &mut rng);
            assert!(!m.capped && b.contains(&m.point));
        }
    }

    #[test]
    fn restart_mean_avoids_box() {
        let b = Bounds::unit(1);
        let mut ex = ExclusionSet::new();
        ex.add_around(&[0.5], &b);
        assert_eq!(ex.boxes()[0].lower, vec![0.45]);
        let mut rng = RngStream::new(2);
        for _ in 0..10_000 {
            let m = sample_restart_mean(&b, &ex, &mut rng);
            assert!(!(0.45..=0.55).contains(&m.point[0]));
        }
    }

    #[test]
    fn exclusion_box_is_clipped() {
        let b = Bounds::uniform(2, 0.0, 10.0).unwrap();
        let mut ex = ExclusionSet::new();
        ex.add_around(&[0.2, 9.9], &b);
        assert_eq!(ex.boxes()[0].lower, vec![0.0, 9.4]);
        assert_eq!(ex.boxes()[0].upper, vec![0.7, 10.0]);
    }

    #[test]
    fn full_cover_hits_the_cap() {
        let b = Bounds::unit(2);
        let mut ex = ExclusionSet::new();
        ex.push(ExclusionBox {
            lower: vec![0.0; 2],
            upper: vec![1.0; 2],
        });
        let m = sample_restart_mean(&b, &ex, &mut RngStream::new(3));
        assert!(m.capped);
        assert!(b.contains(&m.point));
    }

    #[test]
    fn repair_hand_cases() {
        let b = Bounds::unit(1);
        let mut rng = RngStream::new(4);
        for _ in 0..1000 {
            let mut x = [1.3];
            repair_bounds(&mut x, &b, &mut rng);
            assert!((0.7..=1.0).contains(&x[0]));
            let mut x = [-0.05];
            repair_bounds(&mut x, &b, &mut rng);
            assert!((0.0..=0.05).contains(&x[0]));
            let mut x = [0.25];
            repair_bounds(&mut x, &b, &mut rng);
            assert_eq!(x[0], 0.25);
            let mut x = [f64::NAN];
            repair_bounds(&mut x, &b, &mut rng);
            assert!((0.0..=1.0).contains(&x[0]));
        }
    }

    #[test]
    fn huge_violation_is_capped_at_range() {
        let b = Bounds::uniform(1, -1.0, 1.0).unwrap();
        let mut rng = RngStream::new(5);
        for _ in 0..1000 {
            let mut x = [1e6];
            repair_bounds(&mut x, &b, &mut rng);
            assert!(b.contains(&x));
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for s in ["rcmaes-active", "rcmaes-standard", "fixed-active", "ipop-standard"] {
            let p: RestartPolicy = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert_eq!("ipop".parse::<RestartPolicy>().unwrap().to_string(), "ipop-active");
        assert!("bipop".parse::<RestartPolicy>().is_err());
    }

    #[test]
    fn constant_objective_restarts_every_generation() {
        let f = FnObjective::new(Bounds::uniform(5, -5.0, 5.0).unwrap(), |_: &[f64]| 7.0);
        let mut rng = RngStream::new(1);
        let r = run(&f, 5_000, RestartPolicy::RCMAES, &mut rng).unwrap();
        assert_eq!(r.evals_used, 5_000);
        assert!(r.restarts.len() >= 10);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn sphere_end_to_end() {
        let f = FnObjective::new(Bounds::uniform(10, -5.0, 5.0).unwrap(), |x: &[f64]| {
            x.iter().map(|v| v * v).sum()
        });
        let r = run(&f, 100_000, RestartPolicy::RCMAES, &mut RngStream::new(1)).unwrap();
        assert!(r.best_f < 1e-8, "best {}", r.best_f);
        assert!(r.evals_used <= 100_000);
    }

    #[test]
    fn budget_is_exact_for_all_policies() {
        let f = FnObjective::new(Bounds::uniform(3, -5.0, 5.0).unwrap(), |x: &[f64]| {
            x.iter().map(|v| v.abs().sqrt()).sum::<f64>() + 1.0
        });
        for policy in ["rcmaes-active", "fixed-standard", "ipop-active"] {
            for max in [4u64, 7, 101, 1234] {
                let r = run(&f, max, policy.parse().unwrap(), &mut RngStream::new(max)).unwrap();
                assert_eq!(r.evals_used, max, "{policy} {max}");
            }
        }
    }

    #[test]
    fn history_strictly_decreasing() {
        let f = FnObjective::new(Bounds::uniform(4, -3.0, 3.0).unwrap(), |x: &[f64]| {
            x.iter().map(|v| v * v - (6.0 * v).cos() + 1.0).sum()
        });
        let r = run(&f, 20_000, RestartPolicy::RCMAES, &mut RngStream::new(7)).unwrap();
        assert!(r.history.windows(2).all(|w| w[1].1 < w[0].1 && w[1].0 > w[0].0));
        assert_eq!(r.history.last().unwrap().1, r.best_f);
    }
}
