//! Shared vocabulary: box bounds, evaluation budgets, the objective contract,
//! per-run records and the seeded random stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]` in raw problem units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidParameter("bounds must have dimension >= 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidParameter(format!(
                    "bounds[{i}]: need finite lower < upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lower, upper]` in every coordinate.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    /// The normalized search cube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Maps raw coordinates into `[0, 1]^D`.
    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(x.iter()
            .enumerate()
            .map(|(i, v)| (v - self.lower[i]) / self.range(i))
            .collect())
    }

    /// Inverse of [`Bounds::normalize`].
    pub fn denormalize(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        Ok(u.iter()
            .enumerate()
            .map(|(i, v)| self.lower[i] + v * self.range(i))
            .collect())
    }
}

/// Evaluation budget: `used_evals` never exceeds `max_evals`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    max_evals: u64,
    used_evals: u64,
}

impl Budget {
    pub fn new(max_evals: u64) -> Result<Self> {
        if max_evals == 0 {
            return Err(Error::InvalidParameter("budget must be positive".into()));
        }
        Ok(Self {
            max_evals,
            used_evals: 0,
        })
    }

    pub fn max_evals(&self) -> u64 {
        self.max_evals
    }

    pub fn used_evals(&self) -> u64 {
        self.used_evals
    }

    pub fn remaining(&self) -> u64 {
        self.max_evals - self.used_evals
    }

    pub fn is_exhausted(&self) -> bool {
        self.used_evals >= self.max_evals
    }

    /// Elapsed budget fraction `t = used / max`, always in `[0, 1]`.
    pub fn fraction(&self) -> f64 {
        self.used_evals as f64 / self.max_evals as f64
    }

    pub fn consume(&mut self, n: u64) -> Result<()> {
        if n > self.remaining() {
            return Err(Error::ContractViolation(format!(
                "consuming {n} evaluations with only {} remaining",
                self.remaining()
            )));
        }
        self.used_evals += n;
        Ok(())
    }
}

/// A bound-constrained, deterministic objective to be minimized.
pub trait Objective {
    fn dim(&self) -> usize {
        self.bounds().dim()
    }

    fn bounds(&self) -> &Bounds;

    fn evaluate(&self, x: &[f64]) -> f64;

    /// Known global optimum value `f*`, when declared. Must be positive.
    fn optimum_value(&self) -> Option<f64> {
        None
    }

    /// Known global optimum location `x*`, when declared.
    fn optimum_location(&self) -> Option<&[f64]> {
        None
    }
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    bounds: Bounds,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnObjective<F> {
    pub fn new(bounds: Bounds, f: F) -> Self {
        Self { bounds, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// A restart event: the evaluation count at which the run converged and the
/// converged mean in raw coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub eval_index: u64,
    pub converged_mean: Vec<f64>,
}

/// Outcome of one seeded run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evals_used: u64,
    /// `(evals, best_f)` at every strict improvement of the incumbent.
    pub history: Vec<(u64, f64)>,
    pub restarts: Vec<RestartRecord>,
    /// Restart means drawn after the exclusion-sampling cap fired.
    pub capped_restart_draws: usize,
}

impl Default for RunResult {
    fn default() -> Self {
        Self::new()
    }
}

impl RunResult {
    pub fn new() -> Self {
        Self {
            best_x: Vec::new(),
            best_f: f64::INFINITY,
            evals_used: 0,
            history: Vec::new(),
            restarts: Vec::new(),
            capped_restart_draws: 0,
        }
    }

    /// Tracks the incumbent. Returns `true` when `f` strictly improves it.
    pub fn record_improvement(&mut self, evals: u64, f: f64, x: &[f64]) -> bool {
        debug_assert!(evals >= self.evals_used, "evaluation counter went backwards");
        self.evals_used = evals;
        if f < self.best_f {
            self.best_f = f;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
            self.history.push((evals, f));
            true
        } else {
            false
        }
    }

    /// Evaluations at which best-so-far first dropped to `target` or below.
    pub fn evals_to_reach(&self, target: f64) -> Option<u64> {
        self.history.iter().find(|(_, f)| *f <= target).map(|(e, _)| *e)
    }
}

/// Deterministic random stream owned by a single run.
///
/// ChaCha8 is portable and its output depends only on the seed and the call
/// sequence, so runs replay bitwise across platforms and thread schedules.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_boundaries() {
        let b = Bounds::new(vec![-1.0, 0.0, 5.0], vec![1.0, 10.0, 6.0]).unwrap();
        assert_eq!(b.normalize(b.lower()).unwrap(), vec![0.0; 3]);
        assert_eq!(b.normalize(b.upper()).unwrap(), vec![1.0; 3]);
        let b = Bounds::uniform(4, 0.0, 10.0).unwrap();
        assert_eq!(b.normalize(&[5.0; 4]).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn denormalize_boundaries() {
        let b = Bounds::new(vec![-3.0, 2.0], vec![7.0, 2.5]).unwrap();
        assert_eq!(b.denormalize(&[0.0, 0.0]).unwrap(), b.lower());
        assert_eq!(b.denormalize(&[1.0, 1.0]).unwrap(), b.upper());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = Bounds::unit(3);
        assert!(matches!(
            b.normalize(&[0.1, 0.2]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(b.denormalize(&[0.1; 4]).is_err());
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(Bounds::new(vec![1.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![], vec![]).is_err());
    }

    #[test]
    fn round_trip_on_random_points() {
        let mut rng = RngStream::new(7);
        let b = Bounds::new(vec![-100.0, -5.0, 1e-3], vec![100.0, 5.0, 2e-3]).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3)
                .map(|i| rng.uniform_in(b.lower()[i], b.upper()[i]))
                .collect();
            let back = b.denormalize(&b.normalize(&x).unwrap()).unwrap();
            for i in 0..3 {
                assert!((back[i] - x[i]).abs() < 1e-12 * b.range(i));
            }
        }
    }

    proptest! {
        #[test]
        fn normalize_round_trip(
            lo in -1e3f64..1e3,
            width in 1e-3f64..1e4,
            u in proptest::collection::vec(0.0f64..=1.0, 1..12),
        ) {
            let b = Bounds::uniform(u.len(), lo, lo + width).unwrap();
            let x = b.denormalize(&u).unwrap();
            let u2 = b.normalize(&x).unwrap();
            let x2 = b.denormalize(&u2).unwrap();
            for (a, c) in x.iter().zip(&x2) {
                prop_assert!((a - c).abs() <= 1e-12 * width.max(lo.abs()));
            }
        }
    }

    #[test]
    fn record_improvement_traces() {
        let mut r = RunResult::new();
        assert!(r.record_improvement(1, 5.0, &[0.0]));
        assert_eq!(r.best_f, 5.0);
        assert!(!r.record_improvement(2, 7.0, &[1.0]));
        assert_eq!(r.best_f, 5.0);
        assert_eq!(r.history.len(), 1);
        r.record_improvement(3, 3.0, &[2.0]);
        r.record_improvement(4, 4.0, &[3.0]);
        r.record_improvement(5, 1.0, &[4.0]);
        let values: Vec<f64> = r.history.iter().map(|h| h.1).collect();
        assert_eq!(values, vec![5.0, 3.0, 1.0]);
        assert_eq!(r.best_x, vec![4.0]);
        assert_eq!(r.evals_used, 5);
        assert_eq!(r.evals_to_reach(3.0), Some(3));
        assert_eq!(r.evals_to_reach(0.5), None);
    }

    #[test]
    fn budget_accounting() {
        let mut b = Budget::new(10).unwrap();
        assert_eq!(b.fraction(), 0.0);
        b.consume(4).unwrap();
        assert_eq!(b.remaining(), 6);
        assert!(b.consume(7).is_err());
        b.consume(6).unwrap();
        assert!(b.is_exhausted());
        assert_eq!(b.fraction(), 1.0);
        assert!(Budget::new(0).is_err());
    }

    #[test]
    fn rng_stream_replays() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
        let mut c = RngStream::new(43);
        assert_ne!(RngStream::new(42).uniform(), c.uniform());
    }
}
