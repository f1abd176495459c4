//! One generation-stepped CMA-ES instance with optional active covariance
//! adaptation. All arithmetic happens in the normalized cube `[0, 1]^D`.
//!
//! Strategy parameters follow the standard (a)CMA-ES defaults and are a pure
//! function of `(D, λ, mode)`, so the population can be resized between any
//! two generations without touching the distribution state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mvn_sample, sym_eigen, EigenDecomp, SymMatrix};
use crate::model::RngStream;

/// Covariance update flavour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmaMode {
    /// Rank-one plus rank-μ update over the best μ offspring.
    Standard,
    /// Additionally subtracts the worst offspring's directions with negative weights.
    Active,
}

impl CmaMode {
    pub fn name(self) -> &'static str {
        match self {
            CmaMode::Standard => "standard",
            CmaMode::Active => "active",
        }
    }
}

/// Strategy parameters for one population size.
#[derive(Clone, Debug, PartialEq)]
pub struct CmaParams {
    pub dim: usize,
    pub lambda: usize,
    pub mu: usize,
    pub mode: CmaMode,
    /// μ positive weights, non-increasing, summing to one.
    pub weights_pos: Vec<f64>,
    /// λ − μ non-positive weights; all zero in standard mode.
    pub weights_neg: Vec<f64>,
    pub mu_eff: f64,
    pub c1: f64,
    /// Rank-μ rate; equals the positive-part rate since the positive weights sum to one.
    pub c_mu: f64,
    /// Effective rate of the negative (active) part, `c_mu · Σ|w⁻|`.
    pub c_mu_neg: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    /// Approximation of `E‖N(0, I)‖`.
    pub chi_n: f64,
}

impl CmaParams {
    pub fn new(dim: usize, lambda: usize, mode: CmaMode) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if lambda < 2 {
            return Err(Error::InvalidParameter(format!(
                "population size must be >= 2, got {lambda}"
            )));
        }
        let n = dim as f64;
        let mu = lambda / 2;

        let mu_half = mu as f64 + 0.5;
        let raw_pos: Vec<f64> = (1..=mu).map(|i| mu_half.ln() - (i as f64).ln()).collect();
        let pos_sum: f64 = raw_pos.iter().sum();
        let weights_pos: Vec<f64> = raw_pos.iter().map(|w| w / pos_sum).collect();
        let mu_eff = 1.0 / weights_pos.iter().map(|w| w * w).sum::<f64>();

        let c1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));

        let (weights_neg, c_mu_neg) = match mode {
            CmaMode::Standard => (vec![0.0; lambda - mu], 0.0),
            CmaMode::Active => {
                let half = ((lambda as f64) + 1.0) / 2.0;
                let raw_neg: Vec<f64> = ((mu + 1)..=lambda)
                    .map(|i| (half.ln() - (i as f64).ln()).min(0.0))
                    .collect();
                let neg_abs: f64 = raw_neg.iter().map(|w| w.abs()).sum();
                if neg_abs == 0.0 || c_mu == 0.0 {
                    (vec![0.0; lambda - mu], 0.0)
                } else {
                    let neg_sq: f64 = raw_neg.iter().map(|w| w * w).sum();
                    let mu_eff_neg = neg_abs * neg_abs / neg_sq;
                    let alpha_mu = 1.0 + c1 / c_mu;
                    let alpha_mu_eff = 1.0 + 2.0 * mu_eff_neg / (mu_eff + 2.0);
                    let alpha_pos_def = (1.0 - c1 - c_mu) / (n * c_mu);
                    let total = alpha_mu.min(alpha_mu_eff).min(alpha_pos_def);
                    let w: Vec<f64> = raw_neg.iter().map(|w| w * total / neg_abs).collect();
                    let abs_sum: f64 = w.iter().map(|v| v.abs()).sum();
                    (w, c_mu * abs_sum)
                }
            }
        };

        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

        Ok(Self {
            dim,
            lambda,
            mu,
            mode,
            weights_pos,
            weights_neg,
            mu_eff,
            c1,
            c_mu,
            c_mu_neg,
            c_sigma,
            d_sigma,
            c_c,
            chi_n,
        })
    }

    /// Parameters for a new population size; the distribution state is unaffected.
    pub fn resized(&self, new_lambda: usize) -> Result<Self> {
        if new_lambda == self.lambda {
            return Ok(self.clone());
        }
        Self::new(self.dim, new_lambda, self.mode)
    }

    /// Weight of the `rank`-th best offspring (0-based).
    fn weight(&self, rank: usize) -> f64 {
        if rank < self.mu {
            self.weights_pos[rank]
        } else {
            self.weights_neg[rank - self.mu]
        }
    }

    fn weight_sum(&self) -> f64 {
        self.weights_pos.iter().sum::<f64>() + self.weights_neg.iter().sum::<f64>()
    }
}

/// Step-size multiplier `exp((c_σ/d_σ)(‖p_σ‖/χ_n − 1))`.
pub fn csa_factor(p_sigma_norm: f64, params: &CmaParams) -> f64 {
    ((params.c_sigma / params.d_sigma) * (p_sigma_norm / params.chi_n - 1.0)).exp()
}

/// Offspring of one generation and, once evaluated, their fitnesses.
#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub offspring: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
}

impl Generation {
    pub fn len(&self) -> usize {
        self.offspring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offspring.is_empty()
    }

    /// Indices ordered by ascending fitness; ties keep sample order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.fitness.len()).collect();
        idx.sort_by(|&a, &b| self.fitness[a].total_cmp(&self.fitness[b]));
        idx
    }
}

/// Search distribution `N(m, σ²C)` plus evolution paths.
#[derive(Clone, Debug, PartialEq)]
pub struct CmaState {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub cov: SymMatrix,
    pub p_c: Vec<f64>,
    pub p_sigma: Vec<f64>,
    pub generation: u64,
    eigen: EigenDecomp,
    eigen_stale: bool,
}

impl CmaState {
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        let dim = mean.len();
        let cov = SymMatrix::identity(dim);
        let eigen = sym_eigen(&cov)?;
        Ok(Self {
            mean,
            sigma,
            cov,
            p_c: vec![0.0; dim],
            p_sigma: vec![0.0; dim],
            generation: 0,
            eigen,
            eigen_stale: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Current decomposition of `C`, recomputed if the last update invalidated it.
    pub fn eigen(&mut self) -> Result<&EigenDecomp> {
        if self.eigen_stale {
            self.eigen = sym_eigen(&self.cov)?;
            self.eigen_stale = false;
        }
        Ok(&self.eigen)
    }

    /// Samples `params.lambda` offspring from `N(m, σ²C)`.
    pub fn ask(&mut self, params: &CmaParams, rng: &mut RngStream) -> Result<Generation> {
        self.eigen()?;
        let offspring = (0..params.lambda)
            .map(|_| mvn_sample(&self.mean, self.sigma, &self.eigen, rng))
            .collect();
        Ok(Generation {
            offspring,
            fitness: Vec::new(),
        })
    }

    /// Updates mean, paths, step size and covariance from an evaluated generation.
    pub fn tell(&mut self, params: &CmaParams, generation: &Generation) -> Result<()> {
        let n = self.dim();
        let lambda = generation.len();
        if lambda != params.lambda || generation.fitness.len() != lambda {
            return Err(Error::ContractViolation(format!(
                "generation has {lambda} offspring and {} fitnesses, parameters expect {}",
                generation.fitness.len(),
                params.lambda
            )));
        }
        if let Some(bad) = generation.fitness.iter().find(|f| !f.is_finite()) {
            return Err(Error::ContractViolation(format!("non-finite fitness {bad}")));
        }
        self.eigen()?;
        let order = generation.ranking();

        let displacements: Vec<Vec<f64>> = order
            .iter()
            .map(|&k| {
                generation.offspring[k]
                    .iter()
                    .zip(&self.mean)
                    .map(|(x, m)| (x - m) / self.sigma)
                    .collect()
            })
            .collect();

        let mut new_mean = vec![0.0; n];
        let mut y_w = vec![0.0; n];
        for (rank, &k) in order.iter().take(params.mu).enumerate() {
            let w = params.weights_pos[rank];
            for i in 0..n {
                new_mean[i] += w * generation.offspring[k][i];
                y_w[i] += w * displacements[rank][i];
            }
        }

        let cs = params.c_sigma;
        let z_w = self.eigen.inv_sqrt_mul(&y_w);
        let ps_coeff = (cs * (2.0 - cs) * params.mu_eff).sqrt();
        for i in 0..n {
            self.p_sigma[i] = (1.0 - cs) * self.p_sigma[i] + ps_coeff * z_w[i];
        }
        let ps_norm = norm(&self.p_sigma);

        let gen_count = (self.generation + 1) as f64;
        let bias_correction = (1.0 - (1.0 - cs).powf(2.0 * gen_count)).sqrt();
        let h_sigma = ps_norm / bias_correction < (1.4 + 2.0 / (n as f64 + 1.0)) * params.chi_n;

        let cc = params.c_c;
        let pc_coeff = if h_sigma {
            (cc * (2.0 - cc) * params.mu_eff).sqrt()
        } else {
            0.0
        };
        for i in 0..n {
            self.p_c[i] = (1.0 - cc) * self.p_c[i] + pc_coeff * y_w[i];
        }

        let new_sigma = self.sigma * csa_factor(ps_norm, params);
        if !(new_sigma.is_finite() && new_sigma > 0.0) {
            return Err(Error::Numerical(format!("step size degenerated to {new_sigma}")));
        }

        self.update_covariance(params, &displacements, h_sigma);

        self.mean = new_mean;
        self.sigma = new_sigma;
        self.generation += 1;
        Ok(())
    }

    fn update_covariance(&mut self, params: &CmaParams, displacements: &[Vec<f64>], h_sigma: bool) {
        let n = self.dim();
        let (c1, c_mu, cc) = (params.c1, params.c_mu, params.c_c);
        let stall = if h_sigma { 0.0 } else { c1 * cc * (2.0 - cc) };
        let decay = 1.0 + stall - c1 - c_mu * params.weight_sum();

        // Negative weights are rescaled by D / ‖C^{-1/2} y‖² so that the
        // subtracted directions have bounded Mahalanobis length.
        let mut coeffs = Vec::with_capacity(displacements.len());
        for (rank, y) in displacements.iter().enumerate() {
            let mut w = params.weight(rank);
            if w < 0.0 {
                let z = self.eigen.inv_sqrt_mul(y);
                let z2: f64 = z.iter().map(|v| v * v).sum();
                w = if z2 > 0.0 { w * n as f64 / z2 } else { 0.0 };
            }
            coeffs.push(c_mu * w);
        }

        let mut next = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut v = decay * self.cov.get(i, j) + c1 * self.p_c[i] * self.p_c[j];
                for (y, c) in displacements.iter().zip(&coeffs) {
                    if *c != 0.0 {
                        v += c * y[i] * y[j];
                    }
                }
                next.set(i, j, v);
                next.set(j, i, v);
            }
        }
        self.cov = next.enforce_symmetry();
        self.eigen_stale = true;
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(f_max, f_min, f_mean)` of one population.
pub fn population_spread(fitness: &[f64]) -> Result<(f64, f64, f64)> {
    if fitness.is_empty() {
        return Err(Error::ContractViolation("empty population".into()));
    }
    if fitness.iter().any(|f| !f.is_finite()) {
        return Err(Error::ContractViolation("non-finite fitness in population".into()));
    }
    let max = fitness.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = fitness.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = fitness.iter().sum::<f64>() / fitness.len() as f64;
    Ok((max, min, mean))
}
