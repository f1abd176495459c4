//! Seeded CEC-style benchmark problems.
//!
//! A problem is a catalog base function composed with a shift `o`, an
//! orthogonal rotation `M` and a positive bias `f*`, optionally arranged as a
//! hybrid (coordinate blocks fed to different bases) or a composition
//! (distance-weighted mix of shifted components). The global optimum is
//! always at `x* = o` with value `f*`.

mod functions;
mod io;

pub use functions::{eval_base, BaseFunction};
pub use io::{load_suite, parse_suite, save_suite, write_suite};

use crate::error::{Error, Result};
use crate::model::{Bounds, Objective, RngStream};

pub const DEFAULT_LOWER: f64 = -100.0;
pub const DEFAULT_UPPER: f64 = 100.0;

/// One block of a hybrid function: its base and the share of coordinates it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridPart {
    pub base: BaseFunction,
    pub fraction: f64,
}

/// One component of a composition function.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionComponent {
    pub base: BaseFunction,
    pub shift: Vec<f64>,
    /// Width of the Gaussian distance weighting.
    pub sigma: f64,
    /// Offset added to this component; the first component's is zero.
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    Simple,
    Hybrid {
        parts: Vec<HybridPart>,
        /// Coordinate permutation applied after rotation.
        permutation: Vec<usize>,
    },
    Composition { components: Vec<CompositionComponent> },
}

impl Structure {
    pub fn tag(&self) -> &'static str {
        match self {
            Structure::Simple => "simple",
            Structure::Hybrid { .. } => "hybrid",
            Structure::Composition { .. } => "composition",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub base: BaseFunction,
    pub dim: usize,
    pub shift: Vec<f64>,
    /// Row-major orthogonal `D × D` matrix.
    pub rotation: Vec<f64>,
    pub bias: f64,
    pub structure: Structure,
}

impl ProblemSpec {
    /// Checks the structural invariants.
    pub fn validate(&self, bounds: &Bounds) -> Result<()> {
        let d = self.dim;
        if d == 0 || bounds.dim() != d || self.shift.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.shift.len(),
            });
        }
        if self.rotation.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: self.rotation.len(),
            });
        }
        if !(self.bias > 0.0 && self.bias.is_finite()) {
            return Err(Error::InvalidParameter(format!("bias must be positive, got {}", self.bias)));
        }
        let orth = orthogonality_error(&self.rotation, d);
        if orth > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "rotation is not orthogonal (‖MᵀM − I‖_F = {orth:e})"
            )));
        }
        if !bounds.contains(&self.shift) {
            return Err(Error::InvalidParameter("shift lies outside the bounds".into()));
        }
        match &self.structure {
            Structure::Simple => {}
            Structure::Hybrid { parts, permutation } => {
                if parts.is_empty() {
                    return Err(Error::InvalidParameter("hybrid without parts".into()));
                }
                let total: f64 = parts.iter().map(|p| p.fraction).sum();
                if (total - 1.0).abs() > 1e-9 || parts.iter().any(|p| p.fraction <= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "hybrid fractions must be positive and sum to 1, got {total}"
                    )));
                }
                let mut seen = vec![false; d];
                for &p in permutation {
                    if p >= d || seen[p] {
                        return Err(Error::InvalidParameter("hybrid permutation is not a permutation".into()));
                    }
                    seen[p] = true;
                }
                if permutation.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: permutation.len(),
                    });
                }
            }
            Structure::Composition { components } => {
                let Some(first) = components.first() else {
                    return Err(Error::InvalidParameter("composition without components".into()));
                };
                if first.shift != self.shift || first.bias != 0.0 {
                    return Err(Error::InvalidParameter(
                        "first composition component must sit at the problem shift with zero bias".into(),
                    ));
                }
                for c in components {
                    if c.shift.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: c.shift.len(),
                        });
                    }
                    if !(c.sigma.is_finite() && c.sigma > 0.0) || c.bias < 0.0 {
                        return Err(Error::InvalidParameter("composition sigma must be positive and bias non-negative".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Block sizes for a hybrid split: `ceil(p_k · D)` for all but the last part,
/// the remainder for the last, never exceeding `D` in total.
pub fn hybrid_block_sizes(parts: &[HybridPart], dim: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(parts.len());
    let mut used = 0;
    for (k, p) in parts.iter().enumerate() {
        let size = if k + 1 == parts.len() {
            dim - used
        } else {
            ((p.fraction * dim as f64).ceil() as usize).min(dim - used)
        };
        sizes.push(size);
        used += size;
    }
    sizes
}

/// A ready-to-evaluate benchmark problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub id: String,
    pub spec: ProblemSpec,
    pub bounds: Bounds,
}

impl ProblemInstance {
    pub fn new(id: impl Into<String>, spec: ProblemSpec, bounds: Bounds) -> Result<Self> {
        spec.validate(&bounds)?;
        Ok(Self {
            id: id.into(),
            spec,
            bounds,
        })
    }

    /// Simple problem on the default `[-100, 100]^D` box.
    pub fn simple(
        id: impl Into<String>,
        base: BaseFunction,
        shift: Vec<f64>,
        rotation: Vec<f64>,
        bias: f64,
    ) -> Result<Self> {
        let dim = shift.len();
        let spec = ProblemSpec {
            base,
            dim,
            shift,
            rotation,
            bias,
            structure: Structure::Simple,
        };
        Self::new(id, spec, Bounds::uniform(dim, DEFAULT_LOWER, DEFAULT_UPPER)?)
    }

    fn rotate(&self, v: &[f64]) -> Vec<f64> {
        let d = self.spec.dim;
        let m = &self.spec.rotation;
        (0..d)
            .map(|i| m[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn rotated_offset(&self, x: &[f64], center: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
        self.rotate(&diff)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let spec = &self.spec;
        let value = match &spec.structure {
            Structure::Simple => {
                let scale = spec.base.input_scale();
                let z: Vec<f64> = self
                    .rotated_offset(x, &spec.shift)
                    .into_iter()
                    .map(|v| v * scale)
                    .collect();
                spec.base.eval(&z)
            }
            Structure::Hybrid { parts, permutation } => {
                let z = self.rotated_offset(x, &spec.shift);
                let permuted: Vec<f64> = permutation.iter().map(|&p| z[p]).collect();
                let mut start = 0;
                let mut total = 0.0;
                for (part, size) in parts.iter().zip(hybrid_block_sizes(parts, spec.dim)) {
                    let scale = part.base.input_scale();
                    let block: Vec<f64> = permuted[start..start + size].iter().map(|v| v * scale).collect();
                    total += part.base.eval(&block);
                    start += size;
                }
                total
            }
            Structure::Composition { components } => self.evaluate_composition(x, components),
        };
        spec.bias + value
    }

    fn evaluate_composition(&self, x: &[f64], components: &[CompositionComponent]) -> f64 {
        let d = self.spec.dim as f64;
        let mut weights = Vec::with_capacity(components.len());
        for c in components {
            let dist2: f64 = x.iter().zip(&c.shift).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist2 == 0.0 {
                // Exactly on a component optimum: that component alone.
                let scale = c.base.input_scale();
                let z: Vec<f64> = self.rotated_offset(x, &c.shift).into_iter().map(|v| v * scale).collect();
                return c.base.eval(&z) + c.bias;
            }
            weights.push((-dist2 / (2.0 * d * c.sigma * c.sigma)).exp() / dist2.sqrt());
        }
        let total: f64 = weights.iter().sum();
        let n = components.len() as f64;
        components
            .iter()
            .zip(&weights)
            .map(|(c, w)| {
                let omega = if total > 0.0 { w / total } else { 1.0 / n };
                let scale = c.base.input_scale();
                let z: Vec<f64> = self.rotated_offset(x, &c.shift).into_iter().map(|v| v * scale).collect();
                omega * (c.base.eval(&z) + c.bias)
            })
            .sum()
    }
}

impl Objective for ProblemInstance {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        ProblemInstance::evaluate(self, x)
    }

    fn optimum_value(&self) -> Option<f64> {
        Some(self.spec.bias)
    }

    fn optimum_location(&self) -> Option<&[f64]> {
        Some(&self.spec.shift)
    }
}

/// Orthogonal matrix from modified Gram–Schmidt on a Gaussian matrix.
pub fn random_rotation(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.standard_normal()).collect())
            .collect();
        let mut ok = true;
        for k in 0..dim {
            for j in 0..k {
                let dot: f64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(k);
                for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                    *a -= dot * b;
                }
            }
            let norm = cols[k].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            cols[k].iter_mut().for_each(|v| *v /= norm);
        }
        if ok {
            let mut m = vec![0.0; dim * dim];
            for (j, col) in cols.iter().enumerate() {
                for (i, v) in col.iter().enumerate() {
                    m[i * dim + j] = *v;
                }
            }
            return m;
        }
    }
}

pub fn identity_rotation(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

/// `‖MᵀM − I‖_F`.
pub fn orthogonality_error(m: &[f64], dim: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let dot: f64 = (0..dim).map(|k| m[k * dim + i] * m[k * dim + j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            sum += (dot - target).powi(2);
        }
    }
    sum.sqrt()
}

const SIMPLE_BASES: [BaseFunction; 14] = BaseFunction::ALL;

const HYBRID_SETS: [[BaseFunction; 3]; 3] = [
    [BaseFunction::Zakharov, BaseFunction::Rosenbrock, BaseFunction::Rastrigin],
    [BaseFunction::Elliptic, BaseFunction::Schwefel, BaseFunction::BentCigar],
    [BaseFunction::HgBat, BaseFunction::Discus, BaseFunction::ExpandedSchaffer],
];

const COMPOSITION_SETS: [[BaseFunction; 3]; 3] = [
    [BaseFunction::Rastrigin, BaseFunction::Griewank, BaseFunction::Schwefel],
    [BaseFunction::Ackley, BaseFunction::HappyCat, BaseFunction::Sphere],
    [BaseFunction::Griewank, BaseFunction::Rastrigin, BaseFunction::Levy],
];

fn random_shift(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.uniform_in(0.8 * DEFAULT_LOWER, 0.8 * DEFAULT_UPPER))
        .collect()
}

/// Deterministic suite of `count` problems in dimension `dim`.
///
/// Problem `k` (0-based) is simple for `k mod 10 < 6`, hybrid for 6–7 and a
/// composition for 8–9. Shifts are uniform in the central 80% of
/// `[-100, 100]`, rotations are seeded Gram–Schmidt orthogonalizations and the
/// bias of problem `k` is `100·(k + 1)`.
pub fn generate_suite(seed: u64, dim: usize, count: usize) -> Result<Vec<ProblemInstance>> {
    if count == 0 {
        return Err(Error::InvalidParameter("suite must contain at least one problem".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let mut rng = RngStream::new(seed);
    let bounds = Bounds::uniform(dim, DEFAULT_LOWER, DEFAULT_UPPER)?;
    let mut simple_k = 0;
    let mut hybrid_k = 0;
    let mut comp_k = 0;
    let mut suite = Vec::with_capacity(count);
    for k in 0..count {
        let shift = random_shift(dim, &mut rng);
        let rotation = random_rotation(dim, &mut rng);
        let bias = 100.0 * (k + 1) as f64;
        let (base, structure) = match k % 10 {
            0..=5 => {
                let base = SIMPLE_BASES[simple_k % SIMPLE_BASES.len()];
                simple_k += 1;
                (base, Structure::Simple)
            }
            6 | 7 => {
                let set = HYBRID_SETS[hybrid_k % HYBRID_SETS.len()];
                hybrid_k += 1;
                let n_parts = set.len().min(dim);
                let fractions: &[f64] = match n_parts {
                    1 => &[1.0],
                    2 => &[0.5, 0.5],
                    _ => &[0.3, 0.3, 0.4],
                };
                let parts: Vec<HybridPart> = set[..n_parts]
                    .iter()
                    .zip(fractions)
                    .map(|(b, f)| HybridPart { base: *b, fraction: *f })
                    .collect();
                let mut permutation: Vec<usize> = (0..dim).collect();
                for i in (1..dim).rev() {
                    let j = rng.index(i + 1);
                    permutation.swap(i, j);
                }
                (parts[0].base, Structure::Hybrid { parts, permutation })
            }
            _ => {
                let set = COMPOSITION_SETS[comp_k % COMPOSITION_SETS.len()];
                comp_k += 1;
                let components = set
                    .iter()
                    .enumerate()
                    .map(|(i, b)| CompositionComponent {
                        base: *b,
                        shift: if i == 0 { shift.clone() } else { random_shift(dim, &mut rng) },
                        sigma: 10.0 * (i + 1) as f64,
                        bias: 100.0 * i as f64,
                    })
                    .collect();
                (set[0], Structure::Composition { components })
            }
        };
        let spec = ProblemSpec {
            base,
            dim,
            shift,
            rotation,
            bias,
            structure,
        };
        suite.push(ProblemInstance::new(format!("F{:02}", k + 1), spec, bounds.clone())?);
    }
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_identity_simple() {
        let mut rng = RngStream::new(1);
        for base in BaseFunction::ALL {
            let shift = random_shift(7, &mut rng);
            let rot = random_rotation(7, &mut rng);
            let p = ProblemInstance::simple("p", base, shift.clone(), rot, 300.0).unwrap();
            assert_eq!(p.evaluate(&shift), 300.0, "{base}");
        }
    }

    #[test]
    fn unit_scale_sphere() {
        let p = ProblemInstance::simple("s", BaseFunction::Sphere, vec![0.0; 5], identity_rotation(5), 100.0).unwrap();
        assert_eq!(p.evaluate(&[1.0, 0.0, 0.0, 0.0, 0.0]), 101.0);
    }

    #[test]
    fn rotation_does_not_move_the_minimum() {
        let mut rng = RngStream::new(2);
        let shift = random_shift(6, &mut rng);
        let a = ProblemInstance::simple("a", BaseFunction::Rastrigin, shift.clone(), identity_rotation(6), 100.0).unwrap();
        let b = ProblemInstance::simple("b", BaseFunction::Rastrigin, shift.clone(), random_rotation(6, &mut rng), 100.0).unwrap();
        assert_eq!(a.evaluate(&shift), b.evaluate(&shift));
        for _ in 0..1000 {
            let x: Vec<f64> = (0..6).map(|_| rng.uniform_in(-100.0, 100.0)).collect();
            assert!(b.evaluate(&x) >= 100.0);
        }
    }

    #[test]
    fn rotations_are_orthogonal() {
        let mut rng = RngStream::new(3);
        for d in [1, 2, 5, 10, 30, 50] {
            assert!(orthogonality_error(&random_rotation(d, &mut rng), d) < 1e-10);
        }
    }

    #[test]
    fn generated_suite_properties() {
        for d in [2, 3, 10] {
            let suite = generate_suite(5, d, 20).unwrap();
            for (k, p) in suite.iter().enumerate() {
                assert_eq!(p.spec.bias, 100.0 * (k + 1) as f64);
                let v = p.evaluate(&p.spec.shift);
                assert!((v - p.spec.bias).abs() < 1e-9, "{} ({}): {v}", p.id, p.spec.structure.tag());
                assert!(p.spec.shift.iter().all(|s| s.abs() <= 80.0));
                if let Structure::Hybrid { parts, permutation } = &p.spec.structure {
                    let mut sorted = permutation.clone();
                    sorted.sort();
                    assert_eq!(sorted, (0..d).collect::<Vec<_>>());
                    assert_eq!(hybrid_block_sizes(parts, d).iter().sum::<usize>(), d);
                }
            }
            let tags: Vec<&str> = suite.iter().map(|p| p.spec.structure.tag()).collect();
            assert!(tags.contains(&"hybrid") && tags.contains(&"composition"));
        }
    }

    #[test]
    fn biases_follow_index() {
        let suite = generate_suite(1, 4, 3).unwrap();
        let biases: Vec<f64> = suite.iter().map(|p| p.spec.bias).collect();
        assert_eq!(biases, vec![100.0, 200.0, 300.0]);
    }

    #[test]
    fn suite_is_deterministic() {
        assert_eq!(generate_suite(9, 5, 12).unwrap(), generate_suite(9, 5, 12).unwrap());
        assert_ne!(generate_suite(9, 5, 12).unwrap(), generate_suite(10, 5, 12).unwrap());
    }

    #[test]
    fn values_never_below_bias() {
        let mut rng = RngStream::new(6);
        for p in generate_suite(4, 5, 10).unwrap() {
            for _ in 0..2000 {
                let x: Vec<f64> = (0..5).map(|_| rng.uniform_in(-100.0, 100.0)).collect();
                let v = p.evaluate(&x);
                assert!(v > 0.0 && v >= p.spec.bias - 1e-9, "{}: {v}", p.id);
            }
        }
    }

    #[test]
    fn block_sizes() {
        let parts = vec![
            HybridPart { base: BaseFunction::Sphere, fraction: 0.3 },
            HybridPart { base: BaseFunction::Sphere, fraction: 0.3 },
            HybridPart { base: BaseFunction::Sphere, fraction: 0.4 },
        ];
        assert_eq!(hybrid_block_sizes(&parts, 10), vec![3, 3, 4]);
        assert_eq!(hybrid_block_sizes(&parts, 3), vec![1, 1, 1]);
        assert_eq!(hybrid_block_sizes(&parts, 30), vec![9, 9, 12]);
    }

    #[test]
    fn invalid_specs_rejected() {
        let bounds = Bounds::uniform(2, -100.0, 100.0).unwrap();
        let mut spec = ProblemSpec {
            base: BaseFunction::Sphere,
            dim: 2,
            shift: vec![0.0, 0.0],
            rotation: vec![1.0, 0.0, 0.0, 1.0],
            bias: 100.0,
            structure: Structure::Simple,
        };
        assert!(spec.validate(&bounds).is_ok());
        spec.rotation = vec![1.0, 1.0, 0.0, 1.0];
        assert!(spec.validate(&bounds).is_err());
        spec.rotation = identity_rotation(2);
        spec.bias = 0.0;
        assert!(spec.validate(&bounds).is_err());
        spec.bias = 1.0;
        spec.shift = vec![200.0, 0.0];
        assert!(spec.validate(&bounds).is_err());
    }
}
