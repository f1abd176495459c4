//! Base-function catalog. Every function has minimum 0 at the origin of its
//! canonical coordinates `z`; functions whose textbook optimum lies elsewhere
//! (Rosenbrock, Schwefel, HappyCat, HGBat, Levy) are offset internally.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseFunction {
    Sphere,
    Elliptic,
    BentCigar,
    Discus,
    Rosenbrock,
    Rastrigin,
    Ackley,
    Griewank,
    Schwefel,
    Zakharov,
    Levy,
    ExpandedSchaffer,
    HappyCat,
    HgBat,
}

impl BaseFunction {
    pub const ALL: [BaseFunction; 14] = [
        BaseFunction::Sphere,
        BaseFunction::Elliptic,
        BaseFunction::BentCigar,
        BaseFunction::Discus,
        BaseFunction::Rosenbrock,
        BaseFunction::Rastrigin,
        BaseFunction::Ackley,
        BaseFunction::Griewank,
        BaseFunction::Schwefel,
        BaseFunction::Zakharov,
        BaseFunction::Levy,
        BaseFunction::ExpandedSchaffer,
        BaseFunction::HappyCat,
        BaseFunction::HgBat,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BaseFunction::Sphere => "sphere",
            BaseFunction::Elliptic => "elliptic",
            BaseFunction::BentCigar => "bent_cigar",
            BaseFunction::Discus => "discus",
            BaseFunction::Rosenbrock => "rosenbrock",
            BaseFunction::Rastrigin => "rastrigin",
            BaseFunction::Ackley => "ackley",
            BaseFunction::Griewank => "griewank",
            BaseFunction::Schwefel => "schwefel",
            BaseFunction::Zakharov => "zakharov",
            BaseFunction::Levy => "levy",
            BaseFunction::ExpandedSchaffer => "schaffer_f6",
            BaseFunction::HappyCat => "happycat",
            BaseFunction::HgBat => "hgbat",
        }
    }

    /// Coordinate scale mapping the `[-100, 100]` search box onto the
    /// function's customary domain.
    pub fn input_scale(self) -> f64 {
        match self {
            BaseFunction::Rosenbrock => 2.048 / 100.0,
            BaseFunction::Rastrigin | BaseFunction::Levy => 5.12 / 100.0,
            BaseFunction::Griewank => 600.0 / 100.0,
            BaseFunction::Schwefel => 1000.0 / 100.0,
            BaseFunction::HappyCat | BaseFunction::HgBat => 5.0 / 100.0,
            _ => 1.0,
        }
    }

    pub fn eval(self, z: &[f64]) -> f64 {
        if z.is_empty() {
            return 0.0;
        }
        let n = z.len() as f64;
        match self {
            BaseFunction::Sphere => z.iter().map(|v| v * v).sum(),
            BaseFunction::Elliptic => {
                if z.len() == 1 {
                    return z[0] * z[0];
                }
                let last = (z.len() - 1) as f64;
                z.iter()
                    .enumerate()
                    .map(|(i, v)| 10f64.powf(6.0 * i as f64 / last) * v * v)
                    .sum()
            }
            BaseFunction::BentCigar => {
                z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>()
            }
            BaseFunction::Discus => 1e6 * z[0] * z[0] + z[1..].iter().map(|v| v * v).sum::<f64>(),
            BaseFunction::Rosenbrock => {
                if z.len() == 1 {
                    return z[0] * z[0];
                }
                z.windows(2)
                    .map(|w| {
                        let (a, b) = (w[0] + 1.0, w[1] + 1.0);
                        100.0 * (a * a - b).powi(2) + (a - 1.0).powi(2)
                    })
                    .sum()
            }
            BaseFunction::Rastrigin => z
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
                .sum(),
            BaseFunction::Ackley => {
                let sq = z.iter().map(|v| v * v).sum::<f64>() / n;
                let cs = z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                (-20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E).max(0.0)
            }
            BaseFunction::Griewank => {
                let s = z.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let p: f64 = z
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                s - p + 1.0
            }
            BaseFunction::Schwefel => {
                let peak = schwefel_term(SCHWEFEL_OFFSET, n);
                z.iter()
                    .map(|v| peak - schwefel_term(v + SCHWEFEL_OFFSET, n))
                    .sum::<f64>()
                    .max(0.0)
            }
            BaseFunction::Zakharov => {
                let s1: f64 = z.iter().map(|v| v * v).sum();
                let s2: f64 = z.iter().enumerate().map(|(i, v)| 0.5 * (i + 1) as f64 * v).sum();
                s1 + s2 * s2 + s2.powi(4)
            }
            BaseFunction::Levy => {
                let w: Vec<f64> = z.iter().map(|v| 1.0 + v / 4.0).collect();
                let d = w.len() - 1;
                let head = (PI * w[0]).sin().powi(2);
                let mid: f64 = w[..d]
                    .iter()
                    .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
                    .sum();
                let tail = (w[d] - 1.0).powi(2) * (1.0 + (2.0 * PI * w[d]).sin().powi(2));
                head + mid + tail
            }
            BaseFunction::ExpandedSchaffer => {
                let d = z.len();
                (0..d)
                    .map(|i| schaffer_f6(z[i], z[(i + 1) % d]))
                    .sum()
            }
            BaseFunction::HappyCat => {
                let x: Vec<f64> = z.iter().map(|v| v - 1.0).collect();
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let s: f64 = x.iter().sum();
                (r2 - n).abs().powf(0.25) + (0.5 * r2 + s) / n + 0.5
            }
            BaseFunction::HgBat => {
                let x: Vec<f64> = z.iter().map(|v| v - 1.0).collect();
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let s: f64 = x.iter().sum();
                (r2 * r2 - s * s).abs().sqrt() + (0.5 * r2 + s) / n + 0.5
            }
        }
    }
}

/// Offset placing the modified Schwefel optimum at `z = 0`.
const SCHWEFEL_OFFSET: f64 = 420.968_746_227_503_6;

/// One coordinate of the modified Schwefel function, with quadratic penalties
/// outside `[-500, 500]`.
fn schwefel_term(z: f64, n: f64) -> f64 {
    if z.abs() <= 500.0 {
        z * z.abs().sqrt().sin()
    } else if z > 500.0 {
        let m = 500.0 - z % 500.0;
        m * m.abs().sqrt().sin() - (z - 500.0).powi(2) / (10_000.0 * n)
    } else {
        let m = z.abs() % 500.0 - 500.0;
        m * m.abs().sqrt().sin() - (z + 500.0).powi(2) / (10_000.0 * n)
    }
}

fn schaffer_f6(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    0.5 + (r2.sqrt().sin().powi(2) - 0.5) / (1.0 + 0.001 * r2).powi(2)
}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BaseFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        BaseFunction::ALL
            .iter()
            .copied()
            .find(|b| b.id() == s)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

/// Evaluates a catalog function by identifier.
pub fn eval_base(id: &str, z: &[f64]) -> Result<f64, Error> {
    Ok(id.parse::<BaseFunction>()?.eval(z))
}
