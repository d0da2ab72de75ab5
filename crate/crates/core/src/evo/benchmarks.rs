//! Standard test functions defined on the unit hypercube.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Σ x², minimized at the origin corner. Range on `[0,1]^d` is `[0, d]`.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Rastrigin with each coordinate mapped from `[0,1]` to `[-5.12, 5.12]`;
/// minimum 0 at the cube center.
pub fn rastrigin(x: &[f64]) -> f64 {
    let a = 10.0;
    a * x.len() as f64
        + x.iter()
            .map(|v| {
                let z = 10.24 * v - 5.12;
                z * z - a * (2.0 * PI * z).cos()
            })
            .sum::<f64>()
}

/// Rosenbrock with coordinates mapped from `[0,1]` to `[-2.048, 2.048]`.
pub fn rosenbrock(x: &[f64]) -> f64 {
    let z: Vec<f64> = x.iter().map(|v| 4.096 * v - 2.048).collect();
    z.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Sphere,
    Rastrigin,
    Rosenbrock,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [
        Benchmark::Sphere,
        Benchmark::Rastrigin,
        Benchmark::Rosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Rastrigin => "rastrigin",
            Benchmark::Rosenbrock => "rosenbrock",
        }
    }

    pub fn function(self) -> fn(&[f64]) -> f64 {
        match self {
            Benchmark::Sphere => sphere,
            Benchmark::Rastrigin => rastrigin,
            Benchmark::Rosenbrock => rosenbrock,
        }
    }
}
