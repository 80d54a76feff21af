//! Built-in relatively smooth objectives bound to their natural geometry.
//!
//! A [`Problem`] couples an [`Objective`] with a [`Geometry`], a certified
//! relative-smoothness constant and a strictly feasible starting point. The
//! certificate can be probed empirically with
//! [`Problem::certify_relative_smoothness`].

mod dopt;
mod io;
mod poisson;
mod quadratic;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{sample_simplex, DomainKind, Geometry};
use crate::vector::{check_dim, dot, lerp, norm_inf, sub};

pub use dopt::{dopt_problem, generate_dopt, DOptInstance};
pub use io::{parse_instance, read_instance, write_instance, Instance};
pub use poisson::{generate_poisson, poisson_problem, PoissonInstance};
pub use quadratic::{diagonal_quadratic, quadratic_problem, spread_quadratic, Quadratic};

/// A differentiable convex objective.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(x)?, self.gradient(x)?))
    }
}

/// A known (or estimated) minimizer used for gaps and bound radii.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct Problem {
    name: String,
    objective: Arc<dyn Objective>,
    geometry: Geometry,
    l_cert: f64,
    x_feasible: Vec<f64>,
    optimum: Option<ReferenceOptimum>,
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        objective: Arc<dyn Objective>,
        geometry: Geometry,
        l_cert: f64,
        x_feasible: Vec<f64>,
    ) -> Result<Self> {
        let n = geometry.dimension();
        if objective.dimension() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: objective.dimension(),
            });
        }
        check_dim(n, &x_feasible)?;
        geometry.check_interior(&x_feasible)?;
        if !(l_cert >= 0.0 && l_cert.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "relative smoothness constant {l_cert} must be finite and nonnegative"
            )));
        }
        Ok(Self {
            name: name.into(),
            objective,
            geometry,
            l_cert,
            x_feasible,
            optimum: None,
        })
    }

    pub fn with_optimum(mut self, optimum: ReferenceOptimum) -> Self {
        self.optimum = Some(optimum);
        self
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Result<Self> {
        if geometry.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: geometry.dimension(),
            });
        }
        geometry.check_interior(&self.x_feasible)?;
        self.geometry = geometry;
        Ok(self)
    }

    /// Replaces the certified constant (used by negative-control audits).
    pub fn with_l_cert(mut self, l_cert: f64) -> Self {
        self.l_cert = l_cert;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dimension(&self) -> usize {
        self.geometry.dimension()
    }

    pub fn l_cert(&self) -> f64 {
        self.l_cert
    }

    pub fn x_feasible(&self) -> &[f64] {
        &self.x_feasible
    }

    pub fn optimum(&self) -> Option<&ReferenceOptimum> {
        self.optimum.as_ref()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.objective.gradient(x)
    }

    /// Random point of the domain, spread around the feasible start.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let x0 = &self.x_feasible;
        match self.geometry.domain().kind {
            DomainKind::FreeSpace => {
                let scale = 1.0 + norm_inf(x0);
                x0.iter()
                    .map(|v| v + scale * rng.random_range(-1.0..=1.0))
                    .collect()
            }
            DomainKind::PositiveOrthant => x0
                .iter()
                .map(|v| v * rng.random_range(-2.0_f64..1.0).exp())
                .collect(),
            DomainKind::UnitSimplex => sample_simplex(rng, x0.len()),
        }
    }

    /// Samples pairs and evaluates
    /// `f(x) + ⟨∇f(x), y − x⟩ + L·V(y, x) − f(y)`, which must stay nonnegative.
    pub fn certify_relative_smoothness(&self, l: f64, pairs: usize, seed: u64) -> SampledReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = SampledReport::new(pairs);
        for _ in 0..pairs {
            let x = self.sample_point(&mut rng);
            let y = self.sample_point(&mut rng);
            let slack = (|| -> Result<f64> {
                let (fx, gx) = self.objective.value_and_gradient(&x)?;
                let fy = self.objective.value(&y)?;
                let v = self.geometry.divergence(&y, &x)?;
                Ok(fx + dot(&gx, &sub(&y, &x)) + l * v - fy)
            })();
            report.observe(slack.unwrap_or(f64::NEG_INFINITY), 1e-9);
        }
        report
    }

    /// Midpoint convexity probe: `½f(x) + ½f(y) − f(½x + ½y)`.
    pub fn convexity_probe(&self, pairs: usize, seed: u64) -> SampledReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = SampledReport::new(pairs);
        for _ in 0..pairs {
            let x = self.sample_point(&mut rng);
            let y = self.sample_point(&mut rng);
            let mid = lerp(&x, &y, 0.5);
            let slack = (|| -> Result<f64> {
                Ok(0.5 * self.value(&x)? + 0.5 * self.value(&y)? - self.value(&mid)?)
            })();
            report.observe(slack.unwrap_or(f64::NEG_INFINITY), 1e-9);
        }
        report
    }
}

/// Violation count and worst slack from a sampled inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledReport {
    pub samples: usize,
    pub violations: usize,
    pub worst_slack: f64,
}

impl SampledReport {
    pub(crate) fn new(samples: usize) -> Self {
        Self {
            samples,
            violations: 0,
            worst_slack: f64::INFINITY,
        }
    }

    pub(crate) fn observe(&mut self, slack: f64, tolerance: f64) {
        self.worst_slack = self.worst_slack.min(slack);
        if !(slack >= -tolerance) {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_certificate_is_tight() {
        let p = quadratic_problem(vec![1.0, -2.0, 0.5]);
        assert!(p.certify_relative_smoothness(1.0, 500, 1).passed());
        let loose = p.certify_relative_smoothness(0.5, 500, 1);
        assert!(loose.violations > 0);
    }

    #[test]
    fn zero_constant_fails_on_curved_problems() {
        let p = poisson_problem(generate_poisson(8, 5, 2));
        let report = p.certify_relative_smoothness(0.0, 200, 3);
        assert!(report.violations > 0);
    }

    #[test]
    fn convexity_holds_for_builtins() {
        let problems = [
            quadratic_problem(vec![0.3; 4]),
            poisson_problem(generate_poisson(12, 6, 0)),
            dopt_problem(generate_dopt(3, 6, 11).unwrap()),
        ];
        for p in problems {
            let report = p.convexity_probe(300, 9);
            assert!(report.passed(), "{}: {:?}", p.name(), report);
        }
    }
}
