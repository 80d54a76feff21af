use std::sync::Arc;

use crate::error::Result;
use crate::geometry::Geometry;
use crate::vector::check_dim;

use super::{Objective, Problem, ReferenceOptimum};

/// `f(x) = ½ Σ hᵢ (xᵢ − cᵢ)²` with `hᵢ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    curvature: Vec<f64>,
    center: Vec<f64>,
}

impl Quadratic {
    pub fn new(curvature: Vec<f64>, center: Vec<f64>) -> Self {
        assert_eq!(curvature.len(), center.len(), "curvature/center length");
        assert!(curvature.iter().all(|h| *h >= 0.0 && h.is_finite()));
        Self { curvature, center }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn max_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, h| m.max(*h))
    }
}

impl Objective for Quadratic {
    fn dimension(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.center.len(), x)?;
        Ok(0.5
            * x.iter()
                .zip(&self.center)
                .zip(&self.curvature)
                .map(|((xi, ci), hi)| hi * (xi - ci) * (xi - ci))
                .sum::<f64>())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.center.len(), x)?;
        Ok(x.iter()
            .zip(&self.center)
            .zip(&self.curvature)
            .map(|((xi, ci), hi)| hi * (xi - ci))
            .collect())
    }
}

/// `½‖x − c‖²` under the Euclidean geometry, started at the origin.
pub fn quadratic_problem(center: Vec<f64>) -> Problem {
    let n = center.len();
    diagonal_quadratic(vec![1.0; n], center).with_name("quadratic")
}

/// Separable quadratic with the given curvatures, started at the origin.
pub fn diagonal_quadratic(curvature: Vec<f64>, center: Vec<f64>) -> Problem {
    let n = center.len();
    let q = Quadratic::new(curvature, center.clone());
    let l = q.max_curvature();
    Problem::new("diagonal-quadratic", Arc::new(q), Geometry::euclidean(n), l, vec![0.0; n])
        .expect("quadratic problems are always well formed")
        .with_optimum(ReferenceOptimum {
            point: center,
            value: 0.0,
            provenance: "closed form".into(),
        })
}

/// Ill-conditioned quadratic: curvatures log-spaced over `[1e-7, 1]`,
/// center `1/√n` in every coordinate. Slow modes keep the error decaying
/// polynomially over hundreds of iterations.
pub fn spread_quadratic(n: usize) -> Problem {
    assert!(n >= 2, "spread quadratic needs at least two coordinates");
    let lo = 1e-7_f64.ln();
    let curvature = (0..n)
        .map(|i| (lo * (1.0 - i as f64 / (n - 1) as f64)).exp())
        .collect();
    let c = (1.0 / n as f64).sqrt();
    diagonal_quadratic(curvature, vec![c; n]).with_name("spread-quadratic")
}

impl Problem {
    pub(crate) fn with_name(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_and_gradient() {
        let p = quadratic_problem(vec![1.0, 2.0]);
        assert_eq!(p.value(&[0.0, 0.0]).unwrap(), 2.5);
        assert_eq!(p.gradient(&[0.0, 0.0]).unwrap(), vec![-1.0, -2.0]);
        assert_eq!(p.l_cert(), 1.0);
        assert_eq!(p.optimum().unwrap().value, 0.0);
    }

    #[test]
    fn spread_curvatures_cover_the_range() {
        let p = spread_quadratic(50);
        assert!((p.l_cert() - 1.0).abs() < 1e-15);
        let g = p.gradient(&vec![0.0; 50]).unwrap();
        let c = (1.0 / 50.0_f64).sqrt();
        assert!((g[0] + 1e-7 * c).abs() < 1e-20);
        assert!((g[49] + c).abs() < 1e-15);
    }
}
