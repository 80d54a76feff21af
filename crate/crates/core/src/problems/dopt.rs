use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::vector::check_dim;

use super::{Objective, Problem};

/// Smallest accepted ratio between squared Cholesky pivots.
const PIVOT_RATIO_FLOOR: f64 = 1e-12;

/// D-optimal design: `min_{x ∈ Δ} −ln det Σ xᵢ vᵢ vᵢᵀ`.
///
/// Design vectors are stored as the columns of an `m × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DOptInstance {
    pub vectors: DMatrix<f64>,
    pub seed: u64,
}

impl DOptInstance {
    pub fn new(vectors: DMatrix<f64>, seed: u64) -> Result<Self> {
        let (m, n) = vectors.shape();
        if m == 0 || n <= m {
            return Err(Error::InvalidConfig(format!(
                "D-optimal design needs more vectors than dimensions (m = {m}, n = {n})"
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("design vectors must be finite".into()));
        }
        let inst = Self { vectors, seed };
        inst.factor(&vec![1.0 / n as f64; n])?;
        Ok(inst)
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn count(&self) -> usize {
        self.vectors.ncols()
    }

    fn factor(&self, x: &[f64]) -> Result<Cholesky<f64, Dyn>> {
        check_dim(self.count(), x)?;
        if let Some(i) = x.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::DomainViolation { index: i, value: x[i] });
        }
        let mut scaled = self.vectors.clone();
        for (j, w) in x.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*w);
        }
        let h = scaled * self.vectors.transpose();
        let chol = Cholesky::new(h).ok_or(Error::SingularDesign { ratio: 0.0 })?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d * d), hi.max(d * d)));
        let ratio = lo / hi;
        if !(ratio >= PIVOT_RATIO_FLOOR) {
            return Err(Error::SingularDesign { ratio });
        }
        Ok(chol)
    }
}

impl Objective for DOptInstance {
    fn dimension(&self) -> usize {
        self.count()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let chol = self.factor(x)?;
        Ok(-2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    /// `∂f/∂xᵢ = −vᵢᵀ H⁻¹ vᵢ = −‖L⁻¹vᵢ‖²`.
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.value_and_gradient(x).map(|(_, g)| g)
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let chol = self.factor(x)?;
        let l = chol.l();
        let f = -2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let y = l
            .solve_lower_triangular(&self.vectors)
            .ok_or(Error::SingularDesign { ratio: 0.0 })?;
        let g = y.column_iter().map(|c| -c.norm_squared()).collect();
        Ok((f, g))
    }
}

/// Design vectors with entries `U(−1, 1)`, generated one vector at a time.
pub fn generate_dopt(m: usize, n: usize, seed: u64) -> Result<DOptInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    DOptInstance::new(DMatrix::from_column_slice(m, n, &entries), seed)
}

/// Log-barrier geometry on the simplex with constant 1, started at the barycenter.
pub fn dopt_problem(instance: DOptInstance) -> Problem {
    let n = instance.count();
    Problem::new(
        "dopt",
        Arc::new(instance),
        Geometry::log_barrier_simplex(n),
        1.0,
        vec![1.0 / n as f64; n],
    )
    .expect("barycenter is interior")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_example() {
        // vectors e1, e2 and e1 + e2 with weights (1/2, 1/2, 0)
        let v = DMatrix::from_column_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let inst = DOptInstance::new(v, 0).unwrap();
        let x = [0.5, 0.5, 0.0];
        let f = inst.value(&x).unwrap();
        assert!((f - 2.0 * 2.0_f64.ln()).abs() < 1e-14);
        let g = inst.gradient(&x).unwrap();
        assert!((g[0] + 2.0).abs() < 1e-14 && (g[1] + 2.0).abs() < 1e-14);
        assert!((g[2] + 4.0).abs() < 1e-13);
    }

    #[test]
    fn gradient_is_negative_and_matches_finite_differences() {
        let inst = generate_dopt(3, 7, 4).unwrap();
        let x = vec![1.0 / 7.0; 7];
        let g = inst.gradient(&x).unwrap();
        assert!(g.iter().all(|v| *v < 0.0));
        // Euler identity for a degree −m log-homogeneous objective.
        let euler: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((euler + 3.0).abs() < 1e-12);
        for j in 0..7 {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (inst.value(&xp).unwrap() - inst.value(&xm).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6, "{j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let v = DMatrix::from_column_slice(2, 3, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]);
        assert!(matches!(DOptInstance::new(v, 0), Err(Error::SingularDesign { .. })));
        assert!(matches!(generate_dopt(3, 3, 0), Err(Error::InvalidConfig(_))));
    }
}
