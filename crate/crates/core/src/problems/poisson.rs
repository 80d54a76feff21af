use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{kl_term, Geometry};
use crate::vector::check_dim;

use super::{Objective, Problem};

/// Poisson linear inverse problem `min_{x ≥ 0} KL(b, Ax)` with positive data.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonInstance {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub seed: u64,
}

impl PoissonInstance {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>, seed: u64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if let Some(i) = a.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Parse(format!("matrix entry {i} must be finite and nonnegative")));
        }
        if let Some(i) = b.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Parse(format!("data entry {i} must be finite and positive")));
        }
        for j in 0..a.ncols() {
            if a.column(j).iter().all(|v| *v == 0.0) {
                return Err(Error::Parse(format!("column {j} of the matrix is zero")));
            }
        }
        Ok(Self { a, b, seed })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    fn forward(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.cols(), x)?;
        if let Some(i) = x.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::DomainViolation { index: i, value: x[i] });
        }
        let ax = &self.a * DVector::from_column_slice(x);
        if let Some(i) = ax.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::DomainViolation { index: i, value: ax[i] });
        }
        Ok(ax)
    }

    /// `‖b‖₁`, the relative-smoothness constant under the log barrier.
    pub fn smoothness_constant(&self) -> f64 {
        self.b.iter().sum()
    }

    /// Scaled ones vector whose image matches the data in mean.
    pub fn balanced_start(&self) -> Vec<f64> {
        let a1: f64 = self.a.iter().sum::<f64>() / self.rows() as f64;
        let mean_b = self.smoothness_constant() / self.rows() as f64;
        vec![mean_b / a1; self.cols()]
    }
}

impl Objective for PoissonInstance {
    fn dimension(&self) -> usize {
        self.cols()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let ax = self.forward(x)?;
        Ok(self.b.iter().zip(ax.iter()).map(|(b, a)| kl_term(*b, *a)).sum())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ax = self.forward(x)?;
        let w = DVector::from_iterator(
            self.rows(),
            self.b.iter().zip(ax.iter()).map(|(b, a)| 1.0 - b / a),
        );
        Ok(self.a.tr_mul(&w).as_slice().to_vec())
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let ax = self.forward(x)?;
        let f = self.b.iter().zip(ax.iter()).map(|(b, a)| kl_term(*b, *a)).sum();
        let w = DVector::from_iterator(
            self.rows(),
            self.b.iter().zip(ax.iter()).map(|(b, a)| 1.0 - b / a),
        );
        Ok((f, self.a.tr_mul(&w).as_slice().to_vec()))
    }
}

/// Random instance with entries in `(0, 1]`: the matrix row-major, then the data.
pub fn generate_poisson(m: usize, n: usize, seed: u64) -> PoissonInstance {
    assert!(m > 0 && n > 0, "empty Poisson instance");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || 1.0 - rng.random::<f64>();
    let entries: Vec<f64> = (0..m * n).map(|_| draw()).collect();
    let b: Vec<f64> = (0..m).map(|_| draw()).collect();
    PoissonInstance::new(DMatrix::from_row_slice(m, n, &entries), b, seed)
        .expect("generated entries are positive")
}

pub fn poisson_problem(instance: PoissonInstance) -> Problem {
    let n = instance.cols();
    let l = instance.smoothness_constant();
    let x0 = instance.balanced_start();
    Problem::new("poisson", Arc::new(instance), Geometry::log_barrier(n), l, x0)
        .expect("balanced start is interior")
}
