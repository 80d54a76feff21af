//! Experiment plumbing: instance selection, parallel sweeps over methods and
//! `γ`, the audit report and rate-bound tables.

mod audit;
mod experiment;
mod spec;

pub use audit::{run_audit, AuditLine, AuditReport};
pub use experiment::{
    estimate_f_star, run_experiment, CellOutcome, ExperimentReport, REFERENCE_BUDGET_FACTOR,
};
pub use spec::{cell_label, ExperimentSpec, ProblemSource};

use crate::error::Result;
use crate::solvers::{theoretical_bound, BoundParams, Method};

/// Bound values for `k = 1..=k_max` under a constant budget `delta` and a
/// constant `l`. The fast gradient method's weights follow the exact
/// recursion `A⁺ = A + α(l, A)`.
pub fn bound_table(
    method: Method,
    l: f64,
    radius_sq: f64,
    gamma: f64,
    p: f64,
    delta: f64,
    k_max: usize,
) -> Result<Vec<(usize, f64)>> {
    let deltas = vec![delta; k_max + 1];
    let mut a_history = vec![0.0];
    for _ in 0..k_max {
        let a = *a_history.last().unwrap_or(&0.0);
        a_history.push(a + (1.0 + (1.0 + 4.0 * l * a).sqrt()) / (2.0 * l));
    }
    let params = BoundParams {
        l,
        radius_sq,
        gamma,
        p,
        deltas: &deltas,
        a_history: &a_history,
    };
    (1..=k_max)
        .map(|k| theoretical_bound(method, &params, k).map(|b| (k, b)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_gradient_table_matches_the_closed_form_at_zero_noise() {
        let table = bound_table(Method::AdapFgm, 1.0, 0.5, 2.0, 2.0, 0.0, 3).unwrap();
        assert_eq!(table.len(), 3);
        assert!((table[2].1 - 0.25).abs() < 1e-15);
        assert!(table.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn intermediate_table_example() {
        let table = bound_table(Method::Aibm, 1.0, 0.5, 2.0, 2.0, 0.0, 2).unwrap();
        assert!((table[1].1 - 0.5).abs() < 1e-15);
    }
}
