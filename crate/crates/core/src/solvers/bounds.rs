use crate::error::{Error, Result};

use super::Method;

/// Inputs to the rate bounds. `radius_sq` is `V(x*, x0)` (or an upper bound
/// `R0`); `deltas[i]` is the budget used at iteration `i`; `a_history[i]` is
/// the accumulated weight `A_i` of the fast gradient method.
#[derive(Debug, Clone, Copy)]
pub struct BoundParams<'a> {
    pub l: f64,
    pub radius_sq: f64,
    pub gamma: f64,
    pub p: f64,
    pub deltas: &'a [f64],
    pub a_history: &'a [f64],
}

fn max_delta(deltas: &[f64], upto: usize) -> Result<f64> {
    if deltas.len() < upto {
        return Err(Error::InvalidConfig(format!(
            "bound needs {upto} budget values, have {}",
            deltas.len()
        )));
    }
    Ok(deltas[..upto].iter().fold(0.0, |m, d| m.max(*d)))
}

/// Worst-case gap guaranteed after `k` iterations of `method`.
///
/// Returns `+inf` where the bound says nothing (before the first step).
pub fn theoretical_bound(method: Method, params: &BoundParams<'_>, k: usize) -> Result<f64> {
    let BoundParams {
        l,
        radius_sq: r,
        gamma,
        p,
        deltas,
        a_history,
    } = *params;
    let n = k as f64;
    match method {
        // Non-accelerated baseline: L·V/k plus the per-step error.
        Method::Bpg | Method::BpgAdapt => {
            if k == 0 {
                return Ok(f64::INFINITY);
            }
            Ok(l * r / n + max_delta(deltas, k)?)
        }
        Method::AdapFgm => {
            if k == 0 {
                return Ok(f64::INFINITY);
            }
            if a_history.len() <= k || deltas.len() < k {
                return Err(Error::InvalidConfig(format!(
                    "fast gradient bound at N = {k} needs A_0..A_N and δ_0..δ_(N-1)"
                )));
            }
            let a_n = a_history[k];
            let accumulated: f64 = (0..k).map(|j| a_history[j + 1] * deltas[j]).sum();
            Ok(8.0 * l * r / ((n + 1.0) * (n + 1.0)) + 2.0 * accumulated / a_n)
        }
        Method::AccBpgm1 => {
            if k == 0 {
                return Ok(f64::INFINITY);
            }
            let shrink = (gamma / (gamma + n - 1.0)).powf(gamma);
            Ok(shrink * l * r + max_delta(deltas, k)? * n)
        }
        Method::AccBpgm2 => {
            if k == 0 {
                return Ok(f64::INFINITY);
            }
            let shrink = (gamma / (gamma + n - 1.0)).powf(gamma);
            Ok(2.0 * l * shrink * r + (2.0 * (n - 1.0) * l + 1.0) * max_delta(deltas, k)?)
        }
        Method::Aibm | Method::AibmVarP => {
            let exponent = (p - 1.0) * (gamma - 1.0) + 1.0;
            Ok(16.0 * r * l / (n + 2.0).powf(exponent)
                + (n + 2.0 * p).powf(p - 1.0) * max_delta(deltas, k + 1)?)
        }
    }
}

/// Name-based lookup for front ends.
pub fn theoretical_bound_by_name(method: &str, params: &BoundParams<'_>, k: usize) -> Result<f64> {
    theoretical_bound(method.parse()?, params, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params<'a>(l: f64, r: f64, gamma: f64, p: f64, d: &'a [f64], a: &'a [f64]) -> BoundParams<'a> {
        BoundParams {
            l,
            radius_sq: r,
            gamma,
            p,
            deltas: d,
            a_history: a,
        }
    }

    #[test]
    fn worked_examples() {
        let zeros = [0.0; 8];
        let a = [0.0, 1.0, 2.0, 3.0];
        let fgm = theoretical_bound(Method::AdapFgm, &params(1.0, 0.5, 2.0, 2.0, &zeros, &a), 3).unwrap();
        assert_eq!(fgm, 0.25);
        let acc = theoretical_bound(Method::AccBpgm1, &params(1.0, 0.5, 2.0, 2.0, &zeros, &[]), 1).unwrap();
        assert_eq!(acc, 0.5);
        let aibm = theoretical_bound(Method::Aibm, &params(1.0, 0.5, 2.0, 2.0, &zeros, &[]), 2).unwrap();
        assert_eq!(aibm, 0.5);
    }

    #[test]
    fn error_terms() {
        let d = [0.1, 0.2, 0.05];
        let acc2 = theoretical_bound(Method::AccBpgm2, &params(1.0, 0.0, 2.0, 2.0, &d, &[]), 3).unwrap();
        assert!((acc2 - 5.0 * 0.2).abs() < 1e-15);
        let a = [0.0, 1.0, 3.0, 6.0];
        let fgm = theoretical_bound(Method::AdapFgm, &params(1.0, 0.0, 2.0, 2.0, &d, &a), 3).unwrap();
        assert!((fgm - 2.0 * (0.1 + 0.6 + 0.3) / 6.0).abs() < 1e-15);
        let aibm = theoretical_bound(Method::Aibm, &params(1.0, 0.0, 2.0, 1.5, &d, &[]), 2).unwrap();
        assert!((aibm - 5.0_f64.sqrt() * 0.2).abs() < 1e-15);
    }

    #[test]
    fn missing_history_and_unknown_names() {
        let r = theoretical_bound(Method::AdapFgm, &params(1.0, 1.0, 2.0, 2.0, &[], &[]), 2);
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
        let r = theoretical_bound_by_name("heavy-ball", &params(1.0, 1.0, 2.0, 2.0, &[], &[]), 2);
        assert!(matches!(r, Err(Error::UnknownMethod(_))));
        assert!(theoretical_bound(Method::AccBpgm1, &params(1.0, 1.0, 2.0, 2.0, &[], &[]), 0)
            .unwrap()
            .is_infinite());
    }
}
