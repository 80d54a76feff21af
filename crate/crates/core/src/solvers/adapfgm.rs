//! Adaptive fast gradient method with an inexact oracle.
//!
//! Each iteration tries `L = L_k / 2, L_k, 2 L_k, …`. For every trial the
//! step size `α` solves `L α² = A + α`, and the whole tuple `(α, y, u, x)` is
//! recomputed before testing the descent model at `x` against `y`.

use crate::error::Result;
use crate::problems::Problem;
use crate::vector::{combine, dot, sub};

use super::{absorb, audits, model_holds, Run, SolverConfig, Trace};

/// Positive root of `L α² − α − A = 0`.
pub(crate) fn step_weight(l: f64, a: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * l * a).sqrt()) / (2.0 * l)
}

struct Trial {
    alpha: f64,
    u: Vec<f64>,
    x: Vec<f64>,
    slack: f64,
}

pub fn solve_adapfgm(problem: &Problem, config: &SolverConfig) -> Result<Trace> {
    let mut run = Run::new(problem, config)?;
    let geometry = problem.geometry();
    let x0 = run.x0.clone();
    let f_x0 = run.value(&x0)?;
    let mut x = x0.clone();
    let mut u = x0.clone();
    let mut a = 0.0_f64;
    let mut l = run.l0;
    let mut max_l = 0.0_f64;
    let mut fx = f_x0;
    let mut a_history = vec![0.0];
    run.record(0, fx, l, 0.0, 0.0, 0.0, f64::INFINITY);

    for k in 0..config.max_iters {
        let delta = run.oracle.delta(k);
        let mut trial_l = l / 2.0;
        let step = loop {
            run.guard(k, trial_l)?;
            let alpha = step_weight(trial_l, a);
            let a_next = a + alpha;
            let attempt = absorb((|| {
                let y = combine(alpha / a_next, &u, a / a_next, &x);
                let ry = run.oracle.evaluate(&y, k)?;
                let u_next = geometry.linear_bregman_prox(&u, &ry.g_delta, 1.0 / alpha)?;
                let x_next = combine(alpha / a_next, &u_next, a / a_next, &x);
                let rx = run.oracle.evaluate(&x_next, k)?;
                let rhs = ry.f_delta
                    + dot(&ry.g_delta, &sub(&x_next, &y))
                    + trial_l * geometry.divergence(&x_next, &y)?
                    + delta;
                let trial = Trial {
                    alpha,
                    u: u_next,
                    x: x_next,
                    slack: rhs - rx.f_delta,
                };
                Ok((trial, rx.f_delta, rhs))
            })())?;
            if let Some((t, lhs, rhs)) = attempt {
                if model_holds(lhs, rhs) {
                    break t;
                }
            }
            trial_l *= 2.0;
        };

        l = trial_l;
        max_l = max_l.max(l);
        let a_next = a + step.alpha;
        let f_next = run.value(&step.x)?;
        if run.auditing() {
            run.trace
                .audit(audits::DESCENT_MODEL, step.slack, 1e-12 * (1.0 + step.slack.abs()));
            // Telescoping inequality at x = x0.
            let lhs = a_next * f_next - a * fx + geometry.divergence(&x0, &step.u)?
                - geometry.divergence(&x0, &u)?;
            let rhs = step.alpha * f_x0 + 2.0 * delta * a_next;
            let scale = 1.0 + (a_next * f_next).abs() + (a * fx).abs() + rhs.abs();
            run.trace.audit(audits::TELESCOPING, rhs - lhs, 1e-9 * scale);
            // Growth of the accumulated weight.
            let floor = ((k + 2) as f64).powi(2) / (8.0 * max_l);
            run.trace.audit(audits::GROWTH, a_next - floor, 1e-12 * a_next);
        }
        run.audit_bracket(l);

        x = step.x;
        u = step.u;
        a = a_next;
        fx = f_next;
        a_history.push(a);
        run.deltas.push(delta);
        let bound = run.bound(max_l, k + 1, &a_history);
        run.record(k + 1, fx, l, delta, step.alpha, a, bound);
        if run.should_stop() {
            break;
        }
    }
    Ok(run.finish(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{diagonal_quadratic, quadratic_problem};
    use crate::solvers::Method;

    #[test]
    fn weight_solves_the_quadratic() {
        for (l, a) in [(1.0, 0.0), (2.0, 3.5), (0.01, 100.0)] {
            let alpha = step_weight(l, a);
            assert!((l * alpha * alpha - alpha - a).abs() < 1e-12 * (1.0 + a));
            assert!(alpha > 0.0);
        }
        assert_eq!(step_weight(1.0, 0.0), 1.0);
    }

    #[test]
    fn starts_from_the_initial_state() {
        let p = quadratic_problem(vec![1.0, 1.0]);
        let t = solve_adapfgm(&p, &SolverConfig::new(Method::AdapFgm).iters(0)).unwrap();
        let r = t.records[0];
        assert_eq!((r.theta_alpha, r.a), (0.0, 0.0));
        assert_eq!(t.final_point, vec![0.0, 0.0]);
    }

    #[test]
    fn counts_every_inner_trial() {
        let p = quadratic_problem(vec![1.0, -1.0]);
        // First trial L = 0.125 fails; 0.25, 0.5 fail; 1.0 passes.
        let t = solve_adapfgm(&p, &SolverConfig::new(Method::AdapFgm).l0(0.25).iters(1)).unwrap();
        let calls = t.records[1].oracle_calls;
        assert!(calls >= 3 * 2, "{calls}");
        assert_eq!(t.records[1].l, 1.0);
    }

    #[test]
    fn audits_hold_on_an_ill_conditioned_quadratic() {
        let h: Vec<f64> = (0..30).map(|i| 10f64.powf(-(i as f64) / 6.0)).collect();
        let p = diagonal_quadratic(h, vec![0.3; 30]);
        let cfg = SolverConfig::new(Method::AdapFgm).iters(300).assert_bounds(true);
        let t = solve_adapfgm(&p, &cfg).unwrap();
        assert!(t.audits_pass(), "{:?}", t.audits);
        for r in &t.records[1..] {
            assert!(r.gap <= r.bound + 1e-9, "k={} gap={} bound={}", r.k, r.gap, r.bound);
        }
    }
}
