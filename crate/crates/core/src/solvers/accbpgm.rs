//! Accelerated Bregman proximal gradient methods with scaling exponent `γ`.
//!
//! Both variants share [`accelerated_step`]; the adaptive one wraps it in a
//! doubling search on `L` that never lets `L` decrease.

use crate::error::Result;
use crate::geometry::Geometry;
use crate::oracle::{Oracle, OracleResponse};
use crate::problems::Problem;
use crate::vector::{dot, lerp, sub};

use super::{absorb, audits, model_holds, Run, SolverConfig, Trace};

/// `θ_k = γ / (k + γ)`.
pub(crate) fn theta(k: usize, gamma: f64) -> f64 {
    gamma / (k as f64 + gamma)
}

struct Step {
    y: Vec<f64>,
    z: Vec<f64>,
    x: Vec<f64>,
    resp: OracleResponse,
}

/// `y = mix(x, z)`, `z⁺ = prox(z, g(y), θ^{γ−1}·L)`, `x⁺ = mix(x, z⁺)`.
#[allow(clippy::too_many_arguments)]
fn accelerated_step(
    geometry: &Geometry,
    oracle: &mut Oracle<'_>,
    x: &[f64],
    z: &[f64],
    theta: f64,
    gamma: f64,
    l: f64,
    k: usize,
) -> Result<Step> {
    let y = lerp(x, z, theta);
    let resp = oracle.evaluate(&y, k)?;
    let z_next = geometry.linear_bregman_prox(z, &resp.g_delta, theta.powf(gamma - 1.0) * l)?;
    let x_next = lerp(x, &z_next, theta);
    Ok(Step {
        y,
        z: z_next,
        x: x_next,
        resp,
    })
}

struct State {
    x: Vec<f64>,
    z: Vec<f64>,
    fx: f64,
}

/// One-step inequality at the reference point `x0`:
/// `(f(x⁺) − f(x0))/θ^γ + L V(x0, z⁺) ≤ (1−θ)(f(x) − f(x0))/θ^γ + L V(x0, z) + δ/θ^γ`.
fn audit_one_step(
    run: &mut Run<'_>,
    old: &State,
    new: &State,
    theta: f64,
    l: f64,
    delta: f64,
) -> Result<()> {
    let geometry = run.problem.geometry();
    let x0 = &run.x0;
    let f0 = run.value(x0)?;
    let tg = theta.powf(run.cfg.gamma);
    let lhs = (new.fx - f0) / tg + l * geometry.divergence(x0, &new.z)?;
    let rhs = (1.0 - theta) * (old.fx - f0) / tg + l * geometry.divergence(x0, &old.z)? + delta / tg;
    let scale = 1.0 + lhs.abs().max(rhs.abs()) + (new.fx.abs() + f0.abs()) / tg;
    run.trace.audit(audits::ONE_STEP, rhs - lhs, 1e-9 * scale);
    Ok(())
}

fn audit_theta_rule(run: &mut Run<'_>, k: usize) {
    let gamma = run.cfg.gamma;
    let (t, t_next) = (theta(k, gamma), theta(k + 1, gamma));
    let lhs = (1.0 - t_next) / t_next.powf(gamma);
    let rhs = 1.0 / t.powf(gamma);
    run.trace.audit(audits::THETA_RULE, rhs - lhs, 1e-12 * rhs);
}

/// Fixed-`L` variant.
pub fn solve_accbpgm1(problem: &Problem, config: &SolverConfig) -> Result<Trace> {
    let mut run = Run::new(problem, config)?;
    let geometry = problem.geometry();
    let gamma = config.gamma;
    let l = run.l0;
    let fx0 = run.value(&run.x0)?;
    let mut state = State {
        x: run.x0.clone(),
        z: run.x0.clone(),
        fx: fx0,
    };
    run.record(0, state.fx, l, 0.0, 1.0, 0.0, f64::INFINITY);

    for k in 0..config.max_iters {
        let t = theta(k, gamma);
        let step = accelerated_step(geometry, &mut run.oracle, &state.x, &state.z, t, gamma, l, k)?;
        let next = State {
            fx: run.value(&step.x)?,
            x: step.x,
            z: step.z,
        };
        if run.auditing() {
            audit_one_step(&mut run, &state, &next, t, l, step.resp.delta)?;
            audit_theta_rule(&mut run, k);
        }
        state = next;
        run.deltas.push(step.resp.delta);
        let bound = run.bound(l, k + 1, &[]);
        run.record(k + 1, state.fx, l, step.resp.delta, t, 0.0, bound);
        if run.should_stop() {
            break;
        }
    }
    Ok(run.finish(state.x))
}

/// Adaptive variant: trial `L` starts at `max(L_k, (θ_{k+1}/θ_k)^γ)` and
/// doubles until `f_δ(x⁺) ≤ f_δ(y) + ⟨g, x⁺ − y⟩ + L V(x⁺, y) + δ`.
pub fn solve_accbpgm2(problem: &Problem, config: &SolverConfig) -> Result<Trace> {
    let mut run = Run::new(problem, config)?;
    let geometry = problem.geometry();
    let gamma = config.gamma;
    let mut l = run.l0;
    let fx0 = run.value(&run.x0)?;
    let mut state = State {
        x: run.x0.clone(),
        z: run.x0.clone(),
        fx: fx0,
    };
    run.record(0, state.fx, l, 0.0, 1.0, 0.0, f64::INFINITY);

    for k in 0..config.max_iters {
        let t = theta(k, gamma);
        let delta = run.oracle.delta(k);
        let mut trial = l.max((theta(k + 1, gamma) / t).powf(gamma));
        let step = loop {
            run.guard(k, trial)?;
            let attempt = absorb((|| {
                let step = accelerated_step(geometry, &mut run.oracle, &state.x, &state.z, t, gamma, trial, k)?;
                let at = run.oracle.evaluate(&step.x, k)?;
                let rhs = step.resp.f_delta
                    + dot(&step.resp.g_delta, &sub(&step.x, &step.y))
                    + trial * geometry.divergence(&step.x, &step.y)?
                    + delta;
                Ok((step, at.f_delta, rhs))
            })())?;
            if let Some((step, lhs, rhs)) = attempt {
                if model_holds(lhs, rhs) {
                    break step;
                }
            }
            trial *= 2.0;
        };
        let previous_l = l;
        l = trial;
        let next = State {
            fx: run.value(&step.x)?,
            x: step.x,
            z: step.z,
        };
        if run.auditing() {
            audit_one_step(&mut run, &state, &next, t, l, delta)?;
            audit_theta_rule(&mut run, k);
            run.trace.audit(audits::L_NONDECREASING, l - previous_l, 0.0);
            if run.exact() && run.l0 < 2.0 * problem.l_cert() {
                let cap = 2.0 * problem.l_cert();
                run.trace.audit(audits::L_BELOW_TWICE_CERT, cap - l, 0.0);
            }
        }
        run.audit_bracket(l);
        state = next;
        run.deltas.push(delta);
        let bound = run.bound(l, k + 1, &[]);
        run.record(k + 1, state.fx, l, delta, t, 0.0, bound);
        if run.should_stop() {
            break;
        }
    }
    Ok(run.finish(state.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{diagonal_quadratic, generate_poisson, poisson_problem, quadratic_problem, Objective};
    use crate::solvers::Method;
    use std::sync::Arc;

    #[test]
    fn theta_schedule() {
        assert_eq!(theta(0, 2.0), 1.0);
        assert_eq!(theta(2, 2.0), 0.5);
        for gamma in [1.1, 1.5, 2.0] {
            for k in 0..1000 {
                let (t, tn) = (theta(k, gamma), theta(k + 1, gamma));
                assert!((1.0 - tn) / tn.powf(gamma) <= 1.0 / t.powf(gamma) * (1.0 + 1e-12));
            }
        }
    }

    #[derive(Debug)]
    struct Constant(usize);

    impl Objective for Constant {
        fn dimension(&self) -> usize {
            self.0
        }
        fn value(&self, _: &[f64]) -> Result<f64> {
            Ok(3.0)
        }
        fn gradient(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.0; self.0])
        }
    }

    #[test]
    fn constant_objective_never_moves() {
        let p = Problem::new("constant", Arc::new(Constant(3)), Geometry::euclidean(3), 1.0, vec![0.1, 0.2, 0.3])
            .unwrap();
        let t = solve_accbpgm1(&p, &SolverConfig::new(Method::AccBpgm1).iters(10)).unwrap();
        assert_eq!(t.final_point, vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn variants_agree_when_the_first_trial_passes() {
        let h: Vec<f64> = (0..20).map(|i| 0.05 + i as f64 / 19.0 * 0.95).collect();
        let p = diagonal_quadratic(h, vec![0.7; 20]);
        let a = solve_accbpgm1(&p, &SolverConfig::new(Method::AccBpgm1).iters(100)).unwrap();
        let b = solve_accbpgm2(&p, &SolverConfig::new(Method::AccBpgm2).iters(100)).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.f, rb.f);
            assert_eq!(rb.l, 1.0);
        }
        assert_eq!(a.final_point, b.final_point);
    }

    #[test]
    fn audits_hold_on_quadratics_and_poisson() {
        let q = quadratic_problem(vec![0.3, -0.4, 1.2]);
        for method in [Method::AccBpgm1, Method::AccBpgm2] {
            let t = super::super::solve(&q, &SolverConfig::new(method).iters(60).assert_bounds(true)).unwrap();
            assert!(t.audits_pass(), "{method}: {:?}", t.audits);
            assert!(t.records[1..].iter().all(|r| r.gap <= r.bound + 1e-9));
        }
        let p = poisson_problem(generate_poisson(20, 10, 0));
        for gamma in [1.1, 1.5] {
            let cfg = SolverConfig::new(Method::AccBpgm2).gamma(gamma).iters(100).assert_bounds(true);
            let t = solve_accbpgm2(&p, &cfg).unwrap();
            let nondecreasing = t.audit_entry(audits::L_NONDECREASING).unwrap();
            assert!(nondecreasing.passed());
            assert!(t.records.windows(2).all(|w| w[1].l >= w[0].l));
        }
    }
}
