//! Adaptive intermediate Bregman method and its variable-`p` wrapper.
//!
//! The estimating function is `Ψ_k(x) = V(x, c) + Σ α_i (f_δ(x_i) + ⟨g_i, x − x_i⟩)`
//! with `c` the stage start, so its minimizer is the linear-model prox of the
//! aggregated gradient `s = Σ α_i g_i` around `c`. Weights follow
//! `α_k = (1/L_k)(1 + k/2p)^{(p−1)(γ−1)}` and `B_k = (L_k α_k^γ)^{1/(γ−1)}`.

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::vector::{axpy, dot, lerp, sub};

use super::{absorb, audits, model_holds, Run, SolverConfig, Trace};

/// `(α, B)` for local iteration `k` at trial constant `l`.
pub(crate) fn weights(l: f64, k: usize, p: f64, gamma: f64) -> (f64, f64) {
    let alpha = (1.0 + k as f64 / (2.0 * p)).powf((p - 1.0) * (gamma - 1.0)) / l;
    // (L α^γ)^{1/(γ−1)} = α (L α)^{1/(γ−1)}, which avoids overflow near γ = 1.
    let b = alpha * (l * alpha).powf(1.0 / (gamma - 1.0));
    (alpha, b)
}

/// One AIBM stage started at `center`.
struct Stage {
    center: Vec<f64>,
    p: f64,
    local_k: usize,
    y: Vec<f64>,
    z: Vec<f64>,
    /// Linear part of `Ψ`: `Ψ(x) = V(x, center) + c + ⟨s, x⟩`.
    s: Vec<f64>,
    c: f64,
    a: f64,
    e: f64,
    l: f64,
    alpha: f64,
}

impl Stage {
    /// Initial step: trial constants `l_ref, 2 l_ref, …` until the model holds
    /// at `y0 = argmin Ψ_0`.
    fn start(run: &mut Run<'_>, center: Vec<f64>, l_ref: f64, p: f64, k: usize) -> Result<Self> {
        let geometry = run.problem.geometry();
        let delta = run.oracle.delta(k);
        let r0 = run.oracle.evaluate(&center, k)?;
        let mut trial = l_ref;
        loop {
            run.guard(k, trial)?;
            let alpha = 1.0 / trial;
            let s: Vec<f64> = r0.g_delta.iter().map(|g| alpha * g).collect();
            let attempt = absorb((|| {
                let y0 = geometry.prox_with_linear_model(&center, &s)?;
                let at = run.oracle.evaluate(&y0, k)?;
                let rhs = r0.f_delta
                    + dot(&r0.g_delta, &sub(&y0, &center))
                    + trial * geometry.divergence(&y0, &center)?
                    + delta;
                Ok((y0, at.f_delta, rhs))
            })())?;
            if let Some((y0, lhs, rhs)) = attempt {
                if model_holds(lhs, rhs) {
                    let stage = Stage {
                        c: alpha * (r0.f_delta - dot(&r0.g_delta, &center)),
                        center,
                        p,
                        local_k: 0,
                        z: y0.clone(),
                        y: y0,
                        s,
                        a: alpha,
                        e: alpha * delta,
                        l: trial,
                        alpha,
                    };
                    stage.audit(run, alpha, alpha)?;
                    run.audit_bracket(trial);
                    return Ok(stage);
                }
            }
            trial *= 2.0;
        }
    }

    /// Iteration `local_k + 1`: halve `L`, then double until the model holds
    /// at `w` and the weights stay ordered `α ≤ B ≤ A`.
    fn step(&mut self, run: &mut Run<'_>, k: usize) -> Result<()> {
        let geometry = run.problem.geometry();
        let gamma = run.cfg.gamma;
        let local = self.local_k + 1;
        let delta = run.oracle.delta(k);
        let mut trial = self.l / 2.0;
        loop {
            run.guard(k, trial)?;
            let (alpha, b) = weights(trial, local, self.p, gamma);
            let a_next = self.a + alpha;
            if b > a_next * (1.0 + 1e-12) {
                trial *= 2.0;
                continue;
            }
            let tau = alpha / b;
            let attempt = absorb((|| {
                let x = lerp(&self.y, &self.z, tau);
                let rx = run.oracle.evaluate(&x, k)?;
                let mut s = self.s.clone();
                axpy(&mut s, alpha, &rx.g_delta);
                let z = geometry.prox_with_linear_model(&self.center, &s)?;
                let w = lerp(&self.y, &z, tau);
                let rw = run.oracle.evaluate(&w, k)?;
                let rhs = rx.f_delta
                    + dot(&rx.g_delta, &sub(&w, &x))
                    + trial * geometry.divergence(&w, &x)?
                    + delta;
                Ok((x, rx, s, z, w, rw.f_delta, rhs))
            })())?;
            if let Some((x, rx, s, z, w, lhs, rhs)) = attempt {
                if model_holds(lhs, rhs) {
                    self.c += alpha * (rx.f_delta - dot(&rx.g_delta, &x));
                    self.s = s;
                    self.z = z;
                    self.y = lerp(&self.y, &w, b / a_next);
                    self.a = a_next;
                    self.e += b * delta;
                    self.l = trial;
                    self.alpha = alpha;
                    self.local_k = local;
                    self.audit(run, alpha, b)?;
                    run.audit_bracket(trial);
                    return Ok(());
                }
            }
            trial *= 2.0;
        }
    }

    fn audit(&self, run: &mut Run<'_>, alpha: f64, b: f64) -> Result<()> {
        if !run.auditing() {
            return Ok(());
        }
        let order = (b - alpha).min(self.a - b);
        run.trace.audit(audits::ORDERING, order, 1e-12 * self.a);
        let geometry = run.problem.geometry();
        let psi = geometry.divergence(&self.z, &self.center)? + self.c + dot(&self.s, &self.z);
        let lower = self.a * run.value(&self.y)? - self.e;
        run.trace.audit(audits::ESTIMATING_SEQUENCE, psi - lower, 1e-8);
        Ok(())
    }
}

pub fn solve_aibm(problem: &Problem, config: &SolverConfig) -> Result<Trace> {
    let mut run = Run::new(problem, config)?;
    let (x0, l0) = (run.x0.clone(), run.l0);
    let mut stage = Stage::start(&mut run, x0, l0, config.p, 0)?;
    let mut max_l = stage.l;
    run.deltas.push(run.oracle.delta(0));
    let bound = run.bound(max_l, 0, &[]);
    let f = run.value(&stage.y)?;
    run.record(0, f, stage.l, run.deltas[0], stage.alpha, stage.a, bound);

    for k in 1..=config.max_iters {
        stage.step(&mut run, k)?;
        max_l = max_l.max(stage.l);
        let delta = run.oracle.delta(k);
        run.deltas.push(delta);
        let bound = run.bound(max_l, k, &[]);
        let f = run.value(&stage.y)?;
        run.record(k, f, stage.l, delta, stage.alpha, stage.a, bound);
        if run.should_stop() {
            break;
        }
    }
    Ok(run.finish(stage.y))
}

/// Stage criterion `16 R0 L / (k+2)^{(p−1)(γ−1)+1} + (k + 2p)^{p−1} δ`.
pub(crate) fn stage_criterion(r0: f64, max_l: f64, max_delta: f64, k: usize, p: f64, gamma: f64) -> f64 {
    let n = k as f64;
    16.0 * r0 * max_l / (n + 2.0).powf((p - 1.0) * (gamma - 1.0) + 1.0) + (n + 2.0 * p).powf(p - 1.0) * max_delta
}

/// Starts at `p = 2`; whenever the stage criterion grows, lowers `p` by `eta`
/// (down to 1) and restarts from the current output point.
pub fn solve_aibm_varp(problem: &Problem, config: &SolverConfig) -> Result<Trace> {
    let mut run = Run::new(problem, config)?;
    let gamma = config.gamma;
    let r0 = config.r0.or(run.radius_sq).ok_or(Error::MissingRadius)?;
    let mut p = 2.0_f64;
    let (x0, l0) = (run.x0.clone(), run.l0);
    let mut stage = Stage::start(&mut run, x0, l0, p, 0)?;
    let mut max_l = stage.l;
    let mut max_delta = run.oracle.delta(0);
    run.deltas.push(max_delta);
    let mut criterion = stage_criterion(r0, run.l0, max_delta, 0, p, gamma);
    let f = run.value(&stage.y)?;
    run.record(0, f, stage.l, max_delta, stage.alpha, stage.a, criterion);
    run.trace.p_history.push(p);
    let mut restart = false;

    for k in 1..=config.max_iters {
        if restart {
            let (y, l) = (stage.y.clone(), stage.l);
            stage = Stage::start(&mut run, y, l, p, k)?;
            restart = false;
        } else {
            stage.step(&mut run, k)?;
        }
        let delta = run.oracle.delta(k);
        run.deltas.push(delta);
        max_l = max_l.max(stage.l);
        max_delta = max_delta.max(delta);
        let next = stage_criterion(r0, max_l, max_delta, k, p, gamma);
        if next > criterion && p > 1.0 {
            p = (p - config.eta).max(1.0);
            restart = true;
            criterion = stage_criterion(r0, max_l, max_delta, k, p, gamma);
        } else {
            criterion = next;
        }
        run.trace.p_history.push(p);
        let f = run.value(&stage.y)?;
        run.record(k, f, stage.l, delta, stage.alpha, stage.a, criterion);
        if run.should_stop() {
            break;
        }
    }
    Ok(run.finish(stage.y))
}
