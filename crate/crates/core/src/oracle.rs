//! First-order oracles with a controlled inexactness budget.
//!
//! An [`Oracle`] answers `(f_δ(y), g_δ(y), δ)` at query points. The
//! `ValueShrink` model lowers the value by `u·δ_k` with `u ∈ [0, 1)` and keeps
//! the exact gradient, so the linearization stays a valid lower model and the
//! upper gap grows by at most `δ_k`. `GradientJitter` perturbs the gradient
//! instead and carries no such guarantee.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::problems::{Problem, SampledReport};
use crate::vector::{dot, norm_sq, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Exact,
    ValueShrink,
    GradientJitter,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Exact => "exact",
            NoiseKind::ValueShrink => "value",
            NoiseKind::GradientJitter => "grad",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" | "none" => Ok(NoiseKind::Exact),
            "value" | "value-shrink" | "valueshrink" => Ok(NoiseKind::ValueShrink),
            "grad" | "gradient" | "gradient-jitter" => Ok(NoiseKind::GradientJitter),
            other => Err(Error::Parse(format!("unknown noise model `{other}`"))),
        }
    }
}

/// Rule `k ↦ δ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSchedule {
    Constant(f64),
    /// `δ_k ~ U[0, 2·mean]`, a fixed function of `(seed, k)`.
    Uniform { mean: f64 },
    /// `δ_k = scale / (k + 1)`.
    Decay { scale: f64 },
}

impl DeltaSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            DeltaSchedule::Constant(_) => "const",
            DeltaSchedule::Uniform { .. } => "uniform",
            DeltaSchedule::Decay { .. } => "decay",
        }
    }

    /// Builds a schedule from its CLI name and level.
    pub fn parse(name: &str, level: f64) -> Result<Self> {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta level {level} must be finite and nonnegative")));
        }
        match name.to_ascii_lowercase().as_str() {
            "const" | "constant" => Ok(DeltaSchedule::Constant(level)),
            "uniform" => Ok(DeltaSchedule::Uniform { mean: level }),
            "decay" => Ok(DeltaSchedule::Decay { scale: level }),
            other => Err(Error::Parse(format!("unknown delta schedule `{other}`"))),
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            DeltaSchedule::Constant(c) => c,
            DeltaSchedule::Uniform { mean } => mean,
            DeltaSchedule::Decay { scale } => scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub schedule: DeltaSchedule,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::exact()
    }
}

impl NoiseModel {
    pub fn exact() -> Self {
        Self {
            kind: NoiseKind::Exact,
            schedule: DeltaSchedule::Constant(0.0),
            seed: 0,
        }
    }

    pub fn value_shrink(schedule: DeltaSchedule, seed: u64) -> Self {
        Self {
            kind: NoiseKind::ValueShrink,
            schedule,
            seed,
        }
    }

    pub fn gradient_jitter(schedule: DeltaSchedule, seed: u64) -> Self {
        Self {
            kind: NoiseKind::GradientJitter,
            schedule,
            seed,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.kind == NoiseKind::Exact
    }

    pub fn conforming(&self) -> bool {
        self.kind != NoiseKind::GradientJitter
    }

    /// Budget at iteration `k`; identical for every call within an iteration.
    pub fn delta(&self, k: usize) -> f64 {
        if self.kind == NoiseKind::Exact {
            return 0.0;
        }
        match self.schedule {
            DeltaSchedule::Constant(c) => c,
            DeltaSchedule::Decay { scale } => scale / (k as f64 + 1.0),
            DeltaSchedule::Uniform { mean } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(k as u64 + 1);
                2.0 * mean * rng.random::<f64>()
            }
        }
    }

    pub fn describe(&self) -> String {
        match self.kind {
            NoiseKind::Exact => "exact".into(),
            kind => format!(
                "{}:{}:{}:seed={}",
                kind.name(),
                self.schedule.name(),
                self.schedule.level(),
                self.seed
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResponse {
    pub f_delta: f64,
    pub g_delta: Vec<f64>,
    pub delta: f64,
    /// False when the response may violate the sandwich inequality.
    pub conforming: bool,
}

/// Single-owner oracle state: the perturbation stream and a call counter.
#[derive(Debug, Clone)]
pub struct Oracle<'p> {
    problem: &'p Problem,
    noise: NoiseModel,
    rng: ChaCha8Rng,
    calls: u64,
}

impl<'p> Oracle<'p> {
    pub fn new(problem: &'p Problem, noise: NoiseModel) -> Self {
        Self {
            problem,
            noise,
            rng: ChaCha8Rng::seed_from_u64(noise.seed),
            calls: 0,
        }
    }

    pub fn exact(problem: &'p Problem) -> Self {
        Self::new(problem, NoiseModel::exact())
    }

    pub fn problem(&self) -> &'p Problem {
        self.problem
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.noise.delta(k)
    }

    pub fn call_count(&self) -> u64 {
        self.calls
    }

    pub fn evaluate(&mut self, y: &[f64], k: usize) -> Result<OracleResponse> {
        self.calls += 1;
        let (f, mut g) = self.problem.objective().value_and_gradient(y)?;
        let delta = self.noise.delta(k);
        let mut f_delta = f;
        match self.noise.kind {
            NoiseKind::Exact => {}
            NoiseKind::ValueShrink => {
                let u: f64 = self.rng.random();
                f_delta = f - u * delta;
            }
            NoiseKind::GradientJitter => {
                let u: f64 = self.rng.random();
                let dir: Vec<f64> = (0..g.len()).map(|_| self.rng.sample(StandardNormal)).collect();
                let norm = norm_sq(&dir).sqrt();
                if norm > 0.0 {
                    for (gi, di) in g.iter_mut().zip(&dir) {
                        *gi += delta * u * di / norm;
                    }
                }
            }
        }
        Ok(OracleResponse {
            f_delta,
            g_delta: g,
            delta,
            conforming: self.noise.conforming(),
        })
    }
}

/// Samples `(x, y)` pairs and checks
/// `0 ≤ f(x) − f_δ(y) − ⟨g_δ(y), x − y⟩ ≤ L·V(x, y) + δ` up to `1e-9`.
/// Slack is the distance to the nearer side.
pub fn verify_conformity(oracle: &mut Oracle<'_>, l: f64, pairs: usize, seed: u64) -> SampledReport {
    let problem = oracle.problem();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SampledReport::new(pairs);
    for i in 0..pairs {
        let x = problem.sample_point(&mut rng);
        let y = problem.sample_point(&mut rng);
        let slack = (|| -> Result<f64> {
            let r = oracle.evaluate(&y, i)?;
            let fx = problem.value(&x)?;
            let v = problem.geometry().divergence(&x, &y)?;
            let gap = fx - r.f_delta - dot(&r.g_delta, &sub(&x, &y));
            Ok(gap.min(l * v + r.delta - gap))
        })();
        report.observe(slack.unwrap_or(f64::NEG_INFINITY), 1e-9);
    }
    report
}
