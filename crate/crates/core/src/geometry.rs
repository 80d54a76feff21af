//! Bregman reference functions and the closed-form proximal maps built on them.
//!
//! Three references are supported:
//!
//! | kind             | `d(x)`            | divergence `V(x, y)`                       |
//! |------------------|-------------------|--------------------------------------------|
//! | `Euclidean`      | `½‖x‖²`           | `½‖x − y‖²`                                |
//! | `EntropySimplex` | `Σ xᵢ ln xᵢ`      | `Σ xᵢ ln(xᵢ/yᵢ) − xᵢ + yᵢ` (generalized KL) |
//! | `LogBarrier`     | `−Σ ln xᵢ`        | `Σ xᵢ/yᵢ − ln(xᵢ/yᵢ) − 1` (Itakura–Saito)   |
//!
//! Every prox map solves `argmin_x ⟨g, x⟩ + λ V(x, z)` over the configured
//! domain in closed form (or by a one-dimensional root find for the
//! log-barrier on the simplex). Outputs on open domains keep every
//! coordinate at least `floor` away from the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::vector::{check_dim, check_finite, dist_sq};

/// Default strict-positivity cushion for open domains.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Euclidean,
    EntropySimplex,
    LogBarrier,
}

impl GeometryKind {
    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Euclidean => "euclidean",
            GeometryKind::EntropySimplex => "entropy-simplex",
            GeometryKind::LogBarrier => "log-barrier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    FreeSpace,
    PositiveOrthant,
    UnitSimplex,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::FreeSpace => "free",
            DomainKind::PositiveOrthant => "orthant",
            DomainKind::UnitSimplex => "simplex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Minimum distance kept from the boundary of an open domain.
    pub floor: f64,
}

impl DomainSpec {
    pub fn new(kind: DomainKind) -> Self {
        Self {
            kind,
            floor: DEFAULT_FLOOR,
        }
    }
}

/// A Bregman reference function bound to a domain and a triangular scaling
/// exponent. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    kind: GeometryKind,
    dimension: usize,
    domain: DomainSpec,
    gamma: f64,
}

impl Geometry {
    pub fn new(kind: GeometryKind, dimension: usize, domain: DomainKind) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        let supported = matches!(
            (kind, domain),
            (
                GeometryKind::Euclidean,
                DomainKind::FreeSpace | DomainKind::PositiveOrthant
            ) | (GeometryKind::EntropySimplex, DomainKind::UnitSimplex)
                | (
                    GeometryKind::LogBarrier,
                    DomainKind::PositiveOrthant | DomainKind::UnitSimplex
                )
        );
        if !supported {
            return Err(Error::InvalidConfig(format!(
                "{} reference is not available on the {} domain",
                kind.name(),
                domain.name()
            )));
        }
        let gamma = match kind {
            GeometryKind::Euclidean => 2.0,
            GeometryKind::EntropySimplex => 1.0,
            // Only "γ < 1" is known for Itakura–Saito; 1 is the supremum.
            GeometryKind::LogBarrier => 1.0,
        };
        Ok(Self {
            kind,
            dimension,
            domain: DomainSpec::new(domain),
            gamma,
        })
    }

    pub fn euclidean(dimension: usize) -> Self {
        Self::new(GeometryKind::Euclidean, dimension, DomainKind::FreeSpace)
            .expect("valid combination")
    }

    pub fn euclidean_orthant(dimension: usize) -> Self {
        Self::new(GeometryKind::Euclidean, dimension, DomainKind::PositiveOrthant)
            .expect("valid combination")
    }

    pub fn entropy_simplex(dimension: usize) -> Self {
        Self::new(GeometryKind::EntropySimplex, dimension, DomainKind::UnitSimplex)
            .expect("valid combination")
    }

    pub fn log_barrier(dimension: usize) -> Self {
        Self::new(GeometryKind::LogBarrier, dimension, DomainKind::PositiveOrthant)
            .expect("valid combination")
    }

    pub fn log_barrier_simplex(dimension: usize) -> Self {
        Self::new(GeometryKind::LogBarrier, dimension, DomainKind::UnitSimplex)
            .expect("valid combination")
    }

    /// Overrides the triangular scaling exponent; any value in `(0, 2]`.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "triangular scaling exponent {gamma} outside (0, 2]"
            )));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.domain.floor = floor.max(0.0);
        self
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn floor(&self) -> f64 {
        self.domain.floor
    }

    /// Short label such as `log-barrier/orthant`.
    pub fn label(&self) -> String {
        format!("{}/{}", self.kind.name(), self.domain.kind.name())
    }

    fn open_domain(&self) -> bool {
        !matches!(self.kind, GeometryKind::Euclidean)
    }

    /// Checks that `y` may serve as the second argument of `V` (interior point).
    pub fn check_interior(&self, y: &[f64]) -> Result<()> {
        check_dim(self.dimension, y)?;
        check_finite(y, "point")?;
        if self.open_domain() {
            if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                return Err(Error::DomainViolation { index, value });
            }
        }
        Ok(())
    }

    fn check_closure(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dimension, x)?;
        check_finite(x, "point")?;
        let bad = match self.kind {
            GeometryKind::Euclidean => None,
            GeometryKind::EntropySimplex => x.iter().enumerate().find(|(_, v)| **v < 0.0),
            GeometryKind::LogBarrier => x.iter().enumerate().find(|(_, v)| **v <= 0.0),
        };
        match bad {
            Some((index, &value)) => Err(Error::DomainViolation { index, value }),
            None => Ok(()),
        }
    }

    /// The reference function `d(x)`.
    pub fn reference(&self, x: &[f64]) -> Result<f64> {
        self.check_closure(x)?;
        let v = match self.kind {
            GeometryKind::Euclidean => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            GeometryKind::EntropySimplex => x.iter().map(|&v| xlogx(v)).sum(),
            GeometryKind::LogBarrier => -x.iter().map(|v| v.ln()).sum::<f64>(),
        };
        finite(v, "reference value")
    }

    /// `∇d(y)`.
    pub fn grad_ref(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_interior(y)?;
        Ok(match self.kind {
            GeometryKind::Euclidean => y.to_vec(),
            GeometryKind::EntropySimplex => y.iter().map(|v| v.ln() + 1.0).collect(),
            GeometryKind::LogBarrier => y.iter().map(|v| -1.0 / v).collect(),
        })
    }

    /// Bregman divergence `V(x, y) = d(x) − d(y) − ⟨∇d(y), x − y⟩`.
    pub fn divergence(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_closure(x)?;
        self.check_interior(y)?;
        let v = match self.kind {
            GeometryKind::Euclidean => 0.5 * dist_sq(x, y),
            GeometryKind::EntropySimplex => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| kl_term(a, b))
                .sum(),
            GeometryKind::LogBarrier => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| is_term(a, b))
                .sum(),
        };
        finite(v, "divergence")
    }

    /// `argmin_x { ⟨g, x⟩ + λ V(x, z) }` over the domain.
    pub fn linear_bregman_prox(&self, z: &[f64], g: &[f64], lambda: f64) -> Result<Vec<f64>> {
        self.check_interior(z)?;
        check_dim(self.dimension, g)?;
        check_finite(g, "prox gradient")?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "prox weight must be positive, got {lambda}"
            )));
        }
        let floor = self.domain.floor;
        let x = match (self.kind, self.domain.kind) {
            (GeometryKind::Euclidean, DomainKind::FreeSpace) => {
                z.iter().zip(g).map(|(zi, gi)| zi - gi / lambda).collect()
            }
            (GeometryKind::Euclidean, _) => z
                .iter()
                .zip(g)
                .map(|(zi, gi)| (zi - gi / lambda).max(floor))
                .collect(),
            (GeometryKind::EntropySimplex, _) => entropy_simplex_prox(z, g, lambda, floor),
            (GeometryKind::LogBarrier, DomainKind::UnitSimplex) => {
                log_barrier_simplex_prox(z, g, lambda, floor)?
            }
            (GeometryKind::LogBarrier, _) => log_barrier_orthant_prox(z, g, lambda, floor)?,
        };
        check_finite(&x, "prox output")?;
        #[cfg(debug_assertions)]
        {
            let residual = self.kkt_residual(z, g, lambda, &x);
            debug_assert!(
                residual <= 1e-10,
                "prox KKT residual {residual:e} for {}",
                self.label()
            );
        }
        Ok(x)
    }

    /// Minimizer of `V(x, center) + ⟨s, x⟩`: the reference recentred at
    /// `center` plus a linear model with aggregate slope `s`.
    pub fn prox_with_linear_model(&self, center: &[f64], aggregate: &[f64]) -> Result<Vec<f64>> {
        self.linear_bregman_prox(center, aggregate, 1.0)
    }

    /// Scaled first-order optimality residual of `x` for the prox problem
    /// `argmin ⟨g, ·⟩ + λ V(·, z)`. Coordinates pinned at the floor are
    /// judged by the sign of their multiplier.
    pub fn kkt_residual(&self, z: &[f64], g: &[f64], lambda: f64, x: &[f64]) -> f64 {
        let (Ok(gx), Ok(gz)) = (self.grad_ref(x), self.grad_ref(z)) else {
            return f64::INFINITY;
        };
        let floor = self.domain.floor;
        let pinned = |xi: f64| self.open_domain_or_orthant() && xi <= floor * (1.0 + 1e-9);
        let mut scale = 1.0_f64;
        let station: Vec<f64> = (0..x.len())
            .map(|i| {
                let gl = g[i] / lambda;
                scale = scale.max(gl.abs()).max(gx[i].abs()).max(gz[i].abs());
                match self.kind {
                    // ∇d(x) − ∇d(z) computed in a cancellation-free form.
                    GeometryKind::EntropySimplex => gl + (x[i] / z[i]).ln(),
                    GeometryKind::LogBarrier => gl + (x[i] - z[i]) / (x[i] * z[i]),
                    GeometryKind::Euclidean => gl + x[i] - z[i],
                }
            })
            .collect();
        let mut worst = 0.0_f64;
        if self.domain.kind == DomainKind::UnitSimplex {
            let (lo, hi) = station
                .iter()
                .zip(x)
                .filter(|(_, xi)| !pinned(**xi))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (s, _)| {
                    (lo.min(*s), hi.max(*s))
                });
            if lo.is_finite() {
                let mid = 0.5 * (lo + hi);
                worst = 0.5 * (hi - lo);
                for (s, xi) in station.iter().zip(x) {
                    if pinned(*xi) {
                        worst = worst.max(mid - s);
                    }
                }
            }
        } else {
            for (s, xi) in station.iter().zip(x) {
                let r = if pinned(*xi) && self.domain.kind != DomainKind::FreeSpace {
                    (-s).max(0.0)
                } else {
                    s.abs()
                };
                worst = worst.max(r);
            }
        }
        worst / scale
    }

    fn open_domain_or_orthant(&self) -> bool {
        self.domain.kind != DomainKind::FreeSpace
    }

    /// Draws a point from the interior of the domain.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dimension;
        match self.domain.kind {
            DomainKind::FreeSpace => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            DomainKind::PositiveOrthant => (0..n)
                .map(|_| rng.random_range(-2.0_f64..1.0).exp())
                .collect(),
            DomainKind::UnitSimplex => sample_simplex(rng, n),
        }
    }
}

/// Dirichlet(1) draw mixed 1% toward the barycenter.
pub(crate) fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    e.iter()
        .map(|v| 0.99 * v / total + 0.01 / n as f64)
        .collect()
}

fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

#[inline]
fn xlogx(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v * v.ln()
    }
}

/// `a ln(a/b) − a + b`, evaluated around the ratio to keep precision near `a = b`.
#[inline]
pub(crate) fn kl_term(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b;
    }
    let t = (a - b) / b;
    (a * t.ln_1p() - (a - b)).max(0.0)
}

/// `a/b − ln(a/b) − 1` via `t − ln(1 + t)` with `t = a/b − 1`.
#[inline]
fn is_term(a: f64, b: f64) -> f64 {
    let t = (a - b) / b;
    (t - t.ln_1p()).max(0.0)
}

fn entropy_simplex_prox(z: &[f64], g: &[f64], lambda: f64, floor: f64) -> Vec<f64> {
    let logits: Vec<f64> = z
        .iter()
        .zip(g)
        .map(|(zi, gi)| zi.ln() - gi / lambda)
        .collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut x: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    enforce_simplex_floor(&mut x, floor);
    x
}

fn log_barrier_orthant_prox(z: &[f64], g: &[f64], lambda: f64, floor: f64) -> Result<Vec<f64>> {
    z.iter()
        .zip(g)
        .enumerate()
        .map(|(index, (zi, gi))| {
            let den = lambda + gi * zi;
            if den <= floor * lambda {
                Err(Error::ProxInfeasible { index, lambda })
            } else {
                Ok((lambda * zi / den).max(floor))
            }
        })
        .collect()
}

/// Log-barrier prox on the simplex: `xᵢ = λ / (aᵢ + μ)` with
/// `aᵢ = λ/zᵢ + gᵢ` and `μ` the unique root of `Σ xᵢ = 1`.
fn log_barrier_simplex_prox(z: &[f64], g: &[f64], lambda: f64, floor: f64) -> Result<Vec<f64>> {
    let a: Vec<f64> = z.iter().zip(g).map(|(zi, gi)| lambda / zi + gi).collect();
    let a_min = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let mass = |mu: f64| -> (f64, f64) {
        a.iter().fold((0.0, 0.0), |(s, ds), ai| {
            let r = 1.0 / (ai + mu);
            (s + lambda * r, ds - lambda * r * r)
        })
    };
    // φ(μ) = Σ λ/(aᵢ+μ) is convex and decreasing on (−a_min, ∞); Newton from
    // the left of the root increases monotonically toward it.
    let mut lo = -a_min;
    let mut mu = lambda - a_min;
    let mut hi = f64::INFINITY;
    for _ in 0..200 {
        let (phi, dphi) = mass(mu);
        if !phi.is_finite() {
            return Err(Error::NonFinite("simplex prox multiplier"));
        }
        if phi > 1.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if (phi - 1.0).abs() <= 4.0 * f64::EPSILON {
            break;
        }
        let mut next = mu - (phi - 1.0) / dphi;
        if !(next > lo && next < hi) {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                lo + 2.0 * (mu - lo).max(lambda)
            };
        }
        if next == mu {
            break;
        }
        mu = next;
    }
    let mut x: Vec<f64> = a.iter().map(|ai| lambda / (ai + mu)).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    enforce_simplex_floor(&mut x, floor);
    Ok(x)
}

/// Lifts coordinates below `floor` to `floor` and rescales the rest so the
/// vector still sums to one.
fn enforce_simplex_floor(x: &mut [f64], floor: f64) {
    if floor <= 0.0 || x.iter().all(|&v| v >= floor) {
        return;
    }
    let pinned = x.iter().filter(|&&v| v < floor).count();
    let free_mass: f64 = x.iter().filter(|&&v| v >= floor).sum();
    let target = 1.0 - pinned as f64 * floor;
    for v in x.iter_mut() {
        if *v < floor {
            *v = floor;
        } else {
            *v *= target / free_mass;
        }
    }
}

/// Outcome of [`tse_verify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TseReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest observed `LHS / (θ^γ · V(z, z̃))`.
    pub max_ratio: f64,
}

/// Both sides of the triangular scaling inequality
/// `V((1−θ)x + θz, (1−θ)x + θz̃) ≤ θ^γ V(z, z̃)`.
pub fn tse_sides(
    geometry: &Geometry,
    x: &[f64],
    z: &[f64],
    z_tilde: &[f64],
    theta: f64,
    gamma: f64,
) -> Result<(f64, f64)> {
    let a = crate::vector::lerp(x, z, theta);
    let b = crate::vector::lerp(x, z_tilde, theta);
    let lhs = geometry.divergence(&a, &b)?;
    let rhs = theta.powf(gamma) * geometry.divergence(z, z_tilde)?;
    Ok((lhs, rhs))
}

/// Samples `(x, z, z̃, θ)` tuples from the domain interior and counts
/// violations of the triangular scaling inequality at exponent `gamma`.
pub fn tse_verify(geometry: &Geometry, gamma: f64, trials: usize, seed: u64) -> TseReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_ratio = 0.0_f64;
    for _ in 0..trials {
        let x = geometry.sample_interior(&mut rng);
        let z = geometry.sample_interior(&mut rng);
        let zt = geometry.sample_interior(&mut rng);
        let theta = 1.0 - rng.random::<f64>(); // (0, 1]
        let Ok((lhs, rhs)) = tse_sides(geometry, &x, &z, &zt, theta, gamma) else {
            violations += 1;
            continue;
        };
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
        if lhs > rhs * (1.0 + 1e-10) {
            violations += 1;
        }
    }
    TseReport {
        trials,
        violations,
        max_ratio,
    }
}
