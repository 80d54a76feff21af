use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::geometry::GeometryKind;
use crate::problems::Problem;

use super::{Method, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceHeader {
    pub method: Method,
    pub problem: String,
    pub geometry: String,
    pub gamma: f64,
    pub p: f64,
    pub seed: u64,
    pub l0: f64,
    pub l_cert: f64,
    pub f_star: Option<f64>,
    pub f_star_provenance: String,
    pub iters: usize,
    pub noise: String,
    /// `in-theory` when the rate bound's hypotheses hold for this geometry.
    pub bound_theory: &'static str,
    pub wall_seconds: f64,
}

impl TraceHeader {
    pub(crate) fn for_run(problem: &Problem, cfg: &SolverConfig, l0: f64) -> Self {
        let geometry = problem.geometry();
        let in_theory = match cfg.method {
            Method::Bpg | Method::BpgAdapt => true,
            Method::AdapFgm => geometry.kind() == GeometryKind::Euclidean,
            _ => cfg.gamma <= geometry.gamma(),
        };
        let opt = problem.optimum();
        Self {
            method: cfg.method,
            problem: problem.name().to_string(),
            geometry: geometry.label(),
            gamma: cfg.gamma,
            p: cfg.p,
            seed: cfg.noise.seed,
            l0,
            l_cert: problem.l_cert(),
            f_star: opt.map(|o| o.value),
            f_star_provenance: opt.map_or_else(|| "unknown".into(), |o| o.provenance.clone()),
            iters: cfg.max_iters,
            noise: cfg.noise.describe(),
            bound_theory: if in_theory { "in-theory" } else { "out-of-theory" },
            wall_seconds: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub f: f64,
    pub gap: f64,
    pub l: f64,
    pub delta: f64,
    pub theta_alpha: f64,
    pub a: f64,
    pub oracle_calls: u64,
    pub bound: f64,
    pub seconds: f64,
}

/// Aggregated outcome of one runtime inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    pub worst_slack: f64,
}

impl AuditEntry {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
    pub final_point: Vec<f64>,
    pub audits: Vec<AuditEntry>,
    /// Value of `p` after each iteration (variable-`p` runs only).
    pub p_history: Vec<f64>,
}

impl Trace {
    pub(crate) fn new(header: TraceHeader) -> Self {
        Self {
            header,
            records: Vec::new(),
            final_point: Vec::new(),
            audits: Vec::new(),
            p_history: Vec::new(),
        }
    }

    /// Folds one observation into the named audit; `slack ≥ −tol` passes.
    pub(crate) fn audit(&mut self, name: &'static str, slack: f64, tol: f64) {
        let idx = match self.audits.iter().position(|a| a.name == name) {
            Some(i) => i,
            None => {
                self.audits.push(AuditEntry {
                    name,
                    checks: 0,
                    violations: 0,
                    worst_slack: f64::INFINITY,
                });
                self.audits.len() - 1
            }
        };
        let entry = &mut self.audits[idx];
        entry.checks += 1;
        entry.worst_slack = entry.worst_slack.min(slack);
        if !(slack >= -tol) {
            entry.violations += 1;
        }
    }

    pub fn audit_entry(&self, name: &str) -> Option<&AuditEntry> {
        self.audits.iter().find(|a| a.name == name)
    }

    pub fn audits_pass(&self) -> bool {
        self.audits.iter().all(AuditEntry::passed)
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("every trace holds the initial record")
    }

    pub fn max_l(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.l))
    }

    /// CSV text. Per-row `seconds` are zero unless `timing` is set, so that
    /// identical runs produce identical bodies.
    pub fn to_csv(&self, timing: bool) -> String {
        let h = &self.header;
        let mut out = String::new();
        let _ = writeln!(out, "# method={}", h.method);
        let _ = writeln!(out, "# problem={}", h.problem);
        let _ = writeln!(out, "# geometry={}", h.geometry);
        let _ = writeln!(out, "# gamma={}", h.gamma);
        let _ = writeln!(out, "# p={}", h.p);
        let _ = writeln!(out, "# seed={}", h.seed);
        let _ = writeln!(out, "# L0={}", num(h.l0));
        let _ = writeln!(out, "# F_star={}", h.f_star.map_or("NaN".into(), num));
        let _ = writeln!(out, "# F_star_provenance={}", h.f_star_provenance);
        let _ = writeln!(out, "# L_cert={}", num(h.l_cert));
        let _ = writeln!(out, "# iters={}", h.iters);
        let _ = writeln!(out, "# noise={}", h.noise);
        let _ = writeln!(out, "# bound={}", h.bound_theory);
        let _ = writeln!(out, "# wall_seconds={:.6}", h.wall_seconds);
        if !self.p_history.is_empty() {
            let _ = writeln!(out, "# final_p={}", self.p_history.last().copied().unwrap_or(h.p));
        }
        out.push_str("k,f,gap,L,delta,theta_alpha,A,oracle_calls,bound,seconds\n");
        for r in &self.records {
            let secs = if timing { r.seconds } else { 0.0 };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.k,
                num(r.f),
                num(r.gap),
                num(r.l),
                num(r.delta),
                num(r.theta_alpha),
                num(r.a),
                r.oracle_calls,
                num(r.bound),
                num(secs)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path, timing: bool) -> Result<()> {
        std::fs::write(path, self.to_csv(timing))?;
        Ok(())
    }
}

/// 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Least-squares slope of `ln gap` against `ln k` over `k ∈ [lo, hi]`,
/// using records with a positive gap.
pub fn loglog_slope(records: &[TraceRecord], lo: usize, hi: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.k >= lo.max(1) && r.k <= hi && r.gap > 0.0)
        .map(|r| ((r.k as f64).ln(), r.gap.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Population variance of the gap over the last `window` records.
pub fn trailing_variance(records: &[TraceRecord], window: usize) -> f64 {
    let tail = &records[records.len().saturating_sub(window)..];
    if tail.is_empty() {
        return f64::NAN;
    }
    let n = tail.len() as f64;
    let mean = tail.iter().map(|r| r.gap).sum::<f64>() / n;
    tail.iter().map(|r| (r.gap - mean) * (r.gap - mean)).sum::<f64>() / n
}
