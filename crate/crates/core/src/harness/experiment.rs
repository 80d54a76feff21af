use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::{Problem, ReferenceOptimum};
use crate::solvers::{loglog_slope, solve, Method, SolverConfig, Trace};

use super::spec::{cell_label, ExperimentSpec};

/// Multiplier on the sweep budget for the reference runs behind `F*`.
pub const REFERENCE_BUDGET_FACTOR: usize = 10;

/// Attaches a reference optimum to problems without a closed-form one: the
/// best final point of long exact runs of the adaptive baseline and the
/// intermediate method at `p = 2, γ = 2`.
pub fn estimate_f_star(problem: &Problem, iters: usize) -> Result<Problem> {
    if problem.optimum().is_some() {
        return Ok(problem.clone());
    }
    let budget = iters.max(1) * REFERENCE_BUDGET_FACTOR;
    let baseline = SolverConfig::new(Method::BpgAdapt).iters(budget);
    let intermediate = SolverConfig::new(Method::Aibm).gamma(2.0).p(2.0).iters(budget);
    let (a, b) = rayon::join(|| solve(problem, &baseline), || solve(problem, &intermediate));
    let candidates: Vec<Trace> = [a, b].into_iter().filter_map(Result::ok).collect();
    let best = candidates
        .iter()
        .min_by(|x, y| x.last().f.total_cmp(&y.last().f))
        .ok_or_else(|| Error::InvalidConfig("reference runs for F* all failed".into()))?;
    Ok(problem.clone().with_optimum(ReferenceOptimum {
        point: best.final_point.clone(),
        value: best.last().f,
        provenance: format!(
            "min final f of {} and {}[p=2;gamma=2] after {budget} exact iterations",
            Method::BpgAdapt,
            Method::Aibm
        ),
    }))
}

#[derive(Debug)]
pub struct CellOutcome {
    pub label: String,
    pub config: SolverConfig,
    pub result: Result<Trace>,
}

impl CellOutcome {
    /// Least-squares log-log slope of the gap over the second half of the run.
    pub fn slope(&self) -> Option<f64> {
        let trace = self.result.as_ref().ok()?;
        let n = trace.last().k;
        loglog_slope(&trace.records, (n / 2).max(1), n)
    }
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub problem: Problem,
    pub cells: Vec<CellOutcome>,
}

impl ExperimentReport {
    pub fn cell(&self, method: Method, gamma: f64) -> Option<&CellOutcome> {
        self.cells
            .iter()
            .find(|c| c.config.method == method && (!method.uses_gamma() || c.config.gamma == gamma))
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::new();
        let opt = self.problem.optimum();
        let _ = writeln!(out, "# problem={}", self.problem.name());
        let _ = writeln!(out, "# F_star={}", opt.map_or(f64::NAN, |o| o.value));
        let _ = writeln!(out, "# F_star_provenance={}", opt.map_or("unknown", |o| o.provenance.as_str()));
        out.push_str("cell,method,gamma,p,status,final_k,final_f,final_gap,oracle_calls,wall_seconds,slope,final_p\n");
        for c in &self.cells {
            let cfg = &c.config;
            match &c.result {
                Ok(t) => {
                    let r = t.last();
                    let final_p = t.p_history.last().copied().unwrap_or(cfg.p);
                    let _ = writeln!(
                        out,
                        "{},{},{},{},ok,{},{:.16e},{:.16e},{},{:.6},{},{}",
                        c.label,
                        cfg.method,
                        cfg.gamma,
                        cfg.p,
                        r.k,
                        r.f,
                        r.gap,
                        r.oracle_calls,
                        t.header.wall_seconds,
                        c.slope().map_or("NaN".into(), |s| format!("{s:.6}")),
                        final_p
                    );
                }
                Err(e) => {
                    let msg = e.to_string().replace(',', ";");
                    let _ = writeln!(
                        out,
                        "{},{},{},{},error: {msg},,,,,,,",
                        c.label, cfg.method, cfg.gamma, cfg.p
                    );
                }
            }
        }
        out
    }

    /// Writes one CSV per successful cell plus `summary.csv`.
    pub fn write(&self, dir: &Path, timing: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for c in &self.cells {
            if let Ok(t) = &c.result {
                let path = dir.join(format!("{}.csv", c.label));
                t.write_csv(&path, timing)?;
                written.push(path);
            }
        }
        let summary = dir.join("summary.csv");
        std::fs::write(&summary, self.summary_csv())?;
        written.push(summary);
        Ok(written)
    }
}

/// Builds the instance, estimates `F*` once, runs every cell in parallel and
/// writes outputs when `out_dir` is set. Cell failures are kept per cell.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let mut problem = spec.problem.build(spec.seed)?;
    if let Some(l) = spec.l_cert {
        problem = problem.with_l_cert(l);
    }
    let problem = estimate_f_star(&problem, spec.iters)?;
    let cells = spec
        .cells()
        .into_par_iter()
        .map(|config| CellOutcome {
            label: cell_label(&config),
            result: solve(&problem, &config),
            config,
        })
        .collect();
    let report = ExperimentReport { problem, cells };
    if let Some(dir) = &spec.out_dir {
        report.write(dir, spec.timing)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::spec::ProblemSource;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            problem: ProblemSource::Poisson { m: 12, n: 6 },
            methods: vec![Method::AccBpgm1, Method::BpgAdapt, Method::Aibm],
            gamma_sweep: vec![1.5, 2.0],
            iters: 1,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn one_iteration_gives_two_rows() {
        let report = run_experiment(&small_spec()).unwrap();
        assert_eq!(report.cells.len(), 5);
        for c in &report.cells {
            let t = c.result.as_ref().unwrap();
            assert_eq!(t.records.iter().map(|r| r.k).collect::<Vec<_>>(), vec![0, 1]);
        }
        assert!(report.problem.optimum().unwrap().provenance.contains("exact iterations"));
    }

    #[test]
    fn reruns_produce_identical_bodies() {
        let mut spec = small_spec();
        spec.iters = 30;
        spec.noise_kind = crate::oracle::NoiseKind::ValueShrink;
        spec.delta_mean = 0.05;
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        let body = |t: &Trace| {
            t.to_csv(false)
                .lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        };
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(body(x.result.as_ref().unwrap()), body(y.result.as_ref().unwrap()));
        }
    }

    #[test]
    fn a_failing_cell_leaves_the_others_intact() {
        let mut spec = small_spec();
        spec.methods.push(Method::AibmVarP);
        spec.iters = 5;
        let dir = tempfile::tempdir().unwrap();
        spec.out_dir = Some(dir.path().to_path_buf());
        // Fixed-step cells overshoot the orthant at this step size; adaptive ones recover.
        spec.l0 = Some(1e-6);
        let report = run_experiment(&spec).unwrap();
        let failed: Vec<_> = report.cells.iter().filter(|c| c.result.is_err()).map(|c| c.config.method).collect();
        assert!(!failed.is_empty() && failed.iter().all(|m| *m == Method::AccBpgm1), "{failed:?}");
        for c in report.cells.iter().filter(|c| c.result.is_ok()) {
            let written = std::fs::read_to_string(dir.path().join(format!("{}.csv", c.label))).unwrap();
            assert_eq!(written, c.result.as_ref().unwrap().to_csv(false));
        }
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().filter(|l| !l.starts_with('#')).count(), 1 + report.cells.len());
        assert_eq!(summary.matches(",error: ").count(), failed.len());
    }
}
