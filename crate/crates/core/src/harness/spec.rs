use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::oracle::{DeltaSchedule, NoiseKind, NoiseModel};
use crate::problems::{
    dopt_problem, generate_dopt, generate_poisson, poisson_problem, quadratic_problem, read_instance,
    spread_quadratic, Instance, Problem,
};
use crate::solvers::{Method, SolverConfig};

/// Where the experiment's instance comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Poisson { m: usize, n: usize },
    DOpt { m: usize, n: usize },
    /// `½‖x − c‖²` with `cᵢ = 1/√n`.
    Quadratic { n: usize },
    /// Log-spaced curvatures in `[1e-7, 1]`.
    SpreadQuadratic { n: usize },
    File(PathBuf),
}

impl ProblemSource {
    /// Accepts `poisson:MxN`, `dopt:MxN`, `quadratic:N`, `spread:N`, or a path.
    pub fn parse(s: &str) -> Result<Self> {
        let Some((kind, dims)) = s.split_once(':') else {
            return Ok(ProblemSource::File(PathBuf::from(s)));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("dimension `{t}`: {e}")))
        };
        let pair = |d: &str| -> Result<(usize, usize)> {
            let (a, b) = d
                .split_once(['x', 'X', ','])
                .ok_or_else(|| Error::Parse(format!("expected MxN, got `{d}`")))?;
            Ok((num(a)?, num(b)?))
        };
        match kind.to_ascii_lowercase().as_str() {
            "poisson" => pair(dims).map(|(m, n)| ProblemSource::Poisson { m, n }),
            "dopt" => pair(dims).map(|(m, n)| ProblemSource::DOpt { m, n }),
            "quadratic" => num(dims).map(|n| ProblemSource::Quadratic { n }),
            "spread" => num(dims).map(|n| ProblemSource::SpreadQuadratic { n }),
            _ => Ok(ProblemSource::File(PathBuf::from(s))),
        }
    }

    pub fn build(&self, seed: u64) -> Result<Problem> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("invalid dimensions for {what}")))
            }
        };
        match *self {
            ProblemSource::Poisson { m, n } => {
                check(m > 0 && n > 0, "poisson")?;
                Ok(poisson_problem(generate_poisson(m, n, seed)))
            }
            ProblemSource::DOpt { m, n } => Ok(dopt_problem(generate_dopt(m, n, seed)?)),
            ProblemSource::Quadratic { n } => {
                check(n > 0, "quadratic")?;
                Ok(quadratic_problem(vec![(1.0 / n as f64).sqrt(); n]))
            }
            ProblemSource::SpreadQuadratic { n } => {
                check(n >= 2, "spread quadratic")?;
                Ok(spread_quadratic(n))
            }
            ProblemSource::File(ref path) => read_instance(path).map(Instance::into_problem),
        }
    }
}

/// A sweep over methods and scaling exponents on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemSource,
    pub methods: Vec<Method>,
    pub gamma_sweep: Vec<f64>,
    pub p: f64,
    pub eta: f64,
    pub l0: Option<f64>,
    pub iters: usize,
    pub seed: u64,
    pub noise_kind: NoiseKind,
    pub delta_schedule: String,
    pub delta_mean: f64,
    pub r0: Option<f64>,
    /// Overrides the problem's certified constant (audit negative controls).
    pub l_cert: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub assert_bounds: bool,
    pub timing: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            problem: ProblemSource::Poisson { m: 150, n: 100 },
            methods: vec![
                Method::BpgAdapt,
                Method::AdapFgm,
                Method::AccBpgm1,
                Method::AccBpgm2,
                Method::Aibm,
            ],
            gamma_sweep: vec![2.0],
            p: 2.0,
            eta: 0.05,
            l0: None,
            iters: 500,
            seed: 0,
            noise_kind: NoiseKind::Exact,
            delta_schedule: "uniform".into(),
            delta_mean: 0.0,
            r0: None,
            l_cert: None,
            out_dir: None,
            assert_bounds: false,
            timing: false,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{key} = `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("{key} = `{value}` is not a boolean"))),
    }
}

impl ExperimentSpec {
    /// Parses a flat `key = value` file; `#` starts a comment.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            spec.set(key.trim(), value.trim())?;
        }
        Ok(spec)
    }

    /// Applies one setting. Keys match the CLI flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim_start_matches('-').replace('_', "-");
        match key.as_str() {
            "problem" => self.problem = ProblemSource::parse(value)?,
            "method" | "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?;
            }
            "gamma" | "gammas" | "gamma-sweep" => {
                self.gamma_sweep = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_f64("gamma", s))
                    .collect::<Result<_>>()?;
            }
            "p" => self.p = parse_f64("p", value)?,
            "eta" => self.eta = parse_f64("eta", value)?,
            "l0" | "L0" => self.l0 = Some(parse_f64("L0", value)?),
            "iters" => {
                self.iters = value
                    .parse()
                    .map_err(|e| Error::Parse(format!("iters = `{value}`: {e}")))?
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|e| Error::Parse(format!("seed = `{value}`: {e}")))?
            }
            "delta-mean" => self.delta_mean = parse_f64("delta-mean", value)?,
            "delta-schedule" => {
                DeltaSchedule::parse(value, 0.0)?;
                self.delta_schedule = value.to_string();
            }
            "noise-model" | "noise" => self.noise_kind = NoiseKind::parse(value)?,
            "r0" => self.r0 = Some(parse_f64("r0", value)?),
            "l-cert" | "L-cert" => self.l_cert = Some(parse_f64("L-cert", value)?),
            "out" | "out-dir" => self.out_dir = Some(PathBuf::from(value)),
            "assert-bounds" => self.assert_bounds = parse_bool("assert-bounds", value)?,
            "timing" => self.timing = parse_bool("timing", value)?,
            other => {
                // Keys are matched case-insensitively as a fallback.
                let lower = other.to_ascii_lowercase();
                if lower != other {
                    return self.set(&lower, value);
                }
                return Err(Error::Parse(format!("unknown setting `{other}`")));
            }
        }
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        let schedule = DeltaSchedule::parse(&self.delta_schedule, self.delta_mean)?;
        Ok(NoiseModel {
            kind: self.noise_kind,
            schedule,
            seed: self.seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("at least one method is required".into()));
        }
        if self.iters == 0 {
            return Err(Error::InvalidConfig("iters must be at least 1".into()));
        }
        if self.gamma_sweep.is_empty() {
            return Err(Error::InvalidConfig("gamma sweep is empty".into()));
        }
        if let Some(g) = self.gamma_sweep.iter().find(|g| !(**g > 1.0 && **g <= 2.0)) {
            return Err(Error::InvalidConfig(format!("gamma {g} outside (1, 2]")));
        }
        self.noise()?;
        for cfg in self.cells() {
            cfg.validate()?;
        }
        Ok(())
    }

    /// One solver configuration per `(method, γ)` cell. Methods that ignore
    /// `γ` run once; the fast gradient method always runs at `γ = 2`.
    pub fn cells(&self) -> Vec<SolverConfig> {
        let noise = self.noise().unwrap_or_default();
        let mut out = Vec::new();
        for &method in &self.methods {
            let gammas: Vec<f64> = if method.uses_gamma() {
                self.gamma_sweep.clone()
            } else {
                vec![2.0]
            };
            for gamma in gammas {
                let mut cfg = SolverConfig::new(method)
                    .gamma(gamma)
                    .p(self.p)
                    .eta(self.eta)
                    .iters(self.iters)
                    .noise(noise)
                    .assert_bounds(self.assert_bounds);
                cfg.l0 = self.l0;
                cfg.r0 = self.r0;
                out.push(cfg);
            }
        }
        out
    }
}

/// File-name-safe label for a cell.
pub fn cell_label(cfg: &SolverConfig) -> String {
    if cfg.method.uses_gamma() {
        format!("{}_g{}", cfg.method, cfg.gamma)
    } else {
        cfg.method.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_sources() {
        assert_eq!(ProblemSource::parse("poisson:150x100").unwrap(), ProblemSource::Poisson { m: 150, n: 100 });
        assert_eq!(ProblemSource::parse("dopt:3,6").unwrap(), ProblemSource::DOpt { m: 3, n: 6 });
        assert_eq!(ProblemSource::parse("spread:400").unwrap(), ProblemSource::SpreadQuadratic { n: 400 });
        assert!(matches!(ProblemSource::parse("inst.txt").unwrap(), ProblemSource::File(_)));
        assert!(ProblemSource::parse("poisson:12").is_err());
    }

    #[test]
    fn config_file_and_overrides() {
        let text = "# sweep\nproblem = poisson:20x10\nmethods = aibm, accbpgm1,bpg-adapt\ngamma = 1.1, 2\niters=50\nnoise-model = value\ndelta-mean = 0.1\n";
        let mut spec = ExperimentSpec::from_config(text).unwrap();
        assert_eq!(spec.methods, vec![Method::Aibm, Method::AccBpgm1, Method::BpgAdapt]);
        assert_eq!(spec.gamma_sweep, vec![1.1, 2.0]);
        assert_eq!(spec.cells().len(), 5);
        spec.set("--iters", "7").unwrap();
        spec.set("L0", "3").unwrap();
        assert_eq!(spec.iters, 7);
        assert_eq!(spec.l0, Some(3.0));
        assert!(spec.validate().is_ok());
        assert_eq!(spec.noise().unwrap().schedule, DeltaSchedule::Uniform { mean: 0.1 });
    }

    #[test]
    fn invalid_specs() {
        assert!(ExperimentSpec::from_config("frobnicate = 1").is_err());
        assert!(ExperimentSpec::from_config("methods = lbfgs").is_err());
        let spec = ExperimentSpec { gamma_sweep: vec![0.5], ..ExperimentSpec::default() };
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec { methods: vec![], ..ExperimentSpec::default() };
        assert!(spec.validate().is_err());
    }
}
