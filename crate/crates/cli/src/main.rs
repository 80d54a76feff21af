use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use relsmooth::harness::{bound_table, cell_label, estimate_f_star, run_audit, run_experiment, ExperimentSpec};
use relsmooth::problems::{generate_dopt, generate_poisson, write_instance, Instance};

#[derive(Parser)]
#[command(name = "relsmooth", version, about = "Bregman gradient methods for relatively smooth problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance (`poisson` or `dopt`) to a text file.
    Generate {
        kind: String,
        m: usize,
        n: usize,
        seed: u64,
        out: PathBuf,
    },
    /// Run a sweep and write one trace per cell plus `summary.csv`.
    Run(Flags),
    /// Run every cell with runtime checks on, plus geometry and oracle verifiers.
    Audit(Flags),
    /// Print rate-bound tables.
    Bound(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `poisson:MxN`, `dopt:MxN`, `quadratic:N`, `spread:N` or an instance file.
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated method names.
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated scaling exponents.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long = "L0")]
    l0: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    delta_mean: Option<String>,
    /// const, uniform or decay.
    #[arg(long)]
    delta_schedule: Option<String>,
    /// exact, value or grad.
    #[arg(long)]
    noise_model: Option<String>,
    /// Upper bound on the initial divergence to the solution.
    #[arg(long)]
    r0: Option<String>,
    /// Override the certified smoothness constant (audit negative controls).
    #[arg(long = "L-cert")]
    l_cert: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    assert_bounds: bool,
    /// Record per-iteration wall time in trace rows.
    #[arg(long)]
    timing: bool,
}

impl Flags {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ExperimentSpec::from_config(&text)?
            }
            None => ExperimentSpec::default(),
        };
        let pairs = [
            ("problem", &self.problem),
            ("methods", &self.method),
            ("gamma", &self.gamma),
            ("p", &self.p),
            ("eta", &self.eta),
            ("L0", &self.l0),
            ("iters", &self.iters),
            ("seed", &self.seed),
            ("delta-mean", &self.delta_mean),
            ("delta-schedule", &self.delta_schedule),
            ("noise-model", &self.noise_model),
            ("r0", &self.r0),
            ("L-cert", &self.l_cert),
            ("out", &self.out),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                spec.set(key, v)?;
            }
        }
        spec.assert_bounds |= self.assert_bounds;
        spec.timing |= self.timing;
        Ok(spec)
    }
}

fn generate(kind: &str, m: usize, n: usize, seed: u64, out: &Path) -> Result<()> {
    let instance = match kind {
        "poisson" => Instance::Poisson(generate_poisson(m, n, seed)),
        "dopt" => Instance::DOpt(generate_dopt(m, n, seed)?),
        other => bail!("unknown instance kind `{other}` (expected poisson or dopt)"),
    };
    write_instance(&instance, out)?;
    Ok(())
}

fn run(flags: &Flags) -> Result<ExitCode> {
    let spec = flags.spec()?;
    let report = run_experiment(&spec)?;
    print!("{}", report.summary_csv());
    for cell in &report.cells {
        if let Err(e) = &cell.result {
            eprintln!("{}: {e}", cell.label);
        }
    }
    Ok(if report.failures() > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn audit(flags: &Flags) -> Result<ExitCode> {
    let spec = flags.spec()?;
    let report = run_audit(&spec)?;
    let csv = report.to_csv();
    print!("{csv}");
    if let Some(dir) = &spec.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("audit.csv"), &csv)?;
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

/// `L` comes from `--L0` or the problem's certificate; the radius from
/// `--r0` or, when a problem is given, from its reference optimum.
fn bound(flags: &Flags) -> Result<ExitCode> {
    let spec = flags.spec()?;
    spec.validate()?;
    let problem = match flags.problem.is_some() || flags.config.is_some() {
        true => Some(estimate_f_star(&spec.problem.build(spec.seed)?, spec.iters)?),
        false => None,
    };
    let l = spec.l0.or(problem.as_ref().map(|p| p.l_cert())).unwrap_or(1.0);
    let radius_sq = match (spec.r0, &problem) {
        (Some(r), _) => r,
        (None, Some(p)) => {
            let opt = p.optimum().context("problem has no reference optimum")?;
            p.geometry().divergence(&opt.point, p.x_feasible())?
        }
        (None, None) => bail!("pass --r0 or --problem to fix the initial radius"),
    };
    let cells = spec.cells();
    let mut columns = Vec::new();
    for cfg in &cells {
        columns.push(bound_table(cfg.method, l, radius_sq, cfg.gamma, cfg.p, spec.delta_mean, spec.iters)?);
    }
    let labels: Vec<String> = cells.iter().map(cell_label).collect();
    println!("# L={l:e} radius_sq={radius_sq:e} delta={:e}", spec.delta_mean);
    println!("k,{}", labels.join(","));
    for k in 0..spec.iters {
        let row: Vec<String> = columns.iter().map(|c| format!("{:.10e}", c[k].1)).collect();
        println!("{},{}", k + 1, row.join(","));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate { kind, m, n, seed, out } => generate(kind, *m, *n, *seed, out).map(|_| ExitCode::SUCCESS),
        Command::Run(flags) => run(flags),
        Command::Audit(flags) => audit(flags),
        Command::Bound(flags) => bound(flags),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
