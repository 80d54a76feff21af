//! Plain-text instance files.
//!
//! ```text
//! poisson <m> <n> <seed>      dopt <m> <n> <seed>
//! <m rows of n entries>       <n vectors of m entries>
//! <m data entries>
//! ```
//!
//! Floats are written with 17 significant digits so files round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::{dopt_problem, poisson_problem, DOptInstance, PoissonInstance, Problem};

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Poisson(PoissonInstance),
    DOpt(DOptInstance),
}

impl Instance {
    pub fn into_problem(self) -> Problem {
        match self {
            Instance::Poisson(p) => poisson_problem(p),
            Instance::DOpt(d) => dopt_problem(d),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut row = |vals: &mut dyn Iterator<Item = f64>| {
            let line: Vec<String> = vals.map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        };
        let mut header = String::new();
        match self {
            Instance::Poisson(p) => {
                let _ = writeln!(header, "poisson {} {} {}", p.rows(), p.cols(), p.seed);
                for r in 0..p.rows() {
                    row(&mut p.a.row(r).iter().copied());
                }
                row(&mut p.b.iter().copied());
            }
            Instance::DOpt(d) => {
                let _ = writeln!(header, "dopt {} {} {}", d.dim(), d.count(), d.seed);
                for c in 0..d.count() {
                    row(&mut d.vectors.column(c).iter().copied());
                }
            }
        }
        header + &out
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty instance file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::Parse(format!("malformed header `{header}`")));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
    let (m, n) = (num(fields[1])?, num(fields[2])?);
    let seed = fields[3]
        .parse::<u64>()
        .map_err(|e| Error::Parse(format!("seed `{}`: {e}", fields[3])))?;

    let mut row = |len: usize| -> Result<Vec<f64>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("instance file is truncated".into()))?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != len {
            return Err(Error::Parse(format!("expected {len} entries, found {}", vals.len())));
        }
        Ok(vals)
    };

    let instance = match fields[0] {
        "poisson" => {
            let mut entries = Vec::with_capacity(m * n);
            for _ in 0..m {
                entries.extend(row(n)?);
            }
            let b = row(m)?;
            Instance::Poisson(PoissonInstance::new(DMatrix::from_row_slice(m, n, &entries), b, seed)?)
        }
        "dopt" => {
            let mut entries = Vec::with_capacity(m * n);
            for _ in 0..n {
                entries.extend(row(m)?);
            }
            Instance::DOpt(DOptInstance::new(DMatrix::from_column_slice(m, n, &entries), seed)?)
        }
        other => return Err(Error::Parse(format!("unknown instance kind `{other}`"))),
    };
    if lines.next().is_some() {
        return Err(Error::Parse("trailing data after instance".into()));
    }
    Ok(instance)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, instance.to_text())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{generate_dopt, generate_poisson};
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let p = Instance::Poisson(generate_poisson(4, 3, 7));
        assert_eq!(parse_instance(&p.to_text()).unwrap(), p);
        let d = Instance::DOpt(generate_dopt(2, 5, 7).unwrap());
        assert_eq!(parse_instance(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(parse_instance("").is_err());
        assert!(parse_instance("poisson 1 1 0\n1.0\n").is_err());
        assert!(parse_instance("poisson 1 1 0\n1.0\n-1.0\n").is_err());
        assert!(parse_instance("lasso 1 1 0\n1\n1\n").is_err());
        assert!(parse_instance("poisson 1 1 0\n1.0\n1.0\n2.0\n").is_err());
    }
}
