//! Bregman gradient methods for relatively smooth convex minimization with
//! inexact first-order oracles.
//!
//! The crate is organised bottom-up: [`geometry`] provides divergences and
//! prox maps, [`oracle`] wraps objectives with a controlled error budget,
//! [`problems`] supplies Poisson-inverse and D-optimal-design instances,
//! [`solvers`] implements the methods and their bound calculators, and
//! [`harness`] runs sweeps and audits.

// `!(x >= t)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod problems;
pub mod solvers;
pub mod vector;

pub use error::{Error, Result};
pub use harness::{run_audit, run_experiment, AuditReport, ExperimentReport, ExperimentSpec, ProblemSource};
pub use geometry::{DomainKind, DomainSpec, Geometry, GeometryKind, TseReport};
pub use oracle::{verify_conformity, DeltaSchedule, NoiseKind, NoiseModel, Oracle, OracleResponse};
pub use problems::{Objective, Problem, ReferenceOptimum, SampledReport};
pub use solvers::{solve, Method, SolverConfig, Trace, TraceRecord};
