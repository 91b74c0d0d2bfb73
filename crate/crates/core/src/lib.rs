//! Secrecy-rate optimization for IRS-assisted MISO links with artificial noise.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cvxsolver;
pub mod error;
pub mod harness;
pub mod irsopt;
pub mod numerics;
pub mod secrecy;
pub mod txopt;

pub use channel::{build_scenario, ChannelParams, ChannelSet, GeometryConfig, Setup};
pub use cvxsolver::{LogTraceProgram, SolverOptions, SolverReport, SolverStatus};
pub use error::{Error, Result};
pub use harness::{algorithm2, sweep, Axis, Baseline, RunRecord, ScenarioConfig, SweepTable};
pub use irsopt::{optimize_reflect, ReflectOptions};
pub use numerics::{ComplexMatrix, ComplexVector, HermitianMatrix, C64};
pub use secrecy::{secrecy_objective, ReflectVector, SecrecyValue, TxSolution};
pub use txopt::{algorithm1, TxOptions};
