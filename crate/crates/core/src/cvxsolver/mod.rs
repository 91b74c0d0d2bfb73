//! Interior-point solver for log-concave trace programs over Hermitian PSD
//! matrices: logs and linear functions of `Re Tr(A X)`, linear trace
//! constraints, diagonal pins and an epigraph `max_k f_k <= t`.
//!
//! Both relaxed subproblems of the alternating optimizer have this form.
//! Programs are solved by a log-barrier path-following method; see
//! [`barrier`] for the Newton step.

mod barrier;
mod program;

pub use program::{
    epigraph_wrap, AffineForm, ConstraintKind, DiagonalPin, EpigraphRow, LinearConstraint, LogTerm,
    LogTraceProgram,
};

use crate::error::{invalid, Result};
use crate::numerics::{ComplexMatrix, HermitianMatrix, C64};
use barrier::{log_det, phase_one, Compiled};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    /// The line search could not make progress; the iterate is feasible
    /// but the optimality bound was not reached.
    Stalled,
    /// No strictly feasible point was found.
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Target bound on `optimum - objective`.
    pub tol: f64,
    /// Allowed violation of equality constraints.
    pub feas_tol: f64,
    /// Total Newton steps, phase one included.
    pub max_iter: usize,
    /// Starting matrices; must be positive definite. Pinned diagonals are
    /// overwritten.
    pub initial: Option<Vec<HermitianMatrix>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            feas_tol: 1e-9,
            max_iter: 1000,
            initial: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverReport {
    pub variables: Vec<HermitianMatrix>,
    /// Epigraph slack, when the program has epigraph rows.
    pub slack: Option<f64>,
    /// True objective `base(X) - max_k f_k(X)` at `variables`.
    pub objective: f64,
    /// Certified bound on `optimum - objective` from the barrier
    /// parameter and the final Newton decrement.
    pub kkt_residual: f64,
    pub newton_decrement: f64,
    pub constraint_violation: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    /// Objective after each barrier stage.
    pub stage_objectives: Vec<f64>,
}

impl SolverReport {
    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }
}

/// Solves `program` to a certified suboptimality of `tol` within
/// `max_iter` Newton steps.
pub fn solve(program: &LogTraceProgram, tol: f64, max_iter: usize) -> Result<SolverReport> {
    solve_with(
        program,
        &SolverOptions {
            tol,
            max_iter,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_with(program: &LogTraceProgram, opts: &SolverOptions) -> Result<SolverReport> {
    program.validate()?;
    if !(opts.tol > 0.0) || !(opts.feas_tol > 0.0) || opts.max_iter == 0 {
        return invalid("solver tolerances must be positive and max_iter non-zero");
    }
    let compiled = Compiled::new(program);
    let mut xs = initial_point(program, &compiled, opts)?;
    let mut iterations = 0;

    if !compiled.interior(&xs) {
        let aux = phase_one(program, &xs);
        let aux_compiled = Compiled::new(&aux);
        let t0 = aux_compiled.rows_max(&xs) + 1.0;
        let aux_objective = |_: &[ComplexMatrix], t: f64| -t;
        let stop = |x: &[ComplexMatrix]| compiled.interior(x);
        let out = aux_compiled.run(xs, t0, opts, &aux_objective, Some(&stop));
        iterations = out.iterations;
        xs = out.xs;
        if !compiled.interior(&xs) {
            return Ok(report(
                program,
                xs,
                None,
                iterations,
                SolverStatus::Infeasible,
                f64::INFINITY,
                f64::INFINITY,
                vec![],
            ));
        }
    }

    let t0 = if compiled.has_t() {
        compiled.rows_max(&xs) + 1.0
    } else {
        0.0
    };
    let objective = |x: &[ComplexMatrix], t: f64| {
        let hs = wrap(x);
        program.base_objective(&hs) - if compiled.has_t() { t } else { 0.0 }
    };
    let remaining = SolverOptions {
        max_iter: opts.max_iter.saturating_sub(iterations).max(1),
        ..opts.clone()
    };
    let out = compiled.run(xs, t0, &remaining, &objective, None);
    let slack = compiled.has_t().then_some(out.t);
    Ok(report(
        program,
        out.xs,
        slack,
        iterations + out.iterations,
        out.status,
        out.gap,
        out.decrement,
        out.stage_objectives,
    ))
}

#[allow(clippy::too_many_arguments)]
fn report(
    program: &LogTraceProgram,
    xs: Vec<ComplexMatrix>,
    slack: Option<f64>,
    iterations: usize,
    status: SolverStatus,
    gap: f64,
    decrement: f64,
    stage_objectives: Vec<f64>,
) -> SolverReport {
    let variables = wrap(&xs);
    SolverReport {
        objective: program.objective(&variables),
        constraint_violation: program.max_violation(&variables),
        variables,
        slack,
        kkt_residual: gap,
        newton_decrement: decrement,
        iterations,
        status,
        stage_objectives,
    }
}

fn wrap(xs: &[ComplexMatrix]) -> Vec<HermitianMatrix> {
    xs.iter()
        .map(|x| HermitianMatrix::symmetrized(x.clone()))
        .collect()
}

fn initial_point(
    program: &LogTraceProgram,
    compiled: &Compiled,
    opts: &SolverOptions,
) -> Result<Vec<ComplexMatrix>> {
    let pin = |xs: &mut Vec<ComplexMatrix>| {
        for p in &program.pins {
            xs[p.var][(p.index, p.index)] = C64::new(p.value, 0.0);
        }
    };
    if let Some(init) = &opts.initial {
        if init.len() != program.dims.len()
            || init.iter().zip(&program.dims).any(|(x, d)| x.dim() != *d)
        {
            return invalid("initial point does not match the program dimensions");
        }
        let mut xs: Vec<ComplexMatrix> = init.iter().map(|x| x.as_matrix().clone()).collect();
        pin(&mut xs);
        if xs.iter().any(|x| log_det(x).is_none()) {
            return invalid("initial point must be positive definite");
        }
        return Ok(xs);
    }
    let mut scale = 1.0;
    loop {
        let mut xs: Vec<ComplexMatrix> = program
            .dims
            .iter()
            .map(|&d| ComplexMatrix::identity(d, d) * C64::new(scale, 0.0))
            .collect();
        pin(&mut xs);
        if compiled.interior(&xs) || scale < 1e-6 {
            return Ok(xs);
        }
        scale *= 0.1;
    }
}
