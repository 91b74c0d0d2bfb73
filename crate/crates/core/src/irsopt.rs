//! Reflect-side block: IRS phases for fixed transmit vectors.
//!
//! With `h̄_i = H_i f1` and `ĥ_i = H_i f2` every received power is a quadratic
//! form in `ṽ = [v; 1]`. Lifting `Ṽ = ṽ ṽ^H` with unit-diagonal pins and
//! applying the same `-ln x` bound as the transmit block yields a concave
//! program for fixed bound parameters `z`. Phases are read off candidate
//! vectors drawn from the relaxed `Ṽ`.

use std::f64::consts::LN_2;

use rand::Rng;

use crate::channel::ChannelSet;
use crate::cvxsolver::{
    solve_with, DiagonalPin, LogTraceProgram, SolverOptions, SolverReport, SolverStatus,
};
use crate::error::{invalid, Result};
use crate::numerics::{ComplexVector, HermitianMatrix};
use crate::secrecy::{check_dims, ReflectVector, TxSolution};
use crate::txopt::{
    bounded_program, gaussian_draw, log_bound, EffectiveChannels, Gram, RANK_ONE_RATIO,
};

/// Relative size of the last entry below which a candidate has no usable
/// phase reference.
const REFERENCE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ReflectOptions {
    /// Relative change of the objective that ends the alternation.
    pub tol: f64,
    pub max_iter: usize,
    /// Gaussian randomization draws at extraction.
    pub n_rand: usize,
    pub solver: SolverOptions,
}

impl Default for ReflectOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 30,
            n_rand: 200,
            solver: SolverOptions::default(),
        }
    }
}

/// Relaxed reflect iterate with its bound parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectIterate {
    pub v: HermitianMatrix,
    pub z_b: f64,
    pub z_e: Vec<f64>,
    /// Bounded objective at `(Ṽ, z)`, in bits.
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct ReflectOutcome {
    pub reflect: ReflectVector,
    pub relaxed: ReflectIterate,
    /// Secrecy rate (bits) of the relaxed iterate after each accepted
    /// update; the first entry is the starting point.
    pub trace: Vec<f64>,
    pub relaxed_rate: f64,
    pub recovered_rate: f64,
    /// Certified optimum (bits) of the last converged relaxed solve at its fixed
    /// bound parameters; NaN when none converged.
    pub relaxed_bound: f64,
    /// Bounded objective (bits) of the extracted phases at the same bound
    /// parameters.
    pub recovered_bounded: f64,
    pub solver_iterations: usize,
    pub solver_failures: usize,
    /// Extraction had to regularize a vanishing reference entry.
    pub regularized: bool,
}

/// Signal and jamming vectors seen through the IRS: `h̄_i = H_i f1`,
/// `ĥ_i = H_i f2`. Index 0 is Bob, then the Eves in order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectVectors {
    pub signal: Vec<ComplexVector>,
    pub jam: Vec<ComplexVector>,
}

impl ReflectVectors {
    pub fn dim(&self) -> usize {
        self.signal[0].len()
    }

    /// `(H̄_i, Ĥ_i)` outer products.
    pub fn matrices(&self) -> (Vec<HermitianMatrix>, Vec<HermitianMatrix>) {
        (
            self.signal.iter().map(HermitianMatrix::outer).collect(),
            self.jam.iter().map(HermitianMatrix::outer).collect(),
        )
    }

    fn rate(&self, i: usize, quad: &dyn Fn(&ComplexVector) -> f64, gamma0: f64) -> f64 {
        let s = gamma0 * quad(&self.signal[i]);
        let j = gamma0 * quad(&self.jam[i]);
        (s + j).ln_1p() - j.ln_1p()
    }

    fn secrecy(&self, quad: &dyn Fn(&ComplexVector) -> f64, gamma0: f64) -> f64 {
        let eves = (1..self.signal.len())
            .map(|i| self.rate(i, quad, gamma0))
            .fold(f64::NEG_INFINITY, f64::max);
        self.rate(0, quad, gamma0) - eves
    }

    /// Secrecy rate in nats of an extended vector.
    pub fn secrecy_nats(&self, v_ext: &ComplexVector, gamma0: f64) -> f64 {
        self.secrecy(&|h: &ComplexVector| v_ext.dotc(h).norm_sqr(), gamma0)
    }

    /// Secrecy rate in nats of a lifted `Ṽ`.
    pub fn secrecy_nats_relaxed(&self, v: &HermitianMatrix, gamma0: f64) -> f64 {
        self.secrecy(&|h: &ComplexVector| v.quad_form(h), gamma0)
    }
}

pub fn effective_vectors(channels: &ChannelSet, tx: &TxSolution) -> Result<ReflectVectors> {
    check_dims(channels, tx, channels.n() + 1)?;
    let all = std::iter::once(&channels.composite_b).chain(&channels.composite_e);
    let (signal, jam) = all.map(|h| (h * &tx.f1, h * &tx.f2)).unzip();
    Ok(ReflectVectors { signal, jam })
}

/// Closed-form bound parameters `z_b = 1/(γ0 Tr(Ĥ_b Ṽ) + 1)` and
/// `z_e = 1/(γ0 Tr((H̄_e + Ĥ_e) Ṽ) + 1)`.
pub fn update_z(v: &HermitianMatrix, vecs: &ReflectVectors, gamma0: f64) -> (f64, Vec<f64>) {
    let z_b = 1.0 / (gamma0 * v.quad_form(&vecs.jam[0]) + 1.0);
    let z_e = (1..vecs.signal.len())
        .map(|i| 1.0 / (gamma0 * (v.quad_form(&vecs.signal[i]) + v.quad_form(&vecs.jam[i])) + 1.0))
        .collect();
    (z_b, z_e)
}

/// Bounded objective in nats.
pub fn bounded_objective(
    v: &HermitianMatrix,
    z_b: f64,
    z_e: &[f64],
    vecs: &ReflectVectors,
    gamma0: f64,
) -> f64 {
    let q = |h: &ComplexVector| gamma0 * v.quad_form(h);
    let psi_b =
        (q(&vecs.signal[0]) + q(&vecs.jam[0])).ln_1p() + log_bound(z_b, q(&vecs.jam[0]) + 1.0);
    let psi_e = z_e
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            -log_bound(z, q(&vecs.signal[k + 1]) + q(&vecs.jam[k + 1]) + 1.0)
                - q(&vecs.jam[k + 1]).ln_1p()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    psi_b - psi_e
}

/// The concave reflect subproblem for fixed bound parameters, with unit
/// diagonal pins on `Ṽ`.
pub fn build_p2_2(
    z_b: f64,
    z_e: &[f64],
    vecs: &ReflectVectors,
    gamma0: f64,
) -> Result<LogTraceProgram> {
    if !(z_b > 0.0) || z_e.iter().any(|z| !(*z > 0.0)) {
        return invalid("bound parameters must be positive");
    }
    if z_e.is_empty() || z_e.len() + 1 != vecs.signal.len() || vecs.jam.len() != vecs.signal.len() {
        return invalid("need one bound parameter per eavesdropper and at least one eavesdropper");
    }
    let n1 = vecs.dim();
    let signal = parts(&vecs.signal);
    let jam = parts(&vecs.jam);
    let mut p = bounded_program(vec![n1], gamma0, z_b, z_e, &signal, &jam);
    p.pins = (0..n1)
        .map(|index| DiagonalPin {
            var: 0,
            index,
            value: 1.0,
        })
        .collect();
    Ok(p)
}

fn parts(hs: &[ComplexVector]) -> Vec<Vec<(usize, Gram<'_>)>> {
    hs.iter()
        .map(|h| {
            if h.iter().any(|z| z.norm_sqr() > 0.0) {
                vec![(0, Gram::Factor(h))]
            } else {
                Vec::new()
            }
        })
        .collect()
}

/// Maximizes the bounded objective over unit-diagonal PSD `Ṽ`; the returned
/// matrix satisfies the pins exactly.
pub fn solve_v(
    z_b: f64,
    z_e: &[f64],
    vecs: &ReflectVectors,
    gamma0: f64,
    opts: &SolverOptions,
) -> Result<(HermitianMatrix, SolverReport)> {
    let program = build_p2_2(z_b, z_e, vecs, gamma0)?;
    let report = solve_with(&program, opts)?;
    let mut m = report.variables[0].as_matrix().clone();
    for i in 0..m.nrows() {
        m[(i, i)] = crate::numerics::ONE;
    }
    Ok((HermitianMatrix::symmetrized(m), report))
}

/// Unit-modulus phases `v_n = exp(j angle(ṽ_n / ṽ_{N+1}))` of a candidate,
/// or `None` when the reference entry vanishes.
pub fn project_phases(candidate: &ComplexVector) -> Option<ReflectVector> {
    let n = candidate.len() - 1;
    let reference = candidate[n];
    if !(reference.norm() > REFERENCE_TOL * candidate.norm()) {
        return None;
    }
    Some(ReflectVector::from_vector_angles(
        (0..n).map(|i| (candidate[i] / reference).arg()),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub reflect: ReflectVector,
    pub value: f64,
    pub regularized: bool,
}

/// Phases from a relaxed `Ṽ`: the principal eigenvector and `n_rand` draws
/// from `CN(0, Ṽ)` (only the principal vector when `Ṽ` is numerically rank
/// one), plus any `extra` configurations, ranked by `objective`. Earlier
/// candidates win ties, so `extra` entries take precedence.
pub fn extract_v<R: Rng + ?Sized>(
    v: &HermitianMatrix,
    objective: &dyn Fn(&ReflectVector) -> f64,
    n_rand: usize,
    extra: &[ReflectVector],
    rng: &mut R,
) -> Extraction {
    let eig = v.eig();
    let principal = eig.vectors.column(0).into_owned();
    let mut candidates: Vec<ReflectVector> = extra.to_vec();
    let mut drawn = 0;
    if let Some(r) = project_phases(&principal) {
        candidates.push(r);
        drawn += 1;
    }
    let lam1 = eig.values[0];
    let lam2 = eig.values.get(1).copied().unwrap_or(0.0).max(0.0);
    if !(lam2 <= RANK_ONE_RATIO * lam1) {
        for _ in 0..n_rand {
            if let Some(r) = project_phases(&gaussian_draw(&eig.values, &eig.vectors, rng)) {
                candidates.push(r);
                drawn += 1;
            }
        }
    }
    let mut regularized = false;
    if drawn == 0 {
        let mut fallback = principal.clone();
        let n = fallback.len() - 1;
        fallback[n] += crate::numerics::C64::new(REFERENCE_TOL * principal.norm().max(1.0), 0.0);
        let angles = (0..n).map(|i| fallback[i].arg() - fallback[n].arg());
        candidates.push(ReflectVector::from_vector_angles(angles));
        regularized = true;
    }
    let mut best: Option<(f64, ReflectVector)> = None;
    for c in candidates {
        let val = objective(&c);
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, c));
        }
    }
    let (value, reflect) = best.expect("at least one candidate");
    Extraction {
        reflect,
        value,
        regularized,
    }
}

/// Cascade-aligned start: each reflected path is co-phased with the direct
/// path for a beamformer matched to Bob's channel at zero phases.
pub fn initial_reflect(channels: &ChannelSet) -> ReflectVector {
    let n = channels.n();
    let zero = ReflectVector::zero_phases(n);
    let eff = match EffectiveChannels::new(channels, &zero.extended()) {
        Ok(e) => e,
        Err(_) => return zero,
    };
    let nb = eff.bob.norm();
    if !(nb > 0.0) {
        return zero;
    }
    let f = eff.bob.unscale(nb);
    let cascade = &channels.h_ar * &f;
    let direct = channels.h_ab.dotc(&f).arg();
    let phases = (0..n)
        .map(|i| channels.h_rb[i].arg() - cascade[i].arg() + direct)
        .collect();
    ReflectVector::from_phases(phases)
}

/// Alternates closed-form bound updates with relaxed solves for fixed
/// transmit vectors, starting from `start`, then extracts phases.
///
/// `start` stays in the extraction pool, so the recovered rate never falls
/// below the starting rate. An update that fails or lowers the rate is
/// rejected and ends the alternation.
pub fn optimize_reflect<R: Rng + ?Sized>(
    channels: &ChannelSet,
    tx: &TxSolution,
    gamma0: f64,
    opts: &ReflectOptions,
    start: &ReflectVector,
    rng: &mut R,
) -> Result<ReflectOutcome> {
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return invalid("γ0 must be finite and > 0");
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return invalid("reflect tolerance must be positive and max_iter non-zero");
    }
    if start.len() != channels.n() {
        return invalid(format!("start must have N = {} phases", channels.n()));
    }
    let vecs = effective_vectors(channels, tx)?;
    let objective = |r: &ReflectVector| vecs.secrecy_nats(&r.extended(), gamma0);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut failures = 0;
    let mut v = HermitianMatrix::outer(&start.extended());
    let mut value = vecs.secrecy_nats_relaxed(&v, gamma0);
    trace.push(value / LN_2);
    // Bound parameters and certified optimum of the most recent converged solve.
    let mut last_solve: Option<(f64, Vec<f64>, f64)> = None;
    for _ in 0..opts.max_iter {
        let (z_b, z_e) = update_z(&v, &vecs, gamma0);
        let (new_v, report) = solve_v(z_b, &z_e, &vecs, gamma0, &opts.solver)?;
        iterations += report.iterations;
        if report.status == SolverStatus::Infeasible || !report.objective.is_finite() {
            failures += 1;
            log::debug!("reflect solve failed: {:?}", report.status);
            break;
        }
        if !report.converged() {
            failures += 1;
            log::debug!("reflect solve stopped early: {:?}", report.status);
        } else {
            last_solve = Some((z_b, z_e, report.objective));
        }
        let new_value = vecs.secrecy_nats_relaxed(&new_v, gamma0);
        if !(new_value > value) {
            break;
        }
        let previous = value;
        v = new_v;
        value = new_value;
        trace.push(value / LN_2);
        if (value - previous).abs() <= opts.tol * previous.abs().max(1.0) {
            break;
        }
    }
    let ex = extract_v(
        &v,
        &objective,
        opts.n_rand,
        std::slice::from_ref(start),
        rng,
    );
    let (relaxed_bound, recovered_bounded) = match last_solve {
        Some((z_b, z_e, optimum)) => {
            let lifted = HermitianMatrix::outer(&ex.reflect.extended());
            (
                optimum / LN_2,
                bounded_objective(&lifted, z_b, &z_e, &vecs, gamma0) / LN_2,
            )
        }
        None => (f64::NAN, f64::NAN),
    };
    let (z_b, z_e) = update_z(&v, &vecs, gamma0);
    let objective_bits = bounded_objective(&v, z_b, &z_e, &vecs, gamma0) / LN_2;
    Ok(ReflectOutcome {
        recovered_rate: ex.value / LN_2,
        reflect: ex.reflect,
        relaxed: ReflectIterate {
            v,
            z_b,
            z_e,
            objective: objective_bits,
        },
        trace,
        relaxed_rate: value / LN_2,
        relaxed_bound,
        recovered_bounded,
        solver_iterations: iterations,
        solver_failures: failures,
        regularized: ex.regularized,
    })
}
