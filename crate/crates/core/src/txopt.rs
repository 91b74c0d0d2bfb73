//! Transmit-side block: beamformer `f1` and artificial noise `f2` for a
//! fixed reflect vector.
//!
//! The secrecy rate is a difference of log-ratios. Each `-ln x` is replaced
//! by its tight bound `max_t (-t x + ln t + 1)` (maximizer `t = 1/x`), which
//! turns the lifted problem in `(F1, F2) = (f1 f1^H, f2 f2^H)` into a
//! concave program for fixed `t`. The optimizer alternates closed-form `t`
//! updates with interior-point solves, then recovers vectors by Gaussian
//! randomization.

use std::f64::consts::LN_2;

use rand::Rng;

use crate::channel::ChannelSet;
use crate::cvxsolver::{
    solve_with, AffineForm, ConstraintKind, EpigraphRow, LinearConstraint, LogTerm,
    LogTraceProgram, SolverOptions, SolverStatus,
};
use crate::error::{invalid, Result};
use crate::numerics::{cn_vector, ComplexVector, HermitianMatrix, C64};
use crate::secrecy::TxSolution;

/// Eigenvalue ratio `λ2/λ1` below which a relaxed solution counts as rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;
/// Share of the power given to the beamformer at initialization.
pub const INITIAL_SIGNAL_SHARE: f64 = 0.9;

#[derive(Clone, Debug)]
pub struct TxOptions {
    /// Relative change of the objective that ends the alternation.
    pub tol: f64,
    pub max_iter: usize,
    /// Gaussian randomization draws.
    pub n_rand: usize,
    /// `false` removes the jamming variable (`F2 = 0`).
    pub artificial_noise: bool,
    pub solver: SolverOptions,
}

impl Default for TxOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 30,
            n_rand: 200,
            artificial_noise: true,
            solver: SolverOptions::default(),
        }
    }
}

/// Relaxed transmit iterate with its bound parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TxIterate {
    pub f1: HermitianMatrix,
    pub f2: HermitianMatrix,
    pub t_b: f64,
    pub t_e: Vec<f64>,
    /// Bounded objective at `(F, t)`, in bits.
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct TxOutcome {
    pub solution: TxSolution,
    pub relaxed: TxIterate,
    /// Secrecy rate (bits) of the relaxed iterate after each accepted
    /// update; the first entry is the starting point.
    pub trace: Vec<f64>,
    /// Secrecy rate of the final relaxed iterate, in bits.
    pub relaxed_rate: f64,
    /// Secrecy rate of `solution`, in bits.
    pub recovered_rate: f64,
    /// Certified optimum (bits) of the last converged relaxed solve at its fixed
    /// bound parameters; NaN when none converged.
    pub relaxed_bound: f64,
    /// Bounded objective (bits) of the recovered rank-one point at the same
    /// bound parameters. Never exceeds `relaxed_bound` by more than the
    /// solver tolerance.
    pub recovered_bounded: f64,
    pub solver_iterations: usize,
    pub solver_failures: usize,
}

/// Effective transmit channels `h̃_i = H_i^H ṽ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveChannels {
    pub bob: ComplexVector,
    pub eves: Vec<ComplexVector>,
}

impl EffectiveChannels {
    pub fn new(channels: &ChannelSet, v_ext: &ComplexVector) -> Result<Self> {
        if v_ext.len() != channels.n() + 1 {
            return invalid(format!(
                "extended reflect vector must have {} entries",
                channels.n() + 1
            ));
        }
        Ok(Self {
            bob: channels.composite_b.ad_mul(v_ext),
            eves: channels
                .composite_e
                .iter()
                .map(|h| h.ad_mul(v_ext))
                .collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.bob.len()
    }

    /// Secrecy rate in nats of rank-one transmit vectors.
    pub fn secrecy_nats(&self, f1: &ComplexVector, f2: &ComplexVector, gamma0: f64) -> f64 {
        let rate = |h: &ComplexVector| {
            let s = gamma0 * h.dotc(f1).norm_sqr();
            let j = gamma0 * h.dotc(f2).norm_sqr();
            (s + j).ln_1p() - j.ln_1p()
        };
        rate(&self.bob) - self.eves.iter().map(rate).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Secrecy rate in nats of lifted transmit covariances.
    pub fn secrecy_nats_relaxed(
        &self,
        f1: &HermitianMatrix,
        f2: &HermitianMatrix,
        gamma0: f64,
    ) -> f64 {
        let rate = |h: &ComplexVector| {
            let s = gamma0 * f1.quad_form(h);
            let j = gamma0 * f2.quad_form(h);
            (s + j).ln_1p() - j.ln_1p()
        };
        rate(&self.bob) - self.eves.iter().map(rate).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `H̃_i = h̃_i h̃_i^H` for Bob and every Eve.
pub fn effective_channels(
    channels: &ChannelSet,
    v_ext: &ComplexVector,
) -> Result<(HermitianMatrix, Vec<HermitianMatrix>)> {
    let eff = EffectiveChannels::new(channels, v_ext)?;
    Ok((
        HermitianMatrix::outer(&eff.bob),
        eff.eves.iter().map(HermitianMatrix::outer).collect(),
    ))
}

/// Closed-form bound parameters `t_b = 1/(γ0 Tr(H̃_b F2) + 1)` and
/// `t_e = 1/(γ0 Tr(H̃_e (F1 + F2)) + 1)`.
pub fn update_t(
    f1: &HermitianMatrix,
    f2: &HermitianMatrix,
    h_b: &HermitianMatrix,
    h_e: &[HermitianMatrix],
    gamma0: f64,
) -> (f64, Vec<f64>) {
    let tr = |a: &HermitianMatrix, x: &HermitianMatrix| {
        crate::numerics::trace_product(a.as_matrix(), x.as_matrix())
    };
    let t_b = 1.0 / (gamma0 * tr(h_b, f2) + 1.0);
    let t_e = h_e
        .iter()
        .map(|h| 1.0 / (gamma0 * (tr(h, f1) + tr(h, f2)) + 1.0))
        .collect();
    (t_b, t_e)
}

/// `-t x + ln t + 1`, the bound on `-ln x` that is tight at `t = 1/x`.
pub fn log_bound(t: f64, x: f64) -> f64 {
    -t * x + t.ln() + 1.0
}

/// Bounded objective in nats: Bob's term minus the worst Eve term.
pub fn bounded_objective(
    f1: &HermitianMatrix,
    f2: &HermitianMatrix,
    t_b: f64,
    t_e: &[f64],
    h_b: &HermitianMatrix,
    h_e: &[HermitianMatrix],
    gamma0: f64,
) -> f64 {
    let tr = |a: &HermitianMatrix, x: &HermitianMatrix| {
        crate::numerics::trace_product(a.as_matrix(), x.as_matrix())
    };
    let phi_b =
        (gamma0 * (tr(h_b, f1) + tr(h_b, f2))).ln_1p() + log_bound(t_b, gamma0 * tr(h_b, f2) + 1.0);
    let phi_e = h_e
        .iter()
        .zip(t_e)
        .map(|(h, &t)| {
            -log_bound(t, gamma0 * (tr(h, f1) + tr(h, f2)) + 1.0) - (gamma0 * tr(h, f2)).ln_1p()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    phi_b - phi_e
}

/// A channel entering the program either as a factor `h` of `h h^H` or as
/// a general Hermitian matrix.
#[derive(Clone, Copy)]
pub(crate) enum Gram<'a> {
    Factor(&'a ComplexVector),
    Matrix(&'a HermitianMatrix),
}

impl Gram<'_> {
    pub(crate) fn add(self, form: AffineForm, var: usize, weight: f64) -> AffineForm {
        match self {
            Gram::Factor(h) => form.with_outer(var, weight, h.clone()),
            Gram::Matrix(a) => form.with_term(var, a.scaled(weight)),
        }
    }
}

/// Shared shape of both relaxed subproblems: maximize
/// `ln(g·(S_b + J_b) + 1) - t_b (g·J_b + 1) + ln t_b + 1 - t` subject to
/// `t_e (g·(S_e + J_e) + 1) - ln(g·J_e + 1) - ln t_e - 1 <= t`, where `S` and
/// `J` are trace forms of the signal and jamming parts. `signal` and `jam`
/// map each node to its list of `(variable, Gram)` contributions.
pub(crate) fn bounded_program(
    dims: Vec<usize>,
    gain: f64,
    t_b: f64,
    t_e: &[f64],
    signal: &[Vec<(usize, Gram<'_>)>],
    jam: &[Vec<(usize, Gram<'_>)>],
) -> LogTraceProgram {
    let sum = |parts: &[(usize, Gram<'_>)], w: f64, form: AffineForm| {
        parts.iter().fold(form, |f, (var, g)| g.add(f, *var, w))
    };
    let mut p = LogTraceProgram::new(dims);
    let total_b = sum(
        &jam[0],
        gain,
        sum(&signal[0], gain, AffineForm::constant(1.0)),
    );
    p.objective_logs.push(LogTerm::new(1.0, total_b));
    p.objective_linear = sum(
        &jam[0],
        -t_b * gain,
        AffineForm::constant(-t_b + t_b.ln() + 1.0),
    );
    for (k, &t) in t_e.iter().enumerate() {
        let linear = sum(
            &jam[k + 1],
            t * gain,
            sum(
                &signal[k + 1],
                t * gain,
                AffineForm::constant(t - t.ln() - 1.0),
            ),
        );
        let logs = if jam[k + 1].is_empty() {
            Vec::new()
        } else {
            vec![LogTerm::new(
                1.0,
                sum(&jam[k + 1], gain, AffineForm::constant(1.0)),
            )]
        };
        p.epigraph.push(EpigraphRow { linear, logs });
    }
    p
}

fn transmit_program(
    grams: &[Gram<'_>],
    t_b: f64,
    t_e: &[f64],
    gain: f64,
    budget: f64,
    m: usize,
    artificial_noise: bool,
) -> LogTraceProgram {
    let signal: Vec<Vec<(usize, Gram<'_>)>> = grams.iter().map(|g| vec![(0, *g)]).collect();
    let jam: Vec<Vec<(usize, Gram<'_>)>> = grams
        .iter()
        .map(|g| {
            if artificial_noise {
                vec![(1, *g)]
            } else {
                Vec::new()
            }
        })
        .collect();
    let dims = if artificial_noise {
        vec![m, m]
    } else {
        vec![m]
    };
    let mut p = bounded_program(dims, gain, t_b, t_e, &signal, &jam);
    let mut power = AffineForm::constant(0.0).with_term(0, HermitianMatrix::identity(m));
    if artificial_noise {
        power = power.with_term(1, HermitianMatrix::identity(m));
    }
    p.constraints.push(LinearConstraint {
        form: power,
        kind: ConstraintKind::LessEq,
        bound: budget,
    });
    p
}

/// The concave transmit subproblem for fixed bound parameters: variables
/// `(F1, F2)`, power budget `Tr(F1 + F2) <= p_max`.
pub fn build_p1_5(
    t_b: f64,
    t_e: &[f64],
    h_b: &HermitianMatrix,
    h_e: &[HermitianMatrix],
    gamma0: f64,
    p_max: f64,
) -> Result<LogTraceProgram> {
    if !(t_b > 0.0) || t_e.iter().any(|t| !(*t > 0.0)) {
        return invalid("bound parameters must be positive");
    }
    if t_e.len() != h_e.len() || h_e.is_empty() {
        return invalid("need one bound parameter per eavesdropper and at least one eavesdropper");
    }
    let m = h_b.dim();
    if h_e.iter().any(|h| h.dim() != m) {
        return invalid("effective channel matrices must share one dimension");
    }
    let grams: Vec<Gram<'_>> = std::iter::once(h_b).chain(h_e).map(Gram::Matrix).collect();
    Ok(transmit_program(&grams, t_b, t_e, gamma0, p_max, m, true))
}

/// Draws `ξ ~ CN(0, F)` from an eigendecomposition `F = U Λ U^H`.
pub(crate) fn gaussian_draw<R: Rng + ?Sized>(
    values: &[f64],
    vectors: &crate::numerics::ComplexMatrix,
    rng: &mut R,
) -> ComplexVector {
    let g = cn_vector(values.len(), rng);
    let mut out = ComplexVector::zeros(values.len());
    for (j, &lam) in values.iter().enumerate() {
        if lam > 0.0 {
            out += vectors.column(j) * (g[j] * lam.sqrt());
        }
    }
    out
}

/// Principal-eigenvector and Gaussian-randomization candidates for `F`,
/// each with power `Tr(F)`. Returns only the principal vector when `F` is
/// numerically rank one, and nothing when `F` is zero.
pub(crate) fn rank1_candidates<R: Rng + ?Sized>(
    f: &HermitianMatrix,
    n_rand: usize,
    rng: &mut R,
) -> Vec<ComplexVector> {
    let eig = f.eig();
    let lam1 = eig.values.first().copied().unwrap_or(0.0);
    if !(lam1 > 0.0) {
        return Vec::new();
    }
    let principal = eig.vectors.column(0) * C64::new(lam1.sqrt(), 0.0);
    let lam2 = eig.values.get(1).copied().unwrap_or(0.0).max(0.0);
    if lam2 / lam1 <= RANK_ONE_RATIO {
        return vec![principal];
    }
    let power: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
    let mut out = Vec::with_capacity(n_rand + 1);
    out.push(principal.clone() * C64::new((power / lam1).sqrt(), 0.0));
    for _ in 0..n_rand {
        let xi = gaussian_draw(&eig.values, &eig.vectors, rng);
        let n2 = xi.norm_squared();
        if n2 > 0.0 {
            out.push(xi * C64::new((power / n2).sqrt(), 0.0));
        }
    }
    out
}

/// Rank-one vector from a relaxed covariance.
///
/// A numerically rank-one `F` returns `sqrt(λ1) u1`; otherwise the best of
/// the principal direction and `n_rand` draws from `CN(0, F)`, each scaled to
/// power `Tr(F)`, under `objective`.
pub fn recover_rank1<R: Rng + ?Sized>(
    f: &HermitianMatrix,
    objective: &dyn Fn(&ComplexVector) -> f64,
    n_rand: usize,
    rng: &mut R,
) -> ComplexVector {
    let candidates = rank1_candidates(f, n_rand, rng);
    let mut best: Option<(f64, ComplexVector)> = None;
    for c in candidates {
        let val = objective(&c);
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, c));
        }
    }
    best.map(|(_, c)| c)
        .unwrap_or_else(|| ComplexVector::zeros(f.dim()))
}

/// Jointly recovers `(f1, f2)` from `(F1, F2)`: pairs of candidates drawn
/// from both covariances plus the principal pair and any extra pairs
/// supplied, ranked by the true secrecy rate.
pub fn recover_pair<R: Rng + ?Sized>(
    eff: &EffectiveChannels,
    f1: &HermitianMatrix,
    f2: &HermitianMatrix,
    gamma0: f64,
    n_rand: usize,
    extra: &[TxSolution],
    rng: &mut R,
) -> (TxSolution, f64) {
    let m = eff.m();
    let c1 = rank1_candidates(f1, n_rand, rng);
    let c2 = rank1_candidates(f2, n_rand, rng);
    let zero = ComplexVector::zeros(m);
    let pick = |c: &[ComplexVector], i: usize| {
        c.get(i.min(c.len().saturating_sub(1)))
            .cloned()
            .unwrap_or(zero.clone())
    };
    let pairs = c1.len().max(c2.len()).max(1);
    let mut best = TxSolution {
        f1: pick(&c1, 0),
        f2: pick(&c2, 0),
    };
    let mut best_val = eff.secrecy_nats(&best.f1, &best.f2, gamma0);
    for i in 1..pairs {
        let cand = TxSolution {
            f1: pick(&c1, i),
            f2: pick(&c2, i),
        };
        let val = eff.secrecy_nats(&cand.f1, &cand.f2, gamma0);
        if val > best_val {
            best_val = val;
            best = cand;
        }
    }
    for cand in extra {
        let val = eff.secrecy_nats(&cand.f1, &cand.f2, gamma0);
        if val > best_val {
            best_val = val;
            best = cand.clone();
        }
    }
    (best, best_val)
}

/// MRT beamformer with most of the power plus jamming orthogonal to Bob's
/// effective channel with the rest.
pub fn initial_transmit<R: Rng + ?Sized>(
    eff: &EffectiveChannels,
    p_max: f64,
    artificial_noise: bool,
    rng: &mut R,
) -> TxSolution {
    let m = eff.m();
    let hb = &eff.bob;
    let nb = hb.norm();
    let dir = if nb > 0.0 {
        hb.unscale(nb)
    } else {
        ComplexVector::from_element(m, C64::new(1.0 / (m as f64).sqrt(), 0.0))
    };
    if !artificial_noise {
        return TxSolution {
            f1: dir * C64::new(p_max.sqrt(), 0.0),
            f2: ComplexVector::zeros(m),
        };
    }
    let f1 = &dir * C64::new((INITIAL_SIGNAL_SHARE * p_max).sqrt(), 0.0);
    let r = cn_vector(m, rng);
    let mut orth = &r - &dir * dir.dotc(&r);
    let mut n = orth.norm();
    if !(n > 1e-12 * r.norm()) {
        orth = r;
        n = orth.norm();
    }
    let f2 = if n > 0.0 {
        orth.unscale(n) * C64::new(((1.0 - INITIAL_SIGNAL_SHARE) * p_max).sqrt(), 0.0)
    } else {
        ComplexVector::zeros(m)
    };
    TxSolution { f1, f2 }
}

/// Alternates closed-form bound updates with concave solves for fixed
/// `ṽ`, then recovers transmit vectors.
///
/// Starts from `start` when given (also kept as a recovery candidate), and
/// from [`initial_transmit`] otherwise. An update that fails or lowers the
/// secrecy rate is rejected and ends the alternation.
pub fn algorithm1<R: Rng + ?Sized>(
    channels: &ChannelSet,
    v_ext: &ComplexVector,
    p_max: f64,
    gamma0: f64,
    opts: &TxOptions,
    start: Option<&TxSolution>,
    rng: &mut R,
) -> Result<TxOutcome> {
    if !(p_max >= 0.0) || !p_max.is_finite() || !(gamma0 > 0.0) || !gamma0.is_finite() {
        return invalid("power budget must be finite and >= 0, γ0 finite and > 0");
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return invalid("tx tolerance must be positive and max_iter non-zero");
    }
    let eff = EffectiveChannels::new(channels, v_ext)?;
    let m = eff.m();
    if let Some(s) = start {
        crate::secrecy::check_dims(channels, s, v_ext.len())?;
    }
    let k = eff.eves.len();
    if p_max == 0.0 {
        let zero = HermitianMatrix::zeros(m);
        let relaxed = TxIterate {
            f1: zero.clone(),
            f2: zero,
            t_b: 1.0,
            t_e: vec![1.0; k],
            objective: 0.0,
        };
        return Ok(TxOutcome {
            solution: TxSolution::zeros(m),
            relaxed,
            trace: vec![0.0],
            relaxed_rate: 0.0,
            recovered_rate: 0.0,
            relaxed_bound: f64::NAN,
            recovered_bounded: f64::NAN,
            solver_iterations: 0,
            solver_failures: 0,
        });
    }

    let point = match start {
        Some(s) => strip_noise(s.clone(), opts.artificial_noise).clamp_power(p_max),
        None => initial_transmit(&eff, p_max, opts.artificial_noise, rng),
    };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut failures = 0;
    let grams: Vec<Gram<'_>> = std::iter::once(&eff.bob)
        .chain(&eff.eves)
        .map(Gram::Factor)
        .collect();
    let h_b = HermitianMatrix::outer(&eff.bob);
    let h_e: Vec<HermitianMatrix> = eff.eves.iter().map(HermitianMatrix::outer).collect();

    let mut f1 = HermitianMatrix::outer(&point.f1);
    let mut f2 = HermitianMatrix::outer(&point.f2);
    let mut value = eff.secrecy_nats_relaxed(&f1, &f2, gamma0);
    trace.push(value / LN_2);
    // Bound parameters and certified optimum of the most recent converged solve.
    let mut last_solve: Option<(f64, Vec<f64>, f64)> = None;
    for _ in 0..opts.max_iter {
        let (t_b, t_e) = update_t(&f1, &f2, &h_b, &h_e, gamma0);
        // Variables are normalized by the budget: F = p_max * G.
        let program = transmit_program(
            &grams,
            t_b,
            &t_e,
            gamma0 * p_max,
            1.0,
            m,
            opts.artificial_noise,
        );
        let report = solve_with(&program, &opts.solver)?;
        iterations += report.iterations;
        if report.status == SolverStatus::Infeasible || !report.objective.is_finite() {
            failures += 1;
            log::debug!("transmit solve failed: {:?}", report.status);
            break;
        }
        if !report.converged() {
            failures += 1;
            log::debug!("transmit solve stopped early: {:?}", report.status);
        } else {
            last_solve = Some((t_b, t_e, report.objective));
        }
        let new_f1 = report.variables[0].scaled(p_max);
        let new_f2 = if opts.artificial_noise {
            report.variables[1].scaled(p_max)
        } else {
            HermitianMatrix::zeros(m)
        };
        let new_value = eff.secrecy_nats_relaxed(&new_f1, &new_f2, gamma0);
        if !(new_value > value) {
            break;
        }
        let previous = value;
        f1 = new_f1;
        f2 = new_f2;
        value = new_value;
        trace.push(value / LN_2);
        if (value - previous).abs() <= opts.tol * previous.abs().max(1.0) {
            break;
        }
    }

    let (recovered, _) = recover_pair(
        &eff,
        &f1,
        &f2,
        gamma0,
        opts.n_rand,
        std::slice::from_ref(&point),
        rng,
    );
    let recovered = recovered.clamp_power(p_max);
    let (relaxed_bound, recovered_bounded) = match last_solve {
        Some((t_b, t_e, optimum)) => {
            let lifted1 = HermitianMatrix::outer(&recovered.f1);
            let lifted2 = HermitianMatrix::outer(&recovered.f2);
            (
                optimum / LN_2,
                bounded_objective(&lifted1, &lifted2, t_b, &t_e, &h_b, &h_e, gamma0) / LN_2,
            )
        }
        None => (f64::NAN, f64::NAN),
    };
    let (t_b, t_e) = update_t(&f1, &f2, &h_b, &h_e, gamma0);
    let objective = bounded_objective(&f1, &f2, t_b, &t_e, &h_b, &h_e, gamma0) / LN_2;
    let recovered_rate = eff.secrecy_nats(&recovered.f1, &recovered.f2, gamma0) / LN_2;
    Ok(TxOutcome {
        solution: recovered,
        relaxed: TxIterate {
            f1,
            f2,
            t_b,
            t_e,
            objective,
        },
        trace,
        relaxed_rate: value / LN_2,
        recovered_rate,
        relaxed_bound,
        recovered_bounded,
        solver_iterations: iterations,
        solver_failures: failures,
    })
}

fn strip_noise(mut s: TxSolution, artificial_noise: bool) -> TxSolution {
    if !artificial_noise {
        s.f2 = ComplexVector::zeros(s.f2.len());
    }
    s
}
