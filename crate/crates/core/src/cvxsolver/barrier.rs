//! Log-barrier path following for [`LogTraceProgram`].
//!
//! Every functional is expanded over a deduplicated set of atoms per
//! variable: rank-one matrices `a a^H` (unit `a`) and the identity. The
//! Newton step of `ψ(u(X), t) - Σ_j ln det X_j` is solved in atom space,
//! where the metric Gram `W_ab = Re Tr(B_a X B_b X)` is positive definite
//! even when many functionals share atoms. The matrix step is
//! `Δ_j = X_j - X_j (Σ_a η_a B_a) X_j`.

use nalgebra::{DMatrix, DVector, DVectorView};

use super::program::{
    AffineForm, ConstraintKind, DiagonalPin, EpigraphRow, LinearConstraint, LogTraceProgram,
};
use super::{SolverOptions, SolverStatus};
use crate::numerics::{ComplexMatrix, ComplexVector, HermitianMatrix, C64, ONE};

const RANK_TOL: f64 = 1e-13;
const PARALLEL_TOL: f64 = 1e-12;
const TAU0: f64 = 1.0;
const MU: f64 = 10.0;
/// Squared Newton decrement at which a barrier stage counts as centred.
const CENTERED: f64 = 1e-6;
/// Below this decrement a step that fails to shrink it quadratically marks
/// the rounding floor of the Newton system; the stage is then centred too.
const FLOOR: f64 = 1e-3;
/// Inside this decrement a full Newton step is accepted without Armijo.
const QUADRATIC_REGION: f64 = 0.2;
const ARMIJO: f64 = 0.01;
const MIN_STEP: f64 = 1e-12;

enum AtomKind {
    Outer(ComplexVector),
    Identity,
}

struct Atom {
    var: usize,
    kind: AtomKind,
}

/// Sparse row `Σ_a coef_a q_a` over atom values.
type Combination = Vec<(usize, f64)>;

struct Row {
    lin: usize,
    logs: Vec<(f64, usize)>,
}

/// Functionals `0..n_psi` feed the barrier function ψ, the rest are
/// equality constraints.
pub(super) struct Compiled {
    dims: Vec<usize>,
    atoms: Vec<Atom>,
    funcs: Vec<Combination>,
    constants: Vec<f64>,
    n_psi: usize,
    eq_targets: Vec<f64>,
    pins: Vec<DiagonalPin>,
    obj_logs: Vec<(f64, usize)>,
    obj_lin: usize,
    rows: Vec<Row>,
    ineqs: Vec<(usize, f64)>,
}

pub(super) struct Outcome {
    pub xs: Vec<ComplexMatrix>,
    pub t: f64,
    pub status: SolverStatus,
    pub iterations: usize,
    pub gap: f64,
    pub decrement: f64,
    pub stage_objectives: Vec<f64>,
}

struct Direction {
    dx: Vec<ComplexMatrix>,
    dt: f64,
    lam2: f64,
}

/// Early-exit test evaluated after every Newton step.
pub(crate) type StopRule<'a> = dyn Fn(&[ComplexMatrix]) -> bool + 'a;

impl Compiled {
    pub fn new(p: &LogTraceProgram) -> Self {
        let mut c = Compiled {
            dims: p.dims.clone(),
            atoms: Vec::new(),
            funcs: Vec::new(),
            constants: Vec::new(),
            n_psi: 0,
            eq_targets: Vec::new(),
            pins: p.pins.clone(),
            obj_logs: Vec::new(),
            obj_lin: 0,
            rows: Vec::new(),
            ineqs: Vec::new(),
        };
        c.obj_logs = p
            .objective_logs
            .iter()
            .map(|l| (l.coef, c.push(&l.form)))
            .collect();
        c.obj_lin = c.push(&p.objective_linear);
        for row in &p.epigraph {
            let lin = c.push(&row.linear);
            let logs = row.logs.iter().map(|l| (l.coef, c.push(&l.form))).collect();
            c.rows.push(Row { lin, logs });
        }
        for k in p
            .constraints
            .iter()
            .filter(|k| k.kind == ConstraintKind::LessEq)
        {
            let f = c.push(&k.form);
            c.ineqs.push((f, k.bound));
        }
        c.n_psi = c.funcs.len();
        for k in p
            .constraints
            .iter()
            .filter(|k| k.kind == ConstraintKind::Equal)
        {
            c.push(&k.form);
            c.eq_targets.push(k.bound);
        }
        for pin in &p.pins {
            let mut e = ComplexVector::zeros(p.dims[pin.var]);
            e[pin.index] = ONE;
            let form = AffineForm::constant(0.0).with_outer(pin.var, 1.0, e);
            c.push(&form);
            c.eq_targets.push(pin.value);
        }
        c
    }

    fn push(&mut self, form: &AffineForm) -> usize {
        let mut comb: Combination = Vec::new();
        for (j, a) in &form.terms {
            if let Some(s) = scalar_identity(a) {
                if s != 0.0 {
                    let id = self.identity_atom(*j);
                    comb.push((id, s));
                }
                continue;
            }
            let eig = a.eig();
            let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (r, &lam) in eig.values.iter().enumerate() {
                if scale > 0.0 && lam.abs() > RANK_TOL * scale {
                    let id = self.outer_atom(*j, eig.vectors.column(r).into_owned());
                    comb.push((id, lam));
                }
            }
        }
        for (j, w, h) in &form.outers {
            let n2 = h.norm_squared();
            if *w != 0.0 && n2 > 0.0 {
                let id = self.outer_atom(*j, h.unscale(n2.sqrt()));
                comb.push((id, w * n2));
            }
        }
        comb.sort_by_key(|e| e.0);
        let mut merged: Combination = Vec::new();
        for (a, w) in comb {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 += w,
                _ => merged.push((a, w)),
            }
        }
        self.funcs.push(merged);
        self.constants.push(form.constant);
        self.funcs.len() - 1
    }

    fn identity_atom(&mut self, var: usize) -> usize {
        if let Some(i) = self
            .atoms
            .iter()
            .position(|a| a.var == var && matches!(a.kind, AtomKind::Identity))
        {
            return i;
        }
        self.atoms.push(Atom {
            var,
            kind: AtomKind::Identity,
        });
        self.atoms.len() - 1
    }

    fn outer_atom(&mut self, var: usize, unit: ComplexVector) -> usize {
        let found = self.atoms.iter().position(|a| {
            a.var == var && matches!(&a.kind, AtomKind::Outer(b) if b.dotc(&unit).norm() >= 1.0 - PARALLEL_TOL)
        });
        if let Some(i) = found {
            return i;
        }
        self.atoms.push(Atom {
            var,
            kind: AtomKind::Outer(unit),
        });
        self.atoms.len() - 1
    }

    pub fn has_t(&self) -> bool {
        !self.rows.is_empty()
    }

    /// Barrier complexity parameter.
    pub fn nu(&self) -> f64 {
        (self.dims.iter().sum::<usize>() + self.rows.len() + self.ineqs.len()) as f64
    }

    fn atom_values(&self, xs: &[ComplexMatrix]) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|a| match &a.kind {
                AtomKind::Outer(v) => v.dotc(&(&xs[a.var] * v)).re,
                AtomKind::Identity => xs[a.var].diagonal().iter().map(|z| z.re).sum(),
            })
            .collect()
    }

    fn values_from_atoms(&self, q: &[f64]) -> Vec<f64> {
        self.funcs
            .iter()
            .zip(&self.constants)
            .map(|(comb, c)| c + comb.iter().map(|&(a, w)| w * q[a]).sum::<f64>())
            .collect()
    }

    fn values(&self, xs: &[ComplexMatrix]) -> Vec<f64> {
        self.values_from_atoms(&self.atom_values(xs))
    }

    fn row_value(&self, row: &Row, u: &[f64]) -> f64 {
        u[row.lin] - row.logs.iter().map(|&(c, f)| c * u[f].ln()).sum::<f64>()
    }

    pub fn rows_max(&self, xs: &[ComplexMatrix]) -> f64 {
        let u = self.values(xs);
        self.rows
            .iter()
            .map(|r| self.row_value(r, &u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn logs_ok(&self, u: &[f64]) -> bool {
        self.obj_logs
            .iter()
            .chain(self.rows.iter().flat_map(|r| r.logs.iter()))
            .all(|&(_, f)| u[f] > 0.0)
    }

    fn domain_ok(&self, u: &[f64]) -> bool {
        self.logs_ok(u) && self.ineqs.iter().all(|&(f, b)| b - u[f] > 0.0)
    }

    /// Strictly inside the PSD cones, log domains and inequalities
    /// (equalities are not checked).
    pub fn interior(&self, xs: &[ComplexMatrix]) -> bool {
        xs.iter().all(|x| log_det(x).is_some()) && self.domain_ok(&self.values(xs))
    }

    pub fn eq_residual(&self, xs: &[ComplexMatrix]) -> f64 {
        let u = self.values(xs);
        self.eq_targets
            .iter()
            .enumerate()
            .map(|(l, target)| (target - u[self.n_psi + l]).abs())
            .fold(0.0, f64::max)
    }

    fn psi(&self, u: &[f64], t: f64, tau: f64) -> Option<f64> {
        if !self.domain_ok(u) {
            return None;
        }
        let mut obj = self
            .obj_logs
            .iter()
            .map(|&(c, f)| c * u[f].ln())
            .sum::<f64>()
            + u[self.obj_lin];
        if self.has_t() {
            obj -= t;
        }
        let mut val = -tau * obj;
        for row in &self.rows {
            let s = t - self.row_value(row, u);
            if s <= 0.0 {
                return None;
            }
            val -= s.ln();
        }
        for &(f, b) in &self.ineqs {
            val -= (b - u[f]).ln();
        }
        Some(val)
    }

    fn phi(&self, xs: &[ComplexMatrix], t: f64, tau: f64) -> Option<f64> {
        let psi = self.psi(&self.values(xs), t, tau)?;
        let mut logdet = 0.0;
        for x in xs {
            logdet += log_det(x)?;
        }
        Some(psi - logdet)
    }

    /// Gradient `b` and Hessian of ψ in atom coordinates (plus `t` last).
    /// The Hessian is returned as scaled outer products `s v vᵀ` so that
    /// the decrement can be summed without cancellation.
    fn psi_model(&self, u: &[f64], t: f64, tau: f64) -> (DVector<f64>, Vec<(f64, DVector<f64>)>) {
        let na = self.atoms.len();
        let n = na + usize::from(self.has_t());
        let dense = |comb: &Combination, s: f64| {
            let mut v = DVector::zeros(n);
            for &(a, w) in comb {
                v[a] += s * w;
            }
            v
        };
        let mut b = DVector::zeros(n);
        let mut curv = Vec::new();
        for &(c, f) in &self.obj_logs {
            let v = dense(&self.funcs[f], 1.0);
            b.axpy(-tau * c / u[f], &v, 1.0);
            curv.push((tau * c / (u[f] * u[f]), v));
        }
        b.axpy(-tau, &dense(&self.funcs[self.obj_lin], 1.0), 1.0);
        if self.has_t() {
            b[na] += tau;
            for row in &self.rows {
                let s = t - self.row_value(row, u);
                let mut ds = dense(&self.funcs[row.lin], -1.0);
                ds[na] += 1.0;
                for &(c, f) in &row.logs {
                    let v = dense(&self.funcs[f], 1.0);
                    ds.axpy(c / u[f], &v, 1.0);
                    curv.push((c / (u[f] * u[f] * s), v));
                }
                b.axpy(-1.0 / s, &ds, 1.0);
                curv.push((1.0 / (s * s), ds));
            }
        }
        for &(f, bound) in &self.ineqs {
            let s = bound - u[f];
            let v = dense(&self.funcs[f], 1.0);
            b.axpy(1.0 / s, &v, 1.0);
            curv.push((1.0 / (s * s), v));
        }
        (b, curv)
    }

    /// Newton direction in whitened coordinates. With `X = L Lᴴ` the step is
    /// `Δ = L Δ̂ Lᴴ`, the log-det Hessian becomes the identity, and
    /// `Δ̂ - I` lies in the span of the whitened atoms `Lᴴ B_a L`. That span
    /// is orthonormalized by a Householder QR per variable, so nearly
    /// parallel atoms (the rule once X approaches low rank) do not square
    /// the conditioning of the system.
    fn direction(&self, xs: &[ComplexMatrix], t: f64, tau: f64) -> Option<Direction> {
        let q = self.atom_values(xs);
        let u = self.values_from_atoms(&q);
        let (b, curv) = self.psi_model(&u, t, tau);
        let na = self.atoms.len();
        let ne = self.eq_targets.len();
        let has_t = self.has_t();

        let ls = xs.iter().map(cholesky).collect::<Option<Vec<_>>>()?;
        // Per variable: atom indices, orthonormal basis Q_j and R_j.
        let mut blocks = Vec::with_capacity(xs.len());
        let mut offset = 0;
        for (j, l) in ls.iter().enumerate() {
            let members: Vec<usize> = (0..na).filter(|&a| self.atoms[a].var == j).collect();
            let d = self.dims[j];
            if members.is_empty() {
                blocks.push((
                    members,
                    DMatrix::<f64>::zeros(d * d, 0),
                    DMatrix::<f64>::zeros(0, 0),
                    offset,
                ));
                continue;
            }
            let cols: Vec<DVector<f64>> = members
                .iter()
                .map(|&a| match &self.atoms[a].kind {
                    AtomKind::Outer(v) => {
                        let c = l.adjoint() * v;
                        herm_vec(&(&c * c.adjoint()))
                    }
                    AtomKind::Identity => herm_vec(&(l.adjoint() * l)),
                })
                .collect();
            let v = DMatrix::from_columns(&cols);
            let qr = v.qr();
            let (qm, rm) = (qr.q(), qr.r());
            let r = rm.nrows();
            blocks.push((members, qm, rm, offset));
            offset += r;
        }
        let nz = offset;
        // R^T maps z to atom coordinates: (Rᵀz)_a.
        let rt_z = |z: &DVectorView<f64>| {
            let mut p = DVector::<f64>::zeros(na);
            for (members, _, rm, off) in &blocks {
                for (col, &a) in members.iter().enumerate() {
                    p[a] = (0..rm.nrows()).map(|i| rm[(i, col)] * z[off + i]).sum();
                }
            }
            p
        };
        let r_v = |v: &DVector<f64>| {
            let mut out = DVector::<f64>::zeros(nz);
            for (members, _, rm, off) in &blocks {
                for i in 0..rm.nrows() {
                    out[off + i] = members
                        .iter()
                        .enumerate()
                        .map(|(col, &a)| rm[(i, col)] * v[a])
                        .sum();
                }
            }
            out
        };

        let nt = usize::from(has_t);
        let n = nz + nt + ne;
        let mut kkt = DMatrix::<f64>::identity(n, n);
        for i in nz..n {
            kkt[(i, i)] = 0.0;
        }
        let qv = DVector::from_column_slice(&q);
        let ba = b.rows(0, na).into_owned();
        let mut rhs = DVector::<f64>::zeros(n);
        rhs.rows_mut(0, nz).copy_from(&(-r_v(&ba)));
        if has_t {
            rhs[nz] = -b[na];
        }
        for (s, v) in &curv {
            let va = v.rows(0, na).into_owned();
            let rv = r_v(&va);
            let vq = va.dot(&qv);
            kkt.view_mut((0, 0), (nz, nz)).ger(*s, &rv, &rv, 1.0);
            rhs.rows_mut(0, nz).axpy(-s * vq, &rv, 1.0);
            if has_t {
                let vt = v[na];
                for i in 0..nz {
                    kkt[(i, nz)] += s * rv[i] * vt;
                    kkt[(nz, i)] += s * rv[i] * vt;
                }
                kkt[(nz, nz)] += s * vt * vt;
                rhs[nz] -= s * vt * vq;
            }
        }
        for (l, target) in self.eq_targets.iter().enumerate() {
            let f = self.n_psi + l;
            let mut c = DVector::<f64>::zeros(na);
            for &(a, coef) in &self.funcs[f] {
                c[a] = coef;
            }
            let rc = r_v(&c);
            let row = nz + nt + l;
            for i in 0..nz {
                kkt[(i, row)] = rc[i];
                kkt[(row, i)] = rc[i];
            }
            rhs[row] = (target - u[f]) - c.dot(&qv);
        }

        let sol = solve_kkt(kkt, &rhs, nz)?;
        let z = sol.rows(0, nz);
        let dt = if has_t { sol[nz] } else { 0.0 };

        let mut p = qv + rt_z(&z);
        if has_t {
            p = p.push(dt);
        }
        let mut lam2: f64 = curv.iter().map(|(s, v)| s * v.dot(&p).powi(2)).sum();
        let mut dx = Vec::with_capacity(xs.len());
        for ((_, qm, _, off), l) in blocks.iter().zip(&ls) {
            let d = l.nrows();
            let step = qm * z.rows(*off, qm.ncols());
            let white = ComplexMatrix::identity(d, d) + herm_unvec(&step, d);
            lam2 += white.norm_squared();
            dx.push(l * white * l.adjoint());
        }
        Some(Direction { dx, dt, lam2 })
    }

    fn reset_pins(&self, xs: &mut [ComplexMatrix]) {
        for p in &self.pins {
            xs[p.var][(p.index, p.index)] = C64::new(p.value, 0.0);
        }
    }

    /// Path following from a strictly feasible `(xs, t)`. `stop` ends the
    /// run early once it returns true for an accepted iterate.
    pub fn run(
        &self,
        mut xs: Vec<ComplexMatrix>,
        mut t: f64,
        opts: &SolverOptions,
        objective: &dyn Fn(&[ComplexMatrix], f64) -> f64,
        stop: Option<&StopRule<'_>>,
    ) -> Outcome {
        let nu = self.nu();
        let mut tau = TAU0;
        let mut iterations = 0;
        let mut stage_objectives = Vec::new();
        let mut decrement = f64::INFINITY;
        macro_rules! finish {
            ($status:expr) => {
                return Outcome {
                    gap: gap_bound(nu, decrement, tau),
                    xs,
                    t,
                    status: $status,
                    iterations,
                    decrement,
                    stage_objectives,
                }
            };
        }
        loop {
            let Some(mut phi0) = self.phi(&xs, t, tau) else {
                finish!(SolverStatus::Stalled)
            };
            let mut prev_lam2 = f64::INFINITY;
            loop {
                let eq_ok = self.eq_residual(&xs) <= opts.feas_tol;
                let Some(dir) = self.direction(&xs, t, tau) else {
                    finish!(SolverStatus::Stalled)
                };
                let lam2 = dir.lam2;
                decrement = lam2.sqrt();
                if eq_ok && (lam2 <= CENTERED || (lam2 <= FLOOR && lam2 > 0.25 * prev_lam2)) {
                    break;
                }
                // The bound holds at any point with decrement below one, so
                // an uncentred iterate can already certify the target.
                if eq_ok && stop.is_none() && gap_bound(nu, decrement, tau) <= opts.tol {
                    stage_objectives.push(objective(&xs, t));
                    finish!(SolverStatus::Converged);
                }
                prev_lam2 = lam2;
                if iterations >= opts.max_iter {
                    finish!(SolverStatus::MaxIterations);
                }
                let mut alpha = 1.0;
                let mut accepted = None;
                while alpha >= MIN_STEP {
                    let mut trial: Vec<ComplexMatrix> = xs
                        .iter()
                        .zip(&dir.dx)
                        .map(|(x, d)| {
                            let m = x + d * C64::new(alpha, 0.0);
                            (&m + m.adjoint()) * C64::new(0.5, 0.0)
                        })
                        .collect();
                    self.reset_pins(&mut trial);
                    let t_trial = t + alpha * dir.dt;
                    if let Some(phi) = self.phi(&trial, t_trial, tau) {
                        let armijo = phi <= phi0 - ARMIJO * alpha * lam2;
                        if !eq_ok || (alpha == 1.0 && decrement < QUADRATIC_REGION) || armijo {
                            accepted = Some((trial, t_trial, phi));
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                let Some((nx, nt, nphi)) = accepted else {
                    if eq_ok && decrement < QUADRATIC_REGION {
                        break;
                    }
                    finish!(SolverStatus::Stalled);
                };
                xs = nx;
                t = nt;
                phi0 = nphi;
                iterations += 1;
                log::trace!(
                    "barrier iter={iterations} tau={tau:.3e} decrement2={lam2:.3e} step={alpha:.3e} objective={:.12e}",
                    objective(&xs, t)
                );
                if let Some(stop) = stop {
                    if stop(&xs) {
                        finish!(SolverStatus::Converged);
                    }
                }
            }
            stage_objectives.push(objective(&xs, t));
            let gap = gap_bound(nu, decrement, tau);
            log::debug!(
                "barrier stage tau={tau:.3e} gap={gap:.3e} objective={:.12e}",
                objective(&xs, t)
            );
            if gap <= opts.tol {
                finish!(SolverStatus::Converged);
            }
            // Stop increasing τ just past the value whose centred gap meets
            // the target; the extra conditioning of larger τ buys nothing.
            let last = 2.0 * nu / opts.tol;
            tau = if tau < last {
                (tau * MU).min(last)
            } else {
                tau * MU
            };
        }
    }
}

/// `Some(s)` when `a = s I`.
fn scalar_identity(a: &HermitianMatrix) -> Option<f64> {
    let m = a.as_matrix();
    let s = m[(0, 0)].re;
    let n = m.nrows();
    for i in 0..n {
        for k in 0..n {
            let expect = if i == k { s } else { 0.0 };
            if m[(i, k)] != C64::new(expect, 0.0) {
                return None;
            }
        }
    }
    Some(s)
}

/// Suboptimality bound for an approximately centred point of a
/// `nu`-self-concordant barrier with Newton decrement `lam`.
fn gap_bound(nu: f64, lam: f64, tau: f64) -> f64 {
    if lam >= 1.0 || !lam.is_finite() {
        return f64::INFINITY;
    }
    (nu + lam * (lam + nu.sqrt()) / (1.0 - lam)) / tau
}

/// Solves the symmetric indefinite KKT system after Ruiz equilibration,
/// with two rounds of iterative refinement. Rows `0..n_pos` belong to the
/// positive semidefinite block; a shifted retry is used if LU fails.
fn solve_kkt(kkt: DMatrix<f64>, rhs: &DVector<f64>, n_pos: usize) -> Option<DVector<f64>> {
    let n = kkt.nrows();
    let mut d = DVector::from_element(n, 1.0);
    let mut scaled = kkt.clone();
    for _ in 0..8 {
        let mut changed = false;
        for i in 0..n {
            let m = scaled.row(i).amax();
            if m > 0.0 && (m - 1.0).abs() > 1e-3 {
                d[i] /= m.sqrt();
                changed = true;
            }
        }
        scaled = DMatrix::from_fn(n, n, |i, j| d[i] * kkt[(i, j)] * d[j]);
        if !changed {
            break;
        }
    }
    let attempt = |k: DMatrix<f64>| -> Option<DVector<f64>> {
        let lu = k.clone().lu();
        let b = rhs.component_mul(&d);
        let mut z = lu.solve(&b)?;
        for _ in 0..2 {
            let r = &b - &k * &z;
            z += lu.solve(&r)?;
        }
        let x = z.component_mul(&d);
        x.iter().all(|v| v.is_finite()).then_some(x)
    };
    if let Some(x) = attempt(scaled.clone()) {
        return Some(x);
    }
    for delta in [1e-12, 1e-10, 1e-8] {
        let mut k = scaled.clone();
        for i in 0..n {
            k[(i, i)] += if i < n_pos { delta } else { -delta };
        }
        if let Some(x) = attempt(k) {
            return Some(x);
        }
    }
    None
}

/// Real coordinates of a Hermitian matrix preserving the Frobenius inner
/// product: diagonal entries, then `√2 Re` and `√2 Im` of the upper triangle.
fn herm_vec(m: &ComplexMatrix) -> DVector<f64> {
    let d = m.nrows();
    let mut v = DVector::zeros(d * d);
    let mut k = d;
    for i in 0..d {
        v[i] = m[(i, i)].re;
        for j in (i + 1)..d {
            v[k] = std::f64::consts::SQRT_2 * m[(i, j)].re;
            v[k + 1] = std::f64::consts::SQRT_2 * m[(i, j)].im;
            k += 2;
        }
    }
    v
}

fn herm_unvec(v: &DVector<f64>, d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    let mut k = d;
    for i in 0..d {
        m[(i, i)] = C64::new(v[i], 0.0);
        for j in (i + 1)..d {
            let z = C64::new(v[k], v[k + 1]) * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
fn cholesky(x: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = x.nrows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = x[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = x[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// `ln det X`; `None` unless `X` is positive definite.
pub(crate) fn log_det(x: &ComplexMatrix) -> Option<f64> {
    let l = cholesky(x)?;
    Some((0..x.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// Auxiliary program whose slack is negative exactly at strictly feasible
/// points of `p`: every inequality and every log argument becomes a row.
pub(super) fn phase_one(p: &LogTraceProgram, x0: &[ComplexMatrix]) -> LogTraceProgram {
    let mut aux = LogTraceProgram::new(p.dims.clone());
    aux.pins = p.pins.clone();
    for c in &p.constraints {
        match c.kind {
            ConstraintKind::Equal => aux.constraints.push(c.clone()),
            ConstraintKind::LessEq => {
                let mut linear = c.form.clone();
                linear.constant -= c.bound;
                aux.epigraph.push(EpigraphRow {
                    linear,
                    logs: Vec::new(),
                });
            }
        }
    }
    let log_forms = p
        .objective_logs
        .iter()
        .chain(p.epigraph.iter().flat_map(|r| r.logs.iter()));
    for l in log_forms {
        aux.epigraph.push(EpigraphRow {
            linear: l.form.scaled(-1.0),
            logs: Vec::new(),
        });
    }
    for (j, x) in x0.iter().enumerate() {
        let tr: f64 = x.diagonal().iter().map(|z| z.re).sum();
        aux.constraints.push(LinearConstraint {
            form: AffineForm::constant(0.0).with_term(j, HermitianMatrix::identity(p.dims[j])),
            kind: ConstraintKind::LessEq,
            bound: 1e3 * tr.max(1.0),
        });
    }
    if aux.epigraph.is_empty() {
        aux.epigraph.push(EpigraphRow {
            linear: AffineForm::constant(-1.0),
            logs: Vec::new(),
        });
    }
    aux
}
