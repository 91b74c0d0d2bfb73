use crate::error::{invalid, Result};
use crate::numerics::{trace_product, ComplexVector, HermitianMatrix};

/// `constant + Σ Re Tr(A X_j) + Σ w h^H X_j h` over the program's matrix
/// variables. Rank-one terms are kept factored; the solver works with the
/// factors directly.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineForm {
    pub constant: f64,
    /// `(variable index, A)` pairs.
    pub terms: Vec<(usize, HermitianMatrix)>,
    /// `(variable index, weight, h)` for `weight * h h^H`.
    pub outers: Vec<(usize, f64, ComplexVector)>,
}

impl AffineForm {
    pub fn constant(constant: f64) -> Self {
        Self {
            constant,
            terms: Vec::new(),
            outers: Vec::new(),
        }
    }

    pub fn with_term(mut self, var: usize, a: HermitianMatrix) -> Self {
        self.terms.push((var, a));
        self
    }

    pub fn with_outer(mut self, var: usize, weight: f64, h: ComplexVector) -> Self {
        self.outers.push((var, weight, h));
        self
    }

    /// The same form with every coefficient (constant included) scaled.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            constant: s * self.constant,
            terms: self.terms.iter().map(|(j, a)| (*j, a.scaled(s))).collect(),
            outers: self
                .outers
                .iter()
                .map(|(j, w, h)| (*j, s * w, h.clone()))
                .collect(),
        }
    }

    pub fn eval(&self, xs: &[HermitianMatrix]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(j, a)| trace_product(a.as_matrix(), xs[*j].as_matrix()))
                .sum::<f64>()
            + self
                .outers
                .iter()
                .map(|(j, w, h)| w * xs[*j].quad_form(h))
                .sum::<f64>()
    }

    fn validate(&self, dims: &[usize], what: &str) -> Result<()> {
        if !self.constant.is_finite() {
            return invalid(format!("{what}: non-finite constant"));
        }
        for (j, a) in &self.terms {
            match dims.get(*j) {
                None => return invalid(format!("{what}: unknown variable {j}")),
                Some(&d) if d != a.dim() => {
                    return invalid(format!(
                        "{what}: variable {j} has dim {d}, coefficient has {}",
                        a.dim()
                    ))
                }
                _ => {}
            }
            if a.as_matrix()
                .iter()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
            {
                return invalid(format!("{what}: non-finite coefficient matrix"));
            }
        }
        for (j, w, h) in &self.outers {
            match dims.get(*j) {
                None => return invalid(format!("{what}: unknown variable {j}")),
                Some(&d) if d != h.len() => {
                    return invalid(format!(
                        "{what}: variable {j} has dim {d}, factor has {}",
                        h.len()
                    ))
                }
                _ => {}
            }
            if !w.is_finite() || h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return invalid(format!("{what}: non-finite rank-one term"));
            }
        }
        Ok(())
    }
}

/// `coef * ln(form)`, with `coef >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogTerm {
    pub coef: f64,
    pub form: AffineForm,
}

impl LogTerm {
    pub fn new(coef: f64, form: AffineForm) -> Self {
        Self { coef, form }
    }

    pub fn eval(&self, xs: &[HermitianMatrix]) -> f64 {
        self.coef * self.form.eval(xs).ln()
    }
}

/// Convex function `linear(X) - Σ coef ln(form(X))` bounded above by the
/// epigraph slack `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpigraphRow {
    pub linear: AffineForm,
    pub logs: Vec<LogTerm>,
}

impl EpigraphRow {
    pub fn eval(&self, xs: &[HermitianMatrix]) -> f64 {
        self.linear.eval(xs) - self.logs.iter().map(|l| l.eval(xs)).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    LessEq,
    Equal,
}

/// `form(X) <= bound` or `form(X) = bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub form: AffineForm,
    pub kind: ConstraintKind,
    pub bound: f64,
}

/// `X_var[index, index] = value`, enforced exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagonalPin {
    pub var: usize,
    pub index: usize,
    pub value: f64,
}

/// Maximize `Σ coef ln(form_i(X)) + linear(X) [- t]` over Hermitian PSD
/// matrices `X_j`, subject to linear trace constraints, diagonal pins and
/// epigraph rows `f_k(X) <= t`.
///
/// When `epigraph` is non-empty the slack `t` is a variable and enters the
/// objective with coefficient -1, so the program maximizes
/// `base(X) - max_k f_k(X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogTraceProgram {
    pub dims: Vec<usize>,
    pub objective_logs: Vec<LogTerm>,
    pub objective_linear: AffineForm,
    pub epigraph: Vec<EpigraphRow>,
    pub constraints: Vec<LinearConstraint>,
    pub pins: Vec<DiagonalPin>,
}

impl LogTraceProgram {
    pub fn new(dims: Vec<usize>) -> Self {
        Self {
            dims,
            objective_logs: Vec::new(),
            objective_linear: AffineForm::constant(0.0),
            epigraph: Vec::new(),
            constraints: Vec::new(),
            pins: Vec::new(),
        }
    }

    pub fn has_slack(&self) -> bool {
        !self.epigraph.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return invalid("program needs at least one variable, all of dimension >= 1");
        }
        let check_logs = |logs: &[LogTerm], what: &str| -> Result<()> {
            for l in logs {
                if !(l.coef >= 0.0) || !l.coef.is_finite() {
                    return invalid(format!("{what}: log coefficient must be finite and >= 0"));
                }
                if !(l.form.constant > 0.0) {
                    return invalid(format!(
                        "{what}: log argument must have a positive constant"
                    ));
                }
                l.form.validate(&self.dims, what)?;
            }
            Ok(())
        };
        check_logs(&self.objective_logs, "objective")?;
        self.objective_linear.validate(&self.dims, "objective")?;
        for (k, row) in self.epigraph.iter().enumerate() {
            let what = format!("epigraph row {k}");
            row.linear.validate(&self.dims, &what)?;
            check_logs(&row.logs, &what)?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            c.form.validate(&self.dims, &format!("constraint {i}"))?;
            if !c.bound.is_finite() {
                return invalid(format!("constraint {i}: non-finite bound"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.pins {
            match self.dims.get(p.var) {
                Some(&d) if p.index < d => {}
                _ => return invalid(format!("pin ({}, {}) out of range", p.var, p.index)),
            }
            if !(p.value > 0.0) || !p.value.is_finite() {
                return invalid("diagonal pins must have finite positive values");
            }
            if !seen.insert((p.var, p.index)) {
                return invalid(format!("duplicate pin ({}, {})", p.var, p.index));
            }
        }
        Ok(())
    }

    /// Objective without the slack term.
    pub fn base_objective(&self, xs: &[HermitianMatrix]) -> f64 {
        self.objective_logs.iter().map(|l| l.eval(xs)).sum::<f64>() + self.objective_linear.eval(xs)
    }

    /// `max_k f_k(X)`, if there are epigraph rows.
    pub fn epigraph_max(&self, xs: &[HermitianMatrix]) -> Option<f64> {
        self.epigraph.iter().map(|r| r.eval(xs)).reduce(f64::max)
    }

    /// True objective `base(X) - max_k f_k(X)`.
    pub fn objective(&self, xs: &[HermitianMatrix]) -> f64 {
        self.base_objective(xs) - self.epigraph_max(xs).unwrap_or(0.0)
    }

    /// Largest violation of the linear constraints, pins and PSD cones.
    pub fn max_violation(&self, xs: &[HermitianMatrix]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let v = c.form.eval(xs) - c.bound;
            worst = worst.max(match c.kind {
                ConstraintKind::LessEq => v.max(0.0),
                ConstraintKind::Equal => v.abs(),
            });
        }
        for p in &self.pins {
            worst = worst.max((xs[p.var].as_matrix()[(p.index, p.index)].re - p.value).abs());
        }
        for x in xs {
            worst = worst.max((-x.min_eigenvalue()).max(0.0));
        }
        worst
    }

    pub fn is_feasible(&self, xs: &[HermitianMatrix], tol: f64) -> bool {
        xs.len() == self.dims.len()
            && xs.iter().zip(&self.dims).all(|(x, d)| x.dim() == *d)
            && self.max_violation(xs) <= tol
    }
}

/// Moves the penalties `f_k` into epigraph rows `f_k <= t` and subtracts the
/// slack `t` from the objective.
pub fn epigraph_wrap(
    mut program: LogTraceProgram,
    penalties: Vec<EpigraphRow>,
) -> Result<LogTraceProgram> {
    if penalties.is_empty() {
        return invalid("epigraph_wrap needs at least one penalty function");
    }
    program.epigraph.extend(penalties);
    Ok(program)
}
