//! Chance-constrained minimization via the convex log-reformulation
//! -log phi(u) + log p <= 0, solved with an augmented Lagrangian whose
//! inner loop is a projected subgradient descent, plus KKT verification.

use crate::error::{CoreError, Result};
use crate::gaussian::DirectionSet;
use crate::pde::{ControlField, ObjectiveSpec, PdeSystem, ProblemData};
use crate::srd::{self, Selection};

/// phi-and-subgradient bundle returned by one constraint-oracle call.
#[derive(Clone, Debug)]
pub struct ProbEval {
    pub phi: f64,
    /// A selected subgradient of phi at u.
    pub subgrad: Vec<f64>,
    /// True when some direction had a non-singleton active set, making the
    /// selected subgradient selection-dependent.
    pub multivalued: bool,
}

/// A chance-constrained problem in coefficient form: minimize value(u)
/// subject to phi(u) >= p. Implementors supply the objective and the
/// probability oracle; the inner product carries a uniform weight.
pub trait ChanceProblem {
    fn dim(&self) -> usize;
    /// Weight of the Euclidean inner product (cell area for grid fields).
    fn weight(&self) -> f64;
    fn objective(&self, u: &[f64]) -> (f64, Vec<f64>);
    fn probability(&self, u: &[f64]) -> Result<f64>;
    fn prob_eval(&self, u: &[f64]) -> Result<ProbEval>;
    /// A strictly feasible probe point for the level `p`, if one is known.
    fn slater_hint(&self, p: f64) -> Option<Vec<f64>>;

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weight() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }
}

/// Convex reformulation value: -log(phi) + log(p), +infinity when phi = 0.
/// Negative iff the chance constraint holds strictly.
pub fn phi_tilde(phi: f64, p: f64) -> f64 {
    if phi <= 0.0 {
        f64::INFINITY
    } else {
        -phi.ln() + p.ln()
    }
}

/// Objective value and Riesz gradient under the grid inner product.
pub fn objective_value_grad(
    sys: &PdeSystem,
    spec: &ObjectiveSpec,
    u: &ControlField,
) -> Result<(f64, ControlField)> {
    let target = sys.objective_target(spec)?;
    let diff = u.axpy(-1.0, &target);
    Ok((diff.dot(&diff), diff.scale(2.0)))
}

/// SRD-backed chance problem on a PDE grid with a frozen direction set
/// (sample-average regime: the solved problem is deterministic).
pub struct SrdChanceProblem<'a> {
    pub sys: &'a PdeSystem,
    pub data: &'a ProblemData,
    pub dirs: &'a DirectionSet,
    pub selection: Selection,
}

impl<'a> SrdChanceProblem<'a> {
    fn field(&self, u: &[f64]) -> Result<ControlField> {
        ControlField::from_values(self.sys.grid(), u.to_vec())
    }
}

impl<'a> ChanceProblem for SrdChanceProblem<'a> {
    fn dim(&self) -> usize {
        self.sys.grid().num_interior()
    }

    fn weight(&self) -> f64 {
        self.sys.grid().cell_area()
    }

    fn objective(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let field = self.field(u).expect("finite control");
        let (value, grad) = objective_value_grad(self.sys, &self.data.objective, &field)
            .expect("objective target is resolvable");
        (value, grad.values().to_vec())
    }

    fn probability(&self, u: &[f64]) -> Result<f64> {
        srd::probability(self.sys, self.data, &self.field(u)?, self.dirs)
    }

    fn prob_eval(&self, u: &[f64]) -> Result<ProbEval> {
        let sg = srd::subgradient(self.sys, self.data, &self.field(u)?, self.dirs, self.selection)?;
        let phi: f64 = sg.per_direction.iter().map(|r| {
            // weights of the direction set are aligned with the report order
            self.dirs.weight(r.index) * r.e
        }).sum();
        let multivalued = sg
            .per_direction
            .iter()
            .any(|r| r.rho.is_finite() && r.multivalued);
        Ok(ProbEval { phi, subgrad: sg.values.values().to_vec(), multivalued })
    }

    fn slater_hint(&self, p: f64) -> Option<Vec<f64>> {
        // Pulling the state down uniformly drives every radius to infinity,
        // so phi -> 1; probe increasingly negative constants.
        let n = self.dim();
        let zero = vec![0.0; n];
        if self.probability(&zero).map(|phi| phi > p).unwrap_or(false) {
            return Some(zero);
        }
        let mut scale = self.data.alpha.abs().max(1.0);
        for _ in 0..60 {
            let probe = vec![-scale; n];
            if self.probability(&probe).map(|phi| phi > p).unwrap_or(false) {
                return Some(probe);
            }
            scale *= 2.0;
        }
        None
    }
}

/// Scalar benchmark with the triangular density 2(1-x) on [0,1]:
/// minimize u subject to P(xi <= u) >= p, so phi(u) = 2u - u^2 on [0,1].
/// Handled by this analytic plug-in rather than the Gaussian SRD engine.
pub struct ScalarDensityCase;

impl ChanceProblem for ScalarDensityCase {
    fn dim(&self) -> usize {
        1
    }

    fn weight(&self) -> f64 {
        1.0
    }

    fn objective(&self, u: &[f64]) -> (f64, Vec<f64>) {
        (u[0], vec![1.0])
    }

    fn probability(&self, u: &[f64]) -> Result<f64> {
        let x = u[0];
        Ok(if x < 0.0 {
            0.0
        } else if x > 1.0 {
            1.0
        } else {
            2.0 * x - x * x
        })
    }

    fn prob_eval(&self, u: &[f64]) -> Result<ProbEval> {
        let x = u[0];
        let slope = if (0.0..=1.0).contains(&x) { 2.0 - 2.0 * x } else { 0.0 };
        Ok(ProbEval { phi: self.probability(u)?, subgrad: vec![slope], multivalued: false })
    }

    fn slater_hint(&self, p: f64) -> Option<Vec<f64>> {
        // phi(1 - t) = 1 - t^2 > p for t = sqrt(1-p)/2.
        Some(vec![1.0 - (1.0 - p).sqrt() / 2.0])
    }
}

/// Iteration caps, tolerances, and penalty schedule for `solve`.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Cap on ||DF - lambda g|| in the weighted L2 norm.
    pub tol_stationarity: f64,
    /// Cap on |lambda (phi - p)|.
    pub tol_complementarity: f64,
    /// Feasibility slack on phi >= p - tol and the activity test.
    pub tol_feasibility: f64,
    pub penalty_growth: f64,
    pub initial_penalty: f64,
    pub initial_multiplier: f64,
    /// Inner loop stops when the augmented-Lagrangian gradient drops below
    /// this weighted norm.
    pub inner_grad_tol: f64,
    /// Optional explicit start; falls back to the problem's Slater hint.
    pub start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer: 60,
            max_inner: 600,
            tol_stationarity: 1e-6,
            tol_complementarity: 1e-6,
            tol_feasibility: 1e-8,
            penalty_growth: 4.0,
            initial_penalty: 10.0,
            initial_multiplier: 0.0,
            start: None,
        }
    }
}

/// One row of the per-iteration log emitted by `solve`.
#[derive(Clone, Debug)]
pub struct IterationRow {
    pub outer: usize,
    pub u_norm: f64,
    pub phi: f64,
    pub phi_tilde: f64,
    pub lambda: f64,
    pub stationarity: f64,
    pub complementarity: f64,
    pub penalty: f64,
}

/// Multiplier, residuals, and activity report at a candidate solution.
#[derive(Clone, Debug)]
pub struct KktCertificate {
    pub u_star: Vec<f64>,
    pub lambda: f64,
    pub stationarity_residual: f64,
    pub complementarity_residual: f64,
    pub phi_value: f64,
    pub objective_value: f64,
    /// Constraint active at the solution: |phi - p| <= tol_feasibility.
    pub active: bool,
    /// Some direction had a multi-node active set; the certificate then
    /// depends on the subgradient selection rule.
    pub selection_dependent: bool,
    pub converged: bool,
    pub outer_iterations: usize,
    pub log: Vec<IterationRow>,
}

/// Residuals of the stationarity and complementarity system at a given
/// control/multiplier pair, without solving anything.
pub fn kkt_residual(
    problem: &dyn ChanceProblem,
    u: &[f64],
    lambda: f64,
    p: f64,
    opts: &SolverOptions,
) -> Result<KktCertificate> {
    let (fval, grad_f) = problem.objective(u);
    let eval = problem.prob_eval(u)?;
    let resid: Vec<f64> =
        grad_f.iter().zip(&eval.subgrad).map(|(df, g)| df - lambda * g).collect();
    let stationarity = problem.norm(&resid);
    let complementarity = (lambda * (eval.phi - p)).abs();
    Ok(KktCertificate {
        u_star: u.to_vec(),
        lambda,
        stationarity_residual: stationarity,
        complementarity_residual: complementarity,
        phi_value: eval.phi,
        objective_value: fval,
        active: (eval.phi - p).abs() <= opts.tol_feasibility,
        selection_dependent: eval.multivalued,
        converged: stationarity <= opts.tol_stationarity
            && complementarity <= opts.tol_complementarity,
        outer_iterations: 0,
        log: Vec::new(),
    })
}

/// Minimize the objective subject to phi(u) >= p.
///
/// Works on the convex reformulation c(u) = -log phi(u) + log p <= 0 with an
/// augmented Lagrangian: the inner loop descends along objective gradients
/// plus penalty subgradients with a backtracking step, the outer loop updates
/// the multiplier and grows the penalty while infeasibility stalls. The
/// reported multiplier is rescaled to the original constraint phi >= p.
pub fn solve(problem: &dyn ChanceProblem, p: f64, opts: &SolverOptions) -> Result<KktCertificate> {
    if !(0.0 < p && p < 1.0) {
        return Err(CoreError::BadProbabilityLevel { p });
    }
    // Generalized Slater point, verified by probing.
    let hint = problem.slater_hint(p);
    let hint_phi = match &hint {
        Some(h) => problem.probability(h)?,
        None => 0.0,
    };
    if hint.is_none() || hint_phi <= p {
        return Err(CoreError::SlaterProbeFailed { best_phi: hint_phi, p });
    }
    let hint = hint.unwrap();

    let mut u = match &opts.start {
        Some(start) if problem.probability(start).is_ok() => start.clone(),
        _ => hint.clone(),
    };

    let mut mult = opts.initial_multiplier.max(0.0); // multiplier of c(u) <= 0
    let mut penalty = opts.initial_penalty;
    let mut log = Vec::new();
    let mut best: Option<KktCertificate> = None;
    let mut prev_violation = f64::INFINITY;

    for outer in 0..opts.max_outer {
        u = inner_descent(problem, p, &u, mult, penalty, opts)?;

        let eval = problem.prob_eval(&u)?;
        let c = phi_tilde(eval.phi, p);
        let cert = certify(problem, &u, &eval, p, opts, outer, &log)?;
        log.push(IterationRow {
            outer,
            u_norm: problem.norm(&u),
            phi: eval.phi,
            phi_tilde: c,
            lambda: cert.lambda,
            stationarity: cert.stationarity_residual,
            complementarity: cert.complementarity_residual,
            penalty,
        });

        let better = match &best {
            None => true,
            Some(b) => score(&cert) < score(b),
        };
        if better {
            best = Some(cert.clone());
        }
        if cert.converged && eval.phi >= p - opts.tol_feasibility {
            let mut done = cert;
            done.log = log;
            done.outer_iterations = outer + 1;
            return Ok(done);
        }

        // Multiplier update and penalty schedule.
        mult = (mult + penalty * c).max(0.0);
        let violation = c.max(0.0);
        if violation > 0.25 * prev_violation && violation > opts.tol_feasibility {
            penalty = (penalty * opts.penalty_growth).min(1e10);
        }
        prev_violation = violation;
    }

    let mut out = best.expect("at least one outer iteration ran");
    out.log = log;
    out.outer_iterations = opts.max_outer;
    out.converged = false;
    Ok(out)
}

fn score(c: &KktCertificate) -> f64 {
    c.stationarity_residual.max(c.complementarity_residual)
}

/// Build a certificate at `u`, choosing the multiplier by least squares
/// against the selected subgradient when the constraint is active.
fn certify(
    problem: &dyn ChanceProblem,
    u: &[f64],
    eval: &ProbEval,
    p: f64,
    opts: &SolverOptions,
    outer: usize,
    log: &[IterationRow],
) -> Result<KktCertificate> {
    let (fval, grad_f) = problem.objective(u);
    let active = (eval.phi - p).abs() <= opts.tol_feasibility.max(1e-12);
    let gg = problem.inner(&eval.subgrad, &eval.subgrad);
    let lambda = if active && gg > 0.0 {
        (problem.inner(&grad_f, &eval.subgrad) / gg).max(0.0)
    } else {
        0.0
    };
    let resid: Vec<f64> =
        grad_f.iter().zip(&eval.subgrad).map(|(df, g)| df - lambda * g).collect();
    let stationarity = problem.norm(&resid);
    let complementarity = (lambda * (eval.phi - p)).abs();
    Ok(KktCertificate {
        u_star: u.to_vec(),
        lambda,
        stationarity_residual: stationarity,
        complementarity_residual: complementarity,
        phi_value: eval.phi,
        objective_value: fval,
        active,
        selection_dependent: eval.multivalued,
        converged: stationarity <= opts.tol_stationarity
            && complementarity <= opts.tol_complementarity
            && eval.phi >= p - opts.tol_feasibility,
        outer_iterations: outer + 1,
        log: log.to_vec(),
    })
}

/// Augmented-Lagrangian inner value: F(u) + (r/2) [max(0, mult/r + c(u))]^2
/// (up to the constant -mult^2/2r, which drops out of comparisons).
fn al_value(problem: &dyn ChanceProblem, p: f64, u: &[f64], mult: f64, penalty: f64) -> f64 {
    let (f, _) = problem.objective(u);
    let phi = match problem.probability(u) {
        Ok(v) => v,
        Err(_) => return f64::INFINITY,
    };
    let c = phi_tilde(phi, p);
    if !c.is_finite() {
        return f64::INFINITY;
    }
    let bracket = (mult / penalty + c).max(0.0);
    f + 0.5 * penalty * bracket * bracket
}

fn inner_descent(
    problem: &dyn ChanceProblem,
    p: f64,
    u0: &[f64],
    mult: f64,
    penalty: f64,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let mut u = u0.to_vec();
    let mut value = al_value(problem, p, &u, mult, penalty);
    if !value.is_finite() {
        return Ok(u);
    }
    let mut step: f64 = 1.0;
    for _ in 0..opts.max_inner {
        let (_, grad_f) = problem.objective(&u);
        let eval = problem.prob_eval(&u)?;
        let c = phi_tilde(eval.phi, p);
        let bracket = (mult / penalty + c).max(0.0);
        // d/du of the AL value; the constraint part only acts when the
        // bracket is engaged. dc/du = -subgrad(phi)/phi.
        let mut grad: Vec<f64> = grad_f;
        if bracket > 0.0 && eval.phi > 0.0 {
            let coeff = penalty * bracket / eval.phi;
            for (g, s) in grad.iter_mut().zip(&eval.subgrad) {
                *g -= coeff * s;
            }
        }
        let gnorm = problem.norm(&grad);
        if gnorm <= 1e-14 {
            break;
        }
        // Backtracking line search with a mildly adaptive initial step.
        step = (step * 2.0).min(1e6);
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            let tval = al_value(problem, p, &trial, mult, penalty);
            if tval <= value - 1e-4 * step * gnorm * gnorm {
                u = trial;
                value = tval;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        if step * gnorm <= 1e-15 * (1.0 + problem.norm(&u)) {
            break;
        }
    }
    Ok(u)
}

/// Closed-form scalar benchmark sweep: solve for each level and report
/// (p, u*, lambda). Demonstrates the multiplier blow-up as p -> 1.
pub fn multiplier_blowup_sweep(p_list: &[f64], opts: &SolverOptions) -> Result<Vec<(f64, f64, f64)>> {
    let mut rows = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let cert = solve(&ScalarDensityCase, p, opts)?;
        rows.push((p, cert.u_star[0], cert.lambda));
    }
    Ok(rows)
}
