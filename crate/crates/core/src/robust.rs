//! Worst-case (semi-infinite) counterpart of the chance constraint over a
//! compact parameter set, with atomic-measure KKT certificates, plus
//! finite-scenario almost-sure feasibility and multiplier checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chance::objective_value_grad;
use crate::error::{CoreError, Result};
use crate::gaussian::CovarianceFactor;
use crate::pde::{ControlField, DirichletLaplacian, PdeSystem, ProblemData, StateField};

/// Compact uncertainty set for the robust model.
#[derive(Clone, Debug)]
pub enum UncertaintySet {
    /// Axis-aligned box; `resolution` is the interval count per coordinate
    /// used when the set is discretized (corners are always included).
    Box { lower: Vec<f64>, upper: Vec<f64>, resolution: usize },
    /// {z : z^T M^{-1} z <= radius^2} with SPD shape matrix M (row-major).
    Ellipsoid { shape: Vec<f64>, radius: f64, resolution: usize },
}

impl UncertaintySet {
    pub fn dim(&self) -> usize {
        match self {
            UncertaintySet::Box { lower, .. } => lower.len(),
            UncertaintySet::Ellipsoid { shape, .. } => (shape.len() as f64).sqrt() as usize,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            UncertaintySet::Box { lower, upper, resolution } => {
                if lower.len() != m || upper.len() != m {
                    return Err(CoreError::DimensionMismatch(format!(
                        "box bounds need {m} coordinates, got {} and {}",
                        lower.len(),
                        upper.len()
                    )));
                }
                if *resolution == 0 {
                    return Err(CoreError::Invalid("box resolution must be >= 1".into()));
                }
                for i in 0..m {
                    if !(lower[i] <= upper[i]) || !lower[i].is_finite() || !upper[i].is_finite() {
                        return Err(CoreError::Invalid(format!(
                            "box bounds must be finite with lower <= upper at coordinate {i}"
                        )));
                    }
                }
                Ok(())
            }
            UncertaintySet::Ellipsoid { shape, radius, resolution } => {
                if shape.len() != m * m {
                    return Err(CoreError::DimensionMismatch(format!(
                        "ellipsoid shape must be {m}x{m}, got {} entries",
                        shape.len()
                    )));
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(CoreError::Invalid("ellipsoid radius must be finite and >= 0".into()));
                }
                if *resolution == 0 {
                    return Err(CoreError::Invalid("ellipsoid resolution must be >= 1".into()));
                }
                CovarianceFactor::new(m, shape).map(|_| ())
            }
        }
    }

    /// Worst-case linear term: max over the set of sum_i z_i w_i, together
    /// with a maximizer. Boxes pick a corner from the sign pattern of the
    /// coefficients; ellipsoids scale the shape-transformed coefficients.
    pub fn worst_case(&self, coeff: &[f64]) -> (f64, Vec<f64>) {
        match self {
            UncertaintySet::Box { lower, upper, .. } => {
                let mut value = 0.0;
                let mut z = Vec::with_capacity(coeff.len());
                for (i, &c) in coeff.iter().enumerate() {
                    let zi = if c >= 0.0 { upper[i] } else { lower[i] };
                    value += c * zi;
                    z.push(zi);
                }
                (value, z)
            }
            UncertaintySet::Ellipsoid { shape, radius, .. } => {
                let m = coeff.len();
                let mut mw = vec![0.0; m];
                for i in 0..m {
                    for j in 0..m {
                        mw[i] += shape[i * m + j] * coeff[j];
                    }
                }
                let quad: f64 = coeff.iter().zip(&mw).map(|(a, b)| a * b).sum();
                if quad <= 0.0 {
                    return (0.0, vec![0.0; m]);
                }
                let norm = quad.sqrt();
                let z: Vec<f64> = mw.iter().map(|v| radius * v / norm).collect();
                (radius * norm, z)
            }
        }
    }

    /// Discretization of the set covering its extreme points; the test
    /// oracle path for worst-case evaluation.
    pub fn grid_points(&self) -> Vec<Vec<f64>> {
        match self {
            UncertaintySet::Box { lower, upper, resolution } => {
                let m = lower.len();
                let per: Vec<Vec<f64>> = (0..m)
                    .map(|i| {
                        (0..=*resolution)
                            .map(|k| {
                                lower[i] + (upper[i] - lower[i]) * k as f64 / *resolution as f64
                            })
                            .collect()
                    })
                    .collect();
                let mut pts = vec![Vec::new()];
                for axis in per {
                    let mut next = Vec::with_capacity(pts.len() * axis.len());
                    for p in &pts {
                        for &v in &axis {
                            let mut q = p.clone();
                            q.push(v);
                            next.push(q);
                        }
                    }
                    pts = next;
                }
                pts
            }
            UncertaintySet::Ellipsoid { shape, radius, resolution } => {
                let m = self.dim();
                let factor = CovarianceFactor::new(m, shape).expect("validated shape");
                let mut pts = vec![vec![0.0; m]];
                if m == 1 {
                    let s = shape[0].sqrt();
                    for k in 0..=*resolution {
                        let t = -1.0 + 2.0 * k as f64 / *resolution as f64;
                        pts.push(vec![radius * s * t]);
                    }
                } else if m == 2 {
                    for k in 0..(4 * *resolution) {
                        let angle = 2.0 * std::f64::consts::PI * k as f64 / (4 * *resolution) as f64;
                        let s = [angle.cos(), angle.sin()];
                        let z = factor.apply(&s).expect("dimension checked");
                        pts.push(z.iter().map(|v| radius * v).collect());
                    }
                } else {
                    let dirs = crate::gaussian::sample_sphere(m, 4 * *resolution, 1_234_567)
                        .expect("m >= 3");
                    for (v, _) in dirs.iter() {
                        let z = factor.apply(v).expect("dimension checked");
                        pts.push(z.iter().map(|x| radius * x).collect());
                    }
                }
                pts
            }
        }
    }
}

/// Worst-case constraint value max_{x,z} y(x,z) - alpha and the argmax
/// pairs (node, maximizing z), collected within an absolute tolerance.
pub fn robust_constraint(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    xi: &UncertaintySet,
    tol_active: f64,
) -> Result<(f64, Vec<(usize, Vec<f64>)>)> {
    xi.validate(data.m())?;
    let base = sys.base_state(data, u)?;
    let w = sys.basis_states();
    let n_nodes = sys.grid().num_nodes();
    let m = data.m();
    let mut node_best: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n_nodes);
    let mut best = f64::NEG_INFINITY;
    let mut coeff = vec![0.0; m];
    for node in 0..n_nodes {
        for (i, wi) in w.iter().enumerate() {
            coeff[i] = wi.value_at(node);
        }
        let (extra, z) = xi.worst_case(&coeff);
        let v = base.value_at(node) + extra;
        if v > best {
            best = v;
        }
        node_best.push((v, z));
    }
    let pairs = node_best
        .into_iter()
        .enumerate()
        .filter(|(_, (v, _))| *v >= best - tol_active)
        .map(|(node, (_, z))| (node, z))
        .collect();
    Ok((best - data.alpha, pairs))
}

/// Dense-grid oracle for the worst case: scans every z grid point instead of
/// using the closed-form maximizer.
pub fn robust_constraint_scan(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    xi: &UncertaintySet,
    tol_active: f64,
) -> Result<(f64, Vec<(usize, Vec<f64>)>)> {
    xi.validate(data.m())?;
    let base = sys.base_state(data, u)?;
    let w = sys.basis_states();
    let value_at = |node: usize, z: &[f64]| {
        let mut v = base.value_at(node);
        for (zi, wi) in z.iter().zip(w) {
            v += zi * wi.value_at(node);
        }
        v
    };
    scan_pairs(base.values().len(), value_at, &xi.grid_points(), data.alpha, tol_active)
}

/// Worst case for a general (not necessarily affine) parameter-to-source
/// map: one solve per z grid point.
pub fn robust_constraint_custom(
    op: &DirichletLaplacian,
    u: &ControlField,
    rhs_of_z: &dyn Fn(&[f64]) -> Vec<f64>,
    alpha: f64,
    z_points: &[Vec<f64>],
    tol_active: f64,
) -> Result<(f64, Vec<(usize, Vec<f64>)>)> {
    let grid = op.grid().clone();
    let mut states = Vec::with_capacity(z_points.len());
    for z in z_points {
        let mut rhs = rhs_of_z(z);
        for (r, uv) in rhs.iter_mut().zip(u.values()) {
            *r += uv;
        }
        states.push(StateField::from_interior(&grid, &op.solve(&rhs)?));
    }
    let mut best = f64::NEG_INFINITY;
    for y in &states {
        for &v in y.values() {
            if v > best {
                best = v;
            }
        }
    }
    let mut pairs = Vec::new();
    for (y, z) in states.iter().zip(z_points) {
        for node in 0..grid.num_nodes() {
            if y.value_at(node) >= best - tol_active {
                pairs.push((node, z.clone()));
            }
        }
    }
    Ok((best - alpha, pairs))
}

fn scan_pairs(
    n_nodes: usize,
    value_at: impl Fn(usize, &[f64]) -> f64,
    z_points: &[Vec<f64>],
    alpha: f64,
    tol_active: f64,
) -> Result<(f64, Vec<(usize, Vec<f64>)>)> {
    let mut best = f64::NEG_INFINITY;
    for z in z_points {
        for node in 0..n_nodes {
            let v = value_at(node, z);
            if v > best {
                best = v;
            }
        }
    }
    let mut pairs = Vec::new();
    for z in z_points {
        for node in 0..n_nodes {
            if value_at(node, z) >= best - tol_active {
                pairs.push((node, z.clone()));
            }
        }
    }
    Ok((best - alpha, pairs))
}

/// One weighted support point of an atomic multiplier measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub node: usize,
    pub z: Vec<f64>,
    pub weight: f64,
}

/// Finitely supported nonnegative measure on node/parameter pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Total mass split off an atomic measure; keeps the original weights so the
/// round trip back to the un-normalized measure is exact.
#[derive(Clone, Debug)]
pub struct NormalizedMeasure {
    lambda_star: f64,
    original: AtomicMeasure,
}

impl NormalizedMeasure {
    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    /// Weights of the normalized probability measure (sum to one when the
    /// total mass is positive).
    pub fn prob_weights(&self) -> Vec<f64> {
        if self.lambda_star == 0.0 {
            // Empty or zero measure: the normalized part is undefined.
            return vec![f64::NAN; self.original.atoms.len()];
        }
        self.original.atoms.iter().map(|a| a.weight / self.lambda_star).collect()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.original.atoms
    }

    /// Exact reconstruction of the original measure.
    pub fn reconstruct(&self) -> AtomicMeasure {
        self.original.clone()
    }
}

/// Split mu into its total mass lambda* and a probability measure.
pub fn normalize_measure(measure: &AtomicMeasure) -> NormalizedMeasure {
    NormalizedMeasure { lambda_star: measure.total_mass(), original: measure.clone() }
}

/// Options for the exchange solver.
#[derive(Clone, Debug)]
pub struct SipOptions {
    pub tol_feasibility: f64,
    pub tol_stationarity: f64,
    pub max_rounds: usize,
    pub max_dual_sweeps: usize,
    /// Weights at or below this value are dropped from the reported measure.
    pub atom_drop_tol: f64,
    /// Absolute tolerance for collecting worst-case argmax pairs.
    pub tol_active: f64,
}

impl Default for SipOptions {
    fn default() -> Self {
        SipOptions {
            tol_feasibility: 1e-10,
            tol_stationarity: 1e-8,
            max_rounds: 400,
            max_dual_sweeps: 200_000,
            atom_drop_tol: 1e-12,
            tol_active: 1e-10,
        }
    }
}

/// Exchange-solver output: control, atomic multiplier measure, residuals,
/// and the (monotone) subproblem value history.
#[derive(Clone, Debug)]
pub struct SipCertificate {
    pub u_star: ControlField,
    pub measure: AtomicMeasure,
    pub feasibility: f64,
    pub stationarity_residual: f64,
    pub complementarity_residual: f64,
    pub rounds: usize,
    pub subproblem_values: Vec<f64>,
}

/// Solve min F(u) s.t. y(x, z) <= alpha on the closure of the domain times
/// the uncertainty set, by constraint exchange.
///
/// Each round solves the finite subproblem restricted to the working set of
/// (node, z) pairs (a projection onto finitely many affine constraints,
/// handled in the dual), then adds the worst violated pair. Stationarity
/// couples the objective gradient with representer fields, so atoms are the
/// discrete multiplier measure; their z-components carry no stationarity
/// contribution.
pub fn sip_solve(
    sys: &PdeSystem,
    data: &ProblemData,
    xi: &UncertaintySet,
    opts: &SipOptions,
) -> Result<SipCertificate> {
    xi.validate(data.m())?;
    probe_robust_slater(sys, data, xi)?;
    let target = sys.objective_target(&data.objective)?;
    let mut working: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut values = Vec::new();
    let mut mu: Vec<f64> = Vec::new();
    let mut u = target.clone();

    for round in 0..opts.max_rounds {
        let (violation, pairs) = robust_constraint(sys, data, &u, xi, opts.tol_active)?;
        values.push({
            let diff = u.axpy(-1.0, &target);
            diff.dot(&diff)
        });
        if violation <= opts.tol_feasibility {
            return finish(sys, data, &target, &u, &working, &mu, violation, round, values, opts);
        }
        let new_pair = pairs.into_iter().find(|(node, _)| sys.grid().interior_index(*node).is_some());
        let Some(new_pair) = new_pair else {
            // Only boundary nodes violate: impossible with a positive
            // threshold, so the instance is infeasible as posed.
            return Err(CoreError::RobustSlaterFailed { margin: violation });
        };
        if !working.contains(&new_pair) {
            working.push(new_pair);
            mu.push(0.0);
        }
        let solved = solve_working_qp(sys, data, &target, &working, &mut mu, opts)?;
        u = solved;
    }
    let (violation, _) = robust_constraint(sys, data, &u, xi, opts.tol_active)?;
    if violation <= opts.tol_feasibility {
        let round = opts.max_rounds;
        return finish(sys, data, &target, &u, &working, &mu, violation, round, values, opts);
    }
    Err(CoreError::IterationCap { what: "constraint exchange".into(), residual: violation })
}

/// Dense-discretization oracle: treat every interior-node/z-grid pair as a
/// constraint and solve the single finite subproblem.
pub fn sip_solve_dense(
    sys: &PdeSystem,
    data: &ProblemData,
    xi: &UncertaintySet,
    opts: &SipOptions,
) -> Result<SipCertificate> {
    xi.validate(data.m())?;
    probe_robust_slater(sys, data, xi)?;
    let target = sys.objective_target(&data.objective)?;
    let z_points = xi.grid_points();
    let mut working = Vec::new();
    for node in sys.grid().interior_nodes() {
        for z in &z_points {
            working.push((node, z.clone()));
        }
    }
    let mut mu = vec![0.0; working.len()];
    let u = solve_working_qp(sys, data, &target, &working, &mut mu, opts)?;
    let (violation, _) = robust_constraint_scan(sys, data, &u, xi, opts.tol_active)?;
    let values = vec![{
        let diff = u.axpy(-1.0, &target);
        diff.dot(&diff)
    }];
    finish(sys, data, &target, &u, &working, &mu, violation, 1, values, opts)
}

fn probe_robust_slater(sys: &PdeSystem, data: &ProblemData, xi: &UncertaintySet) -> Result<()> {
    let mut best = f64::INFINITY;
    let mut scale = data.alpha.abs().max(1.0);
    for k in 0..40 {
        let value = if k == 0 {
            let u = ControlField::zeros(sys.grid());
            robust_constraint(sys, data, &u, xi, 1e-9)?.0
        } else {
            let u = ControlField::from_fn(sys.grid(), |_, _| -scale);
            scale *= 2.0;
            robust_constraint(sys, data, &u, xi, 1e-9)?.0
        };
        best = best.min(value);
        if value < 0.0 {
            return Ok(());
        }
    }
    Err(CoreError::RobustSlaterFailed { margin: best })
}

/// Constraint data for a working pair: offset a and gradient representer g,
/// so the constraint reads a + (g, u) <= 0.
fn constraint_offset(sys: &PdeSystem, data: &ProblemData, pair: &(usize, Vec<f64>)) -> f64 {
    let (node, z) = pair;
    let mut a = sys.y0().value_at(*node) - data.alpha;
    for (zi, wi) in z.iter().zip(sys.basis_states()) {
        a += zi * wi.value_at(*node);
    }
    a
}

fn solve_working_qp(
    sys: &PdeSystem,
    data: &ProblemData,
    target: &ControlField,
    working: &[(usize, Vec<f64>)],
    mu: &mut Vec<f64>,
    opts: &SipOptions,
) -> Result<ControlField> {
    let k = working.len();
    let mut reps = Vec::with_capacity(k);
    for (node, _) in working {
        reps.push(sys.representer(*node)?);
    }
    // q_i = constraint value at the target; G_ij = (g_i, g_j).
    let mut q = Vec::with_capacity(k);
    for (i, pair) in working.iter().enumerate() {
        q.push(constraint_offset(sys, data, pair) + reps[i].dot(target));
    }
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let v = reps[i].dot(&reps[j]);
            gram[i * k + j] = v;
            gram[j * k + i] = v;
        }
    }
    // Cyclic coordinate ascent on the nonnegative dual QP
    // max q^T mu - (1/4) mu^T G mu.
    for _ in 0..opts.max_dual_sweeps {
        let mut change: f64 = 0.0;
        for i in 0..k {
            let gii = gram[i * k + i];
            if gii <= 0.0 {
                continue;
            }
            let mut rest = 0.0;
            for j in 0..k {
                if j != i {
                    rest += gram[i * k + j] * mu[j];
                }
            }
            let new = ((2.0 * q[i] - rest) / gii).max(0.0);
            change = change.max((new - mu[i]).abs() * gii.sqrt());
            mu[i] = new;
        }
        if change <= 1e-16 {
            break;
        }
    }
    let mut u = target.clone();
    for (mui, rep) in mu.iter().zip(&reps) {
        if *mui != 0.0 {
            u = u.axpy(-0.5 * mui, rep);
        }
    }
    Ok(u)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    sys: &PdeSystem,
    data: &ProblemData,
    target: &ControlField,
    u: &ControlField,
    working: &[(usize, Vec<f64>)],
    mu: &[f64],
    violation: f64,
    rounds: usize,
    values: Vec<f64>,
    opts: &SipOptions,
) -> Result<SipCertificate> {
    let mut atoms = Vec::new();
    let mut complementarity: f64 = 0.0;
    let mut stat = u.axpy(-1.0, target).scale(2.0);
    for (i, pair) in working.iter().enumerate() {
        let rep = sys.representer(pair.0)?;
        let slack = constraint_offset(sys, data, pair) + rep.dot(u);
        complementarity = complementarity.max((mu[i] * slack).abs());
        stat = stat.axpy(mu[i], &rep);
        if mu[i] > opts.atom_drop_tol {
            atoms.push(Atom { node: pair.0, z: pair.1.clone(), weight: mu[i] });
        }
    }
    Ok(SipCertificate {
        u_star: u.clone(),
        measure: AtomicMeasure { atoms },
        feasibility: violation,
        stationarity_residual: stat.norm(),
        complementarity_residual: complementarity,
        rounds,
        subproblem_values: values,
    })
}

/// Finite sample of parameter realizations.
#[derive(Clone, Debug)]
pub struct ScenarioSet {
    pub draws: Vec<Vec<f64>>,
    pub seed: u64,
}

impl ScenarioSet {
    /// Draws from the centered Gaussian law with the given covariance factor.
    pub fn gaussian(factor: &CovarianceFactor, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = factor.dim();
        let mut draws = Vec::with_capacity(n);
        for _ in 0..n {
            let eta: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            draws.push(factor.apply(&eta)?);
        }
        Ok(ScenarioSet { draws, seed })
    }

    /// Independent uniform draws on a box.
    pub fn uniform(lower: &[f64], upper: &[f64], n: usize, seed: u64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CoreError::DimensionMismatch("uniform bounds differ in length".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = (0..n)
            .map(|_| {
                lower
                    .iter()
                    .zip(upper)
                    .map(|(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                    .collect()
            })
            .collect();
        Ok(ScenarioSet { draws, seed })
    }

    pub fn from_draws(draws: Vec<Vec<f64>>, seed: u64) -> Self {
        ScenarioSet { draws, seed }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Count scenarios whose state exceeds the threshold anywhere, and the
/// largest exceedance seen.
pub fn as_feasibility(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    scenarios: &ScenarioSet,
    tol: f64,
) -> Result<(usize, f64)> {
    let base = sys.base_state(data, u)?;
    let w = sys.basis_states();
    let n_nodes = sys.grid().num_nodes();
    let scan = |z: &[f64]| -> f64 {
        let mut best = f64::NEG_INFINITY;
        for node in 0..n_nodes {
            let mut v = base.value_at(node);
            for (zi, wi) in z.iter().zip(w) {
                v += zi * wi.value_at(node);
            }
            if v > best {
                best = v;
            }
        }
        best - data.alpha
    };
    Ok(count_violations(scan, scenarios, tol))
}

/// Scenario check for a general violation functional g(z) (positive means
/// the constraint is violated at that realization).
pub fn as_feasibility_with(
    g: impl Fn(&[f64]) -> f64,
    scenarios: &ScenarioSet,
    tol: f64,
) -> (usize, f64) {
    count_violations(g, scenarios, tol)
}

fn count_violations(g: impl Fn(&[f64]) -> f64, scenarios: &ScenarioSet, tol: f64) -> (usize, f64) {
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    for z in &scenarios.draws {
        let v = g(z);
        if v > tol {
            count += 1;
        }
        if v > worst {
            worst = v;
        }
    }
    (count, worst)
}

/// Verdicts of the scenario (almost-sure) and support-wide (robust) readings
/// of one scalar constraint h(z) <= 0.
#[derive(Clone, Debug)]
pub struct LscReport {
    pub as_feasible: bool,
    pub as_violations: usize,
    pub robust_feasible: bool,
    pub robust_sup: f64,
    pub lsc: bool,
    pub verdicts_agree: bool,
}

/// Compare scenario feasibility of h against its supremum over a support
/// grid. For lower semicontinuous h the verdicts agree; a discontinuous h
/// can be almost-surely feasible yet robustly infeasible.
pub fn lsc_equivalence_check(
    h: &dyn Fn(&[f64]) -> f64,
    lsc: bool,
    support_grid: &[Vec<f64>],
    scenarios: &ScenarioSet,
    tol: f64,
) -> LscReport {
    let (violations, _) = count_violations(|z| h(z), scenarios, tol);
    let mut sup = f64::NEG_INFINITY;
    for z in support_grid {
        sup = sup.max(h(z));
    }
    let as_feasible = violations == 0;
    let robust_feasible = sup <= tol;
    LscReport {
        as_feasible,
        as_violations: violations,
        robust_feasible,
        robust_sup: sup,
        lsc,
        verdicts_agree: as_feasible == robust_feasible,
    }
}

/// Per-scenario multiplier diagnostics derived from supplied adjoint states.
#[derive(Clone, Debug)]
pub struct ScenarioKktRow {
    pub scenario: usize,
    pub min_multiplier: f64,
    pub complementarity: f64,
    pub max_state_violation: f64,
}

/// Scenario-level integrable-multiplier check plus the stationarity gap
/// attributable to the (unrepresentable) singular part.
#[derive(Clone, Debug)]
pub struct ScenarioKktReport {
    pub rows: Vec<ScenarioKktRow>,
    pub nonnegative: bool,
    pub flagged: Vec<usize>,
    /// || DF(u) + mean_i p_i ||, the residual left to the singular term.
    pub singular_gap: f64,
}

/// For each scenario, recover the multiplier density lambda_i = A* p_i from
/// the supplied adjoint state, then check nonnegativity and pointwise
/// complementarity against the scenario state. The averaged stationarity gap
/// || DF(u) + mean(p_i) || is reported rather than closed, since the
/// singular part of the multiplier has no finite representation.
pub fn as_kkt_scenario_residual(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    adjoints: &[ControlField],
    scenarios: &ScenarioSet,
    tol: f64,
) -> Result<ScenarioKktReport> {
    if adjoints.len() != scenarios.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "{} adjoint states for {} scenarios",
            adjoints.len(),
            scenarios.len()
        )));
    }
    let cell = sys.grid().cell_area();
    let mut rows = Vec::with_capacity(adjoints.len());
    let mut flagged = Vec::new();
    let mut mean_p = vec![0.0; sys.grid().num_interior()];
    for (i, (p_i, z)) in adjoints.iter().zip(&scenarios.draws).enumerate() {
        let lambda = sys.operator().apply(p_i.values());
        let min_multiplier = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        let y = sys.solve_state(data, u, z)?;
        let y_int = y.interior();
        let comp: f64 = lambda
            .iter()
            .zip(&y_int)
            .map(|(l, yv)| l * (yv - data.alpha))
            .sum::<f64>()
            * cell;
        let max_violation = y_int.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v - data.alpha));
        if min_multiplier < -tol || comp.abs() > tol {
            flagged.push(i);
        }
        for (acc, v) in mean_p.iter_mut().zip(p_i.values()) {
            *acc += v / adjoints.len() as f64;
        }
        rows.push(ScenarioKktRow {
            scenario: i,
            min_multiplier,
            complementarity: comp.abs(),
            max_state_violation: max_violation,
        });
    }
    let (_, grad_f) = objective_value_grad(sys, &data.objective, u)?;
    let gap_field: Vec<f64> =
        grad_f.values().iter().zip(&mean_p).map(|(df, p)| df + p).collect();
    let singular_gap =
        (gap_field.iter().map(|v| v * v).sum::<f64>() * cell).sqrt();
    let nonnegative = rows.iter().all(|r| r.min_multiplier >= -tol);
    Ok(ScenarioKktReport { rows, nonnegative, flagged, singular_gap })
}
