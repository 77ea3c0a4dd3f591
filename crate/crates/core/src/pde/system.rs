use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::field::{ControlField, StateField};
use super::grid::Grid;
use super::laplacian::DirichletLaplacian;
use crate::error::{CoreError, Result};
use crate::gaussian::CovarianceFactor;

/// Convex, differentiable objectives supported by the solvers. All are of
/// squared-distance form so that gradients are plain fields.
#[derive(Clone, Debug)]
pub enum ObjectiveSpec {
    /// ||u||^2
    Tikhonov,
    /// ||u - target||^2
    Tracking { target: ControlField },
    /// ||u - r||^2 where r is the representer of state evaluation at `node`.
    AffineTracking { node: usize },
}

/// Full description of one uncertain control problem instance.
#[derive(Clone, Debug)]
pub struct ProblemData {
    pub grid: Grid,
    pub f0: ControlField,
    pub phi: Vec<ControlField>,
    pub alpha: f64,
    /// Covariance of the random source coefficients, row-major m x m.
    pub sigma: Vec<f64>,
    /// Probability level of the chance constraint.
    pub p: f64,
    pub objective: ObjectiveSpec,
}

impl ProblemData {
    pub fn new(
        grid: Grid,
        f0: ControlField,
        phi: Vec<ControlField>,
        alpha: f64,
        sigma: Vec<f64>,
        p: f64,
        objective: ObjectiveSpec,
    ) -> Result<Self> {
        if phi.is_empty() {
            return Err(CoreError::Invalid("at least one basis field phi_i is required".into()));
        }
        let m = phi.len();
        if sigma.len() != m * m {
            return Err(CoreError::DimensionMismatch(format!(
                "covariance must be {m}x{m} = {} entries, got {}",
                m * m,
                sigma.len()
            )));
        }
        if !(0.0 < p && p < 1.0) {
            return Err(CoreError::BadProbabilityLevel { p });
        }
        if f0.grid() != &grid || phi.iter().any(|f| f.grid() != &grid) {
            return Err(CoreError::DimensionMismatch("source fields live on a different grid".into()));
        }
        if !alpha.is_finite() {
            return Err(CoreError::Invalid("threshold alpha must be finite".into()));
        }
        // Fails on non-SPD covariance; the factor itself is rebuilt by the system.
        CovarianceFactor::new(m, &sigma)?;
        Ok(ProblemData { grid, f0, phi, alpha, sigma, p, objective })
    }

    pub fn m(&self) -> usize {
        self.phi.len()
    }
}

/// Assembled operator plus everything reusable across solves: the source
/// solve `y0`, the basis solves `w_i`, the covariance factor, and a cache
/// of evaluation representers. Immutable after construction apart from the
/// representer cache, which is guarded for concurrent insertion.
pub struct PdeSystem {
    grid: Grid,
    op: DirichletLaplacian,
    y0: StateField,
    w: Vec<StateField>,
    sqrt_sigma: CovarianceFactor,
    representers: Mutex<HashMap<usize, Arc<ControlField>>>,
}

impl PdeSystem {
    pub fn new(data: &ProblemData) -> Result<Self> {
        let op = DirichletLaplacian::new(&data.grid)?;
        let y0 = StateField::from_interior(&data.grid, &op.solve(data.f0.values())?);
        let w = data
            .phi
            .iter()
            .map(|phi| Ok(StateField::from_interior(&data.grid, &op.solve(phi.values())?)))
            .collect::<Result<Vec<_>>>()?;
        let sqrt_sigma = CovarianceFactor::new(data.m(), &data.sigma)?;
        Ok(PdeSystem {
            grid: data.grid.clone(),
            op,
            y0,
            w,
            sqrt_sigma,
            representers: Mutex::new(HashMap::new()),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn operator(&self) -> &DirichletLaplacian {
        &self.op
    }

    pub fn sqrt_sigma(&self) -> &CovarianceFactor {
        &self.sqrt_sigma
    }

    /// Solution y0 of the deterministic part of the source.
    pub fn y0(&self) -> &StateField {
        &self.y0
    }

    /// Cached solves of the basis fields, w_i = A^{-1} phi_i.
    pub fn basis_states(&self) -> &[StateField] {
        &self.w
    }

    /// State for control u and parameter realization z.
    pub fn solve_state(&self, data: &ProblemData, u: &ControlField, z: &[f64]) -> Result<StateField> {
        if z.len() != data.m() {
            return Err(CoreError::DimensionMismatch(format!(
                "parameter vector has {} entries, expected {}",
                z.len(),
                data.m()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Invalid("parameter vector contains non-finite values".into()));
        }
        let n = self.grid.num_interior();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = u.values()[i] + data.f0.values()[i];
        }
        for (zi, phi) in z.iter().zip(&data.phi) {
            for i in 0..n {
                rhs[i] += zi * phi.values()[i];
            }
        }
        Ok(StateField::from_interior(&self.grid, &self.op.solve(&rhs)?))
    }

    /// Linear part P(u, z) = A^{-1} u + sum_i z_i w_i (deterministic source omitted).
    pub fn apply_p(&self, u: &ControlField, z: &[f64]) -> Result<StateField> {
        if z.len() != self.w.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "parameter vector has {} entries, expected {}",
                z.len(),
                self.w.len()
            )));
        }
        let mut y = StateField::from_interior(&self.grid, &self.op.solve(u.values())?);
        for (zi, wi) in z.iter().zip(&self.w) {
            y = y.axpy(*zi, wi);
        }
        Ok(y)
    }

    /// Expected state S(u, 0) = A^{-1}(u + f0).
    pub fn base_state(&self, data: &ProblemData, u: &ControlField) -> Result<StateField> {
        let rhs: Vec<f64> =
            u.values().iter().zip(data.f0.values()).map(|(a, b)| a + b).collect();
        Ok(StateField::from_interior(&self.grid, &self.op.solve(&rhs)?))
    }

    /// Ray state P(0, Sigma^{1/2} v); a weighted combination of cached basis
    /// solves, no linear solve required.
    pub fn ray_state(&self, v: &[f64]) -> Result<StateField> {
        let z = self.sqrt_sigma.apply(v)?;
        let mut y = StateField::zeros(&self.grid);
        for (zi, wi) in z.iter().zip(&self.w) {
            y = y.axpy(*zi, wi);
        }
        Ok(y)
    }

    /// Representer of state evaluation at an interior node: the field r with
    /// (r, h) = [A^{-1} h](node) exactly at the discrete level. Computed by a
    /// solve against a discrete Dirac scaled by the inverse cell area, then
    /// cached.
    pub fn representer(&self, node: usize) -> Result<Arc<ControlField>> {
        let Some(k) = self.grid.interior_index(node) else {
            return Err(CoreError::BoundaryNode { node });
        };
        if let Some(r) = self.representers.lock().unwrap().get(&node) {
            return Ok(Arc::clone(r));
        }
        let mut rhs = vec![0.0; self.grid.num_interior()];
        rhs[k] = 1.0 / self.grid.cell_area();
        let values = self.op.solve(&rhs)?;
        let field = Arc::new(ControlField::from_values(&self.grid, values)?);
        let mut cache = self.representers.lock().unwrap();
        Ok(Arc::clone(cache.entry(node).or_insert(field)))
    }

    /// Materialize the target field of an objective.
    pub fn objective_target(&self, spec: &ObjectiveSpec) -> Result<ControlField> {
        match spec {
            ObjectiveSpec::Tikhonov => Ok(ControlField::zeros(&self.grid)),
            ObjectiveSpec::Tracking { target } => Ok(target.clone()),
            ObjectiveSpec::AffineTracking { node } => Ok((*self.representer(*node)?).clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::field::max_state;

    fn unit_square_data(intervals: usize) -> ProblemData {
        let grid = Grid::rectangle(intervals + 1, intervals + 1, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let phi = ControlField::from_fn(&grid, |x, y| 2.0 * (x * (1.0 - x) + y * (1.0 - y)));
        let f0 = ControlField::zeros(&grid);
        let center = grid.nearest_node(0.5, 0.5);
        ProblemData::new(
            grid,
            f0,
            vec![phi],
            1.0 / 16.0,
            vec![1.0],
            0.8413447,
            ObjectiveSpec::AffineTracking { node: center },
        )
        .unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero_state() {
        let data = unit_square_data(8);
        let sys = PdeSystem::new(&data).unwrap();
        let u = ControlField::zeros(&data.grid);
        let y = sys.solve_state(&data, &u, &[0.0]).unwrap();
        assert!(y.linf() < 1e-14);
    }

    #[test]
    fn polynomial_state_is_exact_at_nodes() {
        // The basis load is built so its solution is x(1-x)y(1-y); second
        // differences of per-axis quadratics are exact, so the discrete solve
        // reproduces it to solver precision.
        let data = unit_square_data(16);
        let sys = PdeSystem::new(&data).unwrap();
        let u = ControlField::zeros(&data.grid);
        let y = sys.solve_state(&data, &u, &[1.0]).unwrap();
        let c = data.grid.nearest_node(0.5, 0.5);
        assert!((y.value_at(c) - 1.0 / 16.0).abs() < 1e-12);
        let (val, nodes) = max_state(&y, 1e-10);
        assert!((val - 1.0 / 16.0).abs() < 1e-12);
        assert_eq!(nodes, vec![c]);
    }

    #[test]
    fn apply_p_is_linear_and_matches_state_decomposition() {
        let data = unit_square_data(12);
        let sys = PdeSystem::new(&data).unwrap();
        let u = ControlField::from_fn(&data.grid, |x, y| (3.1 * x).sin() * (1.7 * y).cos());
        let p00 = sys.apply_p(&ControlField::zeros(&data.grid), &[0.0]).unwrap();
        assert!(p00.linf() == 0.0);

        let p_sum = sys.apply_p(&u, &[0.7 + 0.4]).unwrap();
        let p_a = sys.apply_p(&u, &[0.7]).unwrap();
        let p_b = sys.apply_p(&ControlField::zeros(&data.grid), &[0.4]).unwrap();
        let diff = p_sum.axpy(-1.0, &p_a).axpy(-1.0, &p_b).linf();
        assert!(diff < 1e-11, "linearity violated by {diff}");

        // solve_state = apply_p + A^{-1} f0, and f0 = 0 here.
        let s = sys.solve_state(&data, &u, &[0.7]).unwrap();
        assert!(s.axpy(-1.0, &p_a).linf() < 1e-11);
    }

    #[test]
    fn representer_reproduces_point_evaluation() {
        let data = unit_square_data(12);
        let sys = PdeSystem::new(&data).unwrap();
        let node = data.grid.nearest_node(0.5, 0.5);
        let r = sys.representer(node).unwrap();

        // (r, 0) = 0
        assert_eq!(r.dot(&ControlField::zeros(&data.grid)), 0.0);

        // (r, h) = [A^{-1} h](node) exactly at the discrete level.
        let h = ControlField::from_fn(&data.grid, |x, y| (7.0 * x * y).sin() + 0.3 * x);
        let direct = StateField::from_interior(&data.grid, &sys.operator().solve(h.values()).unwrap());
        let lhs = r.dot(&h);
        let rhs = direct.value_at(node);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0), "{lhs} vs {rhs}");

        // (r, phi_1) at the center equals the known state value there.
        let lhs2 = r.dot(&data.phi[0]);
        assert!((lhs2 - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn representer_rejects_boundary_nodes() {
        let data = unit_square_data(8);
        let sys = PdeSystem::new(&data).unwrap();
        assert!(matches!(sys.representer(0), Err(CoreError::BoundaryNode { node: 0 })));
    }

    #[test]
    fn operator_is_symmetric() {
        let data = unit_square_data(9);
        let sys = PdeSystem::new(&data).unwrap();
        let g = &data.grid;
        let u = ControlField::from_fn(g, |x, y| (x * 9.7).sin() + y * y);
        let v = ControlField::from_fn(g, |x, y| (y * 5.3).cos() - x);
        let au = ControlField::from_values(g, sys.operator().apply(u.values())).unwrap();
        let av = ControlField::from_values(g, sys.operator().apply(v.values())).unwrap();
        let a = au.dot(&v);
        let b = u.dot(&av);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}
