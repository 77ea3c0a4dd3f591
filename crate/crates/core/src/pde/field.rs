use super::grid::Grid;
use crate::error::{CoreError, Result};

/// Control living on interior nodes, one value per node.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlField {
    grid: Grid,
    pub(crate) values: Vec<f64>,
}

/// State living on all nodes; boundary values are identically zero.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField {
    grid: Grid,
    pub(crate) values: Vec<f64>,
}

impl ControlField {
    pub fn zeros(grid: &Grid) -> Self {
        ControlField { grid: grid.clone(), values: vec![0.0; grid.num_interior()] }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_interior() {
            return Err(CoreError::DimensionMismatch(format!(
                "control needs {} interior values, got {}",
                grid.num_interior(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Invalid("control field contains non-finite values".into()));
        }
        Ok(ControlField { grid: grid.clone(), values })
    }

    /// Sample a function of the physical coordinates at interior nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid
            .interior_nodes()
            .map(|node| {
                let (x, y) = grid.node_xy(node);
                f(x, y)
            })
            .collect();
        ControlField { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete L2 inner product (cell-area weighted).
    pub fn dot(&self, other: &ControlField) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        s * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// self + c * other
    pub fn axpy(&self, c: f64, other: &ControlField) -> ControlField {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        ControlField { grid: self.grid.clone(), values }
    }

    pub fn scale(&self, c: f64) -> ControlField {
        ControlField { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }
}

impl StateField {
    pub fn zeros(grid: &Grid) -> Self {
        StateField { grid: grid.clone(), values: vec![0.0; grid.num_nodes()] }
    }

    /// Build a state from interior values, zero on the boundary.
    pub fn from_interior(grid: &Grid, interior: &[f64]) -> Self {
        debug_assert_eq!(interior.len(), grid.num_interior());
        let mut values = vec![0.0; grid.num_nodes()];
        for (k, v) in interior.iter().enumerate() {
            values[grid.interior_to_node(k)] = *v;
        }
        StateField { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn interior(&self) -> Vec<f64> {
        (0..self.grid.num_interior()).map(|k| self.values[self.grid.interior_to_node(k)]).collect()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn axpy(&self, c: f64, other: &StateField) -> StateField {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        StateField { grid: self.grid.clone(), values }
    }

    pub fn scale(&self, c: f64) -> StateField {
        StateField { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }
}

/// Maximum of a state over all nodes together with the attaining node set.
/// Nodes within `tol_active` (absolute) of the maximum count as attaining.
pub fn max_state(y: &StateField, tol_active: f64) -> (f64, Vec<usize>) {
    let mut best = f64::NEG_INFINITY;
    for &v in &y.values {
        if v > best {
            best = v;
        }
    }
    let argmax = (0..y.values.len()).filter(|&i| y.values[i] >= best - tol_active).collect();
    (best, argmax)
}
