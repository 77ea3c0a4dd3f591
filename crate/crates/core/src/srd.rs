//! Spherical-radial decomposition of the state-constraint probability:
//! radius function along rays, radial probabilities, the probability
//! function itself, and its selected subgradient.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::gaussian::{ChiDistribution, DirectionSet};
use crate::pde::{max_state, ControlField, PdeSystem, ProblemData, StateField};

/// Default relative tolerance for collecting the active node set.
pub const DEFAULT_TOL_ACTIVE: f64 = 1e-8;

/// Positivity cutoff for ray values, relative to the ray's sup norm.
const RAY_EPS_REL: f64 = 1e-12;

/// State split along one ray: the fixed part `base = S(u, 0)` and the
/// direction part `ray = P(0, Sigma^{1/2} v)`, so the state at radius r is
/// `base + r * ray`.
#[derive(Clone, Debug)]
pub struct RayDecomposition {
    pub base: StateField,
    pub ray: StateField,
    pub direction: Vec<f64>,
}

/// Radius, active nodes, and radial probability along one ray.
#[derive(Clone, Debug)]
pub struct RadialResult {
    /// Feasible segment length; `f64::INFINITY` when the ray never leaves
    /// the feasible set.
    pub rho: f64,
    /// Nodes attaining the radius within the relative tolerance; empty iff
    /// `rho` is infinite.
    pub active_nodes: Vec<usize>,
    /// Chi-distribution mass of the feasible segment.
    pub e: f64,
}

/// Which element of the active-set convex hull feeds the subgradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    /// Uniform convex combination over the active set.
    Average,
    /// First active node in row-major order.
    First,
}

/// Per-direction record kept alongside the selected subgradient so other
/// selections can be reconstructed.
#[derive(Clone, Debug)]
pub struct DirectionReport {
    pub index: usize,
    pub v: Vec<f64>,
    pub rho: f64,
    pub e: f64,
    pub active_nodes: Vec<usize>,
    /// Coefficient w_j * chi(rho_j) this direction contributes.
    pub selection_weight: f64,
    /// True when the active set has two or more nodes, in which case the
    /// reported field depends on the selection rule.
    pub multivalued: bool,
}

/// Selected subgradient of the probability function plus per-direction data.
#[derive(Clone, Debug)]
pub struct SubgradientField {
    pub values: ControlField,
    pub per_direction: Vec<DirectionReport>,
}

/// Split the state at `u` into base and ray parts for direction `v`.
///
/// Fails when the expected state touches the threshold (Slater condition):
/// radii are only defined from a strictly feasible mean state.
pub fn ray_decompose(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    v: &[f64],
) -> Result<RayDecomposition> {
    let base = sys.base_state(data, u)?;
    let (max_base, _) = max_state(&base, 0.0);
    if max_base >= data.alpha {
        return Err(CoreError::SlaterViolation { max_state: max_base, alpha: data.alpha });
    }
    let ray = sys.ray_state(v)?;
    Ok(RayDecomposition { base, ray, direction: v.to_vec() })
}

/// Closed-form radius along the ray: the nodal minimum of
/// (alpha - base(x)) / ray(x) over nodes with positive ray value.
pub fn radius(
    decomp: &RayDecomposition,
    alpha: f64,
    tol_active: f64,
    chi: &ChiDistribution,
) -> Result<RadialResult> {
    let ray = decomp.ray.values();
    let base = decomp.base.values();
    let eps = RAY_EPS_REL * decomp.ray.linf();
    let mut rho = f64::INFINITY;
    for i in 0..ray.len() {
        if ray[i] > eps {
            let gamma = (alpha - base[i]) / ray[i];
            if gamma < rho {
                rho = gamma;
            }
        }
    }
    let mut active_nodes = Vec::new();
    if rho.is_finite() {
        let cut = rho + tol_active * rho.abs();
        for i in 0..ray.len() {
            if ray[i] > eps && (alpha - base[i]) / ray[i] <= cut {
                active_nodes.push(i);
            }
        }
    }
    let e = chi.cdf(rho)?;
    Ok(RadialResult { rho, active_nodes, e })
}

/// Probability that the state stays below the threshold uniformly in space:
/// the weighted sum of radial probabilities over the direction set.
pub fn probability(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    dirs: &DirectionSet,
) -> Result<f64> {
    let chi = ChiDistribution::new(data.m())?;
    let base = checked_base(sys, data, u)?;
    let mut phi = 0.0;
    for (v, w) in dirs.iter() {
        let ray = sys.ray_state(v)?;
        let decomp = RayDecomposition { base: base.clone(), ray, direction: v.to_vec() };
        let r = radius(&decomp, data.alpha, DEFAULT_TOL_ACTIVE, &chi)?;
        phi += w * r.e;
    }
    Ok(phi)
}

/// Selected subgradient of the probability function at `u`.
///
/// Directions with infinite radius contribute nothing. For finite radii the
/// contribution is -w_j chi(rho_j) times the chosen convex combination of
/// representer fields scaled by the inverse ray value at each active node.
pub fn subgradient(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    dirs: &DirectionSet,
    selection: Selection,
) -> Result<SubgradientField> {
    let chi = ChiDistribution::new(data.m())?;
    let base = checked_base(sys, data, u)?;
    let mut reports = Vec::with_capacity(dirs.len());
    // node -> accumulated coefficient of its representer
    let mut coeffs: BTreeMap<usize, f64> = BTreeMap::new();
    for (j, (v, w)) in dirs.iter().enumerate() {
        let ray = sys.ray_state(v)?;
        let decomp = RayDecomposition { base: base.clone(), ray, direction: v.to_vec() };
        let r = radius(&decomp, data.alpha, DEFAULT_TOL_ACTIVE, &chi)?;
        let mut selection_weight = 0.0;
        let multivalued = r.active_nodes.len() > 1;
        if r.rho.is_finite() && !r.active_nodes.is_empty() {
            selection_weight = w * chi.pdf(r.rho)?;
            let chosen: &[usize] = match selection {
                Selection::Average => &r.active_nodes,
                Selection::First => &r.active_nodes[..1],
            };
            let share = selection_weight / chosen.len() as f64;
            for &node in chosen {
                let c = -share / decomp.ray.value_at(node);
                *coeffs.entry(node).or_insert(0.0) += c;
            }
        }
        reports.push(DirectionReport {
            index: j,
            v: v.to_vec(),
            rho: r.rho,
            e: r.e,
            active_nodes: r.active_nodes,
            selection_weight,
            multivalued,
        });
    }
    let mut values = ControlField::zeros(sys.grid());
    for (node, c) in coeffs {
        let rep = sys.representer(node)?;
        values = values.axpy(c, &rep);
    }
    Ok(SubgradientField { values, per_direction: reports })
}

/// g(u, r Sigma^{1/2} v) sampled along a radius grid; affine in r nodewise,
/// so evaluated from one decomposition without further solves.
pub fn radial_curve(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    v: &[f64],
    r_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let decomp = ray_decompose(sys, data, u, v)?;
    let mut out = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let state = decomp.base.axpy(r, &decomp.ray);
        let (m, _) = max_state(&state, 0.0);
        out.push((r, m - data.alpha));
    }
    Ok(out)
}

fn checked_base(sys: &PdeSystem, data: &ProblemData, u: &ControlField) -> Result<StateField> {
    let base = sys.base_state(data, u)?;
    let (max_base, _) = max_state(&base, 0.0);
    if max_base >= data.alpha {
        return Err(CoreError::SlaterViolation { max_state: max_base, alpha: data.alpha });
    }
    Ok(base)
}

/// Constraint value g(u, z) = max_x S(u, z)(x) - alpha.
pub fn constraint_value(
    sys: &PdeSystem,
    data: &ProblemData,
    u: &ControlField,
    z: &[f64],
) -> Result<f64> {
    let y = sys.solve_state(data, u, z)?;
    let (m, _) = max_state(&y, 0.0);
    Ok(m - data.alpha)
}
