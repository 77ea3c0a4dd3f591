//! Row builders for the CSV surfaces: per-direction reports, iteration
//! logs, atoms, and sweeps. Rendering and file IO live in the CLI.

use crate::chance::IterationRow;
use crate::pde::Grid;
use crate::robust::AtomicMeasure;
use crate::srd::DirectionReport;

/// Shortest-round-trip decimal text for a float; infinities print as "inf".
pub fn fmt(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn coords(grid: &Grid, node: usize) -> String {
    let (x, y) = grid.node_xy(node);
    if grid.is_line() {
        format!("({})", fmt(x))
    } else {
        format!("({},{})", fmt(x), fmt(y))
    }
}

/// Header and rows for the per-direction report: index, direction
/// components, radius, radial probability, active node coordinates.
pub fn direction_rows(grid: &Grid, m: usize, reports: &[DirectionReport]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["index".to_string()];
    for i in 0..m {
        header.push(format!("v{}", i + 1));
    }
    header.extend(["rho".to_string(), "e".to_string(), "active_nodes".to_string()]);
    let rows = reports
        .iter()
        .map(|r| {
            let mut row = vec![r.index.to_string()];
            row.extend(r.v.iter().map(|v| fmt(*v)));
            row.push(fmt(r.rho));
            row.push(fmt(r.e));
            row.push(
                r.active_nodes.iter().map(|n| coords(grid, *n)).collect::<Vec<_>>().join(";"),
            );
            row
        })
        .collect();
    (header, rows)
}

/// Header and rows for the solver iteration log.
pub fn iteration_rows(log: &[IterationRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["outer", "u_norm", "phi", "phi_tilde", "lambda", "stationarity", "complementarity", "penalty"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = log
        .iter()
        .map(|r| {
            vec![
                r.outer.to_string(),
                fmt(r.u_norm),
                fmt(r.phi),
                fmt(r.phi_tilde),
                fmt(r.lambda),
                fmt(r.stationarity),
                fmt(r.complementarity),
                fmt(r.penalty),
            ]
        })
        .collect();
    (header, rows)
}

/// Header and rows for an atomic measure: node coordinates, parameter
/// components, weight.
pub fn atom_rows(grid: &Grid, m: usize, measure: &AtomicMeasure) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["x".to_string()];
    if !grid.is_line() {
        header.push("y".to_string());
    }
    for i in 0..m {
        header.push(format!("z{}", i + 1));
    }
    header.push("weight".to_string());
    let rows = measure
        .atoms
        .iter()
        .map(|a| {
            let (x, y) = grid.node_xy(a.node);
            let mut row = vec![fmt(x)];
            if !grid.is_line() {
                row.push(fmt(y));
            }
            row.extend(a.z.iter().map(|v| fmt(*v)));
            row.push(fmt(a.weight));
            row
        })
        .collect();
    (header, rows)
}

/// Header and rows for a multiplier sweep.
pub fn sweep_rows(rows: &[(f64, f64, f64)]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["p", "u_star", "lambda"].iter().map(|s| s.to_string()).collect();
    let body = rows.iter().map(|(p, u, l)| vec![fmt(*p), fmt(*u), fmt(*l)]).collect();
    (header, body)
}

/// Header and rows for a radial diagnostic curve.
pub fn curve_rows(curve: &[(f64, f64)]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["r", "g"].iter().map(|s| s.to_string()).collect();
    let body = curve.iter().map(|(r, g)| vec![fmt(*r), fmt(*g)]).collect();
    (header, body)
}
