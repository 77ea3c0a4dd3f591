//! Ray decomposition, radius, probability, and subgradient behavior on the
//! benchmark instances, checked against closed forms and independent
//! finite-difference oracles.

use probust_core::cases::{
    self, norm_cdf, oracle_unit_square, square_sine_control, square_sine_data, unit_square_data,
    CaseId, CaseSpec,
};
use probust_core::error::CoreError;
use probust_core::gaussian::{sample_sphere, ChiDistribution};
use probust_core::pde::{ControlField, PdeSystem};
use probust_core::srd::{
    probability, radial_curve, radius, ray_decompose, subgradient, Selection, DEFAULT_TOL_ACTIVE,
};

const F_ETA_ONE: f64 = 0.682_689_492_137_085_9; // 2 Phi(1) - 1

fn unit_square(intervals: usize) -> (probust_core::pde::ProblemData, PdeSystem) {
    let spec = CaseSpec::new(CaseId::UnitSquare, intervals).unwrap();
    let data = unit_square_data(&spec).unwrap();
    let sys = PdeSystem::new(&data).unwrap();
    (data, sys)
}

#[test]
fn ray_decomposition_matches_direct_solves() {
    let (data, sys) = unit_square(16);
    let u = ControlField::from_fn(&data.grid, |x, y| 0.1 * (3.0 * x).sin() * (2.0 * y).cos());

    // base at zero control is the zero state, ray is the cached basis solve
    let zero = ControlField::zeros(&data.grid);
    let d = ray_decompose(&sys, &data, &zero, &[1.0]).unwrap();
    assert!(d.base.linf() < 1e-14);
    for node in 0..data.grid.num_nodes() {
        let (x, y) = data.grid.node_xy(node);
        let expect = x * (1.0 - x) * y * (1.0 - y);
        assert!((d.ray.value_at(node) - expect).abs() < 1e-12);
    }

    // v and -v give negated rays
    let dm = ray_decompose(&sys, &data, &zero, &[-1.0]).unwrap();
    let diff = d.ray.axpy(1.0, &dm.ray).linf();
    assert!(diff < 1e-14);

    // base + r*ray equals a direct solve at z = r * v for random u
    let du = ray_decompose(&sys, &data, &u, &[1.0]).unwrap();
    let along = du.base.axpy(2.0, &du.ray);
    let direct = sys.solve_state(&data, &u, &[2.0]).unwrap();
    assert!(along.axpy(-1.0, &direct).linf() < 1e-11);
}

#[test]
fn slater_violation_is_reported() {
    let (mut data, _) = unit_square(8);
    data.alpha = -1.0;
    let sys = PdeSystem::new(&data).unwrap();
    let zero = ControlField::zeros(&data.grid);
    let err = ray_decompose(&sys, &data, &zero, &[1.0]).unwrap_err();
    assert!(matches!(err, CoreError::SlaterViolation { .. }));

    let dirs = sample_sphere(1, 1, 0).unwrap();
    assert!(probability(&sys, &data, &zero, &dirs).is_err());
}

#[test]
fn radius_on_unit_square_case() {
    let (data, sys) = unit_square(64);
    let chi = ChiDistribution::new(1).unwrap();
    let zero = ControlField::zeros(&data.grid);

    let plus = ray_decompose(&sys, &data, &zero, &[1.0]).unwrap();
    let r = radius(&plus, data.alpha, DEFAULT_TOL_ACTIVE, &chi).unwrap();
    assert!((r.rho - 1.0).abs() < 1e-10, "rho = {}", r.rho);
    let center = data.grid.nearest_node(0.5, 0.5);
    assert_eq!(r.active_nodes, vec![center]);
    assert!((r.e - F_ETA_ONE).abs() < 1e-9);

    let minus = ray_decompose(&sys, &data, &zero, &[-1.0]).unwrap();
    let r = radius(&minus, data.alpha, DEFAULT_TOL_ACTIVE, &chi).unwrap();
    assert!(r.rho.is_infinite());
    assert!(r.active_nodes.is_empty());
    assert_eq!(r.e, 1.0);

    // doubling the threshold doubles the radius (base is zero here)
    let r2 = radius(&plus, 2.0 * data.alpha, DEFAULT_TOL_ACTIVE, &chi).unwrap();
    assert!((r2.rho - 2.0).abs() < 1e-10);
}

#[test]
fn probability_matches_closed_forms() {
    let (data, sys) = unit_square(64);
    let dirs = sample_sphere(1, 1, 0).unwrap();
    let zero = ControlField::zeros(&data.grid);
    let phi = probability(&sys, &data, &zero, &dirs).unwrap();
    assert!((phi - norm_cdf(1.0)).abs() < 2e-3, "phi = {phi}");
    // on this grid the active point is an exact node, so the error is tiny
    assert!((phi - norm_cdf(1.0)).abs() < 1e-9);

    // a huge threshold makes every ray finite but the mass indistinguishable from one
    let mut relaxed = data.clone();
    relaxed.alpha = 1e9;
    let sys2 = PdeSystem::new(&relaxed).unwrap();
    let phi = probability(&sys2, &relaxed, &zero, &dirs).unwrap();
    assert!(phi > 1.0 - 1e-12);

    // square_sine restricted curve at tau = 0.5
    let spec = CaseSpec::new(CaseId::SquareSine, 64).unwrap();
    let sdata = square_sine_data(&spec).unwrap();
    let ssys = PdeSystem::new(&sdata).unwrap();
    let u = square_sine_control(&sdata.grid, 0.5);
    let phi = probability(&ssys, &sdata, &u, &dirs).unwrap();
    assert!((phi - norm_cdf(0.5)).abs() < 2e-3, "phi = {phi}");
}

#[test]
fn zero_ray_in_every_direction_gives_zero_subgradient() {
    // A zero basis load produces identically zero rays, so both directions
    // have infinite radius and the subgradient vanishes.
    let (data, _) = unit_square(8);
    let mut data0 = data.clone();
    data0.phi = vec![ControlField::zeros(&data.grid)];
    let sys = PdeSystem::new(&data0).unwrap();
    let dirs = sample_sphere(1, 1, 0).unwrap();
    let zero = ControlField::zeros(&data0.grid);
    let sg = subgradient(&sys, &data0, &zero, &dirs, Selection::Average).unwrap();
    assert_eq!(sg.values.linf(), 0.0);
    assert!(sg.per_direction.iter().all(|r| r.rho.is_infinite() && r.e == 1.0));
    let phi = probability(&sys, &data0, &zero, &dirs).unwrap();
    assert_eq!(phi, 1.0);
}

#[test]
fn subgradient_matches_scaled_representer() {
    let (data, sys) = unit_square(64);
    let dirs = sample_sphere(1, 1, 0).unwrap();
    let zero = ControlField::zeros(&data.grid);
    let sg = subgradient(&sys, &data, &zero, &dirs, Selection::Average).unwrap();

    let oracle = oracle_unit_square();
    let center = data.grid.nearest_node(0.5, 0.5);
    let rep = sys.representer(center).unwrap();
    let expect = rep.scale(oracle.grad_factor);
    let err = sg.values.axpy(-1.0, &expect).norm() / expect.norm();
    assert!(err < 0.02, "relative error {err}");

    // per-direction reports: one finite contribution, one vacuous
    assert_eq!(sg.per_direction.len(), 2);
    let plus = &sg.per_direction[0];
    assert_eq!(plus.v, vec![1.0]);
    assert!((plus.rho - 1.0).abs() < 1e-10);
    assert_eq!(plus.active_nodes, vec![center]);
    assert!(!plus.multivalued);
    let chi = ChiDistribution::new(1).unwrap();
    assert!((plus.selection_weight - 0.5 * chi.pdf(1.0).unwrap()).abs() < 1e-12);
    let minus = &sg.per_direction[1];
    assert!(minus.rho.is_infinite());
    assert_eq!(minus.selection_weight, 0.0);
}

#[test]
fn subgradient_agrees_with_finite_differences() {
    let (data, sys) = unit_square(32);
    let dirs = sample_sphere(1, 1, 0).unwrap();
    let u = ControlField::from_fn(&data.grid, |x, y| {
        0.2 * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin() + 0.05 * x
    });
    let h = ControlField::from_fn(&data.grid, |x, y| (2.0 * x + y).cos() + 0.5 * y);

    let sg = subgradient(&sys, &data, &u, &dirs, Selection::Average).unwrap();
    let pairing = sg.values.dot(&h);

    let step = 1e-4 * u.norm() / h.norm();
    let up = u.axpy(step, &h);
    let dn = u.axpy(-step, &h);
    let fd = (probability(&sys, &data, &up, &dirs).unwrap()
        - probability(&sys, &data, &dn, &dirs).unwrap())
        / (2.0 * step);
    let rel = (pairing - fd).abs() / fd.abs().max(1e-12);
    assert!(rel < 1e-4, "directional derivative {pairing} vs fd {fd} (rel {rel})");
}

#[test]
fn selection_rules_agree_on_singleton_active_sets() {
    let (data, sys) = unit_square(32);
    let dirs = sample_sphere(1, 1, 0).unwrap();
    let zero = ControlField::zeros(&data.grid);
    let avg = subgradient(&sys, &data, &zero, &dirs, Selection::Average).unwrap();
    let first = subgradient(&sys, &data, &zero, &dirs, Selection::First).unwrap();
    assert!(avg.values.axpy(-1.0, &first.values).linf() < 1e-14);
}

#[test]
fn multivalued_active_set_is_flagged_and_averaged() {
    // square_sine at zero control: the ray peaks at four symmetric nodes.
    let spec = CaseSpec::new(CaseId::SquareSine, 64).unwrap();
    let data = square_sine_data(&spec).unwrap();
    let sys = PdeSystem::new(&data).unwrap();
    let dirs = sample_sphere(1, 1, 0).unwrap();
    let zero = ControlField::zeros(&data.grid);
    let sg = subgradient(&sys, &data, &zero, &dirs, Selection::Average).unwrap();
    let plus = &sg.per_direction[0];
    assert!(plus.multivalued);
    assert_eq!(plus.active_nodes.len(), 4);
    let pi = std::f64::consts::PI;
    let expected: Vec<usize> = [
        (pi / 2.0, pi / 2.0),
        (3.0 * pi / 2.0, pi / 2.0),
        (pi / 2.0, 3.0 * pi / 2.0),
        (3.0 * pi / 2.0, 3.0 * pi / 2.0),
    ]
    .iter()
    .map(|(x, y)| data.grid.nearest_node(*x, *y))
    .collect();
    let mut sorted = expected.clone();
    sorted.sort_unstable();
    assert_eq!(plus.active_nodes, sorted);
}

#[test]
fn radial_curve_crosses_at_the_radius() {
    let (data, sys) = unit_square(64);
    let zero = ControlField::zeros(&data.grid);
    let rs: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let curve = radial_curve(&sys, &data, &zero, &[1.0], &rs).unwrap();

    // strictly feasible at r = 0
    assert!(curve[0].1 < 0.0);
    // crossing exactly at r = 1 on this grid
    let at_one = curve.iter().find(|(r, _)| (*r - 1.0).abs() < 1e-12).unwrap();
    assert!(at_one.1.abs() < 1e-10, "g(1) = {}", at_one.1);
    // convex along the ray: max of affine functions
    for w in curve.windows(3) {
        let mid = 0.5 * (w[0].1 + w[2].1);
        assert!(w[1].1 <= mid + 1e-12);
    }
    // monotone sign structure: feasible then infeasible
    let mut crossed = false;
    for (_, g) in &curve {
        if *g > 1e-10 {
            crossed = true;
        } else {
            assert!(!crossed, "feasible point after crossing");
        }
    }
}

#[test]
fn square_sine_max_state_hits_four_peaks() {
    let spec = CaseSpec::new(CaseId::SquareSine, 64).unwrap();
    let data = square_sine_data(&spec).unwrap();
    let sys = PdeSystem::new(&data).unwrap();
    let zero = ControlField::zeros(&data.grid);
    let y = sys.solve_state(&data, &zero, &[1.0]).unwrap();
    let (val, nodes) = probust_core::pde::max_state(&y, 1e-6);
    assert!((val - 1.0).abs() < 5e-3, "peak value {val}");
    assert_eq!(nodes.len(), 4);
    let pi = std::f64::consts::PI;
    for (x, y) in [
        (pi / 2.0, pi / 2.0),
        (3.0 * pi / 2.0, pi / 2.0),
        (pi / 2.0, 3.0 * pi / 2.0),
        (3.0 * pi / 2.0, 3.0 * pi / 2.0),
    ] {
        assert!(nodes.contains(&data.grid.nearest_node(x, y)));
    }
}

#[test]
fn probability_is_deterministic_for_a_fixed_direction_set() {
    let spec = CaseSpec::new(CaseId::UnitSquare, 16).unwrap();
    let data = cases::unit_square_data(&spec).unwrap();
    let mut data3 = data.clone();
    // m = 3 variant with extra basis loads
    let g = &data.grid;
    data3.phi = vec![
        data.phi[0].clone(),
        ControlField::from_fn(g, |x, y| {
            2.0 * std::f64::consts::PI.powi(2)
                * (std::f64::consts::PI * x).sin()
                * (std::f64::consts::PI * y).sin()
                * 0.05
        }),
        ControlField::from_fn(g, |x, y| 0.1 * (x + y)),
    ];
    data3.sigma = vec![1.0, 0.2, 0.1, 0.2, 0.8, 0.05, 0.1, 0.05, 0.6];
    let sys = PdeSystem::new(&data3).unwrap();
    let dirs = sample_sphere(3, 64, 7).unwrap();
    let zero = ControlField::zeros(g);
    let a = probability(&sys, &data3, &zero, &dirs).unwrap();
    let b = probability(&sys, &data3, &zero, &dirs).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert!(a > 0.0 && a < 1.0);
}
