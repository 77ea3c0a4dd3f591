//! Structural property suites: concavity of the partial radius function,
//!  joint convexity and Lipschitz continuity of the constraint, agreement of
//! the spherical-radial estimate with plain Monte Carlo, statistical
//! log-concavity of the probability, discretization convergence, and the
//! a-priori state bound.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use probust_core::cases::{unit_square_data, CaseId, CaseSpec};
use probust_core::gaussian::{sample_sphere, ChiDistribution, CovarianceFactor};
use probust_core::pde::{max_state, ControlField, Grid, ObjectiveSpec, PdeSystem, ProblemData};
use probust_core::srd::{probability, radius, ray_decompose, DEFAULT_TOL_ACTIVE};

/// m = 3 instance on the unit square: three independent basis loads and a
/// correlated covariance.
fn three_source_data(intervals: usize) -> ProblemData {
    let n = intervals + 1;
    let grid = Grid::rectangle(n, n, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let pi = std::f64::consts::PI;
    let phi1 = ControlField::from_fn(&grid, |x, y| 2.0 * (x * (1.0 - x) + y * (1.0 - y)));
    let phi2 = ControlField::from_fn(&grid, |x, y| {
        0.4 * pi * pi * (pi * x).sin() * (pi * y).sin()
    });
    let phi3 = ControlField::from_fn(&grid, |x, y| 0.5 * (x + 0.5 * y));
    ProblemData::new(
        grid.clone(),
        ControlField::zeros(&grid),
        vec![phi1, phi2, phi3],
        1.0 / 16.0,
        vec![1.0, 0.2, 0.1, 0.2, 0.8, 0.05, 0.1, 0.05, 0.6],
        0.8,
        ObjectiveSpec::Tikhonov,
    )
    .unwrap()
}

/// Random control small enough to keep the expected state strictly feasible.
fn randn(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_control(grid: &Grid, rng: &mut ChaCha8Rng, scale: f64) -> ControlField {
    let values: Vec<f64> = (0..grid.num_interior()).map(|_| scale * randn(rng)).collect();
    ControlField::from_values(grid, values).unwrap()
}

fn random_direction(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| randn(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

#[test]
fn partial_radius_function_is_concave() {
    let data = three_source_data(16);
    let sys = PdeSystem::new(&data).unwrap();
    let chi = ChiDistribution::new(data.m()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let mut checked = 0;
    while checked < 100 {
        let u1 = random_control(&data.grid, &mut rng, 0.2);
        let u2 = random_control(&data.grid, &mut rng, 0.2);
        let v = random_direction(data.m(), &mut rng);
        let rho_of = |u: &ControlField| -> f64 {
            let d = ray_decompose(&sys, &data, u, &v).unwrap();
            radius(&d, data.alpha, DEFAULT_TOL_ACTIVE, &chi).unwrap().rho
        };
        let r1 = rho_of(&u1);
        let r2 = rho_of(&u2);
        for lambda in [0.25, 0.5, 0.75] {
            let mix = u1.scale(lambda).axpy(1.0 - lambda, &u2);
            let rm = rho_of(&mix);
            // extended arithmetic: any infinite endpoint forces an infinite mix
            if r1.is_infinite() || r2.is_infinite() {
                assert!(rm.is_infinite(), "mix radius finite ({rm}) with infinite endpoint");
            } else {
                let bound = lambda * r1 + (1.0 - lambda) * r2;
                assert!(
                    rm >= bound - 1e-9 * bound.abs().max(1.0),
                    "concavity violated: rho(mix)={rm} < {bound}"
                );
            }
        }
        checked += 1;
    }
}

#[test]
fn constraint_is_jointly_convex_and_lipschitz() {
    let data = three_source_data(16);
    let sys = PdeSystem::new(&data).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    let g_of = |u: &ControlField, z: &[f64]| -> f64 {
        let y = sys.solve_state(&data, u, z).unwrap();
        max_state(&y, 0.0).0 - data.alpha
    };
    let sample = |rng: &mut ChaCha8Rng| -> (ControlField, Vec<f64>) {
        let u = random_control(&data.grid, rng, 1.0);
        let z: Vec<f64> = (0..data.m()).map(|_| 2.0 * randn(rng)).collect();
        (u, z)
    };

    // joint convexity on random pairs
    for _ in 0..100 {
        let (u1, z1) = sample(&mut rng);
        let (u2, z2) = sample(&mut rng);
        let lambda: f64 = rng.gen();
        let um = u1.scale(lambda).axpy(1.0 - lambda, &u2);
        let zm: Vec<f64> =
            z1.iter().zip(&z2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let lhs = g_of(&um, &zm);
        let rhs = lambda * g_of(&u1, &z1) + (1.0 - lambda) * g_of(&u2, &z2);
        assert!(lhs <= rhs + 1e-10, "convexity violated: {lhs} > {rhs}");
    }

    // Lipschitz constant measured on probe pairs, verified on fresh pairs
    let ratio = |rng: &mut ChaCha8Rng| -> f64 {
        let (u1, z1) = sample(rng);
        let (u2, z2) = sample(rng);
        let du = u1.axpy(-1.0, &u2).norm();
        let dz = z1.iter().zip(&z2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        (g_of(&u1, &z1) - g_of(&u2, &z2)).abs() / (du + dz)
    };
    let mut measured: f64 = 0.0;
    for _ in 0..200 {
        measured = measured.max(ratio(&mut rng));
    }
    for _ in 0..100 {
        let r = ratio(&mut rng);
        assert!(r <= 1.5 * measured, "Lipschitz ratio {r} exceeds measured bound {measured}");
    }
}

#[test]
fn srd_agrees_with_monte_carlo() {
    let data = three_source_data(32);
    let sys = PdeSystem::new(&data).unwrap();
    let zero = ControlField::zeros(&data.grid);
    let n = 10_000;

    // spherical-radial estimate and its per-direction spread
    let dirs = sample_sphere(data.m(), n, 31).unwrap();
    let chi = ChiDistribution::new(data.m()).unwrap();
    let mut es = Vec::with_capacity(n);
    let base = sys.base_state(&data, &zero).unwrap();
    for (v, _) in dirs.iter() {
        let ray = sys.ray_state(v).unwrap();
        let d = probust_core::srd::RayDecomposition {
            base: base.clone(),
            ray,
            direction: v.to_vec(),
        };
        es.push(radius(&d, data.alpha, DEFAULT_TOL_ACTIVE, &chi).unwrap().e);
    }
    let phi_srd: f64 = es.iter().sum::<f64>() / n as f64;
    let mean = phi_srd;
    let var: f64 = es.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n as f64 - 1.0);
    let se_srd = (var / n as f64).sqrt();

    // plain Monte Carlo over the full event
    let factor = CovarianceFactor::new(data.m(), &data.sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let w = sys.basis_states();
    let mut hits = 0usize;
    for _ in 0..n {
        let eta: Vec<f64> = (0..data.m()).map(|_| randn(&mut rng)).collect();
        let z = factor.apply(&eta).unwrap();
        let mut worst = f64::NEG_INFINITY;
        for node in 0..data.grid.num_nodes() {
            let mut v = base.value_at(node);
            for (zi, wi) in z.iter().zip(w) {
                v += zi * wi.value_at(node);
            }
            worst = worst.max(v);
        }
        if worst <= data.alpha {
            hits += 1;
        }
    }
    let phi_mc = hits as f64 / n as f64;
    let se_mc = (phi_mc * (1.0 - phi_mc) / n as f64).sqrt();

    let gap = (phi_srd - phi_mc).abs();
    let budget = 3.0 * (se_srd + se_mc);
    assert!(gap <= budget, "SRD {phi_srd} vs MC {phi_mc}: gap {gap} > {budget}");
    assert!(phi_srd > 0.5 && phi_srd < 1.0, "degenerate instance: phi = {phi_srd}");
}

#[test]
fn probability_is_statistically_log_concave() {
    // m = 1: the two-point set makes the spherical integral exact and the
    // log-concavity inequality holds up to round-off.
    let spec = CaseSpec::new(CaseId::UnitSquare, 16).unwrap();
    let data = unit_square_data(&spec).unwrap();
    let sys = PdeSystem::new(&data).unwrap();
    let dirs1 = sample_sphere(1, 1, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let u1 = random_control(&data.grid, &mut rng, 0.15);
        let u2 = random_control(&data.grid, &mut rng, 0.15);
        let mix = u1.scale(0.5).axpy(0.5, &u2);
        let p1 = probability(&sys, &data, &u1, &dirs1).unwrap();
        let p2 = probability(&sys, &data, &u2, &dirs1).unwrap();
        let pm = probability(&sys, &data, &mix, &dirs1).unwrap();
        assert!(
            pm.ln() >= 0.5 * p1.ln() + 0.5 * p2.ln() - 1e-9,
            "log-concavity violated: {pm} vs {p1}, {p2}"
        );
    }

    // m = 3 with a sampled direction set: the inequality holds within a
    // statistical tolerance.
    let data3 = three_source_data(16);
    let sys3 = PdeSystem::new(&data3).unwrap();
    let dirs3 = sample_sphere(3, 512, 11).unwrap();
    let tol_stat = 5e-3;
    for _ in 0..15 {
        let u1 = random_control(&data3.grid, &mut rng, 0.15);
        let u2 = random_control(&data3.grid, &mut rng, 0.15);
        let mix = u1.scale(0.5).axpy(0.5, &u2);
        let p1 = probability(&sys3, &data3, &u1, &dirs3).unwrap();
        let p2 = probability(&sys3, &data3, &u2, &dirs3).unwrap();
        let pm = probability(&sys3, &data3, &mix, &dirs3).unwrap();
        assert!(
            pm.ln() >= 0.5 * p1.ln() + 0.5 * p2.ln() - tol_stat,
            "statistical log-concavity violated: {pm} vs {p1}, {p2}"
        );
    }
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let pi = std::f64::consts::PI;
    let mut errors = Vec::new();
    for intervals in [16usize, 32, 64] {
        let n = intervals + 1;
        let grid = Grid::rectangle(n, n, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let phi = ControlField::from_fn(&grid, |_, _| 1.0);
        let data = ProblemData::new(
            grid.clone(),
            ControlField::zeros(&grid),
            vec![phi],
            1.0,
            vec![1.0],
            0.5,
            ObjectiveSpec::Tikhonov,
        )
        .unwrap();
        let sys = PdeSystem::new(&data).unwrap();
        let u = ControlField::from_fn(&grid, |x, y| {
            2.0 * pi * pi * (pi * x).sin() * (pi * y).sin()
        });
        let y = sys.solve_state(&data, &u, &[0.0]).unwrap();
        let mut err: f64 = 0.0;
        for node in 0..grid.num_nodes() {
            let (x, yy) = grid.node_xy(node);
            let exact = (pi * x).sin() * (pi * yy).sin();
            err = err.max((y.value_at(node) - exact).abs());
        }
        errors.push(err);
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "convergence ratio {ratio}, errors {errors:?}");
    }
}

#[test]
fn apriori_bound_holds_with_measured_constant() {
    let data = three_source_data(16);
    let sys = PdeSystem::new(&data).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let sample = |rng: &mut ChaCha8Rng| -> (ControlField, Vec<f64>) {
        let u = random_control(&data.grid, rng, 1.0);
        let z: Vec<f64> = (0..data.m()).map(|_| 3.0 * randn(rng)).collect();
        (u, z)
    };
    let ratio = |u: &ControlField, z: &[f64]| -> f64 {
        let y = sys.solve_state(&data, u, z).unwrap();
        let znorm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        // f0 = 0, so ||u + f0|| = ||u||
        y.linf() / (znorm + u.norm())
    };
    let mut measured: f64 = 0.0;
    for _ in 0..100 {
        let (u, z) = sample(&mut rng);
        measured = measured.max(ratio(&u, &z));
    }
    assert!(measured.is_finite() && measured > 0.0);
    for _ in 0..100 {
        let (u, z) = sample(&mut rng);
        assert!(ratio(&u, &z) <= 1.5 * measured);
    }
}
