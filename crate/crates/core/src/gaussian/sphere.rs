use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};

/// How a direction set was generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// m = 1: the exact two-point uniform measure on {-1, +1}.
    ExactTwoPoint,
    /// Normalized seeded Gaussian draws with equal weights.
    SeededGaussian,
    /// Normalized seeded Gaussian draws in (v, -v) pairs.
    Antithetic,
}

/// Quadrature-style sample of the uniform measure on the unit sphere:
/// unit directions with nonnegative weights summing to one.
#[derive(Clone, Debug)]
pub struct DirectionSet {
    m: usize,
    dirs: Vec<f64>,
    weights: Vec<f64>,
    provenance: Provenance,
    seed: u64,
}

/// Sample `n` directions on the (m-1)-sphere.
///
/// For m = 1 the uniform measure is exactly two atoms, so the result is
/// {+1, -1} with weights 1/2 regardless of `n`. For m >= 2 and even `n`,
/// draws come in antithetic pairs (v, -v), which makes the direction sum
/// exactly zero; odd `n` falls back to plain draws. Fixed seeds reproduce
/// bit-identical sets.
pub fn sample_sphere(m: usize, n: usize, seed: u64) -> Result<DirectionSet> {
    if m < 1 || n < 1 {
        return Err(CoreError::BadSphereArguments { m, n });
    }
    if m == 1 {
        return Ok(DirectionSet {
            m,
            dirs: vec![1.0, -1.0],
            weights: vec![0.5, 0.5],
            provenance: Provenance::ExactTwoPoint,
            seed,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs = Vec::with_capacity(n * m);
    let antithetic = n % 2 == 0;
    let fresh = if antithetic { n / 2 } else { n };
    for _ in 0..fresh {
        let v = draw_unit(&mut rng, m);
        dirs.extend_from_slice(&v);
        if antithetic {
            dirs.extend(v.iter().map(|x| -x));
        }
    }
    Ok(DirectionSet {
        m,
        dirs,
        weights: vec![1.0 / n as f64; n],
        provenance: if antithetic { Provenance::Antithetic } else { Provenance::SeededGaussian },
        seed,
    })
}

fn draw_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

impl DirectionSet {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn direction(&self, j: usize) -> &[f64] {
        &self.dirs[j * self.m..(j + 1) * self.m]
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.len()).map(move |j| (self.direction(j), self.weight(j)))
    }
}
