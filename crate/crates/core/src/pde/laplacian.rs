use super::grid::Grid;
use crate::error::{CoreError, Result};

/// Entry budget above which the banded factorization gives way to
/// conjugate gradients (roughly 256 MB of factor storage).
const DIRECT_ENTRY_CAP: usize = 32_000_000;

const CG_REL_TOL: f64 = 1e-12;

/// Five-point (three-point in 1D) discrete negative Laplacian on interior
/// nodes with homogeneous Dirichlet boundary, plus a cached solver.
///
/// The operator is symmetric positive definite; solves use a banded
/// Cholesky factorization when the band fits in memory and preconditioned
/// conjugate gradients otherwise.
pub struct DirichletLaplacian {
    grid: Grid,
    sx: f64,
    sy: f64,
    solver: Solver,
}

enum Solver {
    Banded(BandedCholesky),
    ConjugateGradient,
}

impl DirichletLaplacian {
    pub fn new(grid: &Grid) -> Result<Self> {
        // Grid construction already rejects degenerate sizes; re-check for
        // callers holding a hand-built grid.
        if grid.nx() < 3 || (grid.ny() != 1 && grid.ny() < 3) {
            return Err(CoreError::DegenerateGrid { nx: grid.nx(), ny: grid.ny() });
        }
        let sx = 1.0 / (grid.hx() * grid.hx());
        let sy = if grid.is_line() { 0.0 } else { 1.0 / (grid.hy() * grid.hy()) };
        let n = grid.num_interior();
        let bw = if grid.is_line() { 1 } else { grid.interior_width() };
        let solver = if n * (bw + 1) <= DIRECT_ENTRY_CAP {
            Solver::Banded(BandedCholesky::factor(grid, sx, sy)?)
        } else {
            Solver::ConjugateGradient
        };
        Ok(DirichletLaplacian { grid: grid.clone(), sx, sy, solver })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Apply the operator to interior values.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        debug_assert_eq!(v.len(), g.num_interior());
        let w = g.interior_width();
        let diag = 2.0 * self.sx + 2.0 * self.sy;
        let mut out = vec![0.0; v.len()];
        if g.is_line() {
            for i in 0..v.len() {
                let mut s = diag * v[i];
                if i > 0 {
                    s -= self.sx * v[i - 1];
                }
                if i + 1 < v.len() {
                    s -= self.sx * v[i + 1];
                }
                out[i] = s;
            }
        } else {
            let rows = v.len() / w;
            for r in 0..rows {
                for c in 0..w {
                    let i = r * w + c;
                    let mut s = diag * v[i];
                    if c > 0 {
                        s -= self.sx * v[i - 1];
                    }
                    if c + 1 < w {
                        s -= self.sx * v[i + 1];
                    }
                    if r > 0 {
                        s -= self.sy * v[i - w];
                    }
                    if r + 1 < rows {
                        s -= self.sy * v[i + w];
                    }
                    out[i] = s;
                }
            }
        }
        out
    }

    /// Solve A x = b for interior values.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match &self.solver {
            Solver::Banded(f) => Ok(f.solve(b)),
            Solver::ConjugateGradient => self.solve_cg(b),
        }
    }

    /// Euclidean relative residual of a candidate solution.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.apply(x);
        let num: f64 = ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    fn solve_cg(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let bnorm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let max_iter = 20 * n;
        for it in 0..max_iter {
            if rr.sqrt() <= CG_REL_TOL * bnorm {
                return Ok(x);
            }
            let ap = self.apply(&p);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                return Err(CoreError::SolverDiverged { residual: rr.sqrt() / bnorm, iterations: it });
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
        Err(CoreError::SolverDiverged { residual: rr.sqrt() / bnorm, iterations: max_iter })
    }
}

/// Lower-banded Cholesky factor of the stencil matrix. Row i stores
/// L[i, i-bw..=i] contiguously.
struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    fn factor(grid: &Grid, sx: f64, sy: f64) -> Result<Self> {
        let n = grid.num_interior();
        let w = grid.interior_width();
        let bw = if grid.is_line() { 1.min(n.saturating_sub(1)) } else { w };
        let diag = 2.0 * sx + 2.0 * sy;
        let stride = bw + 1;
        let mut l = vec![0.0; n * stride];

        // Stencil entry A[i][j] for j <= i.
        let a = |i: usize, j: usize| -> f64 {
            if i == j {
                diag
            } else if j + 1 == i && (grid.is_line() || i % w != 0) {
                -sx
            } else if j + bw == i && !grid.is_line() {
                -sy
            } else {
                0.0
            }
        };

        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            for j in jmin..=i {
                let mut s = a(i, j);
                let kmin = jmin.max(j.saturating_sub(bw));
                for k in kmin..j {
                    s -= l[i * stride + (k + bw - i)] * l[j * stride + (k + bw - j)];
                }
                if j < i {
                    l[i * stride + (j + bw - i)] = s / l[j * stride + bw];
                } else {
                    if s <= 0.0 {
                        return Err(CoreError::NotPositiveDefinite { index: i, pivot: s });
                    }
                    l[i * stride + bw] = s.sqrt();
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, stride) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            let mut s = y[i];
            for j in jmin..i {
                s -= self.l[i * stride + (j + bw - i)] * y[j];
            }
            y[i] = s / self.l[i * stride + bw];
        }
        for i in (0..n).rev() {
            let jmax = (i + bw).min(n - 1);
            let mut s = y[i];
            for j in (i + 1)..=jmax {
                s -= self.l[j * stride + (i + bw - j)] * y[j];
            }
            y[i] = s / self.l[i * stride + bw];
        }
        y
    }
}
