use crate::error::{CoreError, Result};

/// Uniform tensor grid on an axis-aligned rectangle with homogeneous
/// Dirichlet boundary. A line grid (`ny == 1`) covers one-dimensional
/// problems with the same machinery.
///
/// Node counts include the boundary, so `nx = 5` on `(0,1)` yields
/// three interior nodes with mesh width `h = 1/4`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
}

impl Grid {
    pub fn rectangle(nx: usize, ny: usize, x_range: (f64, f64), y_range: (f64, f64)) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(CoreError::DegenerateGrid { nx, ny });
        }
        if !(x_range.0 < x_range.1) || !(y_range.0 < y_range.1) {
            return Err(CoreError::Invalid(format!(
                "domain rectangle must have positive extent, got ({},{})x({},{})",
                x_range.0, x_range.1, y_range.0, y_range.1
            )));
        }
        Ok(Grid { nx, ny, ax: x_range.0, bx: x_range.1, ay: y_range.0, by: y_range.1 })
    }

    pub fn line(nx: usize, x_range: (f64, f64)) -> Result<Self> {
        if nx < 3 {
            return Err(CoreError::DegenerateGrid { nx, ny: 1 });
        }
        if !(x_range.0 < x_range.1) {
            return Err(CoreError::Invalid(format!(
                "domain interval must have positive extent, got ({},{})",
                x_range.0, x_range.1
            )));
        }
        Ok(Grid { nx, ny: 1, ax: x_range.0, bx: x_range.1, ay: 0.0, by: 0.0 })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn is_line(&self) -> bool {
        self.ny == 1
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.ax, self.bx)
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.ay, self.by)
    }

    pub fn hx(&self) -> f64 {
        (self.bx - self.ax) / (self.nx - 1) as f64
    }

    /// Mesh width along y; 1 for line grids so that cell measures stay uniform.
    pub fn hy(&self) -> f64 {
        if self.is_line() {
            1.0
        } else {
            (self.by - self.ay) / (self.ny - 1) as f64
        }
    }

    /// Measure of one cell in the discrete L2 inner product.
    pub fn cell_area(&self) -> f64 {
        if self.is_line() {
            self.hx()
        } else {
            self.hx() * self.hy()
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_interior(&self) -> usize {
        if self.is_line() {
            self.nx - 2
        } else {
            (self.nx - 2) * (self.ny - 2)
        }
    }

    /// Interior lattice width (nodes per interior row).
    pub fn interior_width(&self) -> usize {
        self.nx - 2
    }

    pub fn node_at(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }

    pub fn split(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    pub fn node_xy(&self, node: usize) -> (f64, f64) {
        let (ix, iy) = self.split(node);
        let x = self.ax + ix as f64 * self.hx();
        let y = if self.is_line() { 0.0 } else { self.ay + iy as f64 * (self.by - self.ay) / (self.ny - 1) as f64 };
        (x, y)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let (ix, iy) = self.split(node);
        if self.is_line() {
            ix == 0 || ix == self.nx - 1
        } else {
            ix == 0 || ix == self.nx - 1 || iy == 0 || iy == self.ny - 1
        }
    }

    /// Contiguous index of an interior node in row-major interior ordering.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        if self.is_boundary(node) {
            return None;
        }
        let (ix, iy) = self.split(node);
        if self.is_line() {
            Some(ix - 1)
        } else {
            Some((iy - 1) * self.interior_width() + (ix - 1))
        }
    }

    pub fn interior_to_node(&self, k: usize) -> usize {
        if self.is_line() {
            k + 1
        } else {
            let w = self.interior_width();
            let iy = k / w + 1;
            let ix = k % w + 1;
            self.node_at(ix, iy)
        }
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_interior()).map(move |k| self.interior_to_node(k))
    }

    pub fn nearest_node(&self, x: f64, y: f64) -> usize {
        let ix = ((x - self.ax) / self.hx()).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let iy = if self.is_line() {
            0
        } else {
            let hy = (self.by - self.ay) / (self.ny - 1) as f64;
            ((y - self.ay) / hy).round().clamp(0.0, (self.ny - 1) as f64) as usize
        };
        self.node_at(ix, iy)
    }
}
