//! Uniform 2-D evaluation grids.

/// Axis-aligned uniform grid of `nx * ny` points starting at `(x0, y0)` with
/// spacings `(dx, dy)`. Index layout is row-major with x fastest:
/// `index = j * nx + i` for point `(x0 + i dx, y0 + j dy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid2 {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl UniformGrid2 {
    /// Vertex grid of `n x n` points covering the square [-r, r]^2.
    pub fn square_vertices(r: f64, n: usize) -> Self {
        assert!(n >= 2 && r > 0.0);
        let d = 2.0 * r / (n - 1) as f64;
        Self { x0: -r, y0: -r, dx: d, dy: d, nx: n, ny: n }
    }

    /// Midpoints of the (n-1) x (n-1) cells of [`Self::square_vertices`].
    pub fn square_cell_midpoints(r: f64, n: usize) -> Self {
        assert!(n >= 2 && r > 0.0);
        let d = 2.0 * r / (n - 1) as f64;
        Self {
            x0: -r + 0.5 * d,
            y0: -r + 0.5 * d,
            dx: d,
            dy: d,
            nx: n - 1,
            ny: n - 1,
        }
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluation domain D = [-r, r]^dim with a grid resolution attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    r: f64,
    dim: usize,
    grid_n: usize,
}

impl Domain {
    pub fn new(r: f64, dim: usize, grid_n: usize) -> crate::Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(crate::Error::InvalidParameter(format!(
                "domain half-side must be positive, got {r}"
            )));
        }
        if dim < 2 {
            return Err(crate::Error::InvalidParameter(format!(
                "domain dimension must be >= 2, got {dim}"
            )));
        }
        if grid_n < 16 {
            return Err(crate::Error::InvalidParameter(format!(
                "grid_n must be >= 16, got {grid_n}"
            )));
        }
        Ok(Self { r, dim, grid_n })
    }

    /// Plane domain, the case all geometry operations support.
    pub fn square(r: f64, grid_n: usize) -> crate::Result<Self> {
        Self::new(r, 2, grid_n)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn side(&self) -> f64 {
        2.0 * self.r
    }

    /// Lebesgue volume (2r)^dim.
    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim as i32)
    }

    pub fn vertex_grid(&self) -> UniformGrid2 {
        UniformGrid2::square_vertices(self.r, self.grid_n)
    }

    pub fn midpoint_grid(&self) -> UniformGrid2 {
        UniformGrid2::square_cell_midpoints(self.r, self.grid_n)
    }

    /// Grid cell side length of the vertex grid.
    pub fn cell_size(&self) -> f64 {
        self.side() / (self.grid_n - 1) as f64
    }
}
