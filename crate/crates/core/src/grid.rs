//! Uniform periodic sampling of the transverse plane, in scaled units.
//!
//! All transverse lengths are measured in units of the initial beam waist
//! `w0`; the propagation coordinate is `zeta = z / (k w0^2)`, which puts the
//! Rayleigh length of a unit-waist beam at `zeta = 1/2`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid sizes must be at least 16, got {nx}x{ny}")]
    TooSmall { nx: usize, ny: usize },
    #[error("grid sizes must be even (spectral wavenumber symmetry), got {nx}x{ny}")]
    OddSize { nx: usize, ny: usize },
    #[error("grid extents must be positive and finite, got lx={lx}, ly={ly}")]
    BadExtent { lx: f64, ly: f64 },
    #[error("grid offsets must be finite")]
    BadOffset,
}

/// Cell-centered periodic grid.
///
/// Node coordinates are `x_i = -lx/2 + (i + 1/2) dx + x_offset`, so with the
/// default zero offset no node ever coincides with `r = 0`. Powers of two
/// for `nx`, `ny` make the transforms fastest but are not required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    x_offset: f64,
    y_offset: f64,
}

impl TransverseGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        Self::with_offset(nx, ny, lx, ly, 0.0, 0.0)
    }

    pub fn with_offset(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        x_offset: f64,
        y_offset: f64,
    ) -> Result<Self, GridError> {
        if nx < 16 || ny < 16 {
            return Err(GridError::TooSmall { nx, ny });
        }
        if nx % 2 != 0 || ny % 2 != 0 {
            return Err(GridError::OddSize { nx, ny });
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(GridError::BadExtent { lx, ly });
        }
        if !(x_offset.is_finite() && y_offset.is_finite()) {
            return Err(GridError::BadOffset);
        }
        Ok(Self { nx, ny, lx, ly, x_offset, y_offset })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn x_offset(&self) -> f64 {
        self.x_offset
    }

    pub fn y_offset(&self) -> f64 {
        self.y_offset
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x(&self, ix: usize) -> f64 {
        -0.5 * self.lx + (ix as f64 + 0.5) * self.dx() + self.x_offset
    }

    pub fn y(&self, iy: usize) -> f64 {
        -0.5 * self.ly + (iy as f64 + 0.5) * self.dy() + self.y_offset
    }

    /// Row-major linear index with x fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Coordinates of the node at linear index `idx`.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        (self.x(ix), self.y(iy))
    }

    /// Signed spectral wavenumber along x for FFT bin `ix`.
    pub fn kx(&self, ix: usize) -> f64 {
        let m = if ix <= self.nx / 2 { ix as isize } else { ix as isize - self.nx as isize };
        2.0 * std::f64::consts::PI * m as f64 / self.lx
    }

    /// Signed spectral wavenumber along y for FFT bin `iy`.
    pub fn ky(&self, iy: usize) -> f64 {
        let m = if iy <= self.ny / 2 { iy as isize } else { iy as isize - self.ny as isize };
        2.0 * std::f64::consts::PI * m as f64 / self.ly
    }

    /// Largest resolved wavenumber magnitude, `sqrt(kx_max^2 + ky_max^2)`.
    pub fn k_max(&self) -> f64 {
        let kx = std::f64::consts::PI / self.dx();
        let ky = std::f64::consts::PI / self.dy();
        (kx * kx + ky * ky).sqrt()
    }

    /// Distance from the origin to the nearest node.
    pub fn min_node_radius(&self) -> f64 {
        let mut best = f64::INFINITY;
        for iy in 0..self.ny {
            let y = self.y(iy);
            for ix in 0..self.nx {
                let x = self.x(ix);
                let r = x.hypot(y);
                if r < best {
                    best = r;
                }
            }
        }
        best
    }
}
