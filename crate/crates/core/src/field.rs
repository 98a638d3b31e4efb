//! Sampled fields on a transverse grid.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::TransverseGrid;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("fields are defined on different grids")]
    GridMismatch,
}

/// One complex envelope sampled on the grid, row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: TransverseGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: TransverseGrid) -> Self {
        Self { grid, values: vec![Complex64::ZERO; grid.len()] }
    }

    pub fn from_values(grid: TransverseGrid, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match grid");
        Self { grid, values }
    }

    /// Sample `f(x, y)` at every node.
    pub fn from_fn(grid: TransverseGrid, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let nx = grid.nx();
        let mut values = vec![Complex64::ZERO; grid.len()];
        values
            .par_chunks_mut(nx)
            .enumerate()
            .for_each(|(iy, row)| {
                let y = grid.y(iy);
                for (ix, v) in row.iter_mut().enumerate() {
                    *v = f(grid.x(ix), y);
                }
            });
        Self { grid, values }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&mut self, s: f64) {
        self.values.par_iter_mut().for_each(|v| *v *= s);
    }

    pub fn same_grid(&self, other: &ComplexField) -> Result<(), FieldError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(FieldError::GridMismatch)
        }
    }
}

/// One real scalar per node (potentials, masks, windows).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: TransverseGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: TransverseGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: TransverseGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: TransverseGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match grid");
        Self { grid, values }
    }

    pub fn from_fn(grid: TransverseGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let nx = grid.nx();
        let mut values = vec![0.0; grid.len()];
        values
            .par_chunks_mut(nx)
            .enumerate()
            .for_each(|(iy, row)| {
                let y = grid.y(iy);
                for (ix, v) in row.iter_mut().enumerate() {
                    *v = f(grid.x(ix), y);
                }
            });
        Self { grid, values }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// A real 2-vector per node (quasi-vector potential, gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct RealVectorField {
    grid: TransverseGrid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl RealVectorField {
    pub fn zeros(grid: TransverseGrid) -> Self {
        Self { grid, x: vec![0.0; grid.len()], y: vec![0.0; grid.len()] }
    }

    pub fn from_components(grid: TransverseGrid, x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), grid.len());
        assert_eq!(y.len(), grid.len());
        Self { grid, x, y }
    }

    pub fn from_fn(grid: TransverseGrid, f: impl Fn(f64, f64) -> (f64, f64) + Sync) -> Self {
        let nx = grid.nx();
        let mut x = vec![0.0; grid.len()];
        let mut y = vec![0.0; grid.len()];
        x.par_chunks_mut(nx)
            .zip(y.par_chunks_mut(nx))
            .enumerate()
            .for_each(|(iy, (rx, ry))| {
                let yy = grid.y(iy);
                for ix in 0..nx {
                    let (vx, vy) = f(grid.x(ix), yy);
                    rx[ix] = vx;
                    ry[ix] = vy;
                }
            });
        Self { grid, x, y }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_mut(&mut self) -> &mut [f64] {
        &mut self.x
    }

    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)))
    }
}
