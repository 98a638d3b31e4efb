//! Spectral differentiation and 2D transforms on periodic grids.
//!
//! Derivatives are Fourier multipliers, exact for band-limited fields. The
//! Nyquist bin is zeroed for odd-order derivatives so that the gradient of a
//! real field stays real; the Laplacian keeps it (even multiplier).
//!
//! All passes are elementwise or row-independent, so internal parallelism is
//! bit-deterministic regardless of thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::field::{ComplexField, RealField, RealVectorField};
use crate::grid::TransverseGrid;

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans_for(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// 2D FFT worker bound to one grid size. Owns its transpose scratch so that
/// repeated propagation steps do not reallocate.
pub struct Fft2d {
    nx: usize,
    ny: usize,
    plans_x: Arc<Plans>,
    plans_y: Arc<Plans>,
    scratch: Vec<Complex64>,
}

impl Fft2d {
    pub fn new(grid: &TransverseGrid) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        Self {
            nx,
            ny,
            plans_x: plans_for(nx),
            plans_y: plans_for(ny),
            scratch: vec![Complex64::ZERO; nx * ny],
        }
    }

    fn pass_rows(plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64], row_len: usize) {
        let scratch_len = plan.get_inplace_scratch_len();
        data.par_chunks_exact_mut(row_len).for_each_init(
            || vec![Complex64::ZERO; scratch_len],
            |scratch, row| plan.process_with_scratch(row, scratch),
        );
    }

    fn transpose(src: &[Complex64], dst: &mut [Complex64], nx: usize, ny: usize) {
        // dst is ny-fast: dst[ix*ny + iy] = src[iy*nx + ix]
        dst.par_chunks_mut(ny).enumerate().for_each(|(ix, out)| {
            for (iy, o) in out.iter_mut().enumerate() {
                *o = src[iy * nx + ix];
            }
        });
    }

    /// Forward transform along x only (rows). No normalization.
    pub fn forward_x(&self, data: &mut [Complex64]) {
        Self::pass_rows(&self.plans_x.fwd, data, self.nx);
    }

    /// Inverse transform along x only, normalized by 1/nx.
    pub fn inverse_x(&self, data: &mut [Complex64]) {
        Self::pass_rows(&self.plans_x.inv, data, self.nx);
        let s = 1.0 / self.nx as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }

    /// Full 2D forward transform. Bin layout matches the grid layout
    /// (kx fastest). No normalization.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        Self::pass_rows(&self.plans_x.fwd, data, self.nx);
        Self::transpose(data, &mut self.scratch, self.nx, self.ny);
        Self::pass_rows(&self.plans_y.fwd, &mut self.scratch, self.ny);
        let (nx, ny) = (self.nx, self.ny);
        let scratch = &self.scratch;
        data.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            for (ix, v) in row.iter_mut().enumerate() {
                *v = scratch[ix * ny + iy];
            }
        });
    }

    /// Full 2D inverse transform, normalized by 1/(nx*ny).
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        Self::pass_rows(&self.plans_x.inv, data, self.nx);
        Self::transpose(data, &mut self.scratch, self.nx, self.ny);
        Self::pass_rows(&self.plans_y.inv, &mut self.scratch, self.ny);
        let (nx, ny) = (self.nx, self.ny);
        let s = 1.0 / (nx * ny) as f64;
        let scratch = &self.scratch;
        data.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            for (ix, v) in row.iter_mut().enumerate() {
                *v = scratch[ix * ny + iy] * s;
            }
        });
    }

    /// Multiply the x-spectrum by `phase` (laid out like the data, kx bin
    /// fastest) and transform back. Normalization is included.
    pub fn apply_in_spectrum_x(&self, data: &mut [Complex64], phase: &[Complex64]) {
        Self::pass_rows(&self.plans_x.fwd, data, self.nx);
        let s = 1.0 / self.nx as f64;
        data.par_iter_mut().zip(phase.par_iter()).for_each(|(v, p)| *v *= p * s);
        Self::pass_rows(&self.plans_x.inv, data, self.nx);
    }

    /// Multiply the y-spectrum by `phase_t` given in transposed layout
    /// (`phase_t[ix*ny + iy]`, ky bin fastest) and transform back.
    pub fn apply_in_spectrum_y(&mut self, data: &mut [Complex64], phase_t: &[Complex64]) {
        Self::transpose(data, &mut self.scratch, self.nx, self.ny);
        Self::pass_rows(&self.plans_y.fwd, &mut self.scratch, self.ny);
        let s = 1.0 / self.ny as f64;
        self.scratch
            .par_iter_mut()
            .zip(phase_t.par_iter())
            .for_each(|(v, p)| *v *= p * s);
        Self::pass_rows(&self.plans_y.inv, &mut self.scratch, self.ny);
        let (nx, ny) = (self.nx, self.ny);
        let scratch = &self.scratch;
        data.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            for (ix, v) in row.iter_mut().enumerate() {
                *v = scratch[ix * ny + iy];
            }
        });
    }
}

/// Gradient multiplier: zero at the Nyquist bin.
fn grad_k(grid: &TransverseGrid, bin: usize, along_x: bool) -> f64 {
    if along_x {
        if bin == grid.nx() / 2 { 0.0 } else { grid.kx(bin) }
    } else if bin == grid.ny() / 2 {
        0.0
    } else {
        grid.ky(bin)
    }
}

/// Derivatives of a raw complex lattice via Fourier multipliers.
/// Returns (d/dx, d/dy, laplacian) as requested by the `which` flags.
fn spectral_derivs(
    grid: &TransverseGrid,
    values: &[Complex64],
    want_grad: bool,
    want_lap: bool,
) -> (Option<Vec<Complex64>>, Option<Vec<Complex64>>, Option<Vec<Complex64>>) {
    let mut fft = Fft2d::new(grid);
    let mut spec = values.to_vec();
    fft.forward(&mut spec);
    let nx = grid.nx();

    fn mul(
        spec: &[Complex64],
        nx: usize,
        f: impl Fn(usize, usize) -> Complex64 + Sync,
    ) -> Vec<Complex64> {
        let mut out = spec.to_vec();
        out.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            for (ix, v) in row.iter_mut().enumerate() {
                *v *= f(ix, iy);
            }
        });
        out
    }

    let gx = want_grad.then(|| {
        let mut v = mul(&spec, nx, |ix, _iy| Complex64::new(0.0, grad_k(grid, ix, true)));
        fft.inverse(&mut v);
        v
    });
    let gy = want_grad.then(|| {
        let mut v = mul(&spec, nx, |_ix, iy| Complex64::new(0.0, grad_k(grid, iy, false)));
        fft.inverse(&mut v);
        v
    });
    let lap = want_lap.then(|| {
        let mut v = mul(&spec, nx, |ix, iy| {
            let kx = grid.kx(ix);
            let ky = grid.ky(iy);
            Complex64::new(-(kx * kx + ky * ky), 0.0)
        });
        fft.inverse(&mut v);
        v
    });
    (gx, gy, lap)
}

/// Spectral gradient of a complex field.
pub fn spectral_gradient(f: &ComplexField) -> (ComplexField, ComplexField) {
    let (gx, gy, _) = spectral_derivs(f.grid(), f.values(), true, false);
    (
        ComplexField::from_values(*f.grid(), gx.unwrap()),
        ComplexField::from_values(*f.grid(), gy.unwrap()),
    )
}

/// Spectral Laplacian of a complex field.
pub fn spectral_laplacian(f: &ComplexField) -> ComplexField {
    let (_, _, lap) = spectral_derivs(f.grid(), f.values(), false, true);
    ComplexField::from_values(*f.grid(), lap.unwrap())
}

/// Spectral gradient of a real field; the result is real up to roundoff and
/// the imaginary part is discarded.
pub fn spectral_gradient_real(f: &RealField) -> RealVectorField {
    let values: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (gx, gy, _) = spectral_derivs(f.grid(), &values, true, false);
    RealVectorField::from_components(
        *f.grid(),
        gx.unwrap().into_iter().map(|v| v.re).collect(),
        gy.unwrap().into_iter().map(|v| v.re).collect(),
    )
}

/// Spectral curl (z-component) of a real 2-vector field: dAy/dx - dAx/dy.
pub fn spectral_curl(a: &RealVectorField) -> RealField {
    let grid = *a.grid();
    let ax: Vec<Complex64> = a.x().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let ay: Vec<Complex64> = a.y().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (_, dax_dy, _) = spectral_derivs(&grid, &ax, true, false);
    let (day_dx, _, _) = {
        let (gx, _, _) = spectral_derivs(&grid, &ay, true, false);
        (gx, (), ())
    };
    let vals = day_dx
        .unwrap()
        .iter()
        .zip(dax_dy.unwrap().iter())
        .map(|(a, b)| a.re - b.re)
        .collect();
    RealField::from_values(grid, vals)
}

/// Spectral divergence of a real 2-vector field.
pub fn spectral_divergence(a: &RealVectorField) -> RealField {
    let grid = *a.grid();
    let ax: Vec<Complex64> = a.x().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let ay: Vec<Complex64> = a.y().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (dax_dx, _, _) = spectral_derivs(&grid, &ax, true, false);
    let (_, day_dy, _) = spectral_derivs(&grid, &ay, true, false);
    let vals = dax_dx
        .unwrap()
        .iter()
        .zip(day_dy.unwrap().iter())
        .map(|(a, b)| a.re + b.re)
        .collect();
    RealField::from_values(grid, vals)
}

/// 4th-order centered finite-difference derivative of a complex lattice along
/// one axis, with one-sided 4th-order closures at the edges. Used for
/// configurations that are not periodic-compatible.
pub fn fd4_derivative(
    grid: &TransverseGrid,
    values: &[Complex64],
    along_x: bool,
) -> Vec<Complex64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = if along_x { grid.dx() } else { grid.dy() };
    let mut out = vec![Complex64::ZERO; values.len()];

    let stencil = |line: &mut dyn FnMut(usize) -> Complex64, n: usize, out: &mut dyn FnMut(usize, Complex64)| {
        let c = 1.0 / (12.0 * h);
        // one-sided closures
        out(0, (-25.0 * line(0) + 48.0 * line(1) - 36.0 * line(2) + 16.0 * line(3) - 3.0 * line(4)) * c);
        out(1, (-3.0 * line(0) - 10.0 * line(1) + 18.0 * line(2) - 6.0 * line(3) + line(4)) * c);
        for i in 2..n - 2 {
            out(i, (-line(i + 2) + 8.0 * line(i + 1) - 8.0 * line(i - 1) + line(i - 2)) * c);
        }
        out(
            n - 2,
            (3.0 * line(n - 1) + 10.0 * line(n - 2) - 18.0 * line(n - 3) + 6.0 * line(n - 4)
                - line(n - 5))
                * c,
        );
        out(
            n - 1,
            (25.0 * line(n - 1) - 48.0 * line(n - 2) + 36.0 * line(n - 3) - 16.0 * line(n - 4)
                + 3.0 * line(n - 5))
                * c,
        );
    };

    if along_x {
        for iy in 0..ny {
            let row = &values[iy * nx..(iy + 1) * nx];
            let base = iy * nx;
            let mut line = |i: usize| row[i];
            let mut sink = |i: usize, v: Complex64| out[base + i] = v;
            stencil(&mut line, nx, &mut sink);
        }
    } else {
        for ix in 0..nx {
            let mut line = |i: usize| values[i * nx + ix];
            let mut sink = |i: usize, v: Complex64| out[i * nx + ix] = v;
            stencil(&mut line, ny, &mut sink);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C64;

    fn grid(n: usize, l: f64) -> TransverseGrid {
        TransverseGrid::new(n, n, l, l).unwrap()
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = grid(32, 10.0);
        let f = ComplexField::from_fn(g, |_, _| C64::new(1.5, -0.5));
        let (gx, gy) = spectral_gradient(&f);
        for v in gx.values().iter().chain(gy.values()) {
            assert!(v.norm() < 1e-13);
        }
        let lap = spectral_laplacian(&f);
        for v in lap.values() {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_single_fourier_mode_is_exact() {
        let g = grid(32, 10.0);
        let k = 2.0 * std::f64::consts::PI / 10.0;
        let f = ComplexField::from_fn(g, |x, _| (C64::i() * k * x).exp());
        let (gx, _) = spectral_gradient(&f);
        for (d, v) in gx.values().iter().zip(f.values()) {
            let expect = C64::i() * k * v;
            assert!((d - expect).norm() < 1e-12);
        }
        let lap = spectral_laplacian(&f);
        for (d, v) in lap.values().iter().zip(f.values()) {
            assert!((d + k * k * v).norm() < 1e-10);
        }
    }

    #[test]
    fn gaussian_gradient_matches_centered_differences() {
        // independent oracle: 4th-order centered differences of the sampled
        // Gaussian, compared at the oracle's own resolution
        let g = grid(1024, 20.0);
        let f = ComplexField::from_fn(g, |x, y| C64::new((-(x * x + y * y)).exp(), 0.0));
        let (gx, _) = spectral_gradient(&f);
        let dx = g.dx();
        let scale = gx.values().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        let mut max_rel = 0.0_f64;
        for iy in 8..g.ny() - 8 {
            let y = g.y(iy);
            for ix in 8..g.nx() - 8 {
                let x = g.x(ix);
                if x * x + y * y > 9.0 {
                    continue; // away from the (numerically empty) boundary
                }
                let i = g.index(ix, iy);
                let fd4 = (-f.values()[g.index(ix + 2, iy)]
                    + 8.0 * f.values()[g.index(ix + 1, iy)]
                    - 8.0 * f.values()[g.index(ix - 1, iy)]
                    + f.values()[g.index(ix - 2, iy)])
                    / (12.0 * dx);
                max_rel = max_rel.max((gx.values()[i] - fd4).norm() / scale);
            }
        }
        assert!(max_rel < 1e-6, "max rel dev {max_rel}");
    }

    #[test]
    fn gaussian_laplacian_matches_five_point_stencil() {
        // oracle: Richardson combination of the 5-point stencil at spacings
        // h and 2h (the plain stencil is 2nd order, too coarse at any sane
        // resolution for this comparison)
        let g = grid(512, 20.0);
        let f = ComplexField::from_fn(g, |x, y| C64::new((-(x * x + y * y)).exp(), 0.0));
        let lap = spectral_laplacian(&f);
        let (dx, dy) = (g.dx(), g.dy());
        let scale = lap.values().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        let mut max_rel = 0.0_f64;
        for iy in 8..g.ny() - 8 {
            let y = g.y(iy);
            for ix in 8..g.nx() - 8 {
                let x = g.x(ix);
                if x * x + y * y > 9.0 {
                    continue;
                }
                let i = g.index(ix, iy);
                let c = f.values()[i];
                let five = |h: usize| {
                    (f.values()[g.index(ix + h, iy)] + f.values()[g.index(ix - h, iy)]
                        - 2.0 * c)
                        / ((h as f64 * dx) * (h as f64 * dx))
                        + (f.values()[g.index(ix, iy + h)] + f.values()[g.index(ix, iy - h)]
                            - 2.0 * c)
                            / ((h as f64 * dy) * (h as f64 * dy))
                };
                let stencil = (4.0 * five(1) - five(2)) / 3.0;
                max_rel = max_rel.max((lap.values()[i] - stencil).norm() / scale);
            }
        }
        assert!(max_rel < 1e-5, "max rel dev {max_rel}");
    }

    #[test]
    fn real_field_gradient_stays_real() {
        let g = grid(64, 12.0);
        let f = ComplexField::from_fn(g, |x, y| {
            C64::new((-(x * x + y * y) / 4.0).exp() * (x * 0.7).cos(), 0.0)
        });
        let (gx, gy) = spectral_gradient(&f);
        let scale = f.values().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        for v in gx.values().iter().chain(gy.values()) {
            assert!(v.im.abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn parseval_roundtrip_preserves_norm() {
        let g = grid(64, 7.0);
        let f = ComplexField::from_fn(g, |x, y| C64::new((x * 0.3).sin() + y, (y * 1.1).cos()));
        let before: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
        let mut fft = Fft2d::new(&g);
        let mut data = f.values().to_vec();
        fft.forward(&mut data);
        let spec_norm: f64 =
            data.iter().map(|v| v.norm_sqr()).sum::<f64>() / (g.len() as f64);
        fft.inverse(&mut data);
        let after: f64 = data.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(before, after, max_relative = 1e-12);
        assert_relative_eq!(before, spec_norm, max_relative = 1e-12);
    }

    #[test]
    fn fd4_matches_analytic_derivative() {
        let g = grid(128, 20.0);
        let f = ComplexField::from_fn(g, |x, y| C64::new((0.4 * x).sin() * (0.3 * y).cos(), 0.0));
        let d = fd4_derivative(&g, f.values(), true);
        let mut max_err = 0.0_f64;
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let x = g.x(ix);
                let y = g.y(iy);
                let exact = 0.4 * (0.4 * x).cos() * (0.3 * y).cos();
                max_err = max_err.max((d[g.index(ix, iy)].re - exact).abs());
            }
        }
        assert!(max_err < 2e-6, "max err {max_err}");
    }
}
