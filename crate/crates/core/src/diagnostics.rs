//! Beam diagnostics: norm, centroid, widths, orbital angular momentum.
//!
//! Widths use the amplitude convention: `width_sq = 4 * Var(|psi|^2)`, which
//! reports `w^2` for a Gaussian envelope `exp(-r^2/w^2)` and makes the free
//! diffraction law read `w^2(zeta) = 1 + 4 zeta^2` for a unit-waist beam.
//!
//! All reductions are sequential in a fixed order so diagnostics are
//! bit-identical for a fixed input regardless of thread count.

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{ComplexField, FieldError, RealField};
use crate::spectral::spectral_gradient;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("diagnostic undefined on a zero-norm field")]
    ZeroNorm,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Integral of |psi|^2 over the grid (the beam power in scaled units).
pub fn norm_sq(f: &ComplexField) -> f64 {
    let mut s = 0.0;
    for v in f.values() {
        s += v.norm_sqr();
    }
    s * f.grid().cell_area()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub norm_sq: f64,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub var_x: f64,
    pub var_y: f64,
}

impl Moments {
    /// Squared beam width along x (amplitude 1/e radius of a Gaussian).
    pub fn width_sq_x(&self) -> f64 {
        4.0 * self.var_x
    }

    pub fn width_sq_y(&self) -> f64 {
        4.0 * self.var_y
    }
}

/// Intensity-weighted first and second moments.
pub fn moments(f: &ComplexField) -> Result<Moments, DiagnosticsError> {
    let grid = f.grid();
    let mut w_sum = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for iy in 0..grid.ny() {
        let y = grid.y(iy);
        for ix in 0..grid.nx() {
            let w = f.values()[grid.index(ix, iy)].norm_sqr();
            w_sum += w;
            mx += w * grid.x(ix);
            my += w * y;
        }
    }
    if !(w_sum > 0.0) {
        return Err(DiagnosticsError::ZeroNorm);
    }
    mx /= w_sum;
    my /= w_sum;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for iy in 0..grid.ny() {
        let y = grid.y(iy) - my;
        for ix in 0..grid.nx() {
            let w = f.values()[grid.index(ix, iy)].norm_sqr();
            let x = grid.x(ix) - mx;
            vx += w * x * x;
            vy += w * y * y;
        }
    }
    Ok(Moments {
        norm_sq: w_sum * grid.cell_area(),
        centroid_x: mx,
        centroid_y: my,
        var_x: vx / w_sum,
        var_y: vy / w_sum,
    })
}

/// Expectation of the orbital angular momentum operator
/// `-i (x d/dy - y d/dx)`, normalized by the beam power.
pub fn oam_expectation(f: &ComplexField) -> Result<f64, DiagnosticsError> {
    let n = norm_sq(f);
    if !(n > 0.0) {
        return Err(DiagnosticsError::ZeroNorm);
    }
    let grid = f.grid();
    let (gx, gy) = spectral_gradient(f);
    let mut acc = 0.0;
    for iy in 0..grid.ny() {
        let y = grid.y(iy);
        for ix in 0..grid.nx() {
            let i = grid.index(ix, iy);
            let x = grid.x(ix);
            let lz = -Complex64::i() * (x * gy.values()[i] - y * gx.values()[i]);
            acc += (f.values()[i].conj() * lz).re;
        }
    }
    Ok(acc * grid.cell_area() / n)
}

/// Expectation of the canonical transverse momentum `<-i grad>`, normalized.
pub fn momentum_expectation(f: &ComplexField) -> Result<(f64, f64), DiagnosticsError> {
    let n = norm_sq(f);
    if !(n > 0.0) {
        return Err(DiagnosticsError::ZeroNorm);
    }
    let (gx, gy) = spectral_gradient(f);
    let mut px = 0.0;
    let mut py = 0.0;
    for (i, v) in f.values().iter().enumerate() {
        px += (v.conj() * -Complex64::i() * gx.values()[i]).re;
        py += (v.conj() * -Complex64::i() * gy.values()[i]).re;
    }
    let a = f.grid().cell_area() / n;
    Ok((px * a, py * a))
}

/// Unnormalized inner product `integral conj(a) b dx dy`.
pub fn inner_product(a: &ComplexField, b: &ComplexField) -> Result<Complex64, DiagnosticsError> {
    a.same_grid(b)?;
    let mut s = Complex64::ZERO;
    for (x, y) in a.values().iter().zip(b.values()) {
        s += x.conj() * y;
    }
    Ok(s * a.grid().cell_area())
}

/// Normalized overlap magnitude `|<a|b>| / (|a| |b|)`.
pub fn fidelity(a: &ComplexField, b: &ComplexField) -> Result<f64, DiagnosticsError> {
    let na = norm_sq(a);
    let nb = norm_sq(b);
    if !(na > 0.0 && nb > 0.0) {
        return Err(DiagnosticsError::ZeroNorm);
    }
    Ok(inner_product(a, b)?.norm() / (na * nb).sqrt())
}

/// Fidelity restricted to the region where `weight > 0`; both fields are
/// multiplied by the weight before comparing.
pub fn weighted_fidelity(
    a: &ComplexField,
    b: &ComplexField,
    weight: &RealField,
) -> Result<f64, DiagnosticsError> {
    a.same_grid(b)?;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = Complex64::ZERO;
    for ((x, y), w) in a.values().iter().zip(b.values()).zip(weight.values()) {
        let w2 = w * w;
        saa += w2 * x.norm_sqr();
        sbb += w2 * y.norm_sqr();
        sab += w2 * x.conj() * y;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(DiagnosticsError::ZeroNorm);
    }
    Ok(sab.norm() / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TransverseGrid;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C64;

    fn grid() -> TransverseGrid {
        TransverseGrid::new(128, 128, 16.0, 16.0).unwrap()
    }

    #[test]
    fn centered_gaussian_moments() {
        let f = ComplexField::from_fn(grid(), |x, y| C64::new((-(x * x + y * y)).exp(), 0.0));
        let m = moments(&f).unwrap();
        assert!(m.centroid_x.abs() < 1e-12);
        assert!(m.centroid_y.abs() < 1e-12);
        assert_relative_eq!(m.width_sq_x(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(m.width_sq_y(), 1.0, max_relative = 1e-10);
        // norm of exp(-r^2): integral of exp(-2 r^2) = pi/2
        assert_relative_eq!(m.norm_sq, std::f64::consts::PI / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn displaced_gaussian_centroid() {
        let f = ComplexField::from_fn(grid(), |x, y| {
            C64::new((-((x - 0.3) * (x - 0.3) + y * y)).exp(), 0.0)
        });
        let m = moments(&f).unwrap();
        assert_relative_eq!(m.centroid_x, 0.3, epsilon = 1e-10);
        assert!(m.centroid_y.abs() < 1e-12);
    }

    #[test]
    fn phase_winding_carries_unit_oam() {
        // (x + i y) exp(-r^2) is smooth and carries exactly one unit
        let f = ComplexField::from_fn(grid(), |x, y| {
            C64::new(x, y) * (-(x * x + y * y)).exp()
        });
        let l = oam_expectation(&f).unwrap();
        assert_relative_eq!(l, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_norm_is_an_error() {
        let f = ComplexField::zeros(grid());
        assert_eq!(moments(&f).unwrap_err(), DiagnosticsError::ZeroNorm);
        assert_eq!(oam_expectation(&f).unwrap_err(), DiagnosticsError::ZeroNorm);
    }

    #[test]
    fn diagnostics_invariant_under_global_phase() {
        let f = ComplexField::from_fn(grid(), |x, y| {
            C64::new(x, y - 0.2) * (-(x * x + y * y) / 1.3).exp()
        });
        for &alpha in &[0.3, 1.7, -2.9] {
            let mut g = f.clone();
            let ph = (C64::i() * alpha).exp();
            for v in g.values_mut() {
                *v *= ph;
            }
            let (m0, m1) = (moments(&f).unwrap(), moments(&g).unwrap());
            assert_relative_eq!(m0.centroid_x, m1.centroid_x, epsilon = 1e-13);
            assert_relative_eq!(m0.var_x, m1.var_x, epsilon = 1e-13);
            assert_relative_eq!(
                oam_expectation(&f).unwrap(),
                oam_expectation(&g).unwrap(),
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn tilted_beam_momentum() {
        let f = ComplexField::from_fn(grid(), |x, y| {
            (-(x * x + y * y)).exp() * (C64::i() * (0.8 * x - 0.25 * y)).exp()
        });
        let (px, py) = momentum_expectation(&f).unwrap();
        assert_relative_eq!(px, 0.8, epsilon = 1e-9);
        assert_relative_eq!(py, -0.25, epsilon = 1e-9);
    }
}
