//! Smooth cutoff functions.
//!
//! Non-periodic scenario fields (Landau-gauge profiles, Aharonov-Bohm 1/r
//! potentials, Bessel modes) are brought to periodic compatibility by
//! multiplying with a C-infinity plateau that is exactly 1 inside the region
//! of interest and decays to 0 with all derivatives before the domain edge.

use crate::field::RealField;
use crate::grid::TransverseGrid;

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C-infinity monotone step: 0 for t <= 0, 1 for t >= 1.
pub fn smooth_step(t: f64) -> f64 {
    let a = bump(t);
    let b = bump(1.0 - t);
    a / (a + b)
}

/// 1 for `s <= s1`, 0 for `s >= s2`, smooth in between. Requires `s1 < s2`.
pub fn smooth_plateau(s: f64, s1: f64, s2: f64) -> f64 {
    debug_assert!(s1 < s2);
    smooth_step((s2 - s) / (s2 - s1))
}

/// Radial plateau window sampled on the grid: 1 for r <= r1, 0 for r >= r2.
pub fn radial_window(grid: TransverseGrid, r1: f64, r2: f64) -> RealField {
    RealField::from_fn(grid, |x, y| smooth_plateau(x.hypot(y), r1, r2))
}

/// Hard annulus indicator for windowed comparisons.
pub fn annulus(grid: TransverseGrid, r_in: f64, r_out: f64) -> RealField {
    RealField::from_fn(grid, |x, y| {
        let r = x.hypot(y);
        if r >= r_in && r <= r_out {
            1.0
        } else {
            0.0
        }
    })
}

/// Analytic (erf-based) plateau: 1 for `s <= s1`, 0 for `s >= s2` up to a
/// residual set by the sharpness, with a Gaussian-localized transition.
/// Unlike the bump plateau it is entire, so sampled profiles built from it
/// are spectrally clean even at moderate resolution. Larger sharpness gives
/// flatter ends but needs more grid points across the transition.
pub fn analytic_plateau_sharp(s: f64, s1: f64, s2: f64, sharpness: f64) -> f64 {
    debug_assert!(s1 < s2);
    let mid = 0.5 * (s1 + s2);
    let hw = 0.5 * (s2 - s1);
    0.5 * statrs::function::erf::erfc(sharpness * (s - mid) / hw)
}

/// [`analytic_plateau_sharp`] at sharpness 5 (ends flat to ~1e-12).
pub fn analytic_plateau(s: f64, s1: f64, s2: f64) -> f64 {
    analytic_plateau_sharp(s, s1, s2, 5.0)
}

/// Identity profile flattened to zero near the ends: `t` for |t| <= t1 (up
/// to ~1e-12 relative), saturating to ~0 beyond t2. Makes linear ramps like
/// the Landau-gauge potential periodic-compatible without spectral ringing.
pub fn edge_flattened_line(t: f64, t1: f64, t2: f64) -> f64 {
    t * analytic_plateau(t.abs(), t1, t2)
}
