//! The concrete control-field configurations: homogeneous quasi-electric and
//! quasi-magnetic fields and the Aharonov-Bohm potential, plus feasibility
//! bounds for mapping a scaled run back onto a real cell.
//!
//! Scaled parameters: `F = F_phys k w0^3` (electric), `B = B_phys w0^2`
//! (magnetic). The beam waist is 1 by construction.

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{RealField, RealVectorField};
use crate::gauge::{
    ControlConfig, DerivativeMethod, GaugeFields, ParametricConfig, ParametricGradients,
};
use crate::grid::TransverseGrid;
use crate::window::{edge_flattened_line, smooth_plateau};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("imbalance must satisfy |R| <= 1/2, got {0}")]
    ImbalanceOutOfRange(f64),
    #[error("quasi-magnetic parametrization leaves its domain on this grid: sqrt(B/2) * max|y| = {max_r:.4} > 1/2; shrink the grid height or the field (need ly/2 <= {max_half_height:.4})")]
    MagneticDomain { max_r: f64, max_half_height: f64 },
    #[error("a grid node sits within {r:.3e} of the coordinate singularity at r = 0; use a grid offset")]
    NodeAtSingularity { r: f64 },
    #[error("detuning parameter must be finite, got {0}")]
    BadDetuning(f64),
}

/// Sampled potentials a propagation run needs.
#[derive(Debug, Clone)]
pub struct ScenarioFields {
    pub gauge: GaugeFields,
    /// The detuning term `U = k w0^2 delta / v_EIT`; `None` on resonance.
    pub detuning: Option<RealField>,
}

impl ScenarioFields {
    pub fn free(grid: TransverseGrid) -> Self {
        Self { gauge: GaugeFields::free(grid), detuning: None }
    }
}

// ---------------------------------------------------------------------------
// electric
// ---------------------------------------------------------------------------

/// Relative phase profile realizing `V(x) = -F x` for x < 0:
/// `theta(x) = -(2/3) sqrt(2 F) |x|^{3/2}`, continued by zero for x >= 0.
/// This is the `theta = integral sqrt(2 k V)` recipe; it gives `A = 0` and
/// `Phi = 2 F |x|` on the valid half-plane.
pub fn electric_rel_phase(force: f64, x: f64) -> f64 {
    if x < 0.0 {
        -(2.0 / 3.0) * (2.0 * force).sqrt() * (-x).powf(1.5)
    } else {
        0.0
    }
}

fn electric_rel_phase_grad(force: f64, x: f64) -> f64 {
    if x < 0.0 {
        (2.0 * force * (-x)).sqrt()
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct ElectricScenario {
    pub force: f64,
    pub config: ControlConfig,
    pub fields: ScenarioFields,
    pub warnings: Vec<String>,
}

/// Constant quasi-electric field of scaled strength `force` along +x,
/// valid for beams kept at x < 0.
pub fn make_electric(grid: TransverseGrid, force: f64) -> Result<ElectricScenario, ScenarioError> {
    if !(force > 0.0 && force.is_finite()) {
        return Err(ScenarioError::NonPositiveParameter { name: "force", value: force });
    }
    let mut warnings = Vec::new();
    if grid.x(0) >= 0.0 {
        warnings.push(
            "grid does not cover x < 0, where the electric configuration is defined".to_string(),
        );
    }
    let config = ControlConfig::Parametric(ParametricConfig {
        imbalance: RealField::zeros(grid),
        rel_phase: RealField::from_fn(grid, |x, _| electric_rel_phase(force, x)),
        common_phase: RealField::zeros(grid),
        derivative: DerivativeMethod::Fd4,
        gradients: Some(ParametricGradients {
            imbalance: RealVectorField::zeros(grid),
            rel_phase: RealVectorField::from_fn(grid, |x, _| {
                (electric_rel_phase_grad(force, x), 0.0)
            }),
            common_phase: RealVectorField::zeros(grid),
        }),
    });
    let phi = RealField::from_fn(grid, |x, _| {
        let g = electric_rel_phase_grad(force, x);
        g * g
    });
    let fields = ScenarioFields {
        gauge: GaugeFields::new(RealVectorField::zeros(grid), phi),
        detuning: None,
    };
    Ok(ElectricScenario { force, config, fields, warnings })
}

// ---------------------------------------------------------------------------
// magnetic
// ---------------------------------------------------------------------------

/// Largest grid half-height on which the quasi-magnetic parametrization
/// `R = sqrt(B/2) y` stays within |R| <= 1/2.
pub fn magnetic_max_half_height(field: f64) -> f64 {
    0.5 / (0.5 * field).sqrt()
}

/// The paper-exact parametrization `theta = sqrt(B/2) x`, `R = sqrt(B/2) y`.
/// Only valid while `|R| <= 1/2` everywhere on the grid.
pub fn magnetic_control_config(
    grid: TransverseGrid,
    field: f64,
) -> Result<ControlConfig, ScenarioError> {
    if !(field > 0.0 && field.is_finite()) {
        return Err(ScenarioError::NonPositiveParameter { name: "field", value: field });
    }
    let s = (0.5 * field).sqrt();
    let max_y = grid.y(0).abs().max(grid.y(grid.ny() - 1).abs());
    let max_r = s * max_y;
    if max_r > 0.5 + 1e-12 {
        return Err(ScenarioError::MagneticDomain {
            max_r,
            max_half_height: magnetic_max_half_height(field),
        });
    }
    Ok(ControlConfig::Parametric(ParametricConfig {
        imbalance: RealField::from_fn(grid, |_, y| s * y),
        rel_phase: RealField::from_fn(grid, |x, _| s * x),
        common_phase: RealField::zeros(grid),
        derivative: DerivativeMethod::Fd4,
        gradients: Some(ParametricGradients {
            imbalance: RealVectorField::from_fn(grid, |_, _| (0.0, s)),
            rel_phase: RealVectorField::from_fn(grid, |_, _| (s, 0.0)),
            common_phase: RealVectorField::zeros(grid),
        }),
    }))
}

/// Closed-form scalar potential of the paper parametrization,
/// `Phi(y) = (B/2) [ (1-2By^2)^{-1} + (1-2By^2) ]` = `B + 2B^3 y^4 + O(y^6)`.
pub fn magnetic_scalar_exact(field: f64, y: f64) -> f64 {
    let u = 1.0 - 2.0 * field * y * y;
    0.5 * field * (u.recip() + u)
}

/// How the quasi-scalar potential enters a magnetic propagation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MagneticScalar {
    /// Drop it. The breathing Gaussian family solves the equation without
    /// the scalar term; its constant leading part is a global phase anyway.
    #[default]
    Neglected,
    /// The full closed form from the parametrization; requires the grid to
    /// satisfy the |R| <= 1/2 domain bound.
    Parametric,
}

#[derive(Debug, Clone)]
pub struct MagneticScenario {
    pub field: f64,
    pub fields: ScenarioFields,
}

/// Landau-gauge propagation fields `A = -B y e_x`, edge-flattened so the
/// linear ramp is periodic-compatible. The profile is exact for
/// `|y| <= flatten_inner * ly/2` (default 0.7); keep the beam inside that
/// band.
pub fn make_magnetic(
    grid: TransverseGrid,
    field: f64,
    scalar: MagneticScalar,
) -> Result<MagneticScenario, ScenarioError> {
    if !(field > 0.0 && field.is_finite()) {
        return Err(ScenarioError::NonPositiveParameter { name: "field", value: field });
    }
    let y1 = 0.70 * 0.5 * grid.ly();
    let y2 = 0.95 * 0.5 * grid.ly();
    let a = RealVectorField::from_fn(grid, |_, y| (-field * edge_flattened_line(y, y1, y2), 0.0));
    let phi = match scalar {
        MagneticScalar::Neglected => RealField::zeros(grid),
        MagneticScalar::Parametric => {
            let s = (0.5 * field).sqrt();
            let max_y = grid.y(0).abs().max(grid.y(grid.ny() - 1).abs());
            if s * max_y > 0.5 + 1e-12 {
                return Err(ScenarioError::MagneticDomain {
                    max_r: s * max_y,
                    max_half_height: magnetic_max_half_height(field),
                });
            }
            RealField::from_fn(grid, |_, y| magnetic_scalar_exact(field, y))
        }
    };
    Ok(MagneticScenario {
        field,
        fields: ScenarioFields {
            gauge: GaugeFields::with_divergence(a, phi, RealField::zeros(grid)),
            detuning: None,
        },
    })
}

/// Saturating variant `R = (1/2) tanh(sqrt(2B) y)` that matches the Landau
/// parametrization near the axis but respects |R| < 1/2 on any grid. Used
/// where the full multimode structure is needed on a beam-sized grid.
///
/// The common phase is set to `theta` (a gauge choice), which makes
/// `R_Q = sqrt(1/2 - R)` real and positive, so `|1 + R_Q|` stays in (1, 2)
/// and the mode transform is well conditioned over arbitrarily long phase
/// ramps. The quasi-vector potential acquires the constant `-grad theta`
/// shift that comes with any gauge choice.
pub fn magnetic_saturated_config(
    grid: TransverseGrid,
    field: f64,
) -> Result<ControlConfig, ScenarioError> {
    if !(field > 0.0 && field.is_finite()) {
        return Err(ScenarioError::NonPositiveParameter { name: "field", value: field });
    }
    let s = (0.5 * field).sqrt();
    let alpha = (2.0 * field).sqrt();
    Ok(ControlConfig::Parametric(ParametricConfig {
        imbalance: RealField::from_fn(grid, |_, y| 0.5 * (alpha * y).tanh()),
        rel_phase: RealField::from_fn(grid, |x, _| s * x),
        common_phase: RealField::from_fn(grid, |x, _| s * x),
        derivative: DerivativeMethod::Fd4,
        gradients: Some(ParametricGradients {
            imbalance: RealVectorField::from_fn(grid, |_, y| {
                let c = (alpha * y).cosh();
                (0.0, 0.5 * alpha / (c * c))
            }),
            rel_phase: RealVectorField::from_fn(grid, |_, _| (s, 0.0)),
            common_phase: RealVectorField::from_fn(grid, |_, _| (s, 0.0)),
        }),
    }))
}

/// Closed-form potentials of the saturating variant (in its gauge):
/// `A = -sqrt(B/2) (tanh(sqrt(2B) y) + 1) e_x`, `Phi = B sech^2(sqrt(2B) y)`.
pub fn magnetic_saturated_fields(grid: TransverseGrid, field: f64) -> ScenarioFields {
    let s = (0.5 * field).sqrt();
    let alpha = (2.0 * field).sqrt();
    let a = RealVectorField::from_fn(grid, |_, y| (-s * ((alpha * y).tanh() + 1.0), 0.0));
    let phi = RealField::from_fn(grid, |_, y| {
        let c = (alpha * y).cosh();
        field / (c * c)
    });
    ScenarioFields {
        gauge: GaugeFields::with_divergence(a, phi, RealField::zeros(grid)),
        detuning: None,
    }
}

// ---------------------------------------------------------------------------
// Aharonov-Bohm
// ---------------------------------------------------------------------------

/// Imbalance set by two counter-rotating vortex control beams with complex
/// amplitudes s1, s2: `R = (|s1|^2 - |s2|^2) / (2 (|s1|^2 + |s2|^2))`.
pub fn ab_imbalance_from_amplitudes(s1: Complex64, s2: Complex64) -> f64 {
    let (a, b) = (s1.norm_sqr(), s2.norm_sqr());
    0.5 * (a - b) / (a + b)
}

/// Control configuration of two counter-rotating vortex beams:
/// `R_1 ~ sqrt(1/2+R) e^{i phi_az}`, `R_2 ~ sqrt(1/2-R) e^{-i phi_az}`.
/// The sampled relative phase theta = atan2(y, x) has a branch cut, but only
/// its analytic gradient (smooth away from r = 0) is ever differentiated.
pub fn ab_config(grid: TransverseGrid, imbalance: f64) -> Result<ControlConfig, ScenarioError> {
    if imbalance.abs() > 0.5 {
        return Err(ScenarioError::ImbalanceOutOfRange(imbalance));
    }
    let rmin = grid.min_node_radius();
    if rmin < 1e-9 {
        return Err(ScenarioError::NodeAtSingularity { r: rmin });
    }
    Ok(ControlConfig::Parametric(ParametricConfig {
        imbalance: RealField::constant(grid, imbalance),
        rel_phase: RealField::from_fn(grid, |x, y| y.atan2(x)),
        common_phase: RealField::zeros(grid),
        derivative: DerivativeMethod::Fd4,
        gradients: Some(ParametricGradients {
            imbalance: RealVectorField::zeros(grid),
            rel_phase: RealVectorField::from_fn(grid, |x, y| {
                let r2 = x * x + y * y;
                (-y / r2, x / r2)
            }),
            common_phase: RealVectorField::zeros(grid),
        }),
    }))
}

#[derive(Debug, Clone)]
pub struct AharonovBohmScenario {
    pub imbalance: f64,
    /// Dimensionless detuning combination entering the mode order
    /// `nu = sqrt(1 + m^2 + 4 R m - D)`.
    pub detuning: f64,
    pub fields: ScenarioFields,
}

/// Propagation fields `A = -(2R/r) e_phi`, `Phi = (1-4R^2)/r^2`,
/// `U = D/(2 r^2)`, all multiplied by a smooth radial plateau (1 inside
/// `taper.0`, 0 beyond `taper.1`) so the slowly decaying tails do not wrap
/// around the periodic boundary. Pass `None` for the default taper at
/// (0.72, 0.95) of the half-extent.
pub fn make_aharonov_bohm(
    grid: TransverseGrid,
    imbalance: f64,
    detuning: f64,
    taper: Option<(f64, f64)>,
) -> Result<AharonovBohmScenario, ScenarioError> {
    if imbalance.abs() > 0.5 {
        return Err(ScenarioError::ImbalanceOutOfRange(imbalance));
    }
    if !detuning.is_finite() {
        return Err(ScenarioError::BadDetuning(detuning));
    }
    let rmin = grid.min_node_radius();
    if rmin < 1e-9 {
        return Err(ScenarioError::NodeAtSingularity { r: rmin });
    }
    let half = 0.5 * grid.lx().min(grid.ly());
    let (r1, r2) = taper.unwrap_or((0.72 * half, 0.95 * half));
    let two_r = 2.0 * imbalance;
    let a = RealVectorField::from_fn(grid, |x, y| {
        let r2s = x * x + y * y;
        let w = smooth_plateau(r2s.sqrt(), r1, r2);
        // e_phi = (-y, x)/r
        (two_r * y / r2s * w, -two_r * x / r2s * w)
    });
    let phi_coeff = 1.0 - 4.0 * imbalance * imbalance;
    let phi = RealField::from_fn(grid, |x, y| {
        let r2s = x * x + y * y;
        phi_coeff / r2s * smooth_plateau(r2s.sqrt(), r1, r2)
    });
    let detuning_field = if detuning == 0.0 {
        None
    } else {
        Some(RealField::from_fn(grid, |x, y| {
            let r2s = x * x + y * y;
            0.5 * detuning / r2s * smooth_plateau(r2s.sqrt(), r1, r2)
        }))
    };
    Ok(AharonovBohmScenario {
        imbalance,
        detuning,
        fields: ScenarioFields {
            // The azimuthal field is divergence-free (A along e_phi, taper
            // gradient along e_r), but the default spectral divergence of
            // the samples is kept: it makes the discrete operator exactly
            // symmetric, and unitarity wins over pointwise accuracy at the
            // unresolved 1/r core during long propagation. Override div_a
            // with zeros for single-application accuracy checks.
            gauge: GaugeFields::new(a, phi),
            detuning: detuning_field,
        },
    })
}

/// Line integral of a sampled vector field around the axis-aligned rectangle
/// whose corners are the nodes (i0, j0) and (i1, j1), counterclockwise.
/// Midpoint values come from linear interpolation between adjacent nodes.
pub fn loop_integral(a: &RealVectorField, i0: usize, j0: usize, i1: usize, j1: usize) -> f64 {
    assert!(i0 < i1 && j0 < j1, "need a nondegenerate rectangle");
    let grid = a.grid();
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut s = 0.0;
    for i in i0..i1 {
        // bottom, +x direction
        s += 0.5 * (a.x()[grid.index(i, j0)] + a.x()[grid.index(i + 1, j0)]) * dx;
        // top, -x direction
        s -= 0.5 * (a.x()[grid.index(i, j1)] + a.x()[grid.index(i + 1, j1)]) * dx;
    }
    for j in j0..j1 {
        // right, +y direction
        s += 0.5 * (a.y()[grid.index(i1, j)] + a.y()[grid.index(i1, j + 1)]) * dy;
        // left, -y direction
        s -= 0.5 * (a.y()[grid.index(i0, j)] + a.y()[grid.index(i0, j + 1)]) * dy;
    }
    s
}

// ---------------------------------------------------------------------------
// feasibility
// ---------------------------------------------------------------------------

/// Physical parameters for mapping a scaled run onto a real EIT cell.
/// Lengths in meters; `density` is the number of atoms in the volume k^-3;
/// `kw` is the signal wavenumber times the beam waist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub wavelength: f64,
    pub cell_length: f64,
    pub density: f64,
    pub kw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    Pass,
    Warning,
    Violation,
}

fn status(ratio: f64) -> BoundStatus {
    if ratio > 1.0 {
        BoundStatus::Violation
    } else if ratio > 0.1 {
        BoundStatus::Warning
    } else {
        BoundStatus::Pass
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityCheck {
    pub name: &'static str,
    /// LHS/RHS of the inequality; <= 1 satisfies the bound.
    pub ratio: f64,
    pub status: BoundStatus,
    pub detail: String,
}

/// Advisory report; runs may proceed with warnings.
#[derive(Debug, Clone, Default)]
pub struct FeasibilityReport {
    pub checks: Vec<FeasibilityCheck>,
}

impl FeasibilityReport {
    pub fn worst(&self) -> BoundStatus {
        let mut worst = BoundStatus::Pass;
        for c in &self.checks {
            worst = match (worst, c.status) {
                (_, BoundStatus::Violation) | (BoundStatus::Violation, _) => BoundStatus::Violation,
                (_, BoundStatus::Warning) | (BoundStatus::Warning, _) => BoundStatus::Warning,
                _ => BoundStatus::Pass,
            };
        }
        worst
    }
}

/// Resonant adiabaticity bound: `eta` against `(kw)^2 n (3 pi / 2)`.
pub fn adiabaticity_ratio(eta: f64, kw: f64, density: f64) -> f64 {
    eta / (kw * kw * density * 1.5 * std::f64::consts::PI)
}

/// Evaluate the control-field Fresnel bound, the maximum-displacement scale,
/// and the resonant adiabaticity inequality for one scenario.
pub fn validate_feasibility(
    force: Option<f64>,
    eta: Option<f64>,
    phys: &PhysicalParams,
) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    let k = 2.0 * std::f64::consts::PI / phys.wavelength;
    let w0 = phys.kw / k;
    let l = phys.cell_length;

    if let Some(f_scaled) = force {
        let f_phys = f_scaled / (k * w0 * w0 * w0);
        let fresnel = f_phys * phys.wavelength.sqrt() * l.powf(1.5);
        report.checks.push(FeasibilityCheck {
            name: "control-field Fresnel bound on F",
            ratio: fresnel,
            status: status(fresnel),
            detail: format!(
                "F_phys = {f_phys:.6e} m^-3 * lambda^(1/2) L^(3/2) = {fresnel:.3e} (bound 1)"
            ),
        });

        // centroid shift at the cell exit, in units of 1/k, against sqrt(L/lambda)
        let shift_bound = (l / phys.wavelength).sqrt();
        let shift_k_units = f_phys * l * l / 2.0; // k * (F L^2 / 2k)
        let zeta_l = l / (k * w0 * w0);
        let shift_waists = f_scaled * zeta_l * zeta_l / 2.0;
        let ratio = shift_k_units / shift_bound;
        report.checks.push(FeasibilityCheck {
            name: "maximum displacement vs sqrt(L/lambda)",
            ratio,
            status: status(ratio),
            detail: format!(
                "k x_ctr(L) = {shift_k_units:.3e} vs sqrt(L/lambda) = {shift_bound:.3}; \
                 shift = {shift_waists:.3e} beam waists over the cell"
            ),
        });
    }

    if let Some(eta) = eta {
        let bound = phys.kw * phys.kw * phys.density * 1.5 * std::f64::consts::PI;
        let ratio = adiabaticity_ratio(eta, phys.kw, phys.density);
        report.checks.push(FeasibilityCheck {
            name: "resonant adiabaticity eta << (kw)^2 n 3pi/2",
            ratio,
            status: status(ratio),
            detail: format!("eta = {eta:.3} vs bound {bound:.3}"),
        });
    }
    report
}
