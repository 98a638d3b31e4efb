//! Advance the transparent-mode envelope in zeta under
//! `i d_zeta psi = [ (−i grad − A)^2 / 2 − U + Phi/2 ] psi`.
//!
//! Three integrators:
//! - `Strang`: split potential/kinetic exponentials; exact norm
//!   conservation; requires A = 0.
//! - `MixedRep`: splits `(k_x − A_x(y))^2/2` and `(k_y − A_y(x))^2/2` in
//!   mixed position/spectral representations; exact norm conservation;
//!   requires the Landau-type separability `A_x = A_x(y)`, `A_y = A_y(x)`.
//! - `Rk4`: classical explicit step on the full Hamiltonian; works for any
//!   gauge field (Aharonov-Bohm), bounded by a spectral-radius step limit.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::norm_sq;
use crate::field::{ComplexField, RealField};
use crate::gauge::GaugeFields;
use crate::grid::TransverseGrid;
use crate::spectral::{spectral_divergence, Fft2d};

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("the {integrator} integrator requires {requirement}")]
    IntegratorMismatch { integrator: &'static str, requirement: String },
    #[error("step {dzeta:.3e} exceeds the explicit stability bound {limit:.3e}; reduce dzeta")]
    StepTooLarge { dzeta: f64, limit: f64 },
    #[error("norm grew by {growth:.3e} after {steps} steps; the run is unstable, reduce dzeta")]
    Instability { growth: f64, steps: u64 },
    #[error("field and potentials live on different grids")]
    GridMismatch,
    #[error("non-finite field values after {steps} steps")]
    NonFinite { steps: u64 },
    #[error("dzeta must be positive and finite, got {0}")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorKind {
    Strang,
    MixedRep,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorChoice {
    pub kind: IntegratorKind,
    pub dzeta: f64,
    /// Fraction of the explicit stability bound an Rk4 step may use.
    pub safety: f64,
}

impl IntegratorChoice {
    pub fn new(kind: IntegratorKind, dzeta: f64) -> Self {
        Self { kind, dzeta, safety: 0.5 }
    }

    /// Rk4 with the step set to `safety` times the stability bound.
    pub fn rk4_auto(
        grid: &TransverseGrid,
        gauge: &GaugeFields,
        detuning: Option<&RealField>,
        safety: f64,
    ) -> Self {
        let dzeta = safety * rk4_stability_limit(grid, gauge, detuning);
        Self { kind: IntegratorKind::Rk4, dzeta, safety }
    }
}

impl Default for IntegratorChoice {
    fn default() -> Self {
        Self { kind: IntegratorKind::Strang, dzeta: 1e-3, safety: 0.5 }
    }
}

/// Explicit-scheme step bound from the Hamiltonian's spectral radius:
/// `2 / (k_max^2/2 + max|Phi/2 - U| + max|A| k_max + max|A|^2/2)`.
pub fn rk4_stability_limit(
    grid: &TransverseGrid,
    gauge: &GaugeFields,
    detuning: Option<&RealField>,
) -> f64 {
    let kmax = grid.k_max();
    let amax = gauge.a.max_abs();
    let mut scalar_max = 0.0_f64;
    for i in 0..grid.len() {
        let u = detuning.map_or(0.0, |d| d.values()[i]);
        scalar_max = scalar_max.max((0.5 * gauge.phi.values()[i] - u).abs());
    }
    2.0 / (0.5 * kmax * kmax + scalar_max + amax * kmax + 0.5 * amax * amax)
}

/// Absorbing boundary layer: an imaginary potential ramping as the 8th power
/// of the penetration into a band of the given width at each enabled side.
/// Each step multiplies the field by `exp(-W dzeta)`, so the interior is
/// untouched exactly and the absorbed fraction is step-size independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub width: f64,
    pub strength: f64,
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

impl MaskSpec {
    pub fn all_sides(width: f64, strength: f64) -> Self {
        Self { width, strength, left: true, right: true, bottom: true, top: true }
    }
}

/// The absorption rate W(x, y) >= 0 for a mask specification.
pub fn absorption_profile(grid: &TransverseGrid, mask: &MaskSpec) -> RealField {
    let w = mask.width;
    let s = mask.strength;
    let x_lo = -0.5 * grid.lx() + grid.x_offset();
    let x_hi = 0.5 * grid.lx() + grid.x_offset();
    let y_lo = -0.5 * grid.ly() + grid.y_offset();
    let y_hi = 0.5 * grid.ly() + grid.y_offset();
    let ramp = |d: f64| {
        let t = (d / w).max(0.0);
        t.powi(8)
    };
    RealField::from_fn(*grid, |x, y| {
        let mut acc = 0.0;
        if mask.left {
            acc += ramp(x_lo + w - x);
        }
        if mask.right {
            acc += ramp(x - (x_hi - w));
        }
        if mask.bottom {
            acc += ramp(y_lo + w - y);
        }
        if mask.top {
            acc += ramp(y - (y_hi - w));
        }
        s * acc
    })
}

#[derive(Debug, Clone)]
pub struct PropagationState {
    pub psi: ComplexField,
    pub zeta: f64,
    pub step_count: u64,
}

/// Shared Hamiltonian application for the Rk4 path and for tests.
struct HamiltonianOp {
    grid: TransverseGrid,
    ax: Vec<f64>,
    ay: Vec<f64>,
    /// divergence of A, computed spectrally from the sampled components so
    /// the discrete operator is Hermitian to machine precision
    div_a: Vec<f64>,
    a_sq: Vec<f64>,
    scalar: Vec<f64>, // Phi/2 - U
    spec: Vec<Complex64>,
    gx: Vec<Complex64>,
    gy: Vec<Complex64>,
    lap: Vec<Complex64>,
}

impl HamiltonianOp {
    fn new(grid: TransverseGrid, gauge: &GaugeFields, detuning: Option<&RealField>) -> Self {
        let n = grid.len();
        let div_a = match &gauge.div_a {
            Some(d) => d.values().to_vec(),
            None => spectral_divergence(&gauge.a).values().to_vec(),
        };
        let a_sq: Vec<f64> = (0..n)
            .map(|i| {
                let ax = gauge.a.x()[i];
                let ay = gauge.a.y()[i];
                ax * ax + ay * ay
            })
            .collect();
        let scalar: Vec<f64> = (0..n)
            .map(|i| 0.5 * gauge.phi.values()[i] - detuning.map_or(0.0, |d| d.values()[i]))
            .collect();
        Self {
            grid,
            ax: gauge.a.x().to_vec(),
            ay: gauge.a.y().to_vec(),
            div_a,
            a_sq,
            scalar,
            spec: vec![Complex64::ZERO; n],
            gx: vec![Complex64::ZERO; n],
            gy: vec![Complex64::ZERO; n],
            lap: vec![Complex64::ZERO; n],
        }
    }

    /// out = H psi
    fn apply(&mut self, fft: &mut Fft2d, psi: &[Complex64], out: &mut [Complex64]) {
        let grid = &self.grid;
        let nx = grid.nx();
        self.spec.copy_from_slice(psi);
        fft.forward(&mut self.spec);
        let nyq_x = nx / 2;
        let nyq_y = grid.ny() / 2;
        self.gx
            .par_chunks_mut(nx)
            .zip(self.gy.par_chunks_mut(nx))
            .zip(self.lap.par_chunks_mut(nx))
            .enumerate()
            .for_each(|(iy, ((gx, gy), lap))| {
                let ky = grid.ky(iy);
                let ky_grad = if iy == nyq_y { 0.0 } else { ky };
                for ix in 0..nx {
                    let kx = grid.kx(ix);
                    let kx_grad = if ix == nyq_x { 0.0 } else { kx };
                    let s = self.spec[iy * nx + ix];
                    gx[ix] = Complex64::new(0.0, kx_grad) * s;
                    gy[ix] = Complex64::new(0.0, ky_grad) * s;
                    lap[ix] = -(kx * kx + ky * ky) * s;
                }
            });
        fft.inverse(&mut self.gx);
        fft.inverse(&mut self.gy);
        fft.inverse(&mut self.lap);

        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let p = psi[i];
            let cross = self.ax[i] * self.gx[i] + self.ay[i] * self.gy[i];
            *o = 0.5
                * (-self.lap[i]
                    + Complex64::i() * (self.div_a[i] * p + 2.0 * cross)
                    + self.a_sq[i] * p)
                + self.scalar[i] * p;
        });
    }
}

/// Apply the propagation Hamiltonian once. The discrete operator is
/// Hermitian with respect to the grid inner product (the absorbing mask is
/// never part of it).
pub fn apply_hamiltonian(
    psi: &ComplexField,
    gauge: &GaugeFields,
    detuning: Option<&RealField>,
) -> Result<ComplexField, PropagationError> {
    if psi.grid() != gauge.grid() {
        return Err(PropagationError::GridMismatch);
    }
    if let Some(d) = detuning {
        if d.grid() != psi.grid() {
            return Err(PropagationError::GridMismatch);
        }
    }
    let grid = *psi.grid();
    let mut op = HamiltonianOp::new(grid, gauge, detuning);
    let mut fft = Fft2d::new(&grid);
    let mut out = vec![Complex64::ZERO; grid.len()];
    op.apply(&mut fft, psi.values(), &mut out);
    Ok(ComplexField::from_values(grid, out))
}

enum Engine {
    Strang {
        half_v: Option<Vec<Complex64>>,
        kin_x: Vec<Complex64>,
        kin_y_t: Vec<Complex64>,
    },
    MixedRep {
        half_v: Option<Vec<Complex64>>,
        half_x: Vec<Complex64>,
        full_y_t: Vec<Complex64>,
    },
    Rk4 {
        op: HamiltonianOp,
        k1: Vec<Complex64>,
        k2: Vec<Complex64>,
        k3: Vec<Complex64>,
        k4: Vec<Complex64>,
        tmp: Vec<Complex64>,
    },
}

pub struct Propagator {
    grid: TransverseGrid,
    fft: Fft2d,
    engine: Engine,
    dzeta: f64,
    absorb: Option<Vec<f64>>,
    state: PropagationState,
    initial_norm: f64,
    last_norm: f64,
    check_every: u64,
}

fn scalar_phase_table(
    grid: &TransverseGrid,
    gauge: &GaugeFields,
    detuning: Option<&RealField>,
    dzeta_half: f64,
) -> Option<Vec<Complex64>> {
    let mut any = false;
    let table: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let v = 0.5 * gauge.phi.values()[i] - detuning.map_or(0.0, |d| d.values()[i]);
            if v != 0.0 {
                any = true;
            }
            (-Complex64::i() * v * dzeta_half).exp()
        })
        .collect();
    any.then_some(table)
}

impl Propagator {
    pub fn new(
        initial: ComplexField,
        gauge: &GaugeFields,
        detuning: Option<&RealField>,
        choice: IntegratorChoice,
        mask: Option<&MaskSpec>,
    ) -> Result<Self, PropagationError> {
        let grid = *initial.grid();
        if gauge.grid() != &grid {
            return Err(PropagationError::GridMismatch);
        }
        if let Some(d) = detuning {
            if d.grid() != &grid {
                return Err(PropagationError::GridMismatch);
            }
        }
        let dzeta = choice.dzeta;
        if !(dzeta > 0.0 && dzeta.is_finite()) {
            return Err(PropagationError::BadStep(dzeta));
        }
        let n = grid.len();
        let (nx, ny) = (grid.nx(), grid.ny());

        let engine = match choice.kind {
            IntegratorKind::Strang => {
                let amax = gauge.a.max_abs();
                if amax > 1e-12 {
                    return Err(PropagationError::IntegratorMismatch {
                        integrator: "strang",
                        requirement: format!(
                            "a vanishing vector potential (max |A| = {amax:.3e}); use mixed_rep or rk4"
                        ),
                    });
                }
                let mut kin_x = vec![Complex64::ZERO; n];
                let mut kin_y_t = vec![Complex64::ZERO; n];
                for iy in 0..ny {
                    for ix in 0..nx {
                        let kx = grid.kx(ix);
                        kin_x[iy * nx + ix] =
                            (-Complex64::i() * (0.5 * kx * kx) * dzeta).exp();
                        let ky = grid.ky(iy);
                        kin_y_t[ix * ny + iy] =
                            (-Complex64::i() * (0.5 * ky * ky) * dzeta).exp();
                    }
                }
                Engine::Strang {
                    half_v: scalar_phase_table(&grid, gauge, detuning, 0.5 * dzeta),
                    kin_x,
                    kin_y_t,
                }
            }
            IntegratorKind::MixedRep => {
                // A_x may depend only on y, A_y only on x
                let scale = gauge.a.max_abs().max(1.0);
                let mut ax_of_y = vec![0.0; ny];
                let mut ay_of_x = vec![0.0; nx];
                for iy in 0..ny {
                    ax_of_y[iy] = gauge.a.x()[grid.index(0, iy)];
                }
                for ix in 0..nx {
                    ay_of_x[ix] = gauge.a.y()[grid.index(ix, 0)];
                }
                for iy in 0..ny {
                    for ix in 0..nx {
                        let i = grid.index(ix, iy);
                        if (gauge.a.x()[i] - ax_of_y[iy]).abs() > 1e-10 * scale
                            || (gauge.a.y()[i] - ay_of_x[ix]).abs() > 1e-10 * scale
                        {
                            return Err(PropagationError::IntegratorMismatch {
                                integrator: "mixed_rep",
                                requirement:
                                    "a separable gauge field (A_x depending only on y, A_y only on x); use rk4"
                                        .to_string(),
                            });
                        }
                    }
                }
                let mut half_x = vec![Complex64::ZERO; n];
                let mut full_y_t = vec![Complex64::ZERO; n];
                for iy in 0..ny {
                    for ix in 0..nx {
                        let kx = grid.kx(ix);
                        let dx = kx - ax_of_y[iy];
                        half_x[iy * nx + ix] =
                            (-Complex64::i() * (0.5 * dx * dx) * (0.5 * dzeta)).exp();
                        let ky = grid.ky(iy);
                        let dy = ky - ay_of_x[ix];
                        full_y_t[ix * ny + iy] =
                            (-Complex64::i() * (0.5 * dy * dy) * dzeta).exp();
                    }
                }
                Engine::MixedRep {
                    half_v: scalar_phase_table(&grid, gauge, detuning, 0.5 * dzeta),
                    half_x,
                    full_y_t,
                }
            }
            IntegratorKind::Rk4 => {
                let limit = rk4_stability_limit(&grid, gauge, detuning);
                if dzeta > limit {
                    return Err(PropagationError::StepTooLarge { dzeta, limit });
                }
                Engine::Rk4 {
                    op: HamiltonianOp::new(grid, gauge, detuning),
                    k1: vec![Complex64::ZERO; n],
                    k2: vec![Complex64::ZERO; n],
                    k3: vec![Complex64::ZERO; n],
                    k4: vec![Complex64::ZERO; n],
                    tmp: vec![Complex64::ZERO; n],
                }
            }
        };

        let absorb = mask.map(|m| {
            absorption_profile(&grid, m)
                .values()
                .iter()
                .map(|w| (-w * dzeta).exp())
                .collect()
        });
        let initial_norm = norm_sq(&initial);
        Ok(Self {
            grid,
            fft: Fft2d::new(&grid),
            engine,
            dzeta,
            absorb,
            state: PropagationState { psi: initial, zeta: 0.0, step_count: 0 },
            initial_norm,
            last_norm: initial_norm,
            check_every: 1,
        })
    }

    pub fn state(&self) -> &PropagationState {
        &self.state
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn dzeta(&self) -> f64 {
        self.dzeta
    }

    /// Norm change relative to the launch state (mask absorption included).
    pub fn norm_drift(&self) -> f64 {
        self.last_norm / self.initial_norm - 1.0
    }

    pub fn step(&mut self) -> Result<(), PropagationError> {
        let psi = self.state.psi.values_mut();
        match &mut self.engine {
            Engine::Strang { half_v, kin_x, kin_y_t } => {
                if let Some(v) = half_v {
                    psi.par_iter_mut().zip(v.par_iter()).for_each(|(p, f)| *p *= f);
                }
                self.fft.apply_in_spectrum_x(psi, kin_x);
                self.fft.apply_in_spectrum_y(psi, kin_y_t);
                if let Some(v) = half_v {
                    psi.par_iter_mut().zip(v.par_iter()).for_each(|(p, f)| *p *= f);
                }
            }
            Engine::MixedRep { half_v, half_x, full_y_t } => {
                if let Some(v) = half_v {
                    psi.par_iter_mut().zip(v.par_iter()).for_each(|(p, f)| *p *= f);
                }
                self.fft.apply_in_spectrum_x(psi, half_x);
                self.fft.apply_in_spectrum_y(psi, full_y_t);
                self.fft.apply_in_spectrum_x(psi, half_x);
                if let Some(v) = half_v {
                    psi.par_iter_mut().zip(v.par_iter()).for_each(|(p, f)| *p *= f);
                }
            }
            Engine::Rk4 { op, k1, k2, k3, k4, tmp } => {
                let h = self.dzeta;
                let mi = -Complex64::i();
                op.apply(&mut self.fft, psi, k1);
                tmp.par_iter_mut().enumerate().for_each(|(i, t)| {
                    *t = psi[i] + 0.5 * h * mi * k1[i];
                });
                op.apply(&mut self.fft, tmp, k2);
                tmp.par_iter_mut().enumerate().for_each(|(i, t)| {
                    *t = psi[i] + 0.5 * h * mi * k2[i];
                });
                op.apply(&mut self.fft, tmp, k3);
                tmp.par_iter_mut().enumerate().for_each(|(i, t)| {
                    *t = psi[i] + h * mi * k3[i];
                });
                op.apply(&mut self.fft, tmp, k4);
                psi.par_iter_mut().enumerate().for_each(|(i, p)| {
                    *p += h / 6.0 * mi * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                });
            }
        }
        if let Some(a) = &self.absorb {
            psi.par_iter_mut().zip(a.par_iter()).for_each(|(p, f)| *p *= f);
        }
        self.state.step_count += 1;
        self.state.zeta = self.state.step_count as f64 * self.dzeta;

        if self.state.step_count % self.check_every == 0 {
            let n = norm_sq(&self.state.psi);
            if !n.is_finite() {
                return Err(PropagationError::NonFinite { steps: self.state.step_count });
            }
            if self.absorb.is_some() {
                // with absorption on, the norm must be non-increasing
                if n > self.last_norm * (1.0 + 1e-10) {
                    return Err(PropagationError::Instability {
                        growth: n / self.initial_norm - 1.0,
                        steps: self.state.step_count,
                    });
                }
            } else if n > self.initial_norm * (1.0 + 1e-3) {
                return Err(PropagationError::Instability {
                    growth: n / self.initial_norm - 1.0,
                    steps: self.state.step_count,
                });
            }
            self.last_norm = n;
        }
        Ok(())
    }

    /// Step until `zeta >= target` (within half a step).
    pub fn advance_to(&mut self, target: f64) -> Result<(), PropagationError> {
        while self.state.zeta < target - 0.5 * self.dzeta {
            self.step()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandlimited::random_band_limited;
    use crate::diagnostics::{inner_product, moments};
    use crate::field::RealVectorField;
    use crate::oracle::free_gaussian;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C64;

    fn grid(n: usize, l: f64) -> TransverseGrid {
        TransverseGrid::new(n, n, l, l).unwrap()
    }

    fn smooth_gauge(g: TransverseGrid, seed: u64, amp: f64) -> GaugeFields {
        let ax = random_band_limited(g, seed, 2, amp);
        let ay = random_band_limited(g, seed + 1, 2, amp);
        let phi = {
            let mut p = random_band_limited(g, seed + 2, 2, amp);
            // keep Phi >= 0
            let shift = -p.values().iter().cloned().fold(f64::INFINITY, f64::min);
            for v in p.values_mut() {
                *v += shift;
            }
            p
        };
        GaugeFields::new(
            RealVectorField::from_components(g, ax.values().to_vec(), ay.values().to_vec()),
            phi,
        )
    }

    #[test]
    fn plane_wave_is_a_kinetic_eigenstate() {
        let g = grid(64, 16.0);
        let k = 2.0 * std::f64::consts::PI * 3.0 / 16.0;
        let psi = ComplexField::from_fn(g, |x, _| (C64::i() * k * x).exp());
        let h = apply_hamiltonian(&psi, &GaugeFields::free(g), None).unwrap();
        for (hv, pv) in h.values().iter().zip(psi.values()) {
            assert!((hv - 0.5 * k * k * pv).norm() < 1e-10);
        }
    }

    #[test]
    fn scalar_potential_reduces_to_schroedinger_form() {
        // A = 0, Phi = 2 V: H psi = -lap psi / 2 + V psi
        let g = grid(64, 12.0);
        let v = RealField::from_fn(g, |x, y| 0.3 * (x * x + 0.5 * y * y));
        let gauge = GaugeFields::new(
            RealVectorField::zeros(g),
            RealField::from_values(g, v.values().iter().map(|x| 2.0 * x).collect()),
        );
        let psi = ComplexField::from_fn(g, |x, y| C64::new((-(x * x + y * y) / 2.0).exp(), 0.0));
        let h = apply_hamiltonian(&psi, &gauge, None).unwrap();
        let lap = crate::spectral::spectral_laplacian(&psi);
        for i in 0..g.len() {
            let want = -0.5 * lap.values()[i] + v.values()[i] * psi.values()[i];
            assert!((h.values()[i] - want).norm() < 1e-11);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_on_the_grid() {
        // random band-limited psi: all operator products stay inside the
        // spectral band, so the discrete symmetry is exact up to roundoff
        let g = grid(64, 12.0);
        let gauge = smooth_gauge(g, 21, 0.8);
        let re = random_band_limited(g, 101, 10, 1.0);
        let im = random_band_limited(g, 102, 10, 1.0);
        let psi = ComplexField::from_values(
            g,
            re.values().iter().zip(im.values()).map(|(&r, &i)| C64::new(r, i)).collect(),
        );
        let h = apply_hamiltonian(&psi, &gauge, None).unwrap();
        let expect = inner_product(&psi, &h).unwrap();
        let scale = expect.norm().max(1.0);
        assert!(
            expect.im.abs() / scale < 1e-10,
            "energy expectation not real: {expect}"
        );
    }

    #[test]
    fn strang_rejects_nonzero_vector_potential() {
        let g = grid(32, 8.0);
        let gauge = GaugeFields::new(
            RealVectorField::from_fn(g, |_, y| (-y, 0.0)),
            RealField::zeros(g),
        );
        let psi = free_gaussian(g, 0.0);
        match Propagator::new(psi, &gauge, None, IntegratorChoice::default(), None) {
            Err(PropagationError::IntegratorMismatch { .. }) => {}
            other => panic!("expected mismatch, got {:?}", other.err()),
        }
    }

    #[test]
    fn strang_conserves_norm_exactly() {
        let g = grid(64, 16.0);
        let psi = free_gaussian(g, 0.0);
        let n0 = norm_sq(&psi);
        let mut p = Propagator::new(
            psi,
            &GaugeFields::free(g),
            None,
            IntegratorChoice::new(IntegratorKind::Strang, 0.05),
            None,
        )
        .unwrap();
        for _ in 0..40 {
            p.step().unwrap();
        }
        assert_relative_eq!(norm_sq(&p.state().psi), n0, max_relative = 1e-12);
    }

    #[test]
    fn free_gaussian_spreads_at_the_rayleigh_rate() {
        let g = grid(128, 20.0);
        let psi = free_gaussian(g, 0.0);
        let mut p = Propagator::new(
            psi,
            &GaugeFields::free(g),
            None,
            IntegratorChoice::new(IntegratorKind::Strang, 1e-3),
            None,
        )
        .unwrap();
        p.advance_to(0.5).unwrap();
        let m = moments(&p.state().psi).unwrap();
        assert_relative_eq!(m.width_sq_x(), 2.0, max_relative = 1e-3);
        // pointwise agreement with the closed form
        let exact = free_gaussian(g, p.state().zeta);
        let fid = crate::diagnostics::fidelity(&exact, &p.state().psi).unwrap();
        assert!(fid > 1.0 - 1e-9, "fidelity {fid}");
    }

    #[test]
    fn mixed_rep_reduces_to_strang_without_gauge_field() {
        let g = grid(64, 16.0);
        let phi = RealField::from_fn(g, |x, y| 0.1 * (x * x + y * y));
        let gauge = GaugeFields::new(RealVectorField::zeros(g), phi);
        let psi = free_gaussian(g, 0.0);
        let mk = |kind| {
            let mut p = Propagator::new(
                psi.clone(),
                &gauge,
                None,
                IntegratorChoice::new(kind, 2e-3),
                None,
            )
            .unwrap();
            for _ in 0..100 {
                p.step().unwrap();
            }
            p
        };
        let a = mk(IntegratorKind::Strang);
        let b = mk(IntegratorKind::MixedRep);
        let mut max_dev = 0.0_f64;
        for (x, y) in a.state().psi.values().iter().zip(b.state().psi.values()) {
            max_dev = max_dev.max((x - y).norm());
        }
        assert!(max_dev < 1e-12, "max dev {max_dev}");
    }

    #[test]
    fn mixed_rep_rejects_nonseparable_fields() {
        let g = grid(32, 8.0);
        let gauge = GaugeFields::new(
            RealVectorField::from_fn(g, |x, y| (x * y * 0.1, 0.0)),
            RealField::zeros(g),
        );
        match Propagator::new(
            free_gaussian(g, 0.0),
            &gauge,
            None,
            IntegratorChoice::new(IntegratorKind::MixedRep, 1e-3),
            None,
        ) {
            Err(PropagationError::IntegratorMismatch { .. }) => {}
            other => panic!("expected mismatch, got {:?}", other.err()),
        }
    }

    #[test]
    fn rk4_matches_strang_on_free_propagation() {
        let g = grid(64, 16.0);
        let psi = free_gaussian(g, 0.0);
        let dz = 5e-4;
        let mut a = Propagator::new(
            psi.clone(),
            &GaugeFields::free(g),
            None,
            IntegratorChoice::new(IntegratorKind::Strang, dz),
            None,
        )
        .unwrap();
        let mut b = Propagator::new(
            psi,
            &GaugeFields::free(g),
            None,
            IntegratorChoice::new(IntegratorKind::Rk4, dz),
            None,
        )
        .unwrap();
        for _ in 0..200 {
            a.step().unwrap();
            b.step().unwrap();
        }
        let mut max_dev = 0.0_f64;
        for (x, y) in a.state().psi.values().iter().zip(b.state().psi.values()) {
            max_dev = max_dev.max((x - y).norm());
        }
        assert!(max_dev < 1e-6, "max dev {max_dev}");
    }

    #[test]
    fn constant_gauge_field_only_rephases_a_matched_plane_wave() {
        // constant A is a pure gauge: the intensity pattern must stay put
        let g = grid(64, 16.0);
        let a0 = 2.0 * std::f64::consts::PI * 2.0 / 16.0; // grid-periodic
        let gauge = GaugeFields::new(
            RealVectorField::from_fn(g, |_, _| (a0, 0.0)),
            RealField::zeros(g),
        );
        let psi = ComplexField::from_fn(g, |x, _| (C64::i() * a0 * x).exp());
        let i0: Vec<f64> = psi.values().iter().map(|v| v.norm_sqr()).collect();
        let mut p = Propagator::new(
            psi,
            &gauge,
            None,
            IntegratorChoice::new(IntegratorKind::Rk4, 1e-3),
            None,
        )
        .unwrap();
        for _ in 0..300 {
            p.step().unwrap();
        }
        for (v, want) in p.state().psi.values().iter().zip(&i0) {
            assert!((v.norm_sqr() - want).abs() < 1e-6);
        }
    }

    #[test]
    fn rk4_step_bound_is_enforced() {
        let g = grid(64, 16.0);
        let gauge = GaugeFields::free(g);
        let limit = rk4_stability_limit(&g, &gauge, None);
        match Propagator::new(
            free_gaussian(g, 0.0),
            &gauge,
            None,
            IntegratorChoice::new(IntegratorKind::Rk4, 2.0 * limit),
            None,
        ) {
            Err(PropagationError::StepTooLarge { .. }) => {}
            other => panic!("expected StepTooLarge, got {:?}", other.err()),
        }
    }

    #[test]
    fn mask_absorbs_monotonically() {
        let g = grid(64, 16.0);
        // a tilted beam running into the right wall
        let psi = ComplexField::from_fn(g, |x, y| {
            C64::new((-(x * x + y * y)).exp(), 0.0) * (C64::i() * 3.0 * x).exp()
        });
        let mask = MaskSpec::all_sides(2.0, 20.0);
        let mut p = Propagator::new(
            psi,
            &GaugeFields::free(g),
            None,
            IntegratorChoice::new(IntegratorKind::Strang, 1e-3),
            Some(&mask),
        )
        .unwrap();
        let mut prev = norm_sq(&p.state().psi);
        for _ in 0..2000 {
            p.step().unwrap();
            let n = norm_sq(&p.state().psi);
            assert!(n <= prev * (1.0 + 1e-12));
            prev = n;
        }
        // the tilted beam must actually have lost something to the wall
        assert!(p.norm_drift() < -1e-3, "drift {}", p.norm_drift());
    }
}
