//! Full Q-component propagation with absorptive non-transparent modes.
//!
//! The vector of mode envelopes evolves under
//! `i d_zeta b = (−i grad − A)^2 b / 2 + diag(d_q) b` with the full
//! matrix-valued gauge field; `d_Q = -U` for the transparent mode and
//! `d_q = -(chi_q' + i Gamma_q)` for the absorbed ones. Quantifying how well
//! the single-mode reduction tracks the full dynamics is what this module is
//! for: strong absorption of the other modes is what makes the transparent
//! mode follow the control-field geometry adiabatically.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::{fidelity, norm_sq, DiagnosticsError};
use crate::field::{ComplexField, RealField};
use crate::gauge::{DerivativeMethod, GaugeFields, GaugeMatrix};
use crate::grid::TransverseGrid;
use crate::propagate::{IntegratorChoice, PropagationError, Propagator};
use crate::spectral::{fd4_derivative, Fft2d};

#[derive(Debug, Error)]
pub enum MultimodeError {
    #[error("multimode state needs {expected} components, got {got}")]
    WrongComponentCount { expected: usize, got: usize },
    #[error("all components must share the system grid")]
    GridMismatch,
    #[error("absorption model has {got} modes, system has {expected}")]
    WrongAbsorptionCount { expected: usize, got: usize },
    #[error("decay rates must be nonnegative and zero for the transparent mode")]
    BadDecay,
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// Q mode envelopes on one grid; the transparent mode is the last component.
#[derive(Debug, Clone)]
pub struct MultiField {
    pub components: Vec<ComplexField>,
}

impl MultiField {
    /// The transparent mode populated, all others dark.
    pub fn from_transparent_mode(q: usize, psi: ComplexField) -> Self {
        let grid = *psi.grid();
        let mut components: Vec<ComplexField> =
            (0..q - 1).map(|_| ComplexField::zeros(grid)).collect();
        components.push(psi);
        Self { components }
    }

    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn grid(&self) -> &TransverseGrid {
        self.components[0].grid()
    }

    pub fn transparent(&self) -> &ComplexField {
        self.components.last().unwrap()
    }

    /// Total power summed over components.
    pub fn total_norm_sq(&self) -> f64 {
        self.components.iter().map(norm_sq).sum()
    }

    /// Power left in the absorbed (non-transparent) modes.
    pub fn leaked_norm_sq(&self) -> f64 {
        self.components[..self.q() - 1].iter().map(norm_sq).sum()
    }
}

/// Per-mode local susceptibility terms. The transparent mode gets the
/// detuning field `U`; every other mode gets a complex constant whose
/// imaginary part `decay > 0` absorbs it.
#[derive(Debug, Clone)]
pub struct AbsorptionModel {
    /// Re(chi) per mode, scaled; entry for the transparent mode is ignored.
    pub dispersion: Vec<f64>,
    /// Im(chi) = absorption rate per mode, scaled; must be 0 for the
    /// transparent mode.
    pub decay: Vec<f64>,
    /// Detuning term for the transparent mode; `None` on resonance.
    pub detuning: Option<RealField>,
}

impl AbsorptionModel {
    /// Uniform absorption `gamma` on every non-transparent mode, resonant
    /// transparent mode.
    pub fn uniform(q: usize, gamma: f64) -> Self {
        let mut decay = vec![gamma; q];
        decay[q - 1] = 0.0;
        Self { dispersion: vec![0.0; q], decay, detuning: None }
    }

    /// Scaled two-level susceptibility for an absorbed mode:
    /// `chi = -4 N g^2 (delta - i gamma_e/2) / (c gamma_e^2)`, multiplied by
    /// `k w0^2`. `coupling_rate` is `N g^2 / c` (an inverse length). Returns
    /// (dispersion, decay), both scaled.
    pub fn two_level_susceptibility(
        coupling_rate: f64,
        gamma_e: f64,
        delta: f64,
        k: f64,
        w0: f64,
    ) -> (f64, f64) {
        let scale = k * w0 * w0;
        let re = -4.0 * coupling_rate * delta / (gamma_e * gamma_e);
        let im = 2.0 * coupling_rate / gamma_e;
        (scale * re, scale * im)
    }

    fn validate(&self, q: usize) -> Result<(), MultimodeError> {
        if self.dispersion.len() != q || self.decay.len() != q {
            return Err(MultimodeError::WrongAbsorptionCount {
                expected: q,
                got: self.dispersion.len().min(self.decay.len()),
            });
        }
        if self.decay[q - 1] != 0.0 || self.decay.iter().any(|&d| d < 0.0) {
            return Err(MultimodeError::BadDecay);
        }
        Ok(())
    }
}

/// Precomputed matrix fields for the multimode kinetic operator.
pub struct MultimodeSystem {
    grid: TransverseGrid,
    q: usize,
    ax: Vec<Complex64>,
    ay: Vec<Complex64>,
    div_a: Vec<Complex64>,
    a_dot_a: Vec<Complex64>,
}

impl MultimodeSystem {
    /// Build from a sampled gauge matrix; `method` is used for the
    /// divergence of A (match the method that produced the matrix).
    pub fn new(gauge: &GaugeMatrix, method: DerivativeMethod) -> Self {
        let grid = *gauge.grid();
        let q = gauge.q();
        let n = grid.len();
        let qq = q * q;
        let mut ax = vec![Complex64::ZERO; n * qq];
        let mut ay = vec![Complex64::ZERO; n * qq];
        for idx in 0..n {
            ax[idx * qq..(idx + 1) * qq].copy_from_slice(gauge.ax.at(idx));
            ay[idx * qq..(idx + 1) * qq].copy_from_slice(gauge.ay.at(idx));
        }
        // divergence entry by entry
        let mut div_a = vec![Complex64::ZERO; n * qq];
        for r in 0..q {
            for c in 0..q {
                let off = r * q + c;
                let lattice_x: Vec<Complex64> = (0..n).map(|i| ax[i * qq + off]).collect();
                let lattice_y: Vec<Complex64> = (0..n).map(|i| ay[i * qq + off]).collect();
                let ddx = match method {
                    DerivativeMethod::Fd4 => fd4_derivative(&grid, &lattice_x, true),
                    DerivativeMethod::Spectral => {
                        let f = ComplexField::from_values(grid, lattice_x);
                        crate::spectral::spectral_gradient(&f).0.into_values()
                    }
                };
                let ddy = match method {
                    DerivativeMethod::Fd4 => fd4_derivative(&grid, &lattice_y, false),
                    DerivativeMethod::Spectral => {
                        let f = ComplexField::from_values(grid, lattice_y);
                        crate::spectral::spectral_gradient(&f).1.into_values()
                    }
                };
                for i in 0..n {
                    div_a[i * qq + off] = ddx[i] + ddy[i];
                }
            }
        }
        // A . A = Ax Ax + Ay Ay, pointwise matrix products
        let mut a_dot_a = vec![Complex64::ZERO; n * qq];
        for idx in 0..n {
            let bx = &ax[idx * qq..(idx + 1) * qq];
            let by = &ay[idx * qq..(idx + 1) * qq];
            let out = &mut a_dot_a[idx * qq..(idx + 1) * qq];
            for r in 0..q {
                for c in 0..q {
                    let mut s = Complex64::ZERO;
                    for k in 0..q {
                        s += bx[r * q + k] * bx[k * q + c] + by[r * q + k] * by[k * q + c];
                    }
                    out[r * q + c] = s;
                }
            }
        }
        Self { grid, q, ax, ay, div_a, a_dot_a }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Zero every off-diagonal matrix entry; the transparent component then
    /// evolves exactly like the single-mode propagator with the reduced
    /// `A_QQ` and no scalar potential.
    pub fn without_off_diagonal_coupling(&self) -> Self {
        let qq = self.q * self.q;
        let strip = |src: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::ZERO; src.len()];
            for idx in 0..self.grid.len() {
                for r in 0..self.q {
                    out[idx * qq + r * self.q + r] = src[idx * qq + r * self.q + r];
                }
            }
            out
        };
        let ax = strip(&self.ax);
        let ay = strip(&self.ay);
        let div_a = strip(&self.div_a);
        // rebuild A.A from the stripped components
        let mut a_dot_a = vec![Complex64::ZERO; self.ax.len()];
        for idx in 0..self.grid.len() {
            for r in 0..self.q {
                let x = ax[idx * qq + r * self.q + r];
                let y = ay[idx * qq + r * self.q + r];
                a_dot_a[idx * qq + r * self.q + r] = x * x + y * y;
            }
        }
        Self { grid: self.grid, q: self.q, ax, ay, div_a, a_dot_a }
    }

    /// Scale of the gauge coupling between the transparent mode and the
    /// others: max over nodes of the off-diagonal row-Q magnitude.
    pub fn coupling_scale(&self) -> f64 {
        let qq = self.q * self.q;
        let mut m = 0.0_f64;
        for idx in 0..self.grid.len() {
            for c in 0..self.q - 1 {
                let x = self.ax[idx * qq + (self.q - 1) * self.q + c];
                let y = self.ay[idx * qq + (self.q - 1) * self.q + c];
                m = m.max((x.norm_sqr() + y.norm_sqr()).sqrt());
            }
        }
        m
    }

    fn max_matrix_scale(&self) -> f64 {
        let qq = self.q * self.q;
        let mut m = 0.0_f64;
        for idx in 0..self.grid.len() {
            let mut fro = 0.0;
            for e in 0..qq {
                fro += self.ax[idx * qq + e].norm_sqr() + self.ay[idx * qq + e].norm_sqr();
            }
            m = m.max(fro.sqrt());
        }
        m
    }

    /// Explicit step bound for the kinetic part (the stiff diagonal decay is
    /// handled by exact exponentials, not by the explicit stage).
    pub fn stability_limit(&self, absorption: &AbsorptionModel) -> f64 {
        let kmax = self.grid.k_max();
        let amax = self.max_matrix_scale();
        let umax = absorption
            .detuning
            .as_ref()
            .map_or(0.0, |u| u.max_abs());
        let disp = absorption
            .dispersion
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        2.0 / (0.5 * kmax * kmax + amax * kmax + 0.5 * amax * amax + umax + disp)
    }
}

/// One full application of the multimode Hamiltonian, diagonal
/// susceptibility terms included (non-Hermitian when absorption is on).
pub fn apply_multimode_hamiltonian(
    b: &MultiField,
    system: &MultimodeSystem,
    absorption: &AbsorptionModel,
) -> Result<MultiField, MultimodeError> {
    if b.q() != system.q {
        return Err(MultimodeError::WrongComponentCount { expected: system.q, got: b.q() });
    }
    if b.grid() != &system.grid {
        return Err(MultimodeError::GridMismatch);
    }
    absorption.validate(system.q)?;
    let mut fft = Fft2d::new(&system.grid);
    let mut work = KineticWork::new(&system.grid, system.q);
    let components: Vec<Vec<Complex64>> =
        b.components.iter().map(|c| c.values().to_vec()).collect();
    let mut out = work.kinetic(&mut fft, system, &components);
    // diagonal terms
    let n = system.grid.len();
    for (q, comp) in out.iter_mut().enumerate() {
        if q == system.q - 1 {
            if let Some(u) = &absorption.detuning {
                for i in 0..n {
                    comp[i] -= u.values()[i] * components[q][i];
                }
            }
        } else {
            let chi = Complex64::new(absorption.dispersion[q], absorption.decay[q]);
            for i in 0..n {
                comp[i] -= chi * components[q][i];
            }
        }
    }
    Ok(MultiField {
        components: out
            .into_iter()
            .map(|v| ComplexField::from_values(system.grid, v))
            .collect(),
    })
}

/// Scratch buffers for the kinetic operator.
struct KineticWork {
    spec: Vec<Complex64>,
    gx: Vec<Vec<Complex64>>,
    gy: Vec<Vec<Complex64>>,
    lap: Vec<Vec<Complex64>>,
}

impl KineticWork {
    fn new(grid: &TransverseGrid, q: usize) -> Self {
        let n = grid.len();
        Self {
            spec: vec![Complex64::ZERO; n],
            gx: (0..q).map(|_| vec![Complex64::ZERO; n]).collect(),
            gy: (0..q).map(|_| vec![Complex64::ZERO; n]).collect(),
            lap: (0..q).map(|_| vec![Complex64::ZERO; n]).collect(),
        }
    }

    /// `out_r = [ (−i grad − A)^2 b ]_r / 2`
    fn kinetic(
        &mut self,
        fft: &mut Fft2d,
        system: &MultimodeSystem,
        b: &[Vec<Complex64>],
    ) -> Vec<Vec<Complex64>> {
        let grid = &system.grid;
        let nx = grid.nx();
        let q = system.q;
        let qq = q * q;
        let nyq_x = nx / 2;
        let nyq_y = grid.ny() / 2;
        for c in 0..q {
            self.spec.copy_from_slice(&b[c]);
            fft.forward(&mut self.spec);
            let spec = &self.spec;
            self.gx[c]
                .par_chunks_mut(nx)
                .zip(self.gy[c].par_chunks_mut(nx))
                .zip(self.lap[c].par_chunks_mut(nx))
                .enumerate()
                .for_each(|(iy, ((gx, gy), lap))| {
                    let ky = grid.ky(iy);
                    let ky_grad = if iy == nyq_y { 0.0 } else { ky };
                    for ix in 0..nx {
                        let kx = grid.kx(ix);
                        let kx_grad = if ix == nyq_x { 0.0 } else { kx };
                        let s = spec[iy * nx + ix];
                        gx[ix] = Complex64::new(0.0, kx_grad) * s;
                        gy[ix] = Complex64::new(0.0, ky_grad) * s;
                        lap[ix] = -(kx * kx + ky * ky) * s;
                    }
                });
            fft.inverse(&mut self.gx[c]);
            fft.inverse(&mut self.gy[c]);
            fft.inverse(&mut self.lap[c]);
        }
        let n = grid.len();
        let mut out: Vec<Vec<Complex64>> = (0..q).map(|_| vec![Complex64::ZERO; n]).collect();
        for (r, out_r) in out.iter_mut().enumerate() {
            let gx = &self.gx;
            let gy = &self.gy;
            let lap = &self.lap;
            out_r.par_iter_mut().enumerate().for_each(|(i, o)| {
                let mut acc = -lap[r][i];
                for c in 0..q {
                    let m = i * qq + r * q + c;
                    acc += Complex64::i()
                        * (system.div_a[m] * b[c][i]
                            + 2.0 * (system.ax[m] * gx[c][i] + system.ay[m] * gy[c][i]));
                    acc += system.a_dot_a[m] * b[c][i];
                }
                *o = 0.5 * acc;
            });
        }
        out
    }
}

/// RK4 on the kinetic part with the diagonal susceptibility handled by exact
/// exponentials around each step (removes the stiffness of strong decay).
pub struct MultimodePropagator {
    system: MultimodeSystem,
    fft: Fft2d,
    work: KineticWork,
    /// per-mode half-step diagonal factor; the transparent mode may carry a
    /// position-dependent detuning factor instead
    half_factor: Vec<Complex64>,
    half_factor_transparent: Option<Vec<Complex64>>,
    dzeta: f64,
    b: Vec<Vec<Complex64>>,
    k: [Vec<Vec<Complex64>>; 4],
    tmp: Vec<Vec<Complex64>>,
    zeta: f64,
    steps: u64,
}

impl MultimodePropagator {
    pub fn new(
        system: MultimodeSystem,
        absorption: &AbsorptionModel,
        initial: MultiField,
        dzeta: f64,
    ) -> Result<Self, MultimodeError> {
        if initial.q() != system.q {
            return Err(MultimodeError::WrongComponentCount {
                expected: system.q,
                got: initial.q(),
            });
        }
        if initial.grid() != &system.grid {
            return Err(MultimodeError::GridMismatch);
        }
        absorption.validate(system.q)?;
        let limit = system.stability_limit(absorption);
        if dzeta > limit {
            return Err(PropagationError::StepTooLarge { dzeta, limit }.into());
        }
        let q = system.q;
        let n = system.grid.len();
        // e^{-i d_q dz/2} with d_q = -(chi' + i Gamma): magnitude e^{-Gamma dz/2}
        let half_factor: Vec<Complex64> = (0..q)
            .map(|m| {
                (Complex64::new(0.0, absorption.dispersion[m]) - absorption.decay[m])
                    .scale(0.5 * dzeta)
                    .exp()
            })
            .collect();
        let half_factor_transparent = absorption.detuning.as_ref().map(|u| {
            u.values()
                .iter()
                .map(|&v| (Complex64::i() * v * 0.5 * dzeta).exp())
                .collect()
        });
        let fft = Fft2d::new(&system.grid);
        let work = KineticWork::new(&system.grid, q);
        let b: Vec<Vec<Complex64>> =
            initial.components.iter().map(|c| c.values().to_vec()).collect();
        let zero = || (0..q).map(|_| vec![Complex64::ZERO; n]).collect::<Vec<_>>();
        Ok(Self {
            system,
            fft,
            work,
            half_factor,
            half_factor_transparent,
            dzeta,
            b,
            k: [zero(), zero(), zero(), zero()],
            tmp: zero(),
            zeta: 0.0,
            steps: 0,
        })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn state(&self) -> MultiField {
        MultiField {
            components: self
                .b
                .iter()
                .map(|v| ComplexField::from_values(self.system.grid, v.clone()))
                .collect(),
        }
    }

    fn apply_half_diagonal(&mut self) {
        let q = self.system.q;
        for (m, comp) in self.b.iter_mut().enumerate() {
            if m == q - 1 {
                if let Some(f) = &self.half_factor_transparent {
                    comp.par_iter_mut().zip(f.par_iter()).for_each(|(v, p)| *v *= p);
                }
            } else {
                let f = self.half_factor[m];
                if f != Complex64::ONE {
                    comp.par_iter_mut().for_each(|v| *v *= f);
                }
            }
        }
    }

    pub fn step(&mut self) -> Result<(), MultimodeError> {
        self.apply_half_diagonal();
        let h = self.dzeta;
        let mi = -Complex64::i();
        let q = self.system.q;
        // k1
        let k1 = self.work.kinetic(&mut self.fft, &self.system, &self.b);
        self.k[0] = k1;
        for stage in 1..4 {
            let coeff = if stage == 3 { h } else { 0.5 * h };
            for c in 0..q {
                let prev = &self.k[stage - 1][c];
                let b = &self.b[c];
                self.tmp[c].par_iter_mut().enumerate().for_each(|(i, t)| {
                    *t = b[i] + coeff * mi * prev[i];
                });
            }
            self.k[stage] = self.work.kinetic(&mut self.fft, &self.system, &self.tmp);
        }
        for c in 0..q {
            let (k1, k2, k3, k4) = (&self.k[0][c], &self.k[1][c], &self.k[2][c], &self.k[3][c]);
            self.b[c].par_iter_mut().enumerate().for_each(|(i, v)| {
                *v += h / 6.0 * mi * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            });
        }
        self.apply_half_diagonal();
        self.steps += 1;
        self.zeta = self.steps as f64 * self.dzeta;
        Ok(())
    }
}

/// One row of an adiabatic-following trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub zeta: f64,
    /// normalized overlap between the multimode transparent component and
    /// the single-mode reference
    pub overlap: f64,
    /// power in the absorbed modes
    pub leakage: f64,
    pub total_norm: f64,
}

/// Propagate the full multimode system alongside the single-mode reduction
/// (same reduced potentials) and record the overlap trace.
#[allow(clippy::too_many_arguments)]
pub fn compare_with_single_mode(
    initial: &ComplexField,
    system: MultimodeSystem,
    absorption: &AbsorptionModel,
    reduced: &GaugeFields,
    reduced_detuning: Option<&RealField>,
    single_choice: IntegratorChoice,
    dzeta_multi: f64,
    zeta_max: f64,
    samples: usize,
) -> Result<Vec<TraceRow>, MultimodeError> {
    let q = system.q();
    let mut multi = MultimodePropagator::new(
        system,
        absorption,
        MultiField::from_transparent_mode(q, initial.clone()),
        dzeta_multi,
    )?;
    let mut single =
        Propagator::new(initial.clone(), reduced, reduced_detuning, single_choice, None)?;

    let mut rows = Vec::with_capacity(samples + 1);
    let record = |multi: &MultimodePropagator,
                  single_psi: &ComplexField,
                  rows: &mut Vec<TraceRow>|
     -> Result<(), MultimodeError> {
        let state = multi.state();
        rows.push(TraceRow {
            zeta: multi.zeta(),
            overlap: fidelity(single_psi, state.transparent())?,
            leakage: state.leaked_norm_sq(),
            total_norm: state.total_norm_sq(),
        });
        Ok(())
    };
    record(&multi, &single.state().psi, &mut rows)?;
    for s in 1..=samples {
        let target = zeta_max * s as f64 / samples as f64;
        while multi.zeta() < target - 0.5 * dzeta_multi {
            multi.step()?;
        }
        single.advance_to(multi.zeta())?;
        record(&multi, &single.state().psi, &mut rows)?;
    }
    Ok(rows)
}

/// Adiabaticity bookkeeping: generic coupling/gap ratio plus the resonant
/// inequality `eta << (kw)^2 n 3pi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticityReport {
    pub coupling: f64,
    pub gap: f64,
    pub ratio: f64,
    pub resonant_bound: f64,
    pub resonant_ratio: f64,
}

pub fn adiabaticity_check(
    coupling: f64,
    gap: f64,
    eta: f64,
    kw: f64,
    density: f64,
) -> AdiabaticityReport {
    let bound = kw * kw * density * 1.5 * std::f64::consts::PI;
    AdiabaticityReport {
        coupling,
        gap,
        ratio: coupling / gap,
        resonant_bound: bound,
        resonant_ratio: eta / bound,
    }
}

/// Spearman rank correlation (ties broken by index; inputs here are strictly
/// monotone-valued sweeps, so that is enough).
pub fn spearman_rank_correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; n];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let rx = rank(x);
    let ry = rank(y);
    let mean = (n as f64 - 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..n {
        num += (rx[i] - mean) * (ry[i] - mean);
        dx += (rx[i] - mean).powi(2);
        dy += (ry[i] - mean).powi(2);
    }
    num / (dx * dy).sqrt()
}
