//! Control-field ratios, the mode-mixing unitary, and the quasi-potentials.
//!
//! A configuration of Q control fields defines normalized ratios
//! `R_q = (Omega_q/g_q) / Omega_perp` with `sum |R_q|^2 = 1`. The unitary
//! `W` that isolates the transparent mode is
//!
//! ```text
//! W[q][q'] = gamma w_q conj(w_q') - delta_{qq'},
//! gamma = R_Q + 1,   w_q = (delta_{Qq} + R_q) / gamma,
//! ```
//!
//! and the Hermitian gauge matrix is `A_i = i W^dag d_i W`. The transparent
//! mode sees the real quasi-vector potential `A = (A_i)_{QQ}` and the
//! quasi-scalar potential `Phi = sum_{q != Q} |(A_i)_{Qq}|^2`, which also
//! equals `-A^2 + sum_q |grad R_q|^2`.
//!
//! Everything here is in scaled units (lengths in initial waists), so the
//! returned potentials plug straight into the propagation equation
//! `i d_zeta psi = [ (−i grad − A)^2/2 − U + Phi/2 ] psi`.

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{ComplexField, RealField, RealVectorField};
use crate::grid::TransverseGrid;
use crate::spectral::{fd4_derivative, spectral_gradient};

/// |1 + R_Q| below this is treated as a coordinate singularity of the
/// W parametrization; relabel which leg plays the role of Q.
pub const GAMMA_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GaugeError {
    #[error("control fields vanish at node {index} (x={x:.4}, y={y:.4}); ratios undefined")]
    VanishingControl { index: usize, x: f64, y: f64 },
    #[error("|1 + R_Q| = {gamma_abs:.3e} < {GAMMA_EPS:.0e} at node {index}; the mode transform is singular here — relabel which leg is Q")]
    SingularGauge { index: usize, gamma_abs: f64 },
    #[error("|R| = 1/2 with nonzero gradient at node {index} (x={x:.4}, y={y:.4}); scalar potential diverges")]
    SingularScalar { index: usize, x: f64, y: f64 },
    #[error("imbalance exceeds 1/2 at node {index} (x={x:.4}, y={y:.4}): R = {value:.6}")]
    ImbalanceOutOfRange { index: usize, x: f64, y: f64, value: f64 },
    #[error("configuration needs at least two legs, got {0}")]
    TooFewLegs(usize),
    #[error("fields in a configuration must share one grid")]
    GridMismatch,
    #[error("scalar potential came out significantly negative ({value:.3e}) at node {index}; it is a sum of squared magnitudes, so the configuration fields are inconsistent")]
    NegativeScalar { index: usize, value: f64 },
}

/// How to differentiate sampled configuration fields.
///
/// Spectral differentiation is exact for periodic-compatible smooth
/// configurations; the scenario constructors use 4th-order centered
/// differences (one-sided at edges) for the non-periodic ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMethod {
    Spectral,
    Fd4,
}

fn derivative(
    grid: &TransverseGrid,
    values: &[Complex64],
    method: DerivativeMethod,
    along_x: bool,
) -> Vec<Complex64> {
    match method {
        DerivativeMethod::Spectral => {
            let f = ComplexField::from_values(*grid, values.to_vec());
            let (gx, gy) = spectral_gradient(&f);
            if along_x { gx.into_values() } else { gy.into_values() }
        }
        DerivativeMethod::Fd4 => fd4_derivative(grid, values, along_x),
    }
}

fn real_gradient(
    f: &RealField,
    method: DerivativeMethod,
) -> RealVectorField {
    let vals: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let gx = derivative(f.grid(), &vals, method, true);
    let gy = derivative(f.grid(), &vals, method, false);
    RealVectorField::from_components(
        *f.grid(),
        gx.into_iter().map(|v| v.re).collect(),
        gy.into_iter().map(|v| v.re).collect(),
    )
}

/// Two-control-field configuration in the (R, theta, phi) parametrization:
/// `R_1 = sqrt(1/2 + R) e^{i(phi + theta)}`, `R_2 = sqrt(1/2 - R) e^{i(phi - theta)}`.
/// The common Rabi prefactor cancels in the ratios and never appears.
#[derive(Debug, Clone)]
pub struct ParametricConfig {
    pub imbalance: RealField,
    pub rel_phase: RealField,
    pub common_phase: RealField,
    pub derivative: DerivativeMethod,
    /// Analytic gradients of (imbalance, rel_phase, common_phase) when the
    /// scenario knows them in closed form; numeric differentiation otherwise.
    pub gradients: Option<ParametricGradients>,
}

#[derive(Debug, Clone)]
pub struct ParametricGradients {
    pub imbalance: RealVectorField,
    pub rel_phase: RealVectorField,
    pub common_phase: RealVectorField,
}

/// General configuration: one sampled complex field `Omega_q/g_q` per leg.
#[derive(Debug, Clone)]
pub struct SampledConfig {
    pub legs: Vec<ComplexField>,
    pub derivative: DerivativeMethod,
}

#[derive(Debug, Clone)]
pub enum ControlConfig {
    Parametric(ParametricConfig),
    Sampled(SampledConfig),
}

impl ControlConfig {
    pub fn q(&self) -> usize {
        match self {
            ControlConfig::Parametric(_) => 2,
            ControlConfig::Sampled(s) => s.legs.len(),
        }
    }

    pub fn grid(&self) -> &TransverseGrid {
        match self {
            ControlConfig::Parametric(p) => p.imbalance.grid(),
            ControlConfig::Sampled(s) => s.legs[0].grid(),
        }
    }

    pub fn derivative_method(&self) -> DerivativeMethod {
        match self {
            ControlConfig::Parametric(p) => p.derivative,
            ControlConfig::Sampled(s) => s.derivative,
        }
    }

    /// The same physical configuration with all legs multiplied by
    /// `exp(i f)`; shifts the quasi-vector potential by `-grad f` and leaves
    /// the quasi-scalar potential unchanged.
    pub fn gauge_transformed(&self, f: &RealField) -> ControlConfig {
        match self {
            ControlConfig::Parametric(p) => {
                let mut common = p.common_phase.clone();
                for (c, add) in common.values_mut().iter_mut().zip(f.values()) {
                    *c += add;
                }
                // analytic gradients no longer describe the new common phase
                ControlConfig::Parametric(ParametricConfig {
                    imbalance: p.imbalance.clone(),
                    rel_phase: p.rel_phase.clone(),
                    common_phase: common,
                    derivative: p.derivative,
                    gradients: None,
                })
            }
            ControlConfig::Sampled(s) => {
                let legs = s
                    .legs
                    .iter()
                    .map(|leg| {
                        let mut out = leg.clone();
                        for (v, ph) in out.values_mut().iter_mut().zip(f.values()) {
                            *v *= Complex64::new(0.0, *ph).exp();
                        }
                        out
                    })
                    .collect();
                ControlConfig::Sampled(SampledConfig { legs, derivative: s.derivative })
            }
        }
    }
}

/// Normalized ratio fields `R_q`, with `sum_q |R_q|^2 = 1` at every node.
pub fn normalize_ratios(cfg: &ControlConfig) -> Result<Vec<ComplexField>, GaugeError> {
    match cfg {
        ControlConfig::Parametric(p) => {
            let grid = *p.imbalance.grid();
            let n = grid.len();
            let mut leg1 = vec![Complex64::ZERO; n];
            let mut leg2 = vec![Complex64::ZERO; n];
            for i in 0..n {
                let r = p.imbalance.values()[i];
                if r.abs() > 0.5 + 1e-12 {
                    let (x, y) = grid.coords(i);
                    return Err(GaugeError::ImbalanceOutOfRange { index: i, x, y, value: r });
                }
                let m1 = (0.5 + r).max(0.0).sqrt();
                let m2 = (0.5 - r).max(0.0).sqrt();
                let phi = p.common_phase.values()[i];
                let th = p.rel_phase.values()[i];
                leg1[i] = m1 * Complex64::new(0.0, phi + th).exp();
                leg2[i] = m2 * Complex64::new(0.0, phi - th).exp();
            }
            Ok(vec![
                ComplexField::from_values(grid, leg1),
                ComplexField::from_values(grid, leg2),
            ])
        }
        ControlConfig::Sampled(s) => {
            if s.legs.len() < 2 {
                return Err(GaugeError::TooFewLegs(s.legs.len()));
            }
            let grid = *s.legs[0].grid();
            for leg in &s.legs {
                if leg.grid() != &grid {
                    return Err(GaugeError::GridMismatch);
                }
            }
            let n = grid.len();
            let mut out: Vec<Vec<Complex64>> =
                s.legs.iter().map(|_| vec![Complex64::ZERO; n]).collect();
            for i in 0..n {
                let total: f64 = s.legs.iter().map(|l| l.values()[i].norm_sqr()).sum();
                if !(total > 0.0) {
                    let (x, y) = grid.coords(i);
                    return Err(GaugeError::VanishingControl { index: i, x, y });
                }
                let inv = total.sqrt().recip();
                for (q, leg) in s.legs.iter().enumerate() {
                    out[q][i] = leg.values()[i] * inv;
                }
            }
            Ok(out
                .into_iter()
                .map(|v| ComplexField::from_values(grid, v))
                .collect())
        }
    }
}

/// Dense QxQ complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QMat {
    q: usize,
    data: Vec<Complex64>,
}

impl QMat {
    pub fn zeros(q: usize) -> Self {
        Self { q, data: vec![Complex64::ZERO; q * q] }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.q + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.q + c] = v;
    }

    pub fn adjoint(&self) -> QMat {
        let mut out = QMat::zeros(self.q);
        for r in 0..self.q {
            for c in 0..self.q {
                out.set(r, c, self.get(c, r).conj());
            }
        }
        out
    }

    pub fn mul(&self, rhs: &QMat) -> QMat {
        let mut out = QMat::zeros(self.q);
        for r in 0..self.q {
            for c in 0..self.q {
                let mut s = Complex64::ZERO;
                for k in 0..self.q {
                    s += self.get(r, k) * rhs.get(k, c);
                }
                out.set(r, c, s);
            }
        }
        out
    }

    /// max |self - I| entrywise.
    pub fn deviation_from_identity(&self) -> f64 {
        let mut m = 0.0_f64;
        for r in 0..self.q {
            for c in 0..self.q {
                let want = if r == c { Complex64::ONE } else { Complex64::ZERO };
                m = m.max((self.get(r, c) - want).norm());
            }
        }
        m
    }

    /// max |self - self^dag| entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut m = 0.0_f64;
        for r in 0..self.q {
            for c in 0..self.q {
                m = m.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        m
    }
}

/// The explicit mode transform for one ratio vector. Column Q equals the
/// ratio vector itself, so `b_Q = sum_q conj(R_q) a_q`.
pub fn build_w(ratios: &[Complex64]) -> Result<QMat, GaugeError> {
    let q = ratios.len();
    if q < 2 {
        return Err(GaugeError::TooFewLegs(q));
    }
    let gamma = ratios[q - 1] + 1.0;
    if gamma.norm() < GAMMA_EPS {
        return Err(GaugeError::SingularGauge { index: 0, gamma_abs: gamma.norm() });
    }
    let w: Vec<Complex64> = (0..q)
        .map(|i| {
            let delta = if i == q - 1 { Complex64::ONE } else { Complex64::ZERO };
            (delta + ratios[i]) / gamma
        })
        .collect();
    let mut out = QMat::zeros(q);
    for r in 0..q {
        for c in 0..q {
            let delta = if r == c { Complex64::ONE } else { Complex64::ZERO };
            out.set(r, c, gamma * w[r] * w[c].conj() - delta);
        }
    }
    Ok(out)
}

/// A QxQ complex matrix per node.
#[derive(Debug, Clone)]
pub struct MatrixField {
    grid: TransverseGrid,
    q: usize,
    data: Vec<Complex64>,
}

impl MatrixField {
    pub fn zeros(grid: TransverseGrid, q: usize) -> Self {
        Self { grid, q, data: vec![Complex64::ZERO; grid.len() * q * q] }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn at(&self, idx: usize) -> &[Complex64] {
        &self.data[idx * self.q * self.q..(idx + 1) * self.q * self.q]
    }

    pub fn at_mut(&mut self, idx: usize) -> &mut [Complex64] {
        &mut self.data[idx * self.q * self.q..(idx + 1) * self.q * self.q]
    }

    pub fn entry(&self, idx: usize, r: usize, c: usize) -> Complex64 {
        self.data[idx * self.q * self.q + r * self.q + c]
    }

    pub fn matrix(&self, idx: usize) -> QMat {
        QMat { q: self.q, data: self.at(idx).to_vec() }
    }

    /// Extract entry (r, c) as a lattice.
    fn entry_lattice(&self, r: usize, c: usize) -> Vec<Complex64> {
        let qq = self.q * self.q;
        let off = r * self.q + c;
        (0..self.grid.len()).map(|i| self.data[i * qq + off]).collect()
    }

    fn set_entry_lattice(&mut self, r: usize, c: usize, vals: &[Complex64]) {
        let qq = self.q * self.q;
        let off = r * self.q + c;
        for (i, v) in vals.iter().enumerate() {
            self.data[i * qq + off] = *v;
        }
    }
}

/// The mode transform sampled at every node.
pub fn mode_transform_field(cfg: &ControlConfig) -> Result<MatrixField, GaugeError> {
    let ratios = normalize_ratios(cfg)?;
    let grid = *cfg.grid();
    let q = ratios.len();
    let mut out = MatrixField::zeros(grid, q);
    let mut point = vec![Complex64::ZERO; q];
    for idx in 0..grid.len() {
        for (qi, r) in ratios.iter().enumerate() {
            point[qi] = r.values()[idx];
        }
        let w = build_w(&point).map_err(|e| match e {
            GaugeError::SingularGauge { gamma_abs, .. } => {
                GaugeError::SingularGauge { index: idx, gamma_abs }
            }
            other => other,
        })?;
        out.at_mut(idx).copy_from_slice(&w.data);
    }
    Ok(out)
}

/// The full matrix-valued gauge field `(A_x, A_y)` with `A_i = i W^dag d_i W`.
#[derive(Debug, Clone)]
pub struct GaugeMatrix {
    pub ax: MatrixField,
    pub ay: MatrixField,
}

impl GaugeMatrix {
    pub fn grid(&self) -> &TransverseGrid {
        self.ax.grid()
    }

    pub fn q(&self) -> usize {
        self.ax.q()
    }

    /// max over nodes and components of the Hermiticity defect.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut m = 0.0_f64;
        for idx in 0..self.grid().len() {
            m = m.max(self.ax.matrix(idx).hermiticity_defect());
            m = m.max(self.ay.matrix(idx).hermiticity_defect());
        }
        m
    }

    /// Reduce to the transparent-mode potentials: the (Q,Q) element as the
    /// real quasi-vector potential and the defining off-diagonal sum as the
    /// quasi-scalar potential.
    pub fn reduced(&self) -> GaugeFields {
        let grid = *self.grid();
        let q = self.q();
        let n = grid.len();
        let mut ax = vec![0.0; n];
        let mut ay = vec![0.0; n];
        let mut phi = vec![0.0; n];
        for idx in 0..n {
            ax[idx] = self.ax.entry(idx, q - 1, q - 1).re;
            ay[idx] = self.ay.entry(idx, q - 1, q - 1).re;
            let mut s = 0.0;
            for c in 0..q - 1 {
                s += self.ax.entry(idx, q - 1, c).norm_sqr();
                s += self.ay.entry(idx, q - 1, c).norm_sqr();
            }
            phi[idx] = s;
        }
        GaugeFields::new(
            RealVectorField::from_components(grid, ax, ay),
            RealField::from_values(grid, phi),
        )
    }
}

/// Compute the full gauge matrix numerically from the sampled mode transform.
pub fn gauge_numeric(cfg: &ControlConfig) -> Result<GaugeMatrix, GaugeError> {
    let w = mode_transform_field(cfg)?;
    let grid = *cfg.grid();
    let q = w.q();
    let method = cfg.derivative_method();

    let mut dwx = MatrixField::zeros(grid, q);
    let mut dwy = MatrixField::zeros(grid, q);
    for r in 0..q {
        for c in 0..q {
            let lattice = w.entry_lattice(r, c);
            dwx.set_entry_lattice(r, c, &derivative(&grid, &lattice, method, true));
            dwy.set_entry_lattice(r, c, &derivative(&grid, &lattice, method, false));
        }
    }

    let mut ax = MatrixField::zeros(grid, q);
    let mut ay = MatrixField::zeros(grid, q);
    for idx in 0..grid.len() {
        let wd = w.matrix(idx).adjoint();
        let mut gx = wd.mul(&dwx.matrix(idx));
        let mut gy = wd.mul(&dwy.matrix(idx));
        for v in gx.data.iter_mut().chain(gy.data.iter_mut()) {
            *v *= Complex64::i();
        }
        ax.at_mut(idx).copy_from_slice(&gx.data);
        ay.at_mut(idx).copy_from_slice(&gy.data);
    }
    Ok(GaugeMatrix { ax, ay })
}

/// Sampled quasi-potentials seen by the transparent mode.
#[derive(Debug, Clone)]
pub struct GaugeFields {
    pub a: RealVectorField,
    pub phi: RealField,
    /// Divergence of A when the scenario knows it in closed form. Sampled
    /// singular fields (the 1/r vortex potential) are not band-limited, so
    /// a spectral divergence of their samples rings across the whole grid;
    /// the analytic value avoids that. `None` falls back to the spectral
    /// divergence of the samples.
    pub div_a: Option<RealField>,
}

impl GaugeFields {
    pub fn new(a: RealVectorField, phi: RealField) -> Self {
        Self { a, phi, div_a: None }
    }

    pub fn with_divergence(a: RealVectorField, phi: RealField, div_a: RealField) -> Self {
        Self { a, phi, div_a: Some(div_a) }
    }

    pub fn free(grid: TransverseGrid) -> Self {
        Self::new(RealVectorField::zeros(grid), RealField::zeros(grid))
    }

    pub fn grid(&self) -> &TransverseGrid {
        self.a.grid()
    }

    /// Clamp tiny negative scalar-potential values (roundoff). Phi is a sum
    /// of squared magnitudes, so anything more negative than
    /// `-1e-10 * scale` means the inputs were inconsistent.
    pub fn clamp_roundoff(&mut self) -> Result<(), GaugeError> {
        let scale = self.phi.max_abs().max(1.0);
        for (i, v) in self.phi.values_mut().iter_mut().enumerate() {
            if *v < 0.0 {
                if *v <= -1e-10 * scale {
                    return Err(GaugeError::NegativeScalar { index: i, value: *v });
                }
                *v = 0.0;
            }
        }
        Ok(())
    }
}

/// Closed-form potentials plus the recorded residual between the two
/// algebraic routes to Phi.
#[derive(Debug, Clone)]
pub struct ClosedFormGauge {
    pub fields: GaugeFields,
    /// the second route, `-A^2 + sum_q |grad R_q|^2`, kept so callers can
    /// compare either form against the defining off-diagonal sum
    pub phi_identity: RealField,
    /// max |Phi_main - phi_identity| / max(|Phi|, 1)
    pub phi_identity_residual: f64,
}

/// Evaluate the closed-form potentials.
///
/// For the two-leg parametric form:
/// `A = -(grad phi + 2 R grad theta)`,
/// `Phi = (grad R)^2/(1-4R^2) + (grad theta)^2 (1-4R^2)`.
/// For a general sampled configuration: `A = i sum conj(R_q) grad R_q`
/// (manifestly real) and `Phi = -A^2 + sum |grad R_q|^2`.
pub fn gauge_closed_form(cfg: &ControlConfig) -> Result<ClosedFormGauge, GaugeError> {
    match cfg {
        ControlConfig::Parametric(p) => closed_form_parametric(p),
        ControlConfig::Sampled(_) => closed_form_sampled(cfg),
    }
}

fn closed_form_parametric(p: &ParametricConfig) -> Result<ClosedFormGauge, GaugeError> {
    let grid = *p.imbalance.grid();
    let n = grid.len();
    let (gr, gt, gp) = match &p.gradients {
        Some(g) => (g.imbalance.clone(), g.rel_phase.clone(), g.common_phase.clone()),
        None => (
            real_gradient(&p.imbalance, p.derivative),
            real_gradient(&p.rel_phase, p.derivative),
            real_gradient(&p.common_phase, p.derivative),
        ),
    };
    let mut ax = vec![0.0; n];
    let mut ay = vec![0.0; n];
    let mut phi = vec![0.0; n];
    let mut phi_id = vec![0.0; n];
    for i in 0..n {
        let r = p.imbalance.values()[i];
        let one_m = 1.0 - 4.0 * r * r;
        let grx = gr.x()[i];
        let gry = gr.y()[i];
        let gtx = gt.x()[i];
        let gty = gt.y()[i];
        let gpx = gp.x()[i];
        let gpy = gp.y()[i];
        ax[i] = -(gpx + 2.0 * r * gtx);
        ay[i] = -(gpy + 2.0 * r * gty);
        let gr2 = grx * grx + gry * gry;
        let gt2 = gtx * gtx + gty * gty;
        let gp2 = gpx * gpx + gpy * gpy;
        if one_m.abs() < 1e-12 {
            if gr2 > 1e-20 {
                let (x, y) = grid.coords(i);
                return Err(GaugeError::SingularScalar { index: i, x, y });
            }
            phi[i] = gt2 * one_m;
        } else {
            phi[i] = gr2 / one_m + gt2 * one_m;
        }
        // second route: -A^2 + sum_q |grad R_q|^2
        let sum_grad_sq = if one_m.abs() < 1e-12 {
            gp2 + gt2 + 4.0 * r * (gpx * gtx + gpy * gty)
        } else {
            gr2 / one_m + gp2 + gt2 + 4.0 * r * (gpx * gtx + gpy * gty)
        };
        phi_id[i] = -(ax[i] * ax[i] + ay[i] * ay[i]) + sum_grad_sq;
    }
    let scale = phi.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let residual = phi
        .iter()
        .zip(&phi_id)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    let mut fields = GaugeFields::new(
        RealVectorField::from_components(grid, ax, ay),
        RealField::from_values(grid, phi),
    );
    fields.clamp_roundoff()?;
    Ok(ClosedFormGauge {
        fields,
        phi_identity: RealField::from_values(grid, phi_id),
        phi_identity_residual: residual,
    })
}

fn closed_form_sampled(cfg: &ControlConfig) -> Result<ClosedFormGauge, GaugeError> {
    let ratios = normalize_ratios(cfg)?;
    let grid = *cfg.grid();
    let method = cfg.derivative_method();
    let n = grid.len();
    let mut ax = vec![0.0; n];
    let mut ay = vec![0.0; n];
    let mut sum_grad_sq = vec![0.0; n];
    for r in &ratios {
        let gx = derivative(&grid, r.values(), method, true);
        let gy = derivative(&grid, r.values(), method, false);
        for i in 0..n {
            let c = r.values()[i].conj();
            // i conj(R) dR is real up to roundoff; keep the real part
            ax[i] += (Complex64::i() * c * gx[i]).re;
            ay[i] += (Complex64::i() * c * gy[i]).re;
            sum_grad_sq[i] += gx[i].norm_sqr() + gy[i].norm_sqr();
        }
    }
    let phi: Vec<f64> = (0..n)
        .map(|i| -(ax[i] * ax[i] + ay[i] * ay[i]) + sum_grad_sq[i])
        .collect();
    // cross-check the identity route against the defining off-diagonal sum
    let defining = gauge_numeric(cfg)?.reduced().phi;
    let scale = phi.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let residual = phi
        .iter()
        .zip(defining.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    let phi_identity = RealField::from_values(grid, phi.clone());
    let mut fields = GaugeFields::new(
        RealVectorField::from_components(grid, ax, ay),
        RealField::from_values(grid, phi),
    );
    fields.clamp_roundoff()?;
    Ok(ClosedFormGauge { fields, phi_identity, phi_identity_residual: residual })
}

/// Numeric-vs-closed-form comparison report.
#[derive(Debug, Clone)]
pub struct CrossValidation {
    /// max |A_num - A_closed| / max |A_closed| over unmasked nodes
    pub a_max_rel_dev: f64,
    /// max |Phi_num - Phi_closed| / max |Phi_closed| over unmasked nodes
    pub phi_max_rel_dev: f64,
    /// residual between the two closed-form routes to Phi
    pub phi_identity_residual: f64,
    /// max entrywise Hermiticity defect of the numeric gauge matrix
    pub hermiticity_defect: f64,
    /// max |W[q][Q] - R_q| over nodes and legs
    pub w_column_defect: f64,
    /// max entrywise |W^dag W - I| over nodes
    pub unitarity_defect: f64,
}

impl CrossValidation {
    pub fn pass(&self, tol_a: f64, tol_phi: f64) -> bool {
        self.a_max_rel_dev < tol_a && self.phi_max_rel_dev < tol_phi
    }
}

/// Compare the numeric gauge matrix against the closed forms. `region`
/// restricts the comparison (e.g. excluding a disc around a coordinate
/// singularity); `None` compares everywhere.
pub fn cross_validate(
    cfg: &ControlConfig,
    region: Option<&(dyn Fn(f64, f64) -> bool + Sync)>,
) -> Result<CrossValidation, GaugeError> {
    let grid = *cfg.grid();
    let numeric = gauge_numeric(cfg)?;
    let closed = gauge_closed_form(cfg)?;
    let reduced = numeric.reduced();
    let ratios = normalize_ratios(cfg)?;
    let w = mode_transform_field(cfg)?;

    let included = |idx: usize| -> bool {
        match region {
            None => true,
            Some(f) => {
                let (x, y) = grid.coords(idx);
                f(x, y)
            }
        }
    };

    let mut a_scale = 0.0_f64;
    let mut phi_scale = 0.0_f64;
    for idx in 0..grid.len() {
        if !included(idx) {
            continue;
        }
        a_scale = a_scale
            .max(closed.fields.a.x()[idx].hypot(closed.fields.a.y()[idx]));
        phi_scale = phi_scale.max(closed.fields.phi.values()[idx].abs());
    }
    let a_den = if a_scale > 1e-9 { a_scale } else { 1.0 };
    let phi_den = if phi_scale > 1e-9 { phi_scale } else { 1.0 };

    let mut a_dev = 0.0_f64;
    let mut phi_dev = 0.0_f64;
    let mut w_col = 0.0_f64;
    let mut unit = 0.0_f64;
    let q = w.q();
    for idx in 0..grid.len() {
        let m = w.matrix(idx);
        unit = unit.max(m.adjoint().mul(&m).deviation_from_identity());
        for leg in 0..q {
            w_col = w_col.max((m.get(leg, q - 1) - ratios[leg].values()[idx]).norm());
        }
        if !included(idx) {
            continue;
        }
        let dx = reduced.a.x()[idx] - closed.fields.a.x()[idx];
        let dy = reduced.a.y()[idx] - closed.fields.a.y()[idx];
        a_dev = a_dev.max(dx.hypot(dy) / a_den);
        phi_dev = phi_dev.max(
            (reduced.phi.values()[idx] - closed.fields.phi.values()[idx]).abs() / phi_den,
        );
    }

    Ok(CrossValidation {
        a_max_rel_dev: a_dev,
        phi_max_rel_dev: phi_dev,
        phi_identity_residual: closed.phi_identity_residual,
        hermiticity_defect: numeric.hermiticity_defect(),
        w_column_defect: w_col,
        unitarity_defect: unit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandlimited::random_band_limited;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C64;
    use rand::Rng;
    use rand::SeedableRng;

    fn grid(n: usize, l: f64) -> TransverseGrid {
        TransverseGrid::new(n, n, l, l).unwrap()
    }

    fn smooth_parametric(g: TransverseGrid, seed: u64) -> ControlConfig {
        ControlConfig::Parametric(ParametricConfig {
            imbalance: random_band_limited(g, seed, 3, 0.3),
            rel_phase: random_band_limited(g, seed + 1, 3, 1.0),
            common_phase: random_band_limited(g, seed + 2, 3, 0.8),
            derivative: DerivativeMethod::Spectral,
            gradients: None,
        })
    }

    #[test]
    fn equal_legs_normalize_to_inverse_sqrt_two() {
        let g = grid(16, 4.0);
        let h = ComplexField::from_fn(g, |x, y| C64::new(1.0 + 0.1 * x + 0.05 * y, 0.0));
        let cfg = ControlConfig::Sampled(SampledConfig {
            legs: vec![h.clone(), h],
            derivative: DerivativeMethod::Spectral,
        });
        let r = normalize_ratios(&cfg).unwrap();
        let want = 1.0 / 2.0_f64.sqrt();
        for q in &r {
            for v in q.values() {
                assert_relative_eq!(v.re, want, epsilon = 1e-12);
                assert!(v.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn parametric_rest_point_is_symmetric() {
        let g = grid(16, 4.0);
        let cfg = ControlConfig::Parametric(ParametricConfig {
            imbalance: RealField::zeros(g),
            rel_phase: RealField::zeros(g),
            common_phase: RealField::zeros(g),
            derivative: DerivativeMethod::Spectral,
            gradients: None,
        });
        let r = normalize_ratios(&cfg).unwrap();
        let want = 1.0 / 2.0_f64.sqrt();
        for q in &r {
            assert_relative_eq!(q.values()[0].re, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn random_ratios_are_normalized() {
        let g = grid(16, 4.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let legs: Vec<ComplexField> = (0..3)
            .map(|_| {
                let vals: Vec<C64> = (0..g.len())
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                ComplexField::from_values(g, vals)
            })
            .collect();
        let cfg = ControlConfig::Sampled(SampledConfig { legs, derivative: DerivativeMethod::Spectral });
        let r = normalize_ratios(&cfg).unwrap();
        for i in 0..g.len() {
            let total: f64 = r.iter().map(|q| q.values()[i].norm_sqr()).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn vanishing_control_names_the_node() {
        let g = grid(16, 4.0);
        let mut leg = ComplexField::from_fn(g, |_, _| C64::ONE);
        let dead = g.index(3, 5);
        leg.values_mut()[dead] = C64::ZERO;
        let cfg = ControlConfig::Sampled(SampledConfig {
            legs: vec![leg.clone(), leg],
            derivative: DerivativeMethod::Spectral,
        });
        match normalize_ratios(&cfg) {
            Err(GaugeError::VanishingControl { index, .. }) => assert_eq!(index, dead),
            other => panic!("expected VanishingControl, got {other:?}"),
        }
    }

    #[test]
    fn w_trivial_when_last_leg_carries_everything() {
        let w = build_w(&[C64::ZERO, C64::ONE]).unwrap();
        // column Q is the ratio vector
        assert!((w.get(0, 1) - C64::ZERO).norm() < 1e-15);
        assert!((w.get(1, 1) - C64::ONE).norm() < 1e-15);
        assert!(w.adjoint().mul(&w).deviation_from_identity() < 1e-15);
    }

    #[test]
    fn w_matches_direct_formula_for_balanced_legs() {
        // independent evaluation of gamma w w* - delta for R = (1/sqrt2, 1/sqrt2)
        let s = 1.0 / 2.0_f64.sqrt();
        let w = build_w(&[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        assert_relative_eq!(w.get(0, 0).re, -s, epsilon = 1e-14);
        assert_relative_eq!(w.get(0, 1).re, s, epsilon = 1e-14);
        assert_relative_eq!(w.get(1, 0).re, s, epsilon = 1e-14);
        assert_relative_eq!(w.get(1, 1).re, s, epsilon = 1e-14);
        assert!(w.adjoint().mul(&w).deviation_from_identity() < 1e-14);
    }

    #[test]
    fn w_unitary_for_random_complex_ratios() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let q = rng.random_range(2..=4);
            let mut r: Vec<C64> = (0..q)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let norm: f64 = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for v in &mut r {
                *v /= norm;
            }
            if (r[q - 1] + 1.0).norm() < GAMMA_EPS {
                continue;
            }
            let w = build_w(&r).unwrap();
            assert!(w.adjoint().mul(&w).deviation_from_identity() < 1e-10);
            for (leg, want) in r.iter().enumerate() {
                assert!((w.get(leg, q - 1) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn w_singular_when_gamma_vanishes() {
        match build_w(&[C64::ZERO, C64::new(-1.0, 0.0)]) {
            Err(GaugeError::SingularGauge { .. }) => {}
            other => panic!("expected SingularGauge, got {other:?}"),
        }
    }

    #[test]
    fn constant_config_has_zero_gauge_field() {
        let g = grid(16, 4.0);
        let leg1 = ComplexField::from_fn(g, |_, _| C64::new(0.6, 0.2));
        let leg2 = ComplexField::from_fn(g, |_, _| C64::new(-0.3, 0.9));
        let cfg = ControlConfig::Sampled(SampledConfig {
            legs: vec![leg1, leg2],
            derivative: DerivativeMethod::Spectral,
        });
        let a = gauge_numeric(&cfg).unwrap();
        for idx in 0..g.len() {
            for v in a.ax.at(idx).iter().chain(a.ay.at(idx)) {
                assert!(v.norm() < 1e-12);
            }
        }
        let cv = cross_validate(&cfg, None).unwrap();
        assert!(cv.a_max_rel_dev < 1e-12);
        assert!(cv.phi_max_rel_dev < 1e-12);
    }

    #[test]
    fn numeric_matches_closed_form_on_smooth_config() {
        let g = grid(128, 12.0);
        let cfg = smooth_parametric(g, 42);
        let cv = cross_validate(&cfg, None).unwrap();
        assert!(cv.a_max_rel_dev < 1e-7, "a dev {}", cv.a_max_rel_dev);
        assert!(cv.phi_max_rel_dev < 1e-8, "phi dev {}", cv.phi_max_rel_dev);
        assert!(cv.phi_identity_residual < 1e-8, "identity {}", cv.phi_identity_residual);
        assert!(cv.hermiticity_defect < 1e-10, "herm {}", cv.hermiticity_defect);
        assert!(cv.unitarity_defect < 1e-10);
        assert!(cv.w_column_defect < 1e-12);
    }

    #[test]
    fn gauge_covariance_shifts_a_and_preserves_phi() {
        let g = grid(96, 12.0);
        let cfg = smooth_parametric(g, 9);
        let f = random_band_limited(g, 77, 2, 0.6);
        let shifted = cfg.gauge_transformed(&f);

        let base = gauge_closed_form(&cfg).unwrap().fields;
        let moved = gauge_closed_form(&shifted).unwrap().fields;
        let grad_f = {
            let vals: Vec<C64> = f.values().iter().map(|&v| C64::new(v, 0.0)).collect();
            let fx = derivative(&g, &vals, DerivativeMethod::Spectral, true);
            let fy = derivative(&g, &vals, DerivativeMethod::Spectral, false);
            (fx, fy)
        };
        let phi_scale = base.phi.max_abs().max(1.0);
        for i in 0..g.len() {
            let want_x = base.a.x()[i] - grad_f.0[i].re;
            let want_y = base.a.y()[i] - grad_f.1[i].re;
            assert!((moved.a.x()[i] - want_x).abs() < 1e-8);
            assert!((moved.a.y()[i] - want_y).abs() < 1e-8);
            assert!(
                (moved.phi.values()[i] - base.phi.values()[i]).abs() / phi_scale < 1e-8,
                "phi not gauge invariant at {i}"
            );
        }
    }

    #[test]
    fn imbalance_out_of_range_is_rejected() {
        let g = grid(16, 4.0);
        let cfg = ControlConfig::Parametric(ParametricConfig {
            imbalance: RealField::constant(g, 0.6),
            rel_phase: RealField::zeros(g),
            common_phase: RealField::zeros(g),
            derivative: DerivativeMethod::Spectral,
            gradients: None,
        });
        assert!(matches!(
            normalize_ratios(&cfg),
            Err(GaugeError::ImbalanceOutOfRange { .. })
        ));
    }
}
