//! Golden tests: the propagator against closed-form solutions.

use num_complex::Complex64;
use quasibeam::diagnostics::{fidelity, moments, norm_sq};
use quasibeam::field::{ComplexField, RealField, RealVectorField};
use quasibeam::gauge::GaugeFields;
use quasibeam::oracle::{BesselMode, BesselModeParams, MagneticGaussian, MagneticGaussianParams};
use quasibeam::propagate::{
    apply_hamiltonian, IntegratorChoice, IntegratorKind, Propagator,
};
use quasibeam::scenario::{make_aharonov_bohm, make_magnetic, MagneticScalar};
use quasibeam::window::annulus;
use quasibeam::TransverseGrid;

/// Width of a Gaussian breathing in an isotropic harmonic potential,
/// derived independently from the quadratic-Hamiltonian moment equations:
/// `Var(zeta) = Var0 cos^2(w zeta) + (<p^2>/w^2) sin^2(w zeta)` per axis.
fn harmonic_width_sq(s0_sq: f64, omega: f64, zeta: f64) -> f64 {
    let var0 = s0_sq / 4.0;
    let p_sq = 1.0 / s0_sq;
    let (s, c) = (omega * zeta).sin_cos();
    4.0 * (var0 * c * c + p_sq / (omega * omega) * s * s)
}

#[test]
fn gaussian_breathes_in_a_harmonic_trap_at_the_analytic_frequency() {
    let g = TransverseGrid::new(192, 192, 24.0, 24.0).unwrap();
    let omega = 1.0;
    // Phi = 2 V with V = w^2 r^2 / 2
    let gauge = GaugeFields::new(
        RealVectorField::zeros(g),
        RealField::from_fn(g, |x, y| omega * omega * (x * x + y * y)),
    );
    let psi = ComplexField::from_fn(g, |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0));
    let mut p = Propagator::new(
        psi,
        &gauge,
        None,
        IntegratorChoice::new(IntegratorKind::Strang, 5e-4),
        None,
    )
    .unwrap();
    let period = std::f64::consts::PI / omega;
    let mut worst = 0.0_f64;
    for s in 1..=40 {
        p.advance_to(period * s as f64 / 40.0).unwrap();
        let m = moments(&p.state().psi).unwrap();
        let want = harmonic_width_sq(1.0, omega, p.state().zeta);
        worst = worst.max((m.width_sq_x() - want).abs() / want);
    }
    assert!(worst < 1e-4, "width deviation {worst}");
}

#[test]
fn bessel_mode_is_a_hamiltonian_eigenfunction_on_the_annulus() {
    let g = TransverseGrid::new(256, 256, 20.0, 20.0).unwrap();
    let sc = make_aharonov_bohm(g, 0.5, 0.0, Some((6.5, 9.0))).unwrap();
    let params =
        BesselModeParams { winding: 1, imbalance: 0.5, detuning: 0.0, radial_wavenumber: 2.0 };
    let mode =
        BesselMode::with_core_taper(g, params, Some((6.5, 9.0)), Some((0.25, 0.95))).unwrap();
    let psi = mode.at(0.0);
    // single application: use the analytic (zero) divergence so the
    // unresolved 1/r core does not ring across the comparison window
    let mut gauge = sc.fields.gauge.clone();
    gauge.div_a = Some(RealField::zeros(g));
    let h = apply_hamiltonian(&psi, &gauge, sc.fields.detuning.as_ref()).unwrap();
    let e = mode.eigenvalue();
    let window = annulus(g, 1.0, 6.0);
    let mut resid = 0.0;
    let mut scale = 0.0;
    for i in 0..g.len() {
        if window.values()[i] == 0.0 {
            continue;
        }
        resid += (h.values()[i] - e * psi.values()[i]).norm_sqr();
        scale += (e * psi.values()[i]).norm_sqr();
    }
    let rel = (resid / scale).sqrt();
    assert!(rel < 1e-3, "windowed eigenfunction residual {rel}");
}

#[test]
fn detuned_vortex_mode_with_fractional_order_is_still_an_eigenfunction() {
    // D != 0 exercises the detuning slot in the mode order
    let g = TransverseGrid::new(256, 256, 20.0, 20.0).unwrap();
    let imbalance = 0.3;
    let detuning = 0.5;
    let sc = make_aharonov_bohm(g, imbalance, detuning, Some((6.5, 9.0))).unwrap();
    let params =
        BesselModeParams { winding: 1, imbalance, detuning, radial_wavenumber: 2.0 };
    let nu = params.order().unwrap();
    assert!((nu - 2.7_f64.sqrt()).abs() < 1e-14);
    // the fractional-power kink at the origin needs a wider faded core and
    // a bit of separation before the comparison window starts
    let mode =
        BesselMode::with_core_taper(g, params, Some((6.5, 9.0)), Some((0.3, 1.2))).unwrap();
    let psi = mode.at(0.0);
    let mut gauge = sc.fields.gauge.clone();
    gauge.div_a = Some(RealField::zeros(g));
    let h = apply_hamiltonian(&psi, &gauge, sc.fields.detuning.as_ref()).unwrap();
    let e = mode.eigenvalue();
    let window = annulus(g, 1.5, 6.0);
    let mut resid = 0.0;
    let mut scale = 0.0;
    for i in 0..g.len() {
        if window.values()[i] == 0.0 {
            continue;
        }
        resid += (h.values()[i] - e * psi.values()[i]).norm_sqr();
        scale += (e * psi.values()[i]).norm_sqr();
    }
    let rel = (resid / scale).sqrt();
    assert!(rel < 1e-3, "windowed eigenfunction residual {rel}");
}

#[test]
fn propagated_coherent_state_tracks_the_closed_form_over_a_cyclotron_period() {
    let field = 2.0;
    let g = TransverseGrid::new(128, 128, 16.0, 16.0).unwrap();
    let params = MagneticGaussianParams {
        field,
        eta: field / 4.0,
        center: (0.5, -0.3),
        velocity: (0.4, 0.2),
    };
    let oracle = MagneticGaussian::new(g, params).unwrap();
    let sc = make_magnetic(g, field, MagneticScalar::Neglected).unwrap();
    let mut p = Propagator::new(
        oracle.at(0.0),
        &sc.fields.gauge,
        None,
        IntegratorChoice::new(IntegratorKind::MixedRep, 1e-3),
        None,
    )
    .unwrap();
    let period = 2.0 * std::f64::consts::PI / field;
    for s in 1..=4 {
        p.advance_to(period * s as f64 / 4.0).unwrap();
        let fid = fidelity(&oracle.at(p.state().zeta), &p.state().psi).unwrap();
        assert!(fid >= 0.999, "overlap {fid} at zeta {}", p.state().zeta);
    }
    // norm is conserved by the split integrator
    assert!((norm_sq(&p.state().psi) - 1.0).abs() < 1e-10);
}

#[test]
fn detuning_term_advances_the_phase_with_the_opposite_sign_to_the_potential() {
    // i d_zeta psi = (... - U) psi: a constant U rotates the global phase
    // by e^{+i U zeta}
    let g = TransverseGrid::new(64, 64, 16.0, 16.0).unwrap();
    let u0 = 0.7;
    let gauge = GaugeFields::free(g);
    let detuning = RealField::constant(g, u0);
    let psi = quasibeam::oracle::free_gaussian(g, 0.0);
    let mut with_u = Propagator::new(
        psi.clone(),
        &gauge,
        Some(&detuning),
        IntegratorChoice::new(IntegratorKind::Strang, 1e-3),
        None,
    )
    .unwrap();
    let mut without = Propagator::new(
        psi,
        &gauge,
        None,
        IntegratorChoice::new(IntegratorKind::Strang, 1e-3),
        None,
    )
    .unwrap();
    with_u.advance_to(0.25).unwrap();
    without.advance_to(0.25).unwrap();
    let expect = (Complex64::i() * u0 * 0.25).exp();
    for (a, b) in with_u.state().psi.values().iter().zip(without.state().psi.values()) {
        assert!((a - expect * b).norm() < 1e-12);
    }
}
