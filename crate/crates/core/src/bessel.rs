//! Bessel functions of the first kind with real nonnegative order.
//!
//! Power series for small arguments, Hankel asymptotic expansion for large
//! ones. Accuracy is ~1e-10 relative over the ranges used here (order <= 5,
//! argument <= 60), checked against an independent reference in the tests.

use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BesselError {
    #[error("bessel order must be finite and nonnegative, got {0}")]
    BadOrder(f64),
    #[error("bessel argument must be finite and nonnegative, got {0}")]
    BadArgument(f64),
}

const SERIES_CUTOFF: f64 = 14.0;

/// J_nu(x) for real nu >= 0, x >= 0.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64, BesselError> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(BesselError::BadOrder(nu));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(BesselError::BadArgument(x));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x < SERIES_CUTOFF {
        Ok(series(nu, x))
    } else {
        Ok(asymptotic(nu, x))
    }
}

fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    // leading coefficient (x/2)^nu / Gamma(nu+1) via logs to avoid overflow
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0)).exp();
    let q = half * half;
    let mut sum = term;
    for k in 0..200 {
        let kf = k as f64;
        term *= -q / ((kf + 1.0) * (nu + kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && kf > half {
            break;
        }
    }
    sum
}

/// Hankel expansion: J_nu(x) ~ sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)],
/// chi = x - (nu/2 + 1/4) pi.
fn asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..30 {
        let k2 = (2 * k - 1) as f64;
        term *= (mu - k2 * k2) / (k as f64 * 8.0 * x);
        if term.abs() > prev {
            break; // divergent tail of the asymptotic series
        }
        prev = term.abs();
        if k % 2 == 1 {
            let sign = if k % 4 == 1 { 1.0 } else { -1.0 };
            q += sign * term;
        } else {
            let sign = if k % 4 == 2 { -1.0 } else { 1.0 };
            p += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values computed independently with scipy.special.jv
    const REFERENCE: &[(f64, f64, f64)] = &[
        (2.0, 0.5, 0.030604023458682638),
        (2.0, 1.0, 0.1149034849319005),
        (2.0, 2.5, 0.44605905843961724),
        (2.0, 5.134, 0.0005511320752631599),
        (2.0, 10.0, 0.2546303136851206),
        (2.0, 20.0, -0.16034135192299823),
        (2.0, 28.5, 0.13174385825095433),
        (1.0, 3.0, 0.33905895852593626),
        (2.5, 1.3, 0.09068952135367904),
        (2.5, 7.7, -0.28694076742519514),
        (1.7888543819998317, 4.2, 0.23589326984545633),
        (1.7888543819998317, 18.0, -0.06452518051254713),
        (3.0, 30.0, 0.129211228759725),
        (0.5, 9.0, 0.10960765886528735),
    ];

    #[test]
    fn matches_reference_values() {
        for &(nu, x, want) in REFERENCE {
            let got = bessel_j(nu, x).unwrap();
            let tol = 1e-9 * want.abs().max(1e-3);
            assert!(
                (got - want).abs() < tol,
                "J_{nu}({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn near_zero_of_j0() {
        let got = bessel_j(0.0, 2.4048255576957728).unwrap();
        assert!(got.abs() < 1e-12);
    }

    #[test]
    fn continuity_across_series_asymptotic_cutoff() {
        for &nu in &[0.0, 0.5, 1.0, 2.0, 2.5, 4.0] {
            let below = series(nu, SERIES_CUTOFF - 1e-9);
            let above = asymptotic(nu, SERIES_CUTOFF + 1e-9);
            assert!(
                (below - above).abs() < 1e-9,
                "discontinuity at cutoff for nu={nu}: {below} vs {above}"
            );
        }
    }

    #[test]
    fn half_order_closed_form() {
        // J_{1/2}(x) = sqrt(2/(pi x)) sin(x)
        for &x in &[0.7, 3.3, 12.0, 25.0] {
            let want = (2.0 / (std::f64::consts::PI * x)).sqrt() * x.sin();
            let got = bessel_j(0.5, x).unwrap();
            assert!((got - want).abs() < 1e-11, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(bessel_j(-1.0, 2.0).is_err());
        assert!(bessel_j(2.0, -0.1).is_err());
        assert!(bessel_j(f64::NAN, 1.0).is_err());
    }
}
