//! Closed-form moduli `|V_g g|` of the ambiguity function.
//!
//! Everything is evaluated in log space first: the ExpExp modulus decays like
//! `exp(-pi^2 |xi|)` and underflows long before the grids used for TSW checks end.

use std::f64::consts::{LN_2, PI};

use super::WindowSpec;
use crate::{Error, Result};

/// `ln sinh(x)` for `x > 0` without overflow.
pub fn log_sinh(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 20.0 {
        x.sinh().ln()
    } else {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    }
}

fn log_sech(u: f64) -> f64 {
    let a = u.abs();
    -a + LN_2 - (-2.0 * a).exp().ln_1p()
}

/// `ln |Gamma(2 + i b)|^2 = ln( pi b / sinh(pi b) ) + ln(1 + b^2)`.
fn log_gamma2_modulus_sq(b: f64) -> f64 {
    let pb = PI * b.abs();
    let ratio = if pb < 1e-4 {
        // pi b / sinh(pi b) = 1 - (pi b)^2 / 6 + O(b^4)
        (-pb * pb / 6.0).ln_1p()
    } else {
        pb.ln() - log_sinh(pb)
    };
    ratio + b.mul_add(b, 0.0).ln_1p()
}

/// `|Gamma(2 + i b)|^2` from the identity `(pi b / sinh(pi b)) (1 + b^2)`.
pub fn gamma2_modulus_sq(b: f64) -> f64 {
    log_gamma2_modulus_sq(b).exp()
}

/// `|Gamma(2 + i b)|`.
pub fn gamma2_modulus(b: f64) -> f64 {
    (0.5 * log_gamma2_modulus_sq(b)).exp()
}

/// Natural log of `|V_g g(x, xi)|` for the closed-form windows.
pub fn log_ambiguity_modulus(spec: &WindowSpec, x: f64, xi: f64) -> Result<f64> {
    match spec {
        WindowSpec::ExpExp => Ok(-2.0 * LN_2 + 2.0 * log_sech(0.5 * x) + 0.5 * log_gamma2_modulus_sq(2.0 * PI * xi)),
        WindowSpec::OneSidedExp => Ok(-x.abs() - LN_2 - 0.5 * (PI * PI * xi * xi).ln_1p()),
        WindowSpec::Gaussian { width } => {
            let s = *width;
            Ok((s / 2f64.sqrt()).ln() - 0.5 * PI * (x * x / (s * s) + s * s * xi * xi))
        }
        WindowSpec::Sampled(_) => Err(Error::NoClosedForm("sampled")),
    }
}

/// `|V_g g(x, xi)|`:
///
/// * ExpExp: `(1/4) sech(x/2)^2 |Gamma(2 - 2 pi i xi)|`
/// * OneSidedExp: `e^{-|x|} / (2 sqrt(1 + pi^2 xi^2))`
/// * Gaussian (width 1): `2^{-1/2} exp(-pi (x^2 + xi^2) / 2)`
pub fn ambiguity_modulus(spec: &WindowSpec, x: f64, xi: f64) -> Result<f64> {
    log_ambiguity_modulus(spec, x, xi).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert!((ambiguity_modulus(&WindowSpec::ExpExp, 0.0, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((ambiguity_modulus(&WindowSpec::OneSidedExp, 0.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let g = ambiguity_modulus(&WindowSpec::gaussian(), 0.0, 0.0).unwrap();
        assert!((g - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gamma_modulus_limit_and_continuity() {
        assert_eq!(gamma2_modulus_sq(0.0), 1.0);
        // both sides of the series switch agree
        let a = gamma2_modulus_sq(0.999e-4 / PI);
        let b = gamma2_modulus_sq(1.001e-4 / PI);
        assert!((a - b).abs() < 1e-9);
        // |Gamma(2 + i)|^2 = (pi / sinh pi) * 2
        let want = PI / PI.sinh() * 2.0;
        assert!((gamma2_modulus_sq(1.0) - want).abs() < 1e-14);
        // far tail stays finite and positive
        let tail = log_ambiguity_modulus(&WindowSpec::ExpExp, 0.0, 100.0).unwrap();
        assert!(tail.is_finite() && tail < -900.0);
    }

    #[test]
    fn sampled_window_has_no_closed_form() {
        let s = super::super::Signal1D::zeros(4, 1.0, 0.0).unwrap();
        assert!(ambiguity_modulus(&WindowSpec::Sampled(s), 0.0, 0.0).is_err());
    }

    #[test]
    fn expexp_frequency_decay_rate_is_pi_squared() {
        // slope of ln|A(0, xi)| tends to -pi^2
        let l1 = log_ambiguity_modulus(&WindowSpec::ExpExp, 0.0, 10.0).unwrap();
        let l2 = log_ambiguity_modulus(&WindowSpec::ExpExp, 0.0, 11.0).unwrap();
        assert!(((l2 - l1) + PI * PI).abs() < 0.2);
    }
}
