use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// `ln|Γ(x)|` together with the sign of `Γ(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogGamma {
    pub ln_abs: f64,
    pub sign: f64,
}

impl LogGamma {
    /// `Γ(x)` itself; overflows to infinity for large arguments.
    pub fn value(self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

/// `sin(πx)` with the argument reduced before scaling by π, so integer and
/// half-integer arguments come out exact.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r.abs() == 0.5 {
        return r.signum();
    }
    (PI * r).sin()
}

/// Logarithm of the Gamma function with a separate sign.
///
/// Arguments below 1/2 go through the reflection formula
/// `Γ(x)Γ(1-x) = π / sin(πx)`; nonpositive integers are poles.
pub fn log_gamma(x: f64) -> Result<LogGamma> {
    if x.is_nan() {
        return domain("log_gamma of NaN");
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Pole(x));
    }
    if x >= 0.5 {
        return Ok(LogGamma {
            ln_abs: libm::lgamma(x),
            sign: 1.0,
        });
    }
    let s = sin_pi(x);
    let reflected = libm::lgamma(1.0 - x);
    Ok(LogGamma {
        ln_abs: PI.ln() - s.abs().ln() - reflected,
        sign: s.signum(),
    })
}

/// `1/Γ(x)`, which is finite everywhere and zero at the poles of `Γ`.
pub fn reciprocal_gamma(x: f64) -> Result<f64> {
    match log_gamma(x) {
        Ok(lg) => Ok(lg.sign * (-lg.ln_abs).exp()),
        Err(Error::Pole(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Gauss hypergeometric series `₂F₁(a, b; c; z)` for a nonpositive integer
/// `b`, where the series is a polynomial of degree `-b` in `z`.
///
/// With `regularized` set the result is divided by `Γ(c)`.
pub fn hyp2f1_terminating(a: f64, b: f64, c: f64, z: f64, regularized: bool) -> Result<f64> {
    if !(b <= 0.0 && b == b.floor()) {
        return domain(format!("hyp2f1_terminating: b = {b} is not a nonpositive integer"));
    }
    let degree = (-b) as u64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..degree {
        let kf = k as f64;
        if c + kf == 0.0 {
            return domain(format!("hyp2f1_terminating: (c)_k vanishes for c = {c}"));
        }
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
    }
    if regularized {
        if c <= 0.0 && c == c.floor() {
            return domain(format!("hyp2f1_terminating: regularized form at pole c = {c}"));
        }
        Ok(sum * reciprocal_gamma(c)?)
    } else {
        Ok(sum)
    }
}
