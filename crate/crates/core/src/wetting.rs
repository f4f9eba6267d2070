//! Thickness-dependent film/vapor surface energy.
//!
//! The energy density is `γ(h) = 1 + (1 − σ)(e^{−h/ε} − 2e^{−h/2ε})` with
//! `σ = cos θ_i`. Near `h = 0` its derivative is replaced by a quadratic
//! `ζ(h) = c1·h + c2·h²` that matches `γ'` and `γ''` at the matching
//! thickness `h̄`, which is what makes the wetting term linearizable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Material parameters of the wetting law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WettingParams {
    /// `cos θ_i`.
    pub sigma: f64,
    /// Range of the wetting interaction.
    pub epsilon: f64,
    /// Matching thickness of the quadratic surrogate.
    pub h_bar: f64,
}

impl WettingParams {
    /// Parameters with the default matching thickness `h̄ = ε`.
    pub fn new(sigma: f64, epsilon: f64) -> Result<Self> {
        Self::with_h_bar(sigma, epsilon, epsilon)
    }

    pub fn with_h_bar(sigma: f64, epsilon: f64, h_bar: f64) -> Result<Self> {
        let p = WettingParams {
            sigma,
            epsilon,
            h_bar,
        };
        p.validate()?;
        Ok(p)
    }

    /// Build from the Young angle `θ_i` (radians) instead of `σ`.
    pub fn from_young_angle(theta_i: f64, epsilon: f64) -> Result<Self> {
        Self::new(theta_i.cos(), epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must lie in (0, 1], got {}",
                self.sigma
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.h_bar.is_finite() && self.h_bar > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h_bar must be positive, got {}",
                self.h_bar
            )));
        }
        if self.h_bar > 10.0 * self.epsilon {
            log::warn!(
                "h_bar = {} exceeds 10·epsilon = {}; the surrogate is no longer local",
                self.h_bar,
                10.0 * self.epsilon
            );
        }
        Ok(())
    }

    /// Young angle `θ_i = arccos σ`.
    pub fn young_angle(&self) -> f64 {
        self.sigma.acos()
    }

    /// Wetting potential `ω(h) = γ(h) − 1`.
    pub fn omega(&self, h: f64) -> f64 {
        gamma(h, self) - 1.0
    }
}

/// Coefficients of the quadratic surrogate `ζ(h) = c1·h + c2·h²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaCoeffs {
    pub c1: f64,
    pub c2: f64,
}

impl ZetaCoeffs {
    pub fn eval(&self, h: f64) -> f64 {
        h * (self.c1 + self.c2 * h)
    }

    pub fn derivative(&self, h: f64) -> f64 {
        self.c1 + 2.0 * self.c2 * h
    }
}

/// Semi-implicit linearization of the wetting term at one element:
/// the term equals `coeff·h_new + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearForm {
    pub coeff: f64,
    pub offset: f64,
}

pub fn gamma(h: f64, p: &WettingParams) -> f64 {
    let e1 = (-h / p.epsilon).exp();
    let e2 = (-h / (2.0 * p.epsilon)).exp();
    1.0 + (1.0 - p.sigma) * (e1 - 2.0 * e2)
}

pub fn gamma_prime(h: f64, p: &WettingParams) -> f64 {
    let e1 = (-h / p.epsilon).exp();
    let e2 = (-h / (2.0 * p.epsilon)).exp();
    (1.0 - p.sigma) / p.epsilon * (e2 - e1)
}

pub fn gamma_second(h: f64, p: &WettingParams) -> f64 {
    let e1 = (-h / p.epsilon).exp();
    let e2 = (-h / (2.0 * p.epsilon)).exp();
    (1.0 - p.sigma) / (p.epsilon * p.epsilon) * (e1 - 0.5 * e2)
}

/// `c1 = f(h̄) − h̄·f'(h̄)`, `c2 = f'(h̄)` with `f(h) = γ'(h)/h`.
pub fn zeta_coeffs(p: &WettingParams) -> ZetaCoeffs {
    let hb = p.h_bar;
    let g1 = gamma_prime(hb, p);
    let g2 = gamma_second(hb, p);
    // f = g1/hb, f' = g2/hb − g1/hb²
    let f = g1 / hb;
    let fp = g2 / hb - g1 / (hb * hb);
    ZetaCoeffs {
        c1: f - hb * fp,
        c2: fp,
    }
}

/// `ζ(h)` below the matching thickness, `γ'(h)` above it.
pub fn gamma_prime_modified(h: f64, p: &WettingParams) -> f64 {
    if h <= p.h_bar {
        zeta_coeffs(p).eval(h)
    } else {
        gamma_prime(h, p)
    }
}

/// Linearization of the wetting term around the previous thickness.
pub fn gamma_prime_semi_implicit(h_old: f64, p: &WettingParams) -> LinearForm {
    semi_implicit_with(h_old, p, &zeta_coeffs(p))
}

/// As [`gamma_prime_semi_implicit`] with precomputed surrogate coefficients.
pub fn semi_implicit_with(h_old: f64, p: &WettingParams, z: &ZetaCoeffs) -> LinearForm {
    if h_old <= p.h_bar {
        LinearForm {
            coeff: z.c1 + z.c2 * h_old,
            offset: 0.0,
        }
    } else {
        LinearForm {
            coeff: 0.0,
            offset: gamma_prime(h_old, p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> WettingParams {
        WettingParams::new(0.5, 0.1).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(0.0, &p()) - 0.5).abs() < 1e-15);
        assert!((gamma(1e3, &p()) - 1.0).abs() < 1e-15);
        // mpmath, 40 digits
        assert!(rel(gamma(0.1, &p()), 0.577_409_060_873_087_7) < 1e-14);
    }

    #[test]
    fn gamma_prime_values() {
        assert_eq!(gamma_prime(0.0, &p()), 0.0);
        assert!(rel(gamma_prime(0.1, &p()), 1.193_256_092_705_955_5) < 1e-14);
        assert!(rel(gamma_prime(0.2, &p()), 1.162_720_789_674_148_1) < 1e-14);
    }

    #[test]
    fn zeta_coefficients() {
        let z = zeta_coeffs(&p());
        assert!(rel(z.c1, 20.634_416_288_362_83) < 1e-12);
        assert!(rel(z.c2, -87.018_553_613_032_75) < 1e-12);
        let hb = p().h_bar;
        assert!(rel(z.eval(hb), gamma_prime(hb, &p())) < 1e-12);

        let degenerate = WettingParams::with_h_bar(1.0, 0.3, 0.2).unwrap();
        let z = zeta_coeffs(&degenerate);
        assert_eq!((z.c1, z.c2), (0.0, 0.0));
    }

    #[test]
    fn modified_branches() {
        let p = p();
        assert!(rel(gamma_prime_modified(0.1, &p), 1.193_256_092_705_955_5) < 1e-12);
        assert!(rel(gamma_prime_modified(0.05, &p), 0.814_174_430_385_559_6) < 1e-12);
        assert_eq!(gamma_prime_modified(0.2, &p), gamma_prime(0.2, &p));
    }

    #[test]
    fn semi_implicit_branches() {
        let p = p();
        let lo = gamma_prime_semi_implicit(0.05, &p);
        assert!(rel(lo.coeff, 16.283_488_607_711_19) < 1e-12);
        assert_eq!(lo.offset, 0.0);
        let hi = gamma_prime_semi_implicit(0.2, &p);
        assert_eq!(hi.coeff, 0.0);
        assert!(rel(hi.offset, 1.162_720_789_674_148_1) < 1e-14);
        let at = gamma_prime_semi_implicit(p.h_bar, &p);
        assert!(rel(at.coeff * p.h_bar, gamma_prime(p.h_bar, &p)) < 1e-12);
    }

    #[test]
    fn omega_at_zero_is_spreading_coefficient() {
        let p = p();
        assert!((p.omega(0.0) - (p.sigma - 1.0)).abs() < 1e-15);
        assert!(p.omega(0.0) < 0.0);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(WettingParams::new(1.5, 0.1).is_err());
        assert!(WettingParams::new(0.0, 0.1).is_err());
        assert!(WettingParams::new(0.5, -0.1).is_err());
        assert!(WettingParams::with_h_bar(0.5, 0.1, 0.0).is_err());
        assert!(WettingParams::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn monotone_on_grid() {
        let p = WettingParams::new(0.3, 0.05).unwrap();
        let n = 10_000;
        for i in 0..=n {
            let h = 20.0 * p.epsilon * i as f64 / n as f64;
            assert!(gamma_prime(h, &p) >= 0.0);
        }
    }
}
