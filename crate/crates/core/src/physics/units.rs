use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// `k₀·λ` in the dimensionless convention.
pub const K0_LAMBDA: f64 = TAU;

/// Phase accumulated by momentum `q` (units of `k₀`) over separation `d`
/// (units of `λ`).
#[inline]
pub fn phase(q: f64, d: f64) -> f64 {
    K0_LAMBDA * q * d
}

/// Conversion between the dimensionless convention and SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    lambda_m: f64,
}

impl Default for Units {
    /// Sodium D2 line, 590 nm.
    fn default() -> Self {
        Units { lambda_m: 590e-9 }
    }
}

impl Units {
    pub fn new(lambda_m: f64) -> Result<Self> {
        if !(lambda_m.is_finite() && lambda_m > 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must be positive, got {lambda_m}"),
            ));
        }
        Ok(Units { lambda_m })
    }

    pub fn from_nm(lambda_nm: f64) -> Result<Self> {
        Self::new(lambda_nm * 1e-9)
    }

    pub fn lambda_m(&self) -> f64 {
        self.lambda_m
    }

    /// Photon recoil wavenumber in 1/m.
    pub fn k0_per_m(&self) -> f64 {
        TAU / self.lambda_m
    }

    pub fn length_to_si(&self, d_lambda: f64) -> f64 {
        d_lambda * self.lambda_m
    }

    pub fn length_from_si(&self, meters: f64) -> f64 {
        meters / self.lambda_m
    }

    pub fn momentum_to_si(&self, q_k0: f64) -> f64 {
        q_k0 * self.k0_per_m()
    }

    pub fn momentum_from_si(&self, q_per_m: f64) -> f64 {
        q_per_m / self.k0_per_m()
    }
}
