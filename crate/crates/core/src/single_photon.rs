//! Decoherence function for one spontaneously scattered photon.
//!
//! `β(d) = ∫ p(u) e^{−i k₀(u−1) d} du`, the characteristic function of the
//! photon's momentum change evaluated at the path separation. Its magnitude
//! falls to zero near `d ≈ λ/2` and then shows weak revivals.

use num_complex::Complex64;

use crate::coherence::Coherence;
use crate::error::{Error, Result};
use crate::physics::{phase, EmissionPattern, K0_LAMBDA};
use crate::quadrature::integrate;

const COMPONENT_TOL: f64 = 1e-11;
const NORMALIZATION_TOL: f64 = 1e-6;
const SERIES_CUTOFF: f64 = 1e-3;

/// Total mass of a pattern's density over `[−1, 1]`.
pub fn pattern_mass(pattern: &dyn EmissionPattern) -> f64 {
    integrate(|u| pattern.density(u), -1.0, 1.0, 1e-13).value
}

/// Single-photon coherence at separation `d` (units of `λ`) by adaptive
/// quadrature over the pattern's density.
pub fn beta_single(d: f64, pattern: &dyn EmissionPattern) -> Result<Coherence> {
    let mass = pattern_mass(pattern);
    if !mass.is_finite() || (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Unnormalized { mass });
    }
    if !d.is_finite() {
        return Err(Error::invalid("d", "separation must be finite"));
    }
    Ok(beta_single_unchecked(d, pattern))
}

pub(crate) fn beta_single_unchecked(d: f64, pattern: &dyn EmissionPattern) -> Coherence {
    let re = integrate(
        |u| pattern.density(u) * phase(u - 1.0, d).cos(),
        -1.0,
        1.0,
        COMPONENT_TOL,
    );
    let im = integrate(
        |u| -pattern.density(u) * phase(u - 1.0, d).sin(),
        -1.0,
        1.0,
        COMPONENT_TOL,
    );
    Coherence::new(re.value, im.value)
}

/// Real envelope `∫ p(u) cos(xu) du` of the dipole pattern as a function of
/// `x = k₀d`.
pub fn dipole_envelope(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_CUTOFF {
        let x2 = x * x;
        // 1 − x²/5 + 3x⁴/280 − x⁶/2520
        return 1.0 - x2 / 5.0 + 3.0 * x2 * x2 / 280.0 - x2 * x2 * x2 / 2520.0;
    }
    let (s, c) = ax.sin_cos();
    0.75 * (s / ax + ((ax * ax - 2.0) * s + 2.0 * ax * c) / (ax * ax * ax))
}

/// Analytic single-photon coherence for the σ⁺ dipole pattern.
pub fn beta_single_closed_form(d: f64) -> Coherence {
    let x = K0_LAMBDA * d;
    Coherence(Complex64::from_polar(1.0, x) * dipole_envelope(x))
}
