//! Many-photon decoherence.
//!
//! Independent scattering events multiply: an atom that scattered `n` photons
//! carries `βⁿ`, and averaging over the photon-number distribution gives
//! `β_total = Σ P(n) βⁿ`. For many photons the total momentum transfer is
//! close to Gaussian and `β_total` reduces to `e^{−½κ²d²}` times a linear
//! phase, with `κ² = n̄σ_k² + σ_n²k₀²`. Restricting detection to atoms within
//! a momentum acceptance `κ_d` replaces `κ` by `κ′`, `1/κ′² = 1/κ² + 1/κ_d²`.
//!
//! Phases follow the `e^{−iΔk·d}` convention with `Δk = k_x − k₀`, so the
//! phase slope is `+n̄k₀`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coherence::{unwrap_phases, Coherence};
use crate::error::{Error, Result};
use crate::photon_statistics::PhotonNumberDistribution;
use crate::physics::{phase, EmissionPattern, DIPOLE_SECOND_MOMENT, K0_LAMBDA};
use crate::single_photon::{beta_single, beta_single_closed_form};

/// `Σ P(n) βⁿ` over the support of `pn`.
pub fn beta_total(pn: &PhotonNumberDistribution, beta: Coherence) -> Coherence {
    let mut b = beta.value();
    if b.norm() > 1.0 {
        b /= b.norm();
    }
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for &w in pn.weights() {
        sum += power * w;
        power *= b;
        let m = power.norm();
        if m > 1.0 {
            power /= m;
        }
    }
    Coherence(sum)
}

/// `β_total(d)` for the default dipole pattern, using the closed-form
/// single-photon coherence.
pub fn beta_total_dipole(d: f64, pn: &PhotonNumberDistribution) -> Coherence {
    beta_total(pn, beta_single_closed_form(d))
}

/// Central-limit form of `βⁿ(d)` for the dipole pattern.
pub fn beta_n_gaussian(d: f64, n: usize) -> Coherence {
    let n = n as f64;
    let x = K0_LAMBDA * d;
    Coherence::from_polar((-0.5 * n * DIPOLE_SECOND_MOMENT * x * x).exp(), n * x)
}

/// `κ = sqrt(n̄σ_k² + σ_n²)` in units of `k₀`.
pub fn kappa_from_counts(n_bar: f64, sigma_n: f64) -> f64 {
    (n_bar * DIPOLE_SECOND_MOMENT + sigma_n * sigma_n).sqrt()
}

/// Combines `κ` with a detector acceptance `κ_d` (may be infinite).
pub fn kappa_prime(kappa: f64, kappa_d: f64) -> Result<f64> {
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::invalid(
            "kappa",
            format!("must be non-negative, got {kappa}"),
        ));
    }
    if kappa_d.is_nan() || kappa_d <= 0.0 {
        return Err(Error::invalid(
            "kappa_d",
            format!("must be positive, got {kappa_d}"),
        ));
    }
    if kappa_d.is_infinite() {
        return Ok(kappa);
    }
    if kappa.is_infinite() {
        return Ok(kappa_d);
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    Ok(kappa * kappa_d / kappa.hypot(kappa_d))
}

/// Parameters of the Gaussian many-photon limit, momenta in units of `k₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceParameters {
    pub n_bar: f64,
    pub sigma_n: f64,
    pub kappa: f64,
    /// `INFINITY` when no detector restriction applies.
    pub kappa_d: f64,
    pub kappa_prime: f64,
}

impl DecoherenceParameters {
    pub fn from_counts(n_bar: f64, sigma_n: f64, kappa_d: f64) -> Result<Self> {
        if !(n_bar.is_finite() && n_bar >= 0.0) {
            return Err(Error::invalid(
                "n_bar",
                format!("must be non-negative, got {n_bar}"),
            ));
        }
        if !(sigma_n.is_finite() && sigma_n >= 0.0) {
            return Err(Error::invalid(
                "sigma_n",
                format!("must be non-negative, got {sigma_n}"),
            ));
        }
        let kappa = kappa_from_counts(n_bar, sigma_n);
        Ok(DecoherenceParameters {
            n_bar,
            sigma_n,
            kappa,
            kappa_d,
            kappa_prime: kappa_prime(kappa, kappa_d)?,
        })
    }

    /// Uses the mean and standard deviation of `pn`.
    pub fn from_distribution(pn: &PhotonNumberDistribution, kappa_d: f64) -> Result<Self> {
        Self::from_counts(pn.mean(), pn.variance().sqrt(), kappa_d)
    }

    /// Poisson statistics, `σ_n = √n̄`.
    pub fn poisson(n_bar: f64, kappa_d: f64) -> Result<Self> {
        Self::from_counts(n_bar, n_bar.max(0.0).sqrt(), kappa_d)
    }
}

/// `e^{−½κ′²d²} e^{+in̄k₀d}`. The detector correction acts on the magnitude
/// only. Valid for `d ≪ λ`.
pub fn beta_total_gaussian_limit(d: f64, params: &DecoherenceParameters) -> Coherence {
    let x = K0_LAMBDA * d;
    let k = params.kappa_prime;
    Coherence::from_polar((-0.5 * k * k * x * x).exp(), phase(params.n_bar, d))
}

/// One sample of a decoherence curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Separation in units of `λ`.
    pub d: f64,
    pub coherence: Coherence,
    /// `arg β` continued across `2π` jumps along the curve.
    pub unwrapped_phase: f64,
}

/// Evaluates `f` on `ds` in parallel and attaches unwrapped phases.
pub fn evaluate_curve<F>(ds: &[f64], f: F) -> Vec<CurvePoint>
where
    F: Fn(f64) -> Coherence + Sync,
{
    let values: Vec<Coherence> = ds.par_iter().map(|&d| f(d)).collect();
    curve_from_values(ds, values)
}

fn curve_from_values(ds: &[f64], values: Vec<Coherence>) -> Vec<CurvePoint> {
    let phases: Vec<f64> = values.iter().map(Coherence::phase).collect();
    let unwrapped = unwrap_phases(&phases);
    ds.iter()
        .zip(values)
        .zip(unwrapped)
        .map(|((&d, coherence), unwrapped_phase)| CurvePoint {
            d,
            coherence,
            unwrapped_phase,
        })
        .collect()
}

/// Exact `β_total` curve for an arbitrary emission pattern.
pub fn beta_total_curve(
    ds: &[f64],
    pn: &PhotonNumberDistribution,
    pattern: &dyn EmissionPattern,
) -> Result<Vec<CurvePoint>> {
    let values = ds
        .par_iter()
        .map(|&d| beta_single(d, pattern).map(|b| beta_total(pn, b)))
        .collect::<Result<Vec<_>>>()?;
    Ok(curve_from_values(ds, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon_statistics::{poisson_pn, truncated_gaussian_pn};

    #[test]
    fn no_photons_no_decoherence() {
        let pn = PhotonNumberDistribution::fixed(0);
        for i in 0..20 {
            let d = i as f64 * 0.1;
            assert_eq!(beta_total_dipole(d, &pn), Coherence::ONE);
        }
    }

    #[test]
    fn fixed_count_is_a_power() {
        let b = beta_single_closed_form(0.2);
        let t = beta_total(&PhotonNumberDistribution::fixed(3), b);
        assert!((t.value() - b.value().powi(3)).norm() < 1e-15);
    }

    #[test]
    fn poisson_generating_function() {
        for &n_bar in &[0.3, 0.9, 2.6, 8.2] {
            let pn = poisson_pn(n_bar).unwrap();
            for i in 0..15 {
                let b = beta_single_closed_form(i as f64 * 0.1);
                let direct = beta_total(&pn, b).value();
                let closed = ((b.value() - 1.0) * n_bar).exp();
                assert!((direct - closed).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn saturates_to_zero_photon_fraction() {
        let pn = poisson_pn(0.9).unwrap();
        let t = beta_total_dipole(20.0, &pn);
        assert!((t.contrast() - (-0.9f64).exp()).abs() < 0.01);
    }

    #[test]
    fn gaussian_power_form() {
        assert_eq!(beta_n_gaussian(0.0, 4), Coherence::ONE);
        let exact = beta_single_closed_form(0.1).value().powi(4);
        assert!((beta_n_gaussian(0.1, 4).value() - exact).norm() < 0.05);
        for i in 0..20 {
            let d = i as f64 * 0.05;
            let x = K0_LAMBDA * d;
            let m = beta_n_gaussian(d, 6).contrast();
            assert!((m - (-0.5 * 6.0 * 0.4 * x * x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa_from_counts(0.0, 0.0), 0.0);
        assert!((kappa_from_counts(8.1, 3.5) - 15.49f64.sqrt()).abs() < 1e-12);
        assert!((kappa_from_counts(4.8, 1.8) - 5.16f64.sqrt()).abs() < 1e-12);
        assert!((kappa_from_counts(8.1, 3.5) - 3.94).abs() < 0.005);
        assert!((kappa_from_counts(4.8, 1.8) - 2.27).abs() < 0.005);
    }

    #[test]
    fn kappa_prime_values() {
        let high = kappa_prime(kappa_from_counts(8.1, 3.5), 3.3).unwrap();
        let low = kappa_prime(kappa_from_counts(4.8, 1.8), 3.3).unwrap();
        assert!((high - 2.53).abs() < 0.005, "{high}");
        assert!((low - 1.87).abs() < 0.005, "{low}");
        assert_eq!(kappa_prime(2.0, f64::INFINITY).unwrap(), 2.0);
        assert_eq!(kappa_prime(0.0, 3.3).unwrap(), 0.0);
    }

    #[test]
    fn kappa_prime_errors() {
        assert!(kappa_prime(1.0, 0.0).is_err());
        assert!(kappa_prime(1.0, -2.0).is_err());
        assert!(kappa_prime(-1.0, 2.0).is_err());
    }

    #[test]
    fn kappa_prime_symmetric_and_bounded() {
        for &a in &[0.1, 1.0, 2.5, 7.0] {
            for &b in &[0.2, 1.0, 3.3, 10.0] {
                let ab = kappa_prime(a, b).unwrap();
                let ba = kappa_prime(b, a).unwrap();
                assert!((ab - ba).abs() < 1e-15);
                assert!(ab <= a.min(b));
                assert!(
                    (1.0 / (ab * ab) - 1.0 / (a * a) - 1.0 / (b * b)).abs() < 1e-12 / (ab * ab)
                );
            }
        }
    }

    #[test]
    fn gaussian_limit_shape() {
        let p = DecoherenceParameters::from_counts(8.2, 2.0, f64::INFINITY).unwrap();
        assert_eq!(beta_total_gaussian_limit(0.0, &p), Coherence::ONE);
        let a = beta_total_gaussian_limit(0.05, &p).contrast().ln();
        let b = beta_total_gaussian_limit(0.1, &p).contrast().ln();
        assert!((b / a - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_limit_close_to_exact_sum_at_large_n() {
        let pn = truncated_gaussian_pn(8.2, 3.5).unwrap();
        let p = DecoherenceParameters::from_counts(8.2, 3.5, f64::INFINITY).unwrap();
        let exact = beta_total_dipole(0.1, &pn).contrast();
        let limit = beta_total_gaussian_limit(0.1, &p).contrast();
        assert!((exact - limit).abs() < 0.02);
    }

    #[test]
    fn gaussian_limit_phase_slope() {
        let p = DecoherenceParameters::poisson(4.0, 3.3).unwrap();
        let ds: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
        let curve = evaluate_curve(&ds, |d| beta_total_gaussian_limit(d, &p));
        let slope = (curve[49].unwrapped_phase - curve[0].unwrapped_phase) / (K0_LAMBDA * ds[49]);
        assert!((slope - 4.0).abs() < 1e-9);
    }

    #[test]
    fn quadrature_curve_matches_dipole_closed_form() {
        let pn = poisson_pn(1.8).unwrap();
        let ds: Vec<f64> = (0..30).map(|i| i as f64 * 0.05).collect();
        let curve = beta_total_curve(&ds, &pn, &crate::physics::SigmaPlusDipole).unwrap();
        for p in &curve {
            assert!((p.coherence.value() - beta_total_dipole(p.d, &pn).value()).norm() < 1e-8);
        }
    }
}
