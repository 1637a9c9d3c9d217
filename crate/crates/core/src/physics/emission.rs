//! Momentum-transfer distributions for one spontaneously emitted photon.
//!
//! A pattern is described by the density of the direction cosine
//! `u = k_x/k₀ ∈ [−1, 1]` of the emitted photon along the laser axis. The
//! photon's momentum change is then `Δk = u − 1` (units of `k₀`), supported on
//! `[−2, 0]`.

use std::fmt::Debug;

use crate::quadrature::integrate;

/// Second moment `⟨u²⟩` of [`SigmaPlusDipole`].
pub const DIPOLE_SECOND_MOMENT: f64 = 0.4;

const MOMENT_TOL: f64 = 1e-13;

pub trait EmissionPattern: Debug + Send + Sync {
    /// Probability density of `u`; zero outside `[−1, 1]`.
    fn density(&self, u: f64) -> f64;

    /// Inverse of the cumulative distribution of `u`, for `p ∈ [0, 1]`.
    fn inverse_cdf(&self, p: f64) -> f64;

    /// `⟨u²⟩`, by quadrature unless the pattern knows better.
    fn second_moment(&self) -> f64 {
        integrate(|u| u * u * self.density(u), -1.0, 1.0, MOMENT_TOL).value
    }
}

/// Emission from a circularly polarized (σ⁺) transition quantized along the
/// laser axis: `p(u) = (3/8)(1 + u²)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SigmaPlusDipole;

/// Linear dipole oriented along the laser axis: `p(u) = (3/4)(1 − u²)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AxialDipole;

/// Isotropic emission: `p(u) = 1/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Isotropic;

/// Every photon leaves with the same direction cosine. Has no density, so
/// quadrature-based routines reject it; it exists for moment and sampling
/// checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass(pub f64);

/// `(3/8)(1 + u²)` on `[−1, 1]`, zero elsewhere.
pub fn dipole_marginal(u: f64) -> f64 {
    if (-1.0..=1.0).contains(&u) {
        0.375 * (1.0 + u * u)
    } else {
        0.0
    }
}

/// rms emission momentum along the laser axis, in units of `k₀`, for the
/// default dipole pattern.
pub fn sigma_k() -> f64 {
    DIPOLE_SECOND_MOMENT.sqrt()
}

pub fn sigma_k_of(pattern: &dyn EmissionPattern) -> f64 {
    pattern.second_moment().max(0.0).sqrt()
}

fn in_support(u: f64) -> bool {
    (-1.0..=1.0).contains(&u)
}

/// Solves `cdf(u) = p` on `[−1, 1]` for a monotone `cdf`, using Newton steps
/// that fall back to bisection whenever they leave the bracket.
fn invert_monotone(cdf: impl Fn(f64) -> f64, pdf: impl Fn(f64) -> f64, p: f64, guess: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    let mut u = guess.clamp(lo, hi);
    for _ in 0..100 {
        let g = cdf(u) - p;
        if g == 0.0 {
            return u;
        }
        if g > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let slope = pdf(u);
        let newton = u - g / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - u).abs() <= 1e-15 * (1.0 + u.abs()) || hi - lo <= 1e-15 {
            return next;
        }
        u = next;
    }
    u
}

impl EmissionPattern for SigmaPlusDipole {
    fn density(&self, u: f64) -> f64 {
        dipole_marginal(u)
    }

    // cdf(u) = (u³ + 3u + 4)/8
    fn inverse_cdf(&self, p: f64) -> f64 {
        invert_monotone(
            |u| (u * u * u + 3.0 * u + 4.0) / 8.0,
            dipole_marginal,
            p,
            2.0 * p - 1.0,
        )
    }

    fn second_moment(&self) -> f64 {
        DIPOLE_SECOND_MOMENT
    }
}

impl EmissionPattern for AxialDipole {
    fn density(&self, u: f64) -> f64 {
        if in_support(u) {
            0.75 * (1.0 - u * u)
        } else {
            0.0
        }
    }

    // cdf(u) = (3u − u³ + 2)/4
    fn inverse_cdf(&self, p: f64) -> f64 {
        invert_monotone(
            |u| (3.0 * u - u * u * u + 2.0) / 4.0,
            |u| self.density(u),
            p,
            2.0 * p - 1.0,
        )
    }

    fn second_moment(&self) -> f64 {
        0.2
    }
}

impl EmissionPattern for Isotropic {
    fn density(&self, u: f64) -> f64 {
        if in_support(u) {
            0.5
        } else {
            0.0
        }
    }

    fn inverse_cdf(&self, p: f64) -> f64 {
        2.0 * p.clamp(0.0, 1.0) - 1.0
    }

    fn second_moment(&self) -> f64 {
        1.0 / 3.0
    }
}

impl EmissionPattern for PointMass {
    fn density(&self, _u: f64) -> f64 {
        0.0
    }

    fn inverse_cdf(&self, _p: f64) -> f64 {
        self.0
    }

    fn second_moment(&self) -> f64 {
        self.0 * self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Composite Simpson rule; independent of the adaptive integrator.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    fn patterns() -> Vec<Box<dyn EmissionPattern>> {
        vec![
            Box::new(SigmaPlusDipole),
            Box::new(AxialDipole),
            Box::new(Isotropic),
        ]
    }

    #[test]
    fn dipole_marginal_at_zero() {
        assert_eq!(dipole_marginal(0.0), 0.375);
        assert_eq!(dipole_marginal(1.5), 0.0);
        assert_eq!(dipole_marginal(-1.0001), 0.0);
    }

    #[test]
    fn densities_are_normalized_and_symmetric() {
        for p in patterns() {
            let mass = simpson(|u| p.density(u), -1.0, 1.0, 2000);
            assert!((mass - 1.0).abs() < 1e-9, "{p:?}: {mass}");
            let mean = simpson(|u| u * p.density(u), -1.0, 1.0, 2000);
            assert!(mean.abs() < 1e-12, "{p:?}");
            for i in 0..=100 {
                let u = i as f64 / 100.0;
                assert!(p.density(u) >= 0.0);
                assert_eq!(p.density(u), p.density(-u));
            }
        }
    }

    #[test]
    fn second_moments_match_quadrature() {
        for p in patterns() {
            let oracle = simpson(|u| u * u * p.density(u), -1.0, 1.0, 2000);
            assert!((p.second_moment() - oracle).abs() < 1e-9 * oracle, "{p:?}");
        }
        // analytic: (3/8)(2/3 + 2/5)
        assert!((0.375 * (2.0 / 3.0 + 0.4) - DIPOLE_SECOND_MOMENT).abs() < 1e-15);
    }

    #[test]
    fn default_trait_moment_uses_quadrature() {
        #[derive(Debug)]
        struct Wrapped;
        impl EmissionPattern for Wrapped {
            fn density(&self, u: f64) -> f64 {
                dipole_marginal(u)
            }
            fn inverse_cdf(&self, p: f64) -> f64 {
                SigmaPlusDipole.inverse_cdf(p)
            }
        }
        assert!((Wrapped.second_moment() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn sigma_k_values() {
        assert!((sigma_k() - 0.632_455_532).abs() < 1e-6);
        assert!((sigma_k() * sigma_k() - 0.4).abs() < 1e-15);
        assert_eq!(sigma_k_of(&PointMass(0.0)), 0.0);
        assert!((sigma_k_of(&SigmaPlusDipole) - sigma_k()).abs() < 1e-15);
    }

    #[test]
    fn inverse_cdf_endpoints() {
        for p in patterns() {
            assert!((p.inverse_cdf(0.0) + 1.0).abs() < 1e-12, "{p:?}");
            assert!((p.inverse_cdf(1.0) - 1.0).abs() < 1e-12, "{p:?}");
            assert!(p.inverse_cdf(0.5).abs() < 1e-12, "{p:?}");
        }
    }

    proptest! {
        #[test]
        fn inverse_cdf_inverts_simpson_cdf(p in 0.0f64..1.0) {
            for pat in patterns() {
                let u = pat.inverse_cdf(p);
                prop_assert!((-1.0..=1.0).contains(&u));
                let cdf = simpson(|v| pat.density(v), -1.0, u, 400);
                prop_assert!((cdf - p).abs() < 1e-9, "{:?} p={} u={} cdf={}", pat, p, u, cdf);
            }
        }
    }
}
