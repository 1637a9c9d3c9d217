//! Spatial decoherence of an atomic superposition by spontaneous photon
//! scattering.
//!
//! The crate follows an atom interferometer from the single-photon regime,
//! where the decoherence function `β(d)` shows revivals, to the many-photon
//! regime, where contrast falls as a Gaussian in the path separation and the
//! dynamics agree with a position-space dephasing master equation. It also
//! fits measured contrast curves to recover the photon statistics and the
//! decoherence momentum `κ′`.
//!
//! Conventions: momenta in units of the photon recoil `k₀ = 2π/λ`, lengths in
//! units of `λ`. See [`physics`].
//!
//! ```
//! use decolab::{composition, photon_statistics};
//!
//! let pn = photon_statistics::poisson_pn(0.9)?;
//! let far = composition::beta_total_dipole(5.0, &pn);
//! // far from the overlap only atoms that scattered nothing stay coherent
//! assert!((far.contrast() - pn.p(0)).abs() < 0.01);
//! # Ok::<(), decolab::Error>(())
//! ```

pub mod cli;
pub mod coherence;
pub mod composition;
pub mod config;
mod error;
pub mod fitting;
pub mod master_equation;
pub mod montecarlo;
pub mod output;
pub mod photon_statistics;
pub mod physics;
pub mod quadrature;
pub mod rng;
pub mod single_photon;

pub use coherence::Coherence;
pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/units.md")]
    mod units {}
    #[doc = include_str!("../../../book/src/single-photon.md")]
    mod single_photon {}
    #[doc = include_str!("../../../book/src/photon-statistics.md")]
    mod photon_statistics {}
    #[doc = include_str!("../../../book/src/many-photons.md")]
    mod many_photons {}
    #[doc = include_str!("../../../book/src/phase-diffusion.md")]
    mod phase_diffusion {}
    #[doc = include_str!("../../../book/src/master-equation.md")]
    mod master_equation {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
