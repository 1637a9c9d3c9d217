//! Dimensionless physical foundations.
//!
//! Inside the crate every momentum is measured in units of the photon recoil
//! `k₀ = 2π/λ` and every length (path separation, grid position) in units of
//! the optical wavelength `λ`. A momentum `q` (in `k₀`) acting across a
//! separation `d` (in `λ`) therefore produces the phase `2π·q·d`. SI values
//! only appear at the configuration and output boundary, through [`Units`].

mod emission;
mod geometry;
mod units;

pub use emission::{
    dipole_marginal, sigma_k, sigma_k_of, AxialDipole, EmissionPattern, Isotropic, PointMass,
    SigmaPlusDipole, DIPOLE_SECOND_MOMENT,
};
pub use geometry::InterferometerGeometry;
pub use units::{phase, Units, K0_LAMBDA};
