use crate::error::{Error, Result};

use super::Units;

/// Mach–Zehnder geometry between the first two gratings.
///
/// Grating 1 sits at `z = 0` and grating 2 at `z = grating_spacing_m`; the two
/// paths separate linearly at the diffraction angle in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerGeometry {
    pub diffraction_angle_rad: f64,
    pub grating_spacing_m: f64,
    /// Separations beyond this are clamped. `INFINITY` disables clamping.
    pub max_separation_m: f64,
}

impl Default for InterferometerGeometry {
    fn default() -> Self {
        InterferometerGeometry {
            diffraction_angle_rad: 1e-5,
            grating_spacing_m: 1.0,
            max_separation_m: f64::INFINITY,
        }
    }
}

impl InterferometerGeometry {
    pub fn new(diffraction_angle_rad: f64, grating_spacing_m: f64) -> Result<Self> {
        let g = InterferometerGeometry {
            diffraction_angle_rad,
            grating_spacing_m,
            max_separation_m: f64::INFINITY,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffraction_angle_rad.is_finite() && self.diffraction_angle_rad >= 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "diffraction angle must be non-negative, got {}",
                self.diffraction_angle_rad
            )));
        }
        if !(self.grating_spacing_m.is_finite() && self.grating_spacing_m > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "grating spacing must be positive, got {}",
                self.grating_spacing_m
            )));
        }
        if self.max_separation_m.is_nan() || self.max_separation_m < 0.0 {
            return Err(Error::InvalidGeometry("negative separation cap".into()));
        }
        Ok(())
    }

    /// Path separation (m) at laser position `z` (m).
    pub fn separation_at_laser(&self, z: f64) -> Result<f64> {
        if !(0.0..=self.grating_spacing_m).contains(&z) {
            return Err(Error::InvalidGeometry(format!(
                "laser position z = {z} m lies outside [0, {}] m",
                self.grating_spacing_m
            )));
        }
        Ok((self.diffraction_angle_rad * z).min(self.max_separation_m))
    }

    /// Path separation in units of `λ`.
    pub fn separation_in_lambda(&self, units: &Units, z: f64) -> Result<f64> {
        Ok(units.length_from_si(self.separation_at_laser(z)?))
    }
}
