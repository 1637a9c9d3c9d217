//! JSON run configuration shared by the command-line tools.
//!
//! Every section and key is optional; missing values take the built-in
//! defaults and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::MIN_ATOMS;
use crate::photon_statistics::{BeamProfile, IntensityShape};
use crate::physics::{InterferometerGeometry, Units};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub units: UnitsSection,
    pub geometry: GeometrySection,
    pub beam: BeamSection,
    pub detector: DetectorSection,
    pub simulation: SimulationSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitsSection {
    pub lambda_nm: f64,
}

impl Default for UnitsSection {
    fn default() -> Self {
        UnitsSection { lambda_nm: 590.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub diffraction_angle_rad: f64,
    pub grating_spacing_m: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = InterferometerGeometry::default();
        GeometrySection {
            diffraction_angle_rad: g.diffraction_angle_rad,
            grating_spacing_m: g.grating_spacing_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Gaussian,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    pub shape: ShapeName,
    pub peak_s: f64,
    pub transit_time_us: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            shape: ShapeName::Gaussian,
            peak_s: 1.0,
            transit_time_us: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    /// Absent means no momentum restriction.
    pub kappa_d_in_k0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub n_atoms: usize,
    pub seed: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            n_atoms: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: Format,
    /// Standard output when absent.
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.units()?;
        self.geometry()?;
        self.beam_profile()?.validate()?;
        if let Some(k) = self.detector.kappa_d_in_k0 {
            if !(k > 0.0) {
                return Err(Error::Config(format!(
                    "detector.kappa_d_in_k0 must be positive, got {k}"
                )));
            }
        }
        if self.simulation.n_atoms < MIN_ATOMS {
            return Err(Error::Config(format!(
                "simulation.n_atoms must be at least {MIN_ATOMS}, got {}",
                self.simulation.n_atoms
            )));
        }
        Ok(())
    }

    pub fn units(&self) -> Result<Units> {
        Units::from_nm(self.units.lambda_nm)
    }

    pub fn geometry(&self) -> Result<InterferometerGeometry> {
        InterferometerGeometry::new(
            self.geometry.diffraction_angle_rad,
            self.geometry.grating_spacing_m,
        )
    }

    pub fn beam_profile(&self) -> Result<BeamProfile> {
        let shape = match self.beam.shape {
            ShapeName::Gaussian => IntensityShape::Gaussian,
            ShapeName::Flat => IntensityShape::Flat,
        };
        let profile =
            BeamProfile::sodium(shape, self.beam.peak_s, self.beam.transit_time_us * 1e-6);
        profile.validate()?;
        Ok(profile)
    }

    /// Detector acceptance in units of `k₀`, infinite when unset.
    pub fn kappa_d(&self) -> f64 {
        self.detector.kappa_d_in_k0.unwrap_or(f64::INFINITY)
    }

    /// Single-line JSON for output headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}
