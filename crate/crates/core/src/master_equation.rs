//! Pure spatial dephasing of a density matrix on a position grid.
//!
//! With no Hamiltonian the master equation is diagonal in position pairs,
//! `dρ(x,x′)/dt = −D²|x−x′|²ρ(x,x′)`, so every element decays independently
//! and the populations never change. Positions are in units of `λ` and `D` in
//! units of `k₀/√time`, so an element at separation `Δx` decays at the rate
//! `D²(2πΔx)²`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::K0_LAMBDA;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;
/// Grids up to this size get an eigenvalue check at construction.
const PSD_CHECK_MAX: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixGrid {
    positions: Vec<f64>,
    values: DMatrix<Complex64>,
}

impl DensityMatrixGrid {
    /// Validates a uniform grid and a Hermitian, unit-trace, positive
    /// semidefinite matrix.
    pub fn new(positions: Vec<f64>, values: DMatrix<Complex64>) -> Result<Self> {
        let m = positions.len();
        if m < 2 {
            return Err(Error::invalid(
                "positions",
                "grid needs at least two points",
            ));
        }
        if values.nrows() != m || values.ncols() != m {
            return Err(Error::invalid(
                "values",
                format!(
                    "expected {m}×{m}, got {}×{}",
                    values.nrows(),
                    values.ncols()
                ),
            ));
        }
        let dx = positions[1] - positions[0];
        if !(dx > 0.0)
            || positions
                .windows(2)
                .any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx)
        {
            return Err(Error::invalid(
                "positions",
                "grid must be uniform and increasing",
            ));
        }
        let grid = DensityMatrixGrid { positions, values };
        if !grid.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::invalid("values", "density matrix is not Hermitian"));
        }
        let trace = grid.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::invalid(
                "values",
                format!("grid-weighted trace is {trace}"),
            ));
        }
        if m <= PSD_CHECK_MAX {
            let lowest = grid.min_eigenvalue();
            if lowest < -PSD_TOL {
                return Err(Error::invalid(
                    "values",
                    format!("not positive semidefinite (eigenvalue {lowest})"),
                ));
            }
        }
        Ok(grid)
    }

    /// Pure state `ρ = ψψ†`, normalized so that `Σ ρᵢᵢ Δx = 1`.
    pub fn from_wavefunction(positions: Vec<f64>, psi: &[Complex64]) -> Result<Self> {
        if psi.len() != positions.len() || positions.len() < 2 {
            return Err(Error::invalid(
                "psi",
                "length must match a grid of at least two points",
            ));
        }
        let dx = positions[1] - positions[0];
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("psi", "wavefunction has zero norm"));
        }
        let scale = 1.0 / norm.sqrt();
        let m = psi.len();
        let values = DMatrix::from_fn(m, m, |i, j| psi[i] * psi[j].conj() * scale * scale);
        Self::new(positions, values)
    }

    /// Superposition of two Gaussian packets of rms width `width` centered at
    /// `±separation/2`, on `points` sites spanning `[−extent/2, extent/2]`.
    pub fn two_peak(points: usize, extent: f64, separation: f64, width: f64) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid(
                "points",
                format!("grid size must be at least 2, got {points}"),
            ));
        }
        if !(extent > 0.0 && width > 0.0 && separation >= 0.0) {
            return Err(Error::invalid(
                "grid",
                "extent and width must be positive, separation non-negative",
            ));
        }
        let positions = uniform_grid(points, extent);
        let psi: Vec<Complex64> = positions
            .iter()
            .map(|&x| {
                let a = (x - 0.5 * separation) / width;
                let b = (x + 0.5 * separation) / width;
                Complex64::new((-0.25 * a * a).exp() + (-0.25 * b * b).exp(), 0.0)
            })
            .collect();
        Self::from_wavefunction(positions, &psi)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.positions[1] - self.positions[0]
    }

    pub fn trace(&self) -> f64 {
        self.values.diagonal().iter().map(|z| z.re).sum::<f64>() * self.spacing()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.values.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let m = self.len();
        (0..m).all(|i| {
            (i..m).all(|j| (self.values[(i, j)] - self.values[(j, i)].conj()).norm() <= tol * scale)
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.values + self.values.adjoint()) * Complex64::new(0.5 * self.spacing(), 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.positions[0]) / self.spacing()).round();
        (i.max(0.0) as usize).min(self.len() - 1)
    }

    fn map_elements(&self, f: impl Fn(usize, usize, Complex64) -> Complex64 + Sync) -> Self {
        let m = self.len();
        // nalgebra storage is column-major
        let data: Vec<Complex64> = (0..m * m)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % m, k / m);
                f(i, j, self.values[(i, j)])
            })
            .collect();
        DensityMatrixGrid {
            positions: self.positions.clone(),
            values: DMatrix::from_vec(m, m, data),
        }
    }
}

/// `points` sites spanning `[−extent/2, extent/2]`.
pub fn uniform_grid(points: usize, extent: f64) -> Vec<f64> {
    let dx = extent / (points - 1) as f64;
    (0..points).map(|i| -0.5 * extent + i as f64 * dx).collect()
}

/// Dephasing strength `D ≥ 0`, in units of `k₀/√time`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DiffusionConstant(f64);

impl DiffusionConstant {
    pub fn new(d: f64) -> Result<Self> {
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::invalid(
                "D",
                format!("must be non-negative, got {d}"),
            ));
        }
        Ok(DiffusionConstant(d))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Decay rate of an element at separation `dx` (units of `λ`).
    pub fn rate(&self, dx: f64) -> f64 {
        let q = K0_LAMBDA * dx;
        self.0 * self.0 * q * q
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(
            "t",
            format!("must be non-negative, got {t}"),
        ));
    }
    Ok(())
}

/// `ρ(x,x′,t) = e^{−D²|x−x′|²t} ρ(x,x′,0)`.
pub fn evolve_pure_decoherence(
    rho: &DensityMatrixGrid,
    diffusion: DiffusionConstant,
    t: f64,
) -> Result<DensityMatrixGrid> {
    check_time(t)?;
    if diffusion.0 == 0.0 || t == 0.0 {
        return Ok(rho.clone());
    }
    let x = &rho.positions;
    Ok(rho.map_elements(|i, j, z| z * (-diffusion.rate(x[i] - x[j]) * t).exp()))
}

/// Per-step update used by [`evolve_stepped`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepScheme {
    /// Exact exponential factor per step.
    #[default]
    Exponential,
    /// Classical fourth-order Runge–Kutta.
    RungeKutta4,
}

/// Integrates the master equation with `steps` equal time steps.
pub fn evolve_stepped(
    rho: &DensityMatrixGrid,
    diffusion: DiffusionConstant,
    t: f64,
    steps: usize,
    scheme: StepScheme,
) -> Result<DensityMatrixGrid> {
    check_time(t)?;
    if steps == 0 {
        return Err(Error::invalid("steps", "need at least one step"));
    }
    let dt = t / steps as f64;
    let x = &rho.positions;
    Ok(rho.map_elements(|i, j, z| {
        let h = diffusion.rate(x[i] - x[j]) * dt;
        let factor = match scheme {
            StepScheme::Exponential => (-h).exp(),
            StepScheme::RungeKutta4 => {
                1.0 - h + h * h / 2.0 - h * h * h / 6.0 + h * h * h * h / 24.0
            }
        };
        let mut value = z;
        for _ in 0..steps {
            value *= factor;
        }
        value
    }))
}

/// Diffusion constant whose dephasing over `tau` reproduces the Gaussian
/// many-photon magnitude `e^{−½κ²d²}`, i.e. `D² = κ²/(2τ)`.
pub fn identify_kappa_d(kappa: f64, tau: f64) -> Result<DiffusionConstant> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(
            "tau",
            format!("must be positive, got {tau}"),
        ));
    }
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::invalid(
            "kappa",
            format!("must be non-negative, got {kappa}"),
        ));
    }
    DiffusionConstant::new(kappa / (2.0 * tau).sqrt())
}

/// Largest elementwise `|a − b|`.
pub fn max_deviation(a: &DensityMatrixGrid, b: &DensityMatrixGrid) -> f64 {
    a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
