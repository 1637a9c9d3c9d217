//! Weighted least-squares extraction of decoherence parameters.
//!
//! Three models are supported:
//!
//! * [`fit_nbar_sigman`]: `|β_total(d)|` with a truncated-Gaussian photon
//!   number distribution and the dipole single-photon coherence. Parameters
//!   `n_bar`, `sigma_n`.
//! * [`fit_kappa_prime`]: the Gaussian many-photon form `C₀·e^{−½κ′²d²}`.
//!   Parameter `kappa_prime` (units of `k₀`), plus `amplitude` when freed.
//! * [`fit_phase_slope`]: straight line through the unwrapped fringe phase.
//!   Parameters `phase_slope` (units of `k₀`, magnitude `n̄`) and
//!   `phase_offset`.
//!
//! Magnitude and phase are fitted separately. Positive parameters are
//! optimized in log space. Covariances are `(JᵀWJ)⁻¹` in the natural
//! parameters, treating the supplied errors as absolute.

mod curve;
pub mod optimize;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use curve::{CurveSample, DecoherenceCurve, HEADER};
pub use optimize::LmOptions;

use crate::coherence::{unwrap_phases, Coherence};
use crate::composition::beta_total;
use crate::error::{Error, Result};
use crate::photon_statistics::truncated_gaussian_pn;
use crate::physics::K0_LAMBDA;
use crate::single_photon::beta_single_closed_form;
use optimize::{levenberg_marquardt, nelder_mead, Minimum};

const LOG_MIN: f64 = -20.7; // ≈ ln 1e-9
const LOG_MAX: f64 = 6.9; // ≈ ln 1e3

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// Row-major, same order as `names`.
    pub covariance: Vec<Vec<f64>>,
    pub chi2_per_dof: f64,
    pub converged: bool,
    /// The optimum sits on a parameter boundary (no scattering, zero width).
    pub at_boundary: bool,
    pub iterations: usize,
    pub n_points: usize,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.values[i])
    }

    pub fn stderr(&self, name: &str) -> Option<f64> {
        self.index(name)
            .map(|i| self.covariance[i][i].max(0.0).sqrt())
    }
}

/// Non-finite model output becomes an infinite residual so the optimizer
/// backs away from it.
fn weighted_residuals(model: Option<Vec<f64>>, data: &[f64], err: &[f64]) -> Vec<f64> {
    match model {
        Some(m) => m
            .iter()
            .zip(data)
            .zip(err)
            .map(|((m, y), e)| (m - y) / e)
            .collect(),
        None => vec![f64::INFINITY; data.len()],
    }
}

fn covariance<F>(residuals: F, params: &[f64], lower: &[f64]) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = residuals(params).len();
    let p = params.len();
    let mut jac = DMatrix::zeros(m, p);
    let mut probe = params.to_vec();
    for j in 0..p {
        let h = 1e-6 * params[j].abs().max(1e-3);
        let central = params[j] - h >= lower[j];
        probe[j] = params[j] + h;
        let up = residuals(&probe);
        probe[j] = if central { params[j] - h } else { params[j] };
        let down = residuals(&probe);
        probe[j] = params[j];
        let span = if central { 2.0 * h } else { h };
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / span;
        }
    }
    let jtj = jac.transpose() * &jac;
    let inv = if jac.iter().all(|x| x.is_finite()) {
        jtj.clone()
            .cholesky()
            .map(|c| c.inverse())
            .or_else(|| jtj.clone().pseudo_inverse(1e-14).ok())
    } else {
        None
    };
    let inv = inv.unwrap_or_else(|| DMatrix::from_element(p, p, f64::NAN));
    (0..p)
        .map(|i| (0..p).map(|j| 0.5 * (inv[(i, j)] + inv[(j, i)])).collect())
        .collect()
}

/// LM in internal coordinates, simplex fallback when LM cannot proceed.
fn minimize<F>(residuals: F, start: &[f64], lm: &LmOptions) -> Minimum
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if let Some(m) = levenberg_marquardt(&residuals, start, lm) {
        return m;
    }
    let cost = |p: &[f64]| residuals(p).iter().map(|r| r * r).sum::<f64>();
    nelder_mead(cost, start, 0.2, 20 * lm.max_iterations, 1e-15)
}

fn check_spread(curve: &DecoherenceCurve) -> Result<()> {
    if curve.points().iter().all(|p| p.d == 0.0) {
        return Err(Error::Underdetermined(
            "every point has zero separation".into(),
        ));
    }
    Ok(())
}

fn columns(curve: &DecoherenceCurve) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let pts = curve.points();
    (
        pts.iter().map(|p| p.d).collect(),
        pts.iter().map(|p| p.contrast).collect(),
        pts.iter().map(|p| p.contrast_err).collect(),
    )
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NbarSigmaOptions {
    /// `(n̄₀, σ_n₀)`; auto-seeded from the saturation level when absent.
    pub initial: Option<(f64, f64)>,
    pub lm: LmOptions,
}

/// Saturation heuristic: the large-separation contrast approximates the
/// zero-photon fraction `e^{−n̄}`.
pub fn seed_nbar_sigman(curve: &DecoherenceCurve) -> (f64, f64) {
    let c_min = curve
        .points()
        .iter()
        .map(|p| p.contrast)
        .fold(f64::INFINITY, f64::min);
    let n_bar = (-(c_min.max(0.01)).ln()).max(1e-3);
    (n_bar, n_bar.sqrt())
}

/// Model `|Σ P(n) βⁿ(d)|` for a truncated-Gaussian `P(n)`.
pub fn nbar_sigman_model(betas: &[Coherence], n_bar: f64, sigma_n: f64) -> Option<Vec<f64>> {
    let pn = truncated_gaussian_pn(n_bar, sigma_n).ok()?;
    Some(
        betas
            .iter()
            .map(|&b| beta_total(&pn, b).contrast())
            .collect(),
    )
}

pub fn fit_nbar_sigman(curve: &DecoherenceCurve, options: &NbarSigmaOptions) -> Result<FitResult> {
    check_spread(curve)?;
    let (ds, y, err) = columns(curve);
    let betas: Vec<Coherence> = ds.iter().map(|&d| beta_single_closed_form(d)).collect();
    let (n0, s0) = options.initial.unwrap_or_else(|| seed_nbar_sigman(curve));
    if !(n0 > 0.0 && s0 > 0.0) {
        return Err(Error::invalid(
            "initial",
            "initial n_bar and sigma_n must be positive",
        ));
    }

    let natural = |p: &[f64]| weighted_residuals(nbar_sigman_model(&betas, p[0], p[1]), &y, &err);
    let internal = |q: &[f64]| {
        let a = q[0].clamp(LOG_MIN, LOG_MAX).exp();
        let b = q[1].clamp(LOG_MIN, LOG_MAX).exp();
        natural(&[a, b])
    };
    let min = minimize(internal, &[n0.ln(), s0.ln()], &options.lm);
    let values = vec![
        min.params[0].clamp(LOG_MIN, LOG_MAX).exp(),
        min.params[1].clamp(LOG_MIN, LOG_MAX).exp(),
    ];
    let zero_photon = truncated_gaussian_pn(values[0], values[1])
        .map(|pn| pn.p(0))
        .unwrap_or(0.0);
    let at_boundary = values[0] < 1e-6 || zero_photon >= 1.0 - 1e-9;
    let cov = covariance(natural, &values, &[0.0, 1e-12]);
    Ok(FitResult {
        model: "decoherence".into(),
        names: vec!["n_bar".into(), "sigma_n".into()],
        values,
        covariance: cov,
        chi2_per_dof: min.cost / (ds.len() - 2) as f64,
        converged: min.converged,
        at_boundary,
        iterations: min.iterations,
        n_points: ds.len(),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KappaOptions {
    /// Fit the overall contrast normalization `C₀` instead of fixing it at 1.
    pub free_amplitude: bool,
    pub initial: Option<f64>,
    pub lm: LmOptions,
}

fn gaussian_model(ds: &[f64], kappa: f64, amplitude: f64) -> Vec<f64> {
    ds.iter()
        .map(|&d| {
            let x = kappa * K0_LAMBDA * d;
            amplitude * (-0.5 * x * x).exp()
        })
        .collect()
}

/// Weighted regression of `ln C` on `(k₀d)²` through the origin.
fn seed_kappa(ds: &[f64], y: &[f64]) -> f64 {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&d, &c) in ds.iter().zip(y) {
        if c > 0.0 && c < 1.0 && d > 0.0 {
            let x = (K0_LAMBDA * d).powi(2);
            sxy += x * c.ln();
            sxx += x * x;
        }
    }
    if sxx > 0.0 && sxy < 0.0 {
        (-2.0 * sxy / sxx).sqrt()
    } else {
        1.0
    }
}

pub fn fit_kappa_prime(curve: &DecoherenceCurve, options: &KappaOptions) -> Result<FitResult> {
    check_spread(curve)?;
    let (ds, y, err) = columns(curve);
    let k0 = options.initial.unwrap_or_else(|| seed_kappa(&ds, &y));
    if !(k0 > 0.0) {
        return Err(Error::invalid("initial", "initial kappa must be positive"));
    }
    let free = options.free_amplitude;
    let natural = |p: &[f64]| {
        let amp = if free { p[1] } else { 1.0 };
        weighted_residuals(Some(gaussian_model(&ds, p[0], amp)), &y, &err)
    };
    let internal = |q: &[f64]| {
        let mut p = q.to_vec();
        p[0] = q[0].clamp(LOG_MIN, LOG_MAX).exp();
        natural(&p)
    };
    let start: Vec<f64> = if free {
        vec![k0.ln(), 1.0]
    } else {
        vec![k0.ln()]
    };
    let min = minimize(internal, &start, &options.lm);
    let mut values = min.params.clone();
    values[0] = values[0].clamp(LOG_MIN, LOG_MAX).exp();
    let mut names = vec!["kappa_prime".to_string()];
    let mut lower = vec![0.0];
    if free {
        names.push("amplitude".into());
        lower.push(f64::NEG_INFINITY);
    }
    let cov = covariance(natural, &values, &lower);
    let p = values.len();
    Ok(FitResult {
        model: "gaussian".into(),
        names,
        at_boundary: values[0] < 1e-8,
        values,
        covariance: cov,
        chi2_per_dof: min.cost / (ds.len() - p).max(1) as f64,
        converged: min.converged,
        iterations: min.iterations,
        n_points: ds.len(),
    })
}

/// Weighted straight line through the unwrapped phase versus `k₀d`.
pub fn fit_phase_slope(curve: &DecoherenceCurve) -> Result<FitResult> {
    let mut pts: Vec<(f64, f64, f64)> = curve
        .points()
        .iter()
        .filter_map(|p| Some((p.d, p.phase?, p.phase_err.unwrap_or(1.0))))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Underdetermined(format!(
            "phase slope needs at least 2 phase points, got {}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.first().map(|p| p.0) == pts.last().map(|p| p.0) {
        return Err(Error::Underdetermined(
            "all phase points share one separation".into(),
        ));
    }
    let raw: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let phases = unwrap_phases(&raw);

    let m = pts.len();
    let design = DMatrix::from_fn(m, 2, |i, j| if j == 0 { K0_LAMBDA * pts[i].0 } else { 1.0 });
    let weights = DVector::from_iterator(m, pts.iter().map(|p| 1.0 / (p.2 * p.2)));
    let yv = DVector::from_column_slice(&phases);
    let mut xtwx = DMatrix::<f64>::zeros(2, 2);
    let mut xtwy = DVector::<f64>::zeros(2);
    for i in 0..m {
        for a in 0..2 {
            xtwy[a] += design[(i, a)] * weights[i] * yv[i];
            for b in 0..2 {
                xtwx[(a, b)] += design[(i, a)] * weights[i] * design[(i, b)];
            }
        }
    }
    let inv = xtwx
        .try_inverse()
        .ok_or_else(|| Error::Underdetermined("singular phase regression".into()))?;
    let beta: DVector<f64> = &inv * xtwy;
    let chi2: f64 = (0..m)
        .map(|i| {
            let r = yv[i] - beta[0] * design[(i, 0)] - beta[1];
            weights[i] * r * r
        })
        .sum();
    Ok(FitResult {
        model: "phase".into(),
        names: vec!["phase_slope".into(), "phase_offset".into()],
        values: vec![beta[0], beta[1]],
        covariance: (0..2)
            .map(|i| (0..2).map(|j| inv[(i, j)]).collect())
            .collect(),
        chi2_per_dof: if m > 2 { chi2 / (m - 2) as f64 } else { 0.0 },
        converged: true,
        at_boundary: false,
        iterations: 1,
        n_points: m,
    })
}
