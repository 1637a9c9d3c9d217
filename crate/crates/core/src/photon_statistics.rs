//! Distributions of the number of photons an atom scatters.

use rand::Rng;

use crate::error::{Error, Result};
use crate::physics::DIPOLE_SECOND_MOMENT;
use crate::quadrature::integrate;
use crate::rng::par_chunks;

// Well inside the required 1e-12 so that second moments stay accurate too.
const TAIL_MASS: f64 = 1e-14;

/// Natural linewidth of the sodium D2 line, `2π × 9.795 MHz`, in 1/s.
pub const NA_D2_LINEWIDTH: f64 = std::f64::consts::TAU * 9.795e6;

/// Probabilities `P(0), P(1), …, P(N_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    weights: Vec<f64>,
}

impl PhotonNumberDistribution {
    /// Normalizes non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weights", "empty"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid("weights", format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Unnormalized { mass: total });
        }
        Ok(PhotonNumberDistribution {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Exactly `n` photons.
    pub fn fixed(n: usize) -> Self {
        let mut weights = vec![0.0; n + 1];
        weights[n] = 1.0;
        PhotonNumberDistribution { weights }
    }

    /// Empirical distribution from a histogram of counts.
    pub fn from_histogram(hist: &[u64]) -> Result<Self> {
        Self::from_weights(hist.iter().map(|&c| c as f64).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_count(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn p(&self, n: usize) -> f64 {
        self.weights.get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, w)| n as f64 * w)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.weights
            .iter()
            .enumerate()
            .map(|(n, w)| (n as f64 - mean).powi(2) * w)
            .sum()
    }

    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    }

    /// Inverse-CDF sampler over the support.
    pub fn sampler(&self) -> CountSampler {
        CountSampler { cdf: self.cdf() }
    }
}

#[derive(Debug, Clone)]
pub struct CountSampler {
    cdf: Vec<f64>,
}

impl CountSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

fn hard_cap(n_bar: f64, sigma_n: f64) -> usize {
    (10.0 * (n_bar + 5.0 * sigma_n + 10.0)).ceil() as usize
}

/// Builds a distribution from unnormalized log-weights that decrease with a
/// decreasing ratio beyond `mode`. Terms are added until the geometric bound
/// on the remaining tail falls below `TAIL_MASS`, or until `cap`.
fn from_log_weights(log_w: impl Fn(usize) -> f64, mode: f64, cap: usize) -> Vec<f64> {
    let mut logs: Vec<f64> = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    let mut n = 0usize;
    loop {
        let lw = log_w(n);
        logs.push(lw);
        peak = peak.max(lw);
        if n >= cap {
            break;
        }
        if n as f64 > mode {
            let ratio = (log_w(n + 1) - lw).exp();
            let total: f64 = logs.iter().map(|l| (l - peak).exp()).sum();
            let term = (lw - peak).exp();
            if ratio < 1.0 && term * ratio / (1.0 - ratio) < TAIL_MASS * total {
                break;
            }
        }
        n += 1;
    }
    let weights: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn check_n_bar(n_bar: f64) -> Result<()> {
    if !(n_bar.is_finite() && n_bar >= 0.0) {
        return Err(Error::invalid(
            "n_bar",
            format!("must be non-negative, got {n_bar}"),
        ));
    }
    Ok(())
}

/// `P(n) = e^{−n̄} n̄ⁿ / n!`.
pub fn poisson_pn(n_bar: f64) -> Result<PhotonNumberDistribution> {
    check_n_bar(n_bar)?;
    if n_bar == 0.0 {
        return Ok(PhotonNumberDistribution::fixed(0));
    }
    let ln_mean = n_bar.ln();
    let cap = hard_cap(n_bar, n_bar.sqrt());
    let mut ln_factorial = Vec::with_capacity(cap + 2);
    let mut acc = 0.0f64;
    ln_factorial.push(0.0);
    for k in 1..=cap + 1 {
        acc += (k as f64).ln();
        ln_factorial.push(acc);
    }
    let log_w = |n: usize| -n_bar + n as f64 * ln_mean - ln_factorial[n];
    let weights = from_log_weights(log_w, n_bar, cap);
    Ok(PhotonNumberDistribution { weights })
}

/// Weights `∝ exp(−½(n − n̄)²/σ_n²)` on `n ≥ 0`, renormalized.
pub fn truncated_gaussian_pn(n_bar: f64, sigma_n: f64) -> Result<PhotonNumberDistribution> {
    check_n_bar(n_bar)?;
    if !(sigma_n.is_finite() && sigma_n > 0.0) {
        return Err(Error::invalid(
            "sigma_n",
            format!("must be positive, got {sigma_n}"),
        ));
    }
    let inv = 0.5 / (sigma_n * sigma_n);
    let log_w = |n: usize| -inv * (n as f64 - n_bar).powi(2);
    let weights = from_log_weights(log_w, n_bar, hard_cap(n_bar, sigma_n));
    Ok(PhotonNumberDistribution { weights })
}

/// Relative intensity seen by an atom while it crosses the scattering beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensityShape {
    Flat,
    /// Gaussian in time, centered in the transit window, with rms duration
    /// `transit_time / 6`.
    Gaussian,
}

/// Scattering rate as a function of the saturation parameter `s = I/I_sat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateLaw {
    /// `Γ(s) = (Γ_nat/2)·s/(1+s)`.
    Saturable { linewidth: f64 },
    /// `Γ(s) = rate·s`.
    Linear { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamProfile {
    pub shape: IntensityShape,
    pub peak_s: f64,
    /// Seconds.
    pub transit_time: f64,
    pub rate_law: RateLaw,
}

impl BeamProfile {
    /// Saturable sodium D2 scattering.
    pub fn sodium(shape: IntensityShape, peak_s: f64, transit_time: f64) -> Self {
        BeamProfile {
            shape,
            peak_s,
            transit_time,
            rate_law: RateLaw::Saturable {
                linewidth: NA_D2_LINEWIDTH,
            },
        }
    }

    /// Linear-response profile scaled so that `∫Γ dt = mean_photons`.
    pub fn with_mean_photons(shape: IntensityShape, transit_time: f64, mean_photons: f64) -> Self {
        let mut profile = BeamProfile {
            shape,
            peak_s: 1.0,
            transit_time,
            rate_law: RateLaw::Linear { rate: 1.0 },
        };
        let unit = profile.mean_photons();
        if unit > 0.0 {
            profile.rate_law = RateLaw::Linear {
                rate: mean_photons / unit,
            };
        }
        profile
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transit_time.is_finite() && self.transit_time > 0.0) {
            return Err(Error::invalid(
                "transit_time",
                format!(
                    "profile must have positive length, got {}",
                    self.transit_time
                ),
            ));
        }
        if !(self.peak_s.is_finite() && self.peak_s >= 0.0) {
            return Err(Error::invalid(
                "peak_s",
                format!("must be non-negative, got {}", self.peak_s),
            ));
        }
        let coefficient = match self.rate_law {
            RateLaw::Saturable { linewidth } => linewidth,
            RateLaw::Linear { rate } => rate,
        };
        if !(coefficient.is_finite() && coefficient >= 0.0) {
            return Err(Error::invalid(
                "rate_law",
                "coefficient must be non-negative",
            ));
        }
        Ok(())
    }

    pub fn relative_intensity(&self, t: f64) -> f64 {
        if !(0.0..=self.transit_time).contains(&t) {
            return 0.0;
        }
        match self.shape {
            IntensityShape::Flat => 1.0,
            IntensityShape::Gaussian => {
                let sigma = self.transit_time / 6.0;
                let x = (t - 0.5 * self.transit_time) / sigma;
                (-0.5 * x * x).exp()
            }
        }
    }

    fn rate_at_s(&self, s: f64) -> f64 {
        match self.rate_law {
            RateLaw::Saturable { linewidth } => 0.5 * linewidth * s / (1.0 + s),
            RateLaw::Linear { rate } => rate * s,
        }
    }

    /// Scattering rate Γ(I(t)) in 1/s.
    pub fn rate(&self, t: f64) -> f64 {
        self.rate_at_s(self.peak_s * self.relative_intensity(t))
    }

    pub fn peak_rate(&self) -> f64 {
        self.rate_at_s(self.peak_s)
    }

    /// `∫₀^τ Γ(I(t)) dt`.
    pub fn mean_photons(&self) -> f64 {
        integrate(
            |t| self.rate(t),
            0.0,
            self.transit_time,
            1e-12 * self.peak_rate().max(1.0) * self.transit_time,
        )
        .value
    }
}

/// Photon counts of `samples` atoms crossing the beam, each drawn from the
/// inhomogeneous Poisson process with rate Γ(I(t)) by thinning.
pub fn simulate_pn_beam(
    profile: &BeamProfile,
    samples: usize,
    seed: u64,
) -> Result<PhotonNumberDistribution> {
    profile.validate()?;
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let peak = profile.peak_rate();
    if peak == 0.0 {
        return Ok(PhotonNumberDistribution::fixed(0));
    }
    let tau = profile.transit_time;
    let hists = par_chunks(samples, seed, |range, rng| {
        let mut hist: Vec<u64> = Vec::new();
        for _ in range {
            let mut t = 0.0;
            let mut count = 0usize;
            loop {
                let u: f64 = rng.random();
                t -= (1.0 - u).ln() / peak;
                if t > tau {
                    break;
                }
                if rng.random::<f64>() * peak < profile.rate(t) {
                    count += 1;
                }
            }
            if hist.len() <= count {
                hist.resize(count + 1, 0);
            }
            hist[count] += 1;
        }
        hist
    });
    let mut total: Vec<u64> = Vec::new();
    for h in hists {
        if total.len() < h.len() {
            total.resize(h.len(), 0);
        }
        for (t, c) in total.iter_mut().zip(h) {
            *t += c;
        }
    }
    PhotonNumberDistribution::from_histogram(&total)
}

/// Momentum imparted to the atomic beam, in units of `k₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamObservables {
    /// Mean transverse kick from absorption.
    pub deflection: f64,
    /// rms spread `sqrt(n̄σ_k² + Var(n))`.
    pub broadening: f64,
}

pub fn beam_observables(pn: &PhotonNumberDistribution) -> BeamObservables {
    BeamObservables {
        deflection: pn.mean(),
        broadening: (pn.mean() * DIPOLE_SECOND_MOMENT + pn.variance()).sqrt(),
    }
}
