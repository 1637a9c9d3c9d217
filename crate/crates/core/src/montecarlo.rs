//! Phase-diffusion ensemble.
//!
//! Each atom scatters `n ~ P(n)` photons; photon `i` changes its momentum
//! along the laser axis by `Δkᵢ = k_{x,i} − k₀`, which shifts the atom's fringe
//! phase by `Δkᵢ·d`. Averaging `e^{−iΣΔkᵢ·d}` over the ensemble reproduces
//! `β_total(d)` without ever forming `βⁿ`.
//!
//! Atoms are sampled once per seed and reused at every separation, so a curve
//! and the corresponding single-separation runs agree bit for bit.

use rand::Rng;

use crate::coherence::Coherence;
use crate::error::{Error, Result};
use crate::photon_statistics::{CountSampler, PhotonNumberDistribution};
use crate::physics::{phase, EmissionPattern, SigmaPlusDipole};
use crate::rng::par_chunks;

pub const MIN_ATOMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomRecord {
    pub n_scattered: usize,
    /// `Σᵢ (k_{x,i} − k₀)`, units of `k₀`.
    pub total_dk: f64,
}

impl AtomRecord {
    /// Fringe phase shift at separation `d` (units of `λ`).
    pub fn accumulated_phase(&self, d: f64) -> f64 {
        phase(self.total_dk, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleResult {
    pub mean_coherence: Coherence,
    /// Standard error of the (weighted) mean of `e^{−iΔφ}`.
    pub stderr: f64,
    pub n_atoms: usize,
    /// `Σw / n_atoms`; 1 without a detector restriction.
    pub acceptance_fraction: f64,
}

/// Gaussian momentum acceptance of the detector.
///
/// An atom whose total transfer is `ΔK` is counted with weight
/// `exp(−(ΔK − center)²/(2κ_d²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorAcceptance {
    pub kappa_d: f64,
    pub center: f64,
}

impl DetectorAcceptance {
    /// Detector placed on the centroid of the deflected beam, `−n̄k₀`.
    pub fn centered_on(pn: &PhotonNumberDistribution, kappa_d: f64) -> Result<Self> {
        if kappa_d.is_nan() || kappa_d <= 0.0 {
            return Err(Error::invalid(
                "kappa_d",
                format!("must be positive, got {kappa_d}"),
            ));
        }
        Ok(DetectorAcceptance {
            kappa_d,
            center: -pn.mean(),
        })
    }

    pub fn weight(&self, total_dk: f64) -> f64 {
        if self.kappa_d.is_infinite() {
            return 1.0;
        }
        let x = (total_dk - self.center) / self.kappa_d;
        (-0.5 * x * x).exp()
    }
}

/// One photon's momentum change `u − 1`, with `u` drawn by inverse CDF.
pub fn sample_photon_kick<R: Rng + ?Sized>(pattern: &dyn EmissionPattern, rng: &mut R) -> f64 {
    pattern.inverse_cdf(rng.random::<f64>()) - 1.0
}

fn draw_atom<R: Rng + ?Sized>(
    counts: &CountSampler,
    pattern: &dyn EmissionPattern,
    rng: &mut R,
) -> AtomRecord {
    let n = counts.sample(rng);
    let total_dk = (0..n).map(|_| sample_photon_kick(pattern, rng)).sum();
    AtomRecord {
        n_scattered: n,
        total_dk,
    }
}

fn check_atoms(n_atoms: usize) -> Result<()> {
    if n_atoms < MIN_ATOMS {
        return Err(Error::invalid(
            "n_atoms",
            format!("need at least {MIN_ATOMS} atoms, got {n_atoms}"),
        ));
    }
    Ok(())
}

/// The seeded atom sample used by every ensemble routine.
pub fn sample_atoms(
    pn: &PhotonNumberDistribution,
    pattern: &dyn EmissionPattern,
    n_atoms: usize,
    seed: u64,
) -> Vec<AtomRecord> {
    let counts = pn.sampler();
    par_chunks(n_atoms, seed, |range, rng| {
        range
            .map(|_| draw_atom(&counts, pattern, rng))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

// Σw, Σw·z, Σw², Σw²·z
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    w: f64,
    wz_re: f64,
    wz_im: f64,
    w2: f64,
    w2z_re: f64,
    w2z_im: f64,
}

impl Sums {
    fn add(&mut self, w: f64, z_re: f64, z_im: f64) {
        self.w += w;
        self.wz_re += w * z_re;
        self.wz_im += w * z_im;
        let w2 = w * w;
        self.w2 += w2;
        self.w2z_re += w2 * z_re;
        self.w2z_im += w2 * z_im;
    }

    fn merge(&mut self, o: &Sums) {
        self.w += o.w;
        self.wz_re += o.wz_re;
        self.wz_im += o.wz_im;
        self.w2 += o.w2;
        self.w2z_re += o.w2z_re;
        self.w2z_im += o.w2z_im;
    }

    fn finish(&self, n_atoms: usize) -> EnsembleResult {
        let (m_re, m_im) = if self.w > 0.0 {
            (self.wz_re / self.w, self.wz_im / self.w)
        } else {
            (0.0, 0.0)
        };
        // Σw²|z − m|² with |z| = 1
        let spread = self.w2 - 2.0 * (m_re * self.w2z_re + m_im * self.w2z_im)
            + (m_re * m_re + m_im * m_im) * self.w2;
        let n = n_atoms as f64;
        let stderr = if self.w > 0.0 {
            (spread.max(0.0) * n / (n - 1.0)).sqrt() / self.w
        } else {
            0.0
        };
        EnsembleResult {
            mean_coherence: Coherence::new(m_re, m_im),
            stderr,
            n_atoms,
            acceptance_fraction: self.w / n,
        }
    }
}

/// Ensemble average of `e^{−iΔφ}` at each separation in `ds`.
pub fn simulate_curve(
    ds: &[f64],
    pn: &PhotonNumberDistribution,
    pattern: &dyn EmissionPattern,
    acceptance: Option<DetectorAcceptance>,
    n_atoms: usize,
    seed: u64,
) -> Result<Vec<EnsembleResult>> {
    check_atoms(n_atoms)?;
    let counts = pn.sampler();
    let partials = par_chunks(n_atoms, seed, |range, rng| {
        let mut sums = vec![Sums::default(); ds.len()];
        for _ in range {
            let atom = draw_atom(&counts, pattern, rng);
            let w = acceptance.map_or(1.0, |a| a.weight(atom.total_dk));
            for (s, &d) in sums.iter_mut().zip(ds) {
                let (sin, cos) = (-atom.accumulated_phase(d)).sin_cos();
                s.add(w, cos, sin);
            }
        }
        sums
    });
    let mut total = vec![Sums::default(); ds.len()];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total.iter().map(|s| s.finish(n_atoms)).collect())
}

/// Phase-diffusion estimate of `β_total(d)` for the dipole pattern.
pub fn simulate_phase_diffusion(
    d: f64,
    pn: &PhotonNumberDistribution,
    n_atoms: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    simulate_curve(&[d], pn, &SigmaPlusDipole, None, n_atoms, seed).map(|mut v| v.remove(0))
}

/// As [`simulate_phase_diffusion`], counting only atoms inside the detector's
/// momentum acceptance `κ_d` (centered on the deflected beam).
pub fn simulate_with_detector(
    d: f64,
    pn: &PhotonNumberDistribution,
    kappa_d: f64,
    n_atoms: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    let acceptance = DetectorAcceptance::centered_on(pn, kappa_d)?;
    simulate_curve(&[d], pn, &SigmaPlusDipole, Some(acceptance), n_atoms, seed)
        .map(|mut v| v.remove(0))
}
