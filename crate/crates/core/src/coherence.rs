use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

/// Complex value of a decoherence function.
///
/// The magnitude is the normalized fringe contrast and the argument the fringe
/// phase shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coherence(pub Complex64);

impl Coherence {
    pub const ONE: Coherence = Coherence(Complex64 { re: 1.0, im: 0.0 });

    pub fn new(re: f64, im: f64) -> Self {
        Coherence(Complex64::new(re, im))
    }

    pub fn from_polar(contrast: f64, phase: f64) -> Self {
        Coherence(Complex64::from_polar(contrast, phase))
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn contrast(&self) -> f64 {
        self.0.norm()
    }

    /// Argument in `(−π, π]`.
    pub fn phase(&self) -> f64 {
        self.0.arg()
    }
}

impl From<Complex64> for Coherence {
    fn from(z: Complex64) -> Self {
        Coherence(z)
    }
}

/// Removes `2π` jumps between consecutive phases.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phases {
        if let Some(q) = prev {
            let mut jump = p - q;
            while jump > PI {
                offset -= TAU;
                jump -= TAU;
            }
            while jump < -PI {
                offset += TAU;
                jump += TAU;
            }
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}
