use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Column header of curve data files.
pub const HEADER: &str = "d_over_lambda,contrast,contrast_err,phase,phase_err";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    /// Separation in units of `λ`.
    pub d: f64,
    pub contrast: f64,
    pub contrast_err: f64,
    pub phase: Option<f64>,
    pub phase_err: Option<f64>,
}

impl CurveSample {
    pub fn new(d: f64, contrast: f64, contrast_err: f64) -> Self {
        CurveSample {
            d,
            contrast,
            contrast_err,
            phase: None,
            phase_err: None,
        }
    }

    pub fn with_phase(mut self, phase: f64, phase_err: f64) -> Self {
        self.phase = Some(phase);
        self.phase_err = Some(phase_err);
        self
    }

    fn problem(&self) -> Option<String> {
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Some(format!("separation must be non-negative, got {}", self.d));
        }
        if !self.contrast.is_finite() {
            return Some("contrast must be finite".into());
        }
        if !(self.contrast_err.is_finite() && self.contrast_err > 0.0) {
            return Some(format!(
                "contrast error must be positive, got {}",
                self.contrast_err
            ));
        }
        match (self.phase, self.phase_err) {
            (None, None) => None,
            (Some(p), Some(e)) if p.is_finite() && e.is_finite() && e > 0.0 => None,
            (Some(_), None) => Some("phase given without phase error".into()),
            _ => Some("phase and phase error must be finite, error positive".into()),
        }
    }
}

/// Measured or simulated contrast (and optionally phase) versus separation.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceCurve {
    points: Vec<CurveSample>,
}

impl DecoherenceCurve {
    pub fn new(points: Vec<CurveSample>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Underdetermined(format!(
                "a curve needs at least 3 points, got {}",
                points.len()
            )));
        }
        if let Some(reason) = points.iter().find_map(CurveSample::problem) {
            return Err(Error::invalid("curve", reason));
        }
        Ok(DecoherenceCurve { points })
    }

    pub fn points(&self) -> &[CurveSample] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Multiplies every contrast and phase error by `factor`.
    pub fn scale_errors(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.points
                .iter()
                .map(|p| CurveSample {
                    contrast_err: p.contrast_err * factor,
                    phase_err: p.phase_err.map(|e| e * factor),
                    ..*p
                })
                .collect(),
        )
    }

    /// Parses the comma-separated curve format. `#` lines and blank lines are
    /// ignored; the first remaining line must be the header.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (header_line, header) = lines.next().ok_or_else(|| Error::Parse {
            lines: vec![],
            reason: "no header or data".into(),
        })?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        let full: Vec<&str> = HEADER.split(',').collect();
        if columns != full[..3] && columns != full[..] {
            return Err(Error::Parse {
                lines: vec![header_line],
                reason: format!("expected header `{HEADER}` (phase columns optional)"),
            });
        }
        let width = columns.len();

        let mut points = Vec::new();
        let mut bad = Vec::new();
        let mut reasons = Vec::new();
        for (number, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != width {
                bad.push(number);
                reasons.push(format!("line {number}: expected {width} fields"));
                continue;
            }
            let values: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            let Ok(v) = values else {
                bad.push(number);
                reasons.push(format!("line {number}: not a number"));
                continue;
            };
            let mut sample = CurveSample::new(v[0], v[1], v[2]);
            if width == 5 {
                sample = sample.with_phase(v[3], v[4]);
            }
            if let Some(reason) = sample.problem() {
                bad.push(number);
                reasons.push(format!("line {number}: {reason}"));
                continue;
            }
            points.push(sample);
        }
        if !bad.is_empty() {
            return Err(Error::Parse {
                lines: bad,
                reason: reasons.join("; "),
            });
        }
        if points.is_empty() {
            return Err(Error::Parse {
                lines: vec![],
                reason: "no data rows".into(),
            });
        }
        Self::new(points)
    }

    /// Writes the curve in the format read by [`parse_csv`](Self::parse_csv),
    /// with phase columns if every point has a phase.
    pub fn to_csv(&self) -> String {
        let with_phase = self.points.iter().all(|p| p.phase.is_some());
        let mut out = String::new();
        if with_phase {
            out.push_str(HEADER);
        } else {
            out.push_str("d_over_lambda,contrast,contrast_err");
        }
        out.push('\n');
        for p in &self.points {
            let _ = write!(out, "{},{},{}", p.d, p.contrast, p.contrast_err);
            if with_phase {
                let _ = write!(
                    out,
                    ",{},{}",
                    p.phase.unwrap_or(0.0),
                    p.phase_err.unwrap_or(1.0)
                );
            }
            out.push('\n');
        }
        out
    }
}
