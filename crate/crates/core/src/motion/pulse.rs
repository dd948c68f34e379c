//! Piecewise-constant frequency-modulated drive.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant drive detuning `μ(t)` (rad/s, relative to the
/// carrier) over consecutive segments (seconds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmPulseSequence {
    durations: Vec<f64>,
    detunings: Vec<f64>,
}

impl FmPulseSequence {
    pub fn new(durations: Vec<f64>, detunings: Vec<f64>) -> Result<Self> {
        if durations.is_empty() {
            return Err(Error::InvalidInput("pulse has no segments".into()));
        }
        if durations.len() != detunings.len() {
            return Err(Error::DimensionMismatch {
                expected: durations.len(),
                found: detunings.len(),
            });
        }
        if let Some(d) = durations.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidInput(format!("segment duration {d} must be positive")));
        }
        if let Some(m) = detunings.iter().find(|m| !m.is_finite()) {
            return Err(Error::InvalidInput(format!("segment detuning {m} is not finite")));
        }
        Ok(FmPulseSequence { durations, detunings })
    }

    /// `n` equal segments spanning `tau`.
    pub fn uniform(tau: f64, detunings: Vec<f64>) -> Result<Self> {
        let n = detunings.len().max(1);
        Self::new(vec![tau / n as f64; detunings.len()], detunings)
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn n_segments(&self) -> usize {
        self.durations.len()
    }

    pub fn tau(&self) -> f64 {
        self.durations.iter().sum()
    }

    /// Segments in reverse order.
    pub fn reversed(&self) -> Self {
        FmPulseSequence {
            durations: self.durations.iter().rev().copied().collect(),
            detunings: self.detunings.iter().rev().copied().collect(),
        }
    }

    /// Two-column text form: `duration_s detuning_rad_per_s`, one segment per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# duration_s detuning_rad_per_s\n");
        for (d, m) in self.durations.iter().zip(&self.detunings) {
            let _ = writeln!(out, "{d:e} {m:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut durations = Vec::new();
        let mut detunings = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::InvalidInput(format!(
                    "pulse line {}: expected 2 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::InvalidInput(format!("pulse line {}: {e}", lineno + 1))
                })
            };
            durations.push(parse(cols[0])?);
            detunings.push(parse(cols[1])?);
        }
        Self::new(durations, detunings)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// `φ_k(t) = ∫₀ᵗ (μ(s) − ω_k) ds`
pub fn motional_phase(pulse: &FmPulseSequence, mode_freq: f64, t: f64) -> Result<f64> {
    let tau = pulse.tau();
    if !(0.0..=tau * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, {tau}]")));
    }
    let mut phase = 0.0;
    let mut start = 0.0;
    for (&d, &mu) in pulse.durations.iter().zip(&pulse.detunings) {
        let dt = (t - start).clamp(0.0, d);
        phase += (mu - mode_freq) * dt;
        start += d;
        if t <= start {
            break;
        }
    }
    Ok(phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_segment_phase_is_linear() {
        let p = FmPulseSequence::new(vec![2.0], vec![5.0]).unwrap();
        assert_eq!(motional_phase(&p, 3.0, 0.0).unwrap(), 0.0);
        assert!((motional_phase(&p, 3.0, 1.5).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn antisymmetric_segments_return_to_zero() {
        let p = FmPulseSequence::new(vec![1.0, 1.0], vec![4.0, -4.0]).unwrap();
        assert!(motional_phase(&p, 0.0, 2.0).unwrap().abs() < 1e-15);
        assert!((motional_phase(&p, 0.0, 1.0).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn phase_is_continuous_at_boundaries() {
        let p = FmPulseSequence::new(vec![0.3, 0.5, 0.2], vec![1.0, -7.0, 2.5]).unwrap();
        for t in [0.3, 0.8] {
            let l = motional_phase(&p, 0.5, t - 1e-12).unwrap();
            let r = motional_phase(&p, 0.5, t + 1e-12).unwrap();
            assert!((l - r).abs() < 1e-10);
        }
    }

    #[test]
    fn out_of_range_time_is_rejected() {
        let p = FmPulseSequence::new(vec![1.0], vec![1.0]).unwrap();
        assert!(motional_phase(&p, 0.0, 1.5).is_err());
        assert!(motional_phase(&p, 0.0, -0.1).is_err());
    }

    #[test]
    fn invalid_segments_are_rejected() {
        assert!(FmPulseSequence::new(vec![], vec![]).is_err());
        assert!(FmPulseSequence::new(vec![1.0, -1.0], vec![0.0, 0.0]).is_err());
        assert!(FmPulseSequence::new(vec![1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = FmPulseSequence::new(
            vec![1.0 / 3.0 * 1e-5, 2e-5],
            vec![2.0 * std::f64::consts::PI * 3.1e6, -0.1],
        )
        .unwrap();
        let back = FmPulseSequence::from_text(&p.to_text()).unwrap();
        assert_eq!(p, back);
        assert!(FmPulseSequence::from_text("1.0\n").is_err());
    }
}
