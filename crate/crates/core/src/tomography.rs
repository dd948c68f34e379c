//! Bell-state fidelity from populations and a parity oscillation.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{reduced_populations, QubitState};

pub const DEFAULT_ANALYSIS_PHASES: usize = 16;

/// `n` equally spaced phases over `[0, 2π)`.
pub fn analysis_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Parity `⟨Z_a Z_b⟩` against analysis phase, fitted to
/// `offset + contrast · cos(2φ + phase)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityScan {
    pub analysis_phases: Vec<f64>,
    pub parity: Vec<f64>,
    pub offset: f64,
    pub contrast: f64,
    pub phase: f64,
    /// Root-mean-square fit residual.
    pub residual: f64,
}

impl ParityScan {
    /// `phase,parity` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,parity\n");
        for (p, v) in self.analysis_phases.iter().zip(&self.parity) {
            out.push_str(&format!("{p},{v}\n"));
        }
        out
    }
}

/// `⟨Z_a Z_b⟩` after `R_φ(π/2)` on both targets, for every analysis phase.
pub fn parity_scan(state: &QubitState, targets: (usize, usize), phases: &[f64]) -> Result<ParityScan> {
    let (a, b) = targets;
    let n = state.n_qubits();
    for i in [a, b] {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
    }
    if a == b {
        return Err(Error::InvalidPair(a, b));
    }
    let mut distinct: Vec<f64> = Vec::new();
    for p in phases {
        let r = p.rem_euclid(PI);
        if !distinct.iter().any(|d| {
            let gap = (d - r).abs();
            gap.min(PI - gap) < 1e-9
        }) {
            distinct.push(r);
        }
    }
    if distinct.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} distinct analysis phases (mod π); need at least 3",
            distinct.len()
        )));
    }
    let parity: Vec<f64> = phases
        .iter()
        .map(|&phi| {
            let mut s = state.clone();
            s.apply_rotation(a, phi, PI / 2.0);
            s.apply_rotation(b, phi, PI / 2.0);
            let p = reduced_populations(&s, &[a, b]).expect("checked indices");
            (p[0] + p[3] - p[1] - p[2]).clamp(-1.0, 1.0)
        })
        .collect();
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (&phi, &y) in phases.iter().zip(&parity) {
        let row = Vector3::new(1.0, (2.0 * phi).cos(), (2.0 * phi).sin());
        m += row * row.transpose();
        rhs += row * y;
    }
    let coef = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateFit("singular normal equations".into()))?;
    let (offset, ca, sb) = (coef[0], coef[1], coef[2]);
    let residual = (phases
        .iter()
        .zip(&parity)
        .map(|(&phi, &y)| (y - offset - ca * (2.0 * phi).cos() - sb * (2.0 * phi).sin()).powi(2))
        .sum::<f64>()
        / phases.len() as f64)
        .sqrt();
    Ok(ParityScan {
        analysis_phases: phases.to_vec(),
        parity,
        offset,
        contrast: ca.hypot(sb).min(1.0),
        phase: (-sb).atan2(ca),
        residual,
    })
}

/// `F = (P00 + P11)/2 + C/2`
pub fn bell_fidelity_tomographic(p00: f64, p11: f64, contrast: f64) -> Result<f64> {
    for (name, v) in [("P00", p00), ("P11", p11), ("contrast", contrast)] {
        if !(v.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&v)) {
            return Err(Error::InvalidInput(format!("{name} = {v} outside [0, 1]")));
        }
    }
    if p00 + p11 > 1.0 + 1e-9 {
        return Err(Error::InvalidInput(format!("P00 + P11 = {} exceeds 1", p00 + p11)));
    }
    Ok(0.5 * (p00 + p11) + 0.5 * contrast)
}

/// Populations and parity contrast of the targets combined into a fidelity.
pub fn tomographic_fidelity(state: &QubitState, targets: (usize, usize), phases: &[f64]) -> Result<f64> {
    let scan = parity_scan(state, targets, phases)?;
    let p = reduced_populations(state, &[targets.0, targets.1])?;
    bell_fidelity_tomographic(p[0].min(1.0), p[3].min(1.0), scan.contrast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{apply, ms_unitary};

    fn bell() -> QubitState {
        apply(&ms_unitary(PI / 4.0, 0.0, 0.0, 0, 1, 2).unwrap(), &QubitState::zero(2)).unwrap()
    }

    #[test]
    fn ideal_bell_has_full_contrast() {
        let scan = parity_scan(&bell(), (0, 1), &analysis_phases(16)).unwrap();
        assert!((scan.contrast - 1.0).abs() < 1e-12);
        assert!(scan.residual < 1e-12);
        assert!((tomographic_fidelity(&bell(), (0, 1), &analysis_phases(16)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_has_no_contrast() {
        let scan = parity_scan(&QubitState::zero(2), (0, 1), &analysis_phases(16)).unwrap();
        assert!(scan.contrast < 1e-12);
        assert!(scan.parity.iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn too_few_phases_is_degenerate() {
        let err = parity_scan(&bell(), (0, 1), &[0.0, 1.0, PI]);
        assert!(matches!(err, Err(Error::DegenerateFit(_))));
        assert!(parity_scan(&bell(), (0, 1), &[0.0, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn fidelity_formula_bounds() {
        assert_eq!(bell_fidelity_tomographic(0.5, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(bell_fidelity_tomographic(0.25, 0.25, 0.0).unwrap(), 0.25);
        assert!(bell_fidelity_tomographic(0.7, 0.7, 0.0).is_err());
        assert!(bell_fidelity_tomographic(0.5, 0.5, 1.5).is_err());
    }
}
