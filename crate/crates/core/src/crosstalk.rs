//! Crosstalk-dressed MS gates.
//!
//! Two addressing beams drive the target pair; spillover of both beams onto
//! a spectator adds interactions `X^{(t)} σ_{φ_j}^{(j)}`. Spectator angles
//! are rotation angles: a stored `θ_{t,j}` acts as
//! `exp(-i θ_{t,j}/2 X^{(t)} σ_{φ_j}^{(j)})`, while the target pair acts as
//! `exp(-iθ X X)`. With this convention a single spectator leaves the
//! targets with Bell fidelity `¼(1 + cos θ_{1,j})(1 + cos θ_{2,j})`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::integrals::{closure_integral, phase_integral};
use crate::motion::modes::ModeStructure;
use crate::motion::pulse::FmPulseSequence;
use crate::spin::{Operator, QubitState};

/// Upper bound accepted for any stored ε.
pub const MAX_EPSILON: f64 = 0.2;

/// Largest target displacement `|α|` for which a pulse counts as closed.
pub const CLOSURE_TOLERANCE: f64 = 1e-6;

/// Relative spillover amplitudes of the two addressing beams.
///
/// `epsilon(b, j)` is the Rabi amplitude of beam `b` at ion `j` relative
/// to its own target; the entry at the beam's own target is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CrosstalkMapRepr", into = "CrosstalkMapRepr")]
pub struct CrosstalkMap {
    targets: (usize, usize),
    eps: [Vec<f64>; 2],
}

#[derive(Serialize, Deserialize)]
struct CrosstalkMapRepr {
    n_ions: usize,
    targets: [usize; 2],
    beam1: BTreeMap<usize, f64>,
    beam2: BTreeMap<usize, f64>,
}

impl TryFrom<CrosstalkMapRepr> for CrosstalkMap {
    type Error = Error;

    fn try_from(r: CrosstalkMapRepr) -> Result<Self> {
        let b1: Vec<(usize, f64)> = r.beam1.into_iter().collect();
        let b2: Vec<(usize, f64)> = r.beam2.into_iter().collect();
        CrosstalkMap::new(r.n_ions, (r.targets[0], r.targets[1]), &b1, &b2)
    }
}

impl From<CrosstalkMap> for CrosstalkMapRepr {
    fn from(m: CrosstalkMap) -> Self {
        let t = [m.targets.0, m.targets.1];
        let entries = |b: usize| {
            m.eps[b]
                .iter()
                .enumerate()
                .filter(|&(j, e)| j != t[b] && *e != 0.0)
                .map(|(j, &e)| (j, e))
                .collect()
        };
        CrosstalkMapRepr {
            n_ions: m.n_ions(),
            targets: t,
            beam1: entries(0),
            beam2: entries(1),
        }
    }
}

impl CrosstalkMap {
    pub fn new(
        n_ions: usize,
        targets: (usize, usize),
        beam1: &[(usize, f64)],
        beam2: &[(usize, f64)],
    ) -> Result<Self> {
        let (a, b) = targets;
        for i in [a, b] {
            if i >= n_ions {
                return Err(Error::IndexOutOfRange { index: i, n: n_ions });
            }
        }
        if a == b {
            return Err(Error::InvalidPair(a, b));
        }
        let mut eps = [vec![0.0; n_ions], vec![0.0; n_ions]];
        eps[0][a] = 1.0;
        eps[1][b] = 1.0;
        for (beam, (own, entries)) in [(a, beam1), (b, beam2)].into_iter().enumerate() {
            for &(j, e) in entries {
                if j >= n_ions {
                    return Err(Error::IndexOutOfRange { index: j, n: n_ions });
                }
                if j == own {
                    return Err(Error::InvalidInput(format!(
                        "beam {} has no crosstalk entry at its own target {j}",
                        beam + 1
                    )));
                }
                check_epsilon(e)?;
                eps[beam][j] = e;
            }
        }
        Ok(CrosstalkMap { targets, eps })
    }

    /// No spillover at all.
    pub fn zero(n_ions: usize, targets: (usize, usize)) -> Result<Self> {
        Self::new(n_ions, targets, &[], &[])
    }

    /// Collective-gate echo configuration: targets 1 and 2 of a 5-ion chain.
    /// Entries bounded from above by a measurement limit are stored at half
    /// the bound.
    pub fn table_i() -> Self {
        Self::new(
            5,
            (1, 2),
            &[(0, 0.033), (2, 0.040), (3, 0.016), (4, 0.0025)],
            &[(0, 0.036), (1, 0.020), (3, 0.035), (4, 0.0025)],
        )
        .expect("valid preset")
    }

    /// Individual-gate echo configuration: targets 1 and 3 of a 5-ion chain.
    /// Entries bounded from above by a measurement limit are stored at half
    /// the bound.
    pub fn table_ii() -> Self {
        Self::new(
            5,
            (1, 3),
            &[(0, 0.026), (2, 0.024), (3, 0.005), (4, 0.0005)],
            &[(0, 0.001), (1, 0.013), (2, 0.019), (4, 0.016)],
        )
        .expect("valid preset")
    }

    /// `"tableI"` or `"tableII"`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "tableI" => Ok(Self::table_i()),
            "tableII" => Ok(Self::table_ii()),
            other => Err(Error::Config(format!(
                "unknown crosstalk preset {other:?} (expected tableI or tableII)"
            ))),
        }
    }

    pub fn n_ions(&self) -> usize {
        self.eps[0].len()
    }

    pub fn targets(&self) -> (usize, usize) {
        self.targets
    }

    pub fn is_target(&self, ion: usize) -> bool {
        ion == self.targets.0 || ion == self.targets.1
    }

    /// Non-target ions in ascending order.
    pub fn spectators(&self) -> Vec<usize> {
        (0..self.n_ions()).filter(|&j| !self.is_target(j)).collect()
    }

    /// `beam` is 0 for the first target's beam and 1 for the second.
    pub fn epsilon(&self, beam: usize, ion: usize) -> f64 {
        self.eps[beam][ion]
    }

    pub fn set_epsilon(&mut self, beam: usize, ion: usize, value: f64) -> Result<()> {
        let n = self.n_ions();
        if beam > 1 {
            return Err(Error::InvalidInput(format!("beam index {beam} (expected 0 or 1)")));
        }
        if ion >= n {
            return Err(Error::IndexOutOfRange { index: ion, n });
        }
        let own = if beam == 0 { self.targets.0 } else { self.targets.1 };
        if ion == own {
            return Err(Error::InvalidInput("cannot set a beam's own-target amplitude".into()));
        }
        check_epsilon(value)?;
        self.eps[beam][ion] = value;
        Ok(())
    }

    /// Every spillover entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = self.clone();
        for beam in 0..2 {
            let own = if beam == 0 { self.targets.0 } else { self.targets.1 };
            for j in (0..self.n_ions()).filter(|&j| j != own) {
                let e = self.eps[beam][j] * factor;
                check_epsilon(e)?;
                out.eps[beam][j] = e;
            }
        }
        Ok(out)
    }

    /// True when no beam spills onto any other ion.
    pub fn is_zero(&self) -> bool {
        (0..self.n_ions()).all(|j| {
            (j == self.targets.0 || self.eps[0][j] == 0.0)
                && (j == self.targets.1 || self.eps[1][j] == 0.0)
        })
    }
}

fn check_epsilon(e: f64) -> Result<()> {
    if !(e.is_finite() && (0.0..=MAX_EPSILON).contains(&e)) {
        return Err(Error::InvalidInput(format!(
            "crosstalk amplitude {e} outside [0, {MAX_EPSILON}]"
        )));
    }
    Ok(())
}

/// Combined spillover field at a spectator: Rabi amplitude and spin axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectatorDrive {
    pub omega: f64,
    pub phi: f64,
}

/// `ε₁Ω₁ + ε₂Ω₂ e^{iφ_beam}` as magnitude and phase in `[0, 2π)`; the phase
/// of a vanishing sum is 0.
pub fn effective_spectator_drive(
    eps1: f64,
    eps2: f64,
    omega1: f64,
    omega2: f64,
    phi_beam: f64,
) -> SpectatorDrive {
    let z = C64::new(eps1 * omega1, 0.0) + C64::from_polar(eps2 * omega2, phi_beam);
    let omega = z.norm();
    let scale = (eps1 * omega1).abs() + (eps2 * omega2).abs();
    if omega <= 1e-14 * scale || omega == 0.0 {
        return SpectatorDrive { omega: 0.0, phi: 0.0 };
    }
    let phi = z.arg().rem_euclid(TAU);
    SpectatorDrive {
        omega,
        phi: if phi >= TAU { 0.0 } else { phi },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectatorTerm {
    pub ion: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub phi: f64,
}

/// Spectator–spectator interaction `exp(-i θ/2 σ_{φa} σ_{φb})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectatorPair {
    pub a: usize,
    pub b: usize,
    pub theta: f64,
}

/// Parameters of one crosstalk-dressed MS gate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkGateAngles {
    pub theta: f64,
    pub spectator_terms: Vec<SpectatorTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spectator_pairs: Vec<SpectatorPair>,
}

impl CrosstalkGateAngles {
    pub fn ideal(theta: f64) -> Self {
        CrosstalkGateAngles {
            theta,
            ..Default::default()
        }
    }

    /// Every spectator axis advanced by `delta`.
    pub fn with_phase_offset(mut self, delta: f64) -> Self {
        for t in &mut self.spectator_terms {
            t.phi = (t.phi + delta).rem_euclid(TAU);
        }
        self
    }

    fn axis_of(&self, ion: usize) -> f64 {
        self.spectator_terms
            .iter()
            .find(|t| t.ion == ion)
            .map_or(0.0, |t| t.phi)
    }

    fn check(&self, n: usize, targets: (usize, usize)) -> Result<()> {
        let (a, b) = targets;
        for i in [a, b] {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
        }
        if a == b {
            return Err(Error::InvalidPair(a, b));
        }
        let mut seen = Vec::with_capacity(self.spectator_terms.len());
        for t in &self.spectator_terms {
            if t.ion >= n {
                return Err(Error::IndexOutOfRange { index: t.ion, n });
            }
            if t.ion == a || t.ion == b {
                return Err(Error::IndexClash(t.ion));
            }
            if seen.contains(&t.ion) {
                return Err(Error::DuplicateIndex(t.ion));
            }
            seen.push(t.ion);
        }
        for p in &self.spectator_pairs {
            for i in [p.a, p.b] {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, n });
                }
                if i == a || i == b {
                    return Err(Error::IndexClash(i));
                }
            }
            if p.a == p.b {
                return Err(Error::InvalidPair(p.a, p.b));
            }
        }
        Ok(())
    }

    /// Applies the gate to `state` in place.
    pub fn apply(&self, state: &mut QubitState, targets: (usize, usize)) -> Result<()> {
        self.check(state.n_qubits(), targets)?;
        let (a, b) = targets;
        state.apply_pauli_exp(self.theta, &[(a, 0.0), (b, 0.0)]);
        for t in &self.spectator_terms {
            state.apply_pauli_exp(0.5 * t.theta1, &[(a, 0.0), (t.ion, t.phi)]);
            state.apply_pauli_exp(0.5 * t.theta2, &[(b, 0.0), (t.ion, t.phi)]);
        }
        for p in &self.spectator_pairs {
            state.apply_pauli_exp(0.5 * p.theta, &[(p.a, self.axis_of(p.a)), (p.b, self.axis_of(p.b))]);
        }
        Ok(())
    }
}

/// Dense unitary of a crosstalk-dressed MS gate on `n` qubits.
pub fn build_crosstalk_unitary(
    angles: &CrosstalkGateAngles,
    n: usize,
    targets: (usize, usize),
) -> Result<Operator> {
    angles.check(n, targets)?;
    let (a, b) = targets;
    let mut u = Operator::pauli_exp(n, angles.theta, &[(a, 0.0), (b, 0.0)])?;
    for t in &angles.spectator_terms {
        let g1 = Operator::pauli_exp(n, 0.5 * t.theta1, &[(a, 0.0), (t.ion, t.phi)])?;
        let g2 = Operator::pauli_exp(n, 0.5 * t.theta2, &[(b, 0.0), (t.ion, t.phi)])?;
        u = &(&g2 * &g1) * &u;
    }
    for p in &angles.spectator_pairs {
        let g = Operator::pauli_exp(
            n,
            0.5 * p.theta,
            &[(p.a, angles.axis_of(p.a)), (p.b, angles.axis_of(p.b))],
        )?;
        u = &g * &u;
    }
    Ok(u)
}

/// `¼(1 + cos θ₁)(1 + cos θ₂)`
pub fn bell_fidelity_analytic(theta1: f64, theta2: f64) -> f64 {
    0.25 * (1.0 + theta1.cos()) * (1.0 + theta2.cos())
}

/// `½(1 − cos θ₁ cos θ₂)`
pub fn spectator_population_analytic(theta1: f64, theta2: f64) -> f64 {
    0.5 * (1.0 - theta1.cos() * theta2.cos())
}

/// Bell fidelity of the targets with any number of spectators starting in
/// `|0⟩`, given each spectator's `(θ₁, θ₂)`. Reduces to
/// [`bell_fidelity_analytic`] for one spectator.
pub fn bell_fidelity_analytic_multi(terms: &[(f64, f64)]) -> f64 {
    let weight = |d: i32| if d == 0 { 2.0 } else { 1.0 };
    let mut sum = 0.0;
    for d1 in -1..=1 {
        for d2 in -1..=1 {
            let prod: f64 = terms
                .iter()
                .map(|&(t1, t2)| (t1 * d1 as f64 + t2 * d2 as f64).cos())
                .product();
            sum += weight(d1) * weight(d2) * prod;
        }
    }
    sum / 16.0
}

/// Pair kernels of an FM pulse on a mode structure.
///
/// `θ_{i,j} = Ω_i Ω_j K_{i,j}` with `K_{i,j} = ½ Σ_k η_{i,k} η_{j,k} I_k` and
/// `I_k` the double phase integral of mode `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkPhysics {
    kernel: Vec<Vec<f64>>,
    /// `max_k |η_{j,k}| |∫e^{iφ_k}| / 2` per ion: `|α|` per unit Rabi rate.
    closure: Vec<f64>,
    /// `Ω₂ / Ω₁`
    pub omega_ratio: f64,
    /// Retain spectator–spectator interactions.
    pub keep_spectator_pairs: bool,
}

impl CrosstalkPhysics {
    pub fn new(modes: &ModeStructure, pulse: &FmPulseSequence) -> Self {
        let n = modes.n_ions();
        let freqs = modes.frequencies();
        let integrals: Vec<f64> = freqs.iter().map(|&w| phase_integral(pulse, w)).collect();
        let loops: Vec<f64> = freqs.iter().map(|&w| closure_integral(pulse, w).norm()).collect();
        let mut kernel = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                kernel[i][j] = 0.5
                    * (0..freqs.len())
                        .map(|k| modes.eta(i, k) * modes.eta(j, k) * integrals[k])
                        .sum::<f64>();
            }
        }
        let closure = (0..n)
            .map(|j| {
                (0..freqs.len())
                    .map(|k| 0.5 * modes.eta(j, k).abs() * loops[k])
                    .fold(0.0, f64::max)
            })
            .collect();
        CrosstalkPhysics {
            kernel,
            closure,
            omega_ratio: 1.0,
            keep_spectator_pairs: false,
        }
    }

    /// Every ion pair couples equally and every mode closes.
    pub fn uniform(n_ions: usize) -> Self {
        CrosstalkPhysics {
            kernel: vec![vec![1.0; n_ions]; n_ions],
            closure: vec![0.0; n_ions],
            omega_ratio: 1.0,
            keep_spectator_pairs: false,
        }
    }

    pub fn n_ions(&self) -> usize {
        self.kernel.len()
    }

    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        self.kernel[i][j]
    }

    /// Largest `|α_{j,k}|` of ion `j` driven at Rabi rate `omega`.
    pub fn max_displacement(&self, ion: usize, omega: f64) -> f64 {
        self.closure[ion] * omega.abs()
    }

    fn check_map(&self, map: &CrosstalkMap) -> Result<()> {
        if map.n_ions() != self.n_ions() {
            return Err(Error::DimensionMismatch {
                expected: self.n_ions(),
                found: map.n_ions(),
            });
        }
        Ok(())
    }

    /// Gate angles for absolute Rabi rates of the two target beams.
    pub fn angles(
        &self,
        map: &CrosstalkMap,
        omega1: f64,
        omega2: f64,
        phi_beam: f64,
    ) -> Result<CrosstalkGateAngles> {
        self.check_map(map)?;
        let (a, b) = map.targets();
        let residual = self
            .max_displacement(a, omega1)
            .max(self.max_displacement(b, omega2));
        if residual >= CLOSURE_TOLERANCE {
            return Err(Error::NonClosedPulse { residual });
        }
        let mut drives = Vec::new();
        let mut out = CrosstalkGateAngles::ideal(omega1 * omega2 * self.kernel[a][b]);
        for j in map.spectators() {
            let (e1, e2) = (map.epsilon(0, j), map.epsilon(1, j));
            if e1 == 0.0 && e2 == 0.0 {
                continue;
            }
            let d = effective_spectator_drive(e1, e2, omega1, omega2, phi_beam);
            out.spectator_terms.push(SpectatorTerm {
                ion: j,
                theta1: 2.0 * omega1 * d.omega * self.kernel[a][j],
                theta2: 2.0 * omega2 * d.omega * self.kernel[b][j],
                phi: d.phi,
            });
            drives.push((j, d.omega));
        }
        if self.keep_spectator_pairs {
            for (x, &(ja, oa)) in drives.iter().enumerate() {
                for &(jb, ob) in &drives[x + 1..] {
                    out.spectator_pairs.push(SpectatorPair {
                        a: ja,
                        b: jb,
                        theta: 2.0 * oa * ob * self.kernel[ja][jb],
                    });
                }
            }
        }
        Ok(out)
    }

    /// Gate angles for a gate calibrated to give the targets exactly
    /// `theta`: spectator angles are scaled from the physics by
    /// `θ / θ_targets`, independent of the absolute Rabi rate.
    pub fn calibrated(&self, map: &CrosstalkMap, theta: f64, phi_beam: f64) -> Result<CrosstalkGateAngles> {
        self.check_map(map)?;
        let (a, b) = map.targets();
        let unit = self.omega_ratio * self.kernel[a][b];
        if unit == 0.0 {
            return Err(Error::InvalidInput("pulse produces no target-pair interaction".into()));
        }
        let omega1 = (theta / unit).abs().sqrt();
        let omega2 = omega1 * self.omega_ratio;
        // an opposite-sign kernel is compensated by a π shift of the second
        // beam's phase, which reverses ion b's spin operator
        let flip = theta / unit < 0.0;
        let phi = if flip { phi_beam + PI } else { phi_beam };
        let mut out = self.angles(map, omega1, omega2, phi)?;
        out.theta = theta;
        if flip {
            for t in &mut out.spectator_terms {
                t.theta2 = -t.theta2;
            }
        }
        Ok(out)
    }
}

/// Gate angles from first principles: builds the pair kernels of `pulse`
/// on `modes`, checks that the pulse closes the target displacements and
/// evaluates every target–spectator angle.
pub fn crosstalk_angles(
    map: &CrosstalkMap,
    modes: &ModeStructure,
    pulse: &FmPulseSequence,
    omega1: f64,
    omega2: f64,
    phi_beam: f64,
) -> Result<CrosstalkGateAngles> {
    if !(omega1.is_finite() && omega2.is_finite() && omega1 > 0.0 && omega2 > 0.0 && phi_beam.is_finite()) {
        return Err(Error::InvalidInput("Rabi rates must be positive and phases finite".into()));
    }
    CrosstalkPhysics::new(modes, pulse).angles(map, omega1, omega2, phi_beam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{apply, reduced_populations};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn drive_interference_cases() {
        let d = effective_spectator_drive(0.02, 0.02, 1.0, 1.0, 0.0);
        assert!((d.omega - 0.04).abs() < 1e-15 && d.phi == 0.0);
        let d = effective_spectator_drive(0.02, 0.02, 1.0, 1.0, PI);
        assert_eq!((d.omega, d.phi), (0.0, 0.0));
        let d = effective_spectator_drive(0.03, 0.04, 1.0, 1.0, FRAC_PI_2);
        assert!((d.omega - 0.05).abs() < 1e-15);
        assert!((d.phi - 0.04f64.atan2(0.03)).abs() < 1e-15);
        let d = effective_spectator_drive(0.0, 0.01, 1.0, 1.0, -FRAC_PI_2);
        assert!((d.phi - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn presets_and_validation() {
        let m = CrosstalkMap::table_i();
        assert_eq!(m.targets(), (1, 2));
        assert_eq!(m.epsilon(0, 1), 1.0);
        assert_eq!(m.epsilon(1, 3), 0.035);
        assert_eq!(m.spectators(), vec![0, 3, 4]);
        assert_eq!(CrosstalkMap::table_ii().spectators(), vec![0, 2, 4]);
        assert!(CrosstalkMap::preset("tableIII").is_err());
        assert!(CrosstalkMap::new(3, (0, 1), &[(0, 0.1)], &[]).is_err());
        assert!(CrosstalkMap::new(3, (0, 1), &[(2, 0.3)], &[]).is_err());
        assert!(CrosstalkMap::new(3, (0, 0), &[], &[]).is_err());
    }

    #[test]
    fn map_json_round_trip() {
        let m = CrosstalkMap::table_ii();
        let s = serde_json::to_string(&m).unwrap();
        let back: CrosstalkMap = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn spectator_half_angle_gives_half_fidelity() {
        let angles = CrosstalkGateAngles {
            theta: FRAC_PI_4,
            spectator_terms: vec![SpectatorTerm { ion: 2, theta1: FRAC_PI_2, theta2: 0.0, phi: 0.0 }],
            spectator_pairs: vec![],
        };
        let u = build_crosstalk_unitary(&angles, 3, (0, 1)).unwrap();
        let psi = apply(&u, &QubitState::zero(3)).unwrap();
        let rho = psi.reduced_density(&[0, 1]).unwrap();
        // |B⟩ = (|00⟩ − i|11⟩)/√2
        let bell = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -FRAC_1_SQRT_2)];
        let mut f = C64::new(0.0, 0.0);
        for r in 0..4 {
            for c in 0..4 {
                f += bell[r].conj() * rho[r * 4 + c] * bell[c];
            }
        }
        assert!((f.re - 0.5).abs() < 1e-12);
        assert!((f.re - bell_fidelity_analytic(FRAC_PI_2, 0.0)).abs() < 1e-12);
        let pops = reduced_populations(&psi, &[0, 1]).unwrap();
        assert!((pops[1] + pops[2] - spectator_population_analytic(FRAC_PI_2, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn in_place_application_matches_dense_unitary() {
        let angles = CrosstalkGateAngles {
            theta: 0.7,
            spectator_terms: vec![
                SpectatorTerm { ion: 0, theta1: 0.3, theta2: -0.2, phi: 1.1 },
                SpectatorTerm { ion: 3, theta1: 0.05, theta2: 0.4, phi: 4.0 },
            ],
            spectator_pairs: vec![SpectatorPair { a: 0, b: 3, theta: 0.01 }],
        };
        let u = build_crosstalk_unitary(&angles, 4, (1, 2)).unwrap();
        assert!(u.unitarity_error() < 1e-13);
        let start = QubitState::basis(4, 5).unwrap();
        let dense = apply(&u, &start).unwrap();
        let mut fast = start.clone();
        angles.apply(&mut fast, (1, 2)).unwrap();
        assert!((dense.inner(&fast).norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn spectator_on_target_is_rejected() {
        let angles = CrosstalkGateAngles {
            theta: 0.7,
            spectator_terms: vec![SpectatorTerm { ion: 1, theta1: 0.3, theta2: 0.0, phi: 0.0 }],
            spectator_pairs: vec![],
        };
        assert!(matches!(build_crosstalk_unitary(&angles, 3, (0, 1)), Err(Error::IndexClash(1))));
    }

    #[test]
    fn multi_spectator_fidelity_reduces_to_single() {
        for (a, b) in [(0.3, 1.2), (PI, 0.1), (0.0, 0.0)] {
            let multi = bell_fidelity_analytic_multi(&[(a, b)]);
            assert!((multi - bell_fidelity_analytic(a, b)).abs() < 1e-15);
        }
        assert!((bell_fidelity_analytic_multi(&[]) - 1.0).abs() < 1e-15);
    }
}
