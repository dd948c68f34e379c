//! Statevector execution of circuits under the crosstalk model.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuit::{sk1_expand, Circuit, GateOp};
use crate::crosstalk::{CrosstalkMap, CrosstalkPhysics};
use crate::error::{Error, Result};
use crate::spin::QubitState;

/// Supplies the beam phase and the spectator-axis offset seen by each MS
/// gate, in execution order.
pub trait GateEnvironment {
    /// Called once per MS gate; `fraction` is the gate's angle in units of
    /// `π/4`. Returns `(φ_beam, spectator phase offset)`.
    fn next_ms(&mut self, fraction: f64) -> (f64, f64);
}

/// Fixed beam phase with a light shift accumulating gate by gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaticEnvironment {
    pub phi_beam: f64,
    pub light_shift_per_gate: f64,
    accumulated: f64,
}

impl StaticEnvironment {
    pub fn new(phi_beam: f64, light_shift_per_gate: f64) -> Self {
        StaticEnvironment {
            phi_beam,
            light_shift_per_gate,
            accumulated: 0.0,
        }
    }
}

impl GateEnvironment for StaticEnvironment {
    fn next_ms(&mut self, fraction: f64) -> (f64, f64) {
        let offset = self.accumulated;
        self.accumulated += self.light_shift_per_gate * fraction;
        (self.phi_beam, offset)
    }
}

/// Crosstalk map, pair kernels and single-qubit spill settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitModel {
    pub map: CrosstalkMap,
    pub physics: CrosstalkPhysics,
    /// Single-qubit pulses spill onto neighbours with the map's amplitudes.
    pub sq_crosstalk: bool,
    /// Axis offset of spilled single-qubit rotations.
    pub sq_phase_offset: f64,
}

impl CircuitModel {
    pub fn new(map: CrosstalkMap, physics: CrosstalkPhysics) -> Result<Self> {
        if map.n_ions() != physics.n_ions() {
            return Err(Error::DimensionMismatch {
                expected: map.n_ions(),
                found: physics.n_ions(),
            });
        }
        Ok(CircuitModel {
            map,
            physics,
            sq_crosstalk: true,
            sq_phase_offset: 0.0,
        })
    }

    /// Every ion pair couples equally, so a spectator's angle is
    /// `2|ε₁ + ε₂ e^{iφ_beam}| θ`.
    pub fn uniform(map: CrosstalkMap) -> Self {
        let physics = CrosstalkPhysics::uniform(map.n_ions());
        CircuitModel::new(map, physics).expect("sizes agree")
    }

    fn spill(&self, state: &mut QubitState, ion: usize, phi: f64, angle: f64) {
        if !self.sq_crosstalk {
            return;
        }
        let (a, b) = self.map.targets();
        let n = self.map.n_ions();
        // a non-target ion is reached by steering the nearest target's beam
        let (beam, own) = if ion == a {
            (0, a)
        } else if ion == b {
            (1, b)
        } else if ion.abs_diff(a) <= ion.abs_diff(b) {
            (0, a)
        } else {
            (1, b)
        };
        for j in (0..n).filter(|&j| j != ion) {
            let src = own as isize + j as isize - ion as isize;
            if !(0..n as isize).contains(&src) {
                continue;
            }
            let eps = self.map.epsilon(beam, src as usize);
            if eps > 0.0 {
                state.apply_rotation(j, phi + self.sq_phase_offset, eps * angle);
            }
        }
    }

    fn rotate(&self, state: &mut QubitState, ion: usize, phi: f64, angle: f64) {
        state.apply_rotation(ion, phi, angle);
        self.spill(state, ion, phi, angle);
    }
}

/// Outcome of one circuit execution.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub state: QubitState,
    /// `P(|1⟩)` per ion.
    pub populations: Vec<f64>,
    pub ms_gates: usize,
    pub sq_pulses: usize,
    /// Beam phase seen by the last MS gate.
    pub last_phi_beam: Option<f64>,
}

pub fn simulate_circuit(
    circuit: &Circuit,
    model: &CircuitModel,
    env: &mut dyn GateEnvironment,
    initial: &QubitState,
) -> Result<RunRecord> {
    let n = circuit.n_qubits();
    for found in [model.map.n_ions(), initial.n_qubits()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let (ta, tb) = model.map.targets();
    let mut state = initial.clone();
    let mut last_phi_beam = None;
    let (mut ms_gates, mut sq_pulses) = (0, 0);
    for op in circuit.ops() {
        match *op {
            GateOp::Ms { theta, targets } => {
                if targets != (ta, tb) && targets != (tb, ta) {
                    return Err(Error::InvalidCircuit(format!(
                        "MS gate on {targets:?} but the beams address ({ta}, {tb})"
                    )));
                }
                let (phi_beam, offset) = env.next_ms(theta.abs() / FRAC_PI_4);
                let angles = model
                    .physics
                    .calibrated(&model.map, theta, phi_beam)?
                    .with_phase_offset(offset);
                angles.apply(&mut state, (ta, tb))?;
                last_phi_beam = Some(phi_beam);
                ms_gates += 1;
            }
            GateOp::Rotation { ion, phi, angle } => {
                model.rotate(&mut state, ion, phi, angle);
                sq_pulses += 1;
            }
            GateOp::Sk1 { ion, phi, angle } => {
                for part in sk1_expand(ion, phi, angle)? {
                    if let GateOp::Rotation { ion, phi, angle } = part {
                        model.rotate(&mut state, ion, phi, angle);
                    }
                }
                sq_pulses += 1;
            }
            GateOp::Phase { ion, angle } => state.apply_z_rotation(ion, angle),
            GateOp::Barrier => {}
        }
    }
    Ok(RunRecord {
        populations: state.excitations(),
        state,
        ms_gates,
        sq_pulses,
        last_phi_beam,
    })
}

/// `cos θ|00⟩ − i sin θ|11⟩`, the action of `exp(-iθXX)` on `|00⟩`.
pub fn ideal_target_state(total_theta: f64) -> [C64; 4] {
    [
        C64::new(total_theta.cos(), 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, -total_theta.sin()),
    ]
}

/// Overlap of the targets' reduced state with [`ideal_target_state`].
pub fn target_fidelity(state: &QubitState, targets: (usize, usize), total_theta: f64) -> Result<f64> {
    let rho = state.reduced_density(&[targets.0, targets.1])?;
    let psi = ideal_target_state(total_theta);
    let mut f = C64::new(0.0, 0.0);
    for r in 0..4 {
        for c in 0..4 {
            f += psi[r].conj() * rho[r * 4 + c] * psi[c];
        }
    }
    Ok(f.re.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        local_suppression_collective_circuit, local_suppression_individual_circuit, neighbor_suppression_circuit,
        unsuppressed_circuit, EchoOptions,
    };

    fn run(c: &Circuit, model: &CircuitModel, phi: f64, ls: f64) -> RunRecord {
        simulate_circuit(c, model, &mut StaticEnvironment::new(phi, ls), &QubitState::zero(c.n_qubits())).unwrap()
    }

    #[test]
    fn empty_circuit_leaves_state_alone() {
        let model = CircuitModel::uniform(CrosstalkMap::table_i());
        let c = Circuit::new(5).unwrap();
        let r = run(&c, &model, 0.3, 0.0);
        assert_eq!(r.state, QubitState::zero(5));
        assert_eq!(r.last_phi_beam, None);
    }

    #[test]
    fn ideal_gate_gives_unit_fidelity() {
        let model = CircuitModel::uniform(CrosstalkMap::zero(3, (0, 1)).unwrap());
        let c = unsuppressed_circuit(1, (0, 1), 3).unwrap();
        let r = run(&c, &model, 1.0, 0.0);
        assert!((target_fidelity(&r.state, (0, 1), FRAC_PI_4).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn echoes_cancel_mscrosstalk_without_sq_spill() {
        let mut model = CircuitModel::uniform(CrosstalkMap::table_i());
        model.sq_crosstalk = false;
        let o = EchoOptions::default();
        let n = 21;
        let total = n as f64 * FRAC_PI_4;
        for c in [
            local_suppression_collective_circuit(n, (1, 2), 5, &o).unwrap(),
            neighbor_suppression_circuit(n, &[0, 3, 4], (1, 2), 5, &o).unwrap(),
            local_suppression_individual_circuit(n, (1, 2), 5, &o).unwrap(),
        ] {
            let r = run(&c, &model, 0.7, 0.0);
            for j in [0, 3, 4] {
                assert!(r.populations[j] < 1e-20, "{}", r.populations[j]);
            }
            assert!(1.0 - target_fidelity(&r.state, (1, 2), total).unwrap() < 1e-12);
        }
        let bare = run(&unsuppressed_circuit(n, (1, 2), 5).unwrap(), &model, 0.7, 0.0);
        assert!(bare.populations[3] > 1e-3);
    }

    #[test]
    fn wrong_pair_is_rejected() {
        let model = CircuitModel::uniform(CrosstalkMap::table_i());
        let c = unsuppressed_circuit(1, (0, 1), 5).unwrap();
        let err = simulate_circuit(&c, &model, &mut StaticEnvironment::new(0.0, 0.0), &QubitState::zero(5));
        assert!(matches!(err, Err(Error::InvalidCircuit(_))));
    }
}
