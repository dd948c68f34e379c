//! Gate-level circuits and the echo-based crosstalk suppression layouts.
//!
//! Conventions: `Rotation { phi, angle }` is `exp(-i angle/2 σ_φ)`, so
//! `Y(π)` is `Rotation { phi: π/2, angle: π }`; `Phase { angle }` is the
//! virtual `exp(-i angle/2 Z)`; `Ms { theta }` is `exp(-iθ XX)` on the
//! target pair before crosstalk dressing.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI, TAU};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{Operator, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateOp {
    Ms { theta: f64, targets: (usize, usize) },
    Rotation { ion: usize, phi: f64, angle: f64 },
    Sk1 { ion: usize, phi: f64, angle: f64 },
    Phase { ion: usize, angle: f64 },
    Barrier,
}

impl GateOp {
    fn ions(&self) -> Vec<usize> {
        match *self {
            GateOp::Ms { targets: (a, b), .. } => vec![a, b],
            GateOp::Rotation { ion, .. } | GateOp::Sk1 { ion, .. } | GateOp::Phase { ion, .. } => vec![ion],
            GateOp::Barrier => vec![],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        for i in self.ions() {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
        }
        match *self {
            GateOp::Ms { theta, targets: (a, b) } => {
                if a == b {
                    return Err(Error::InvalidPair(a, b));
                }
                if !theta.is_finite() {
                    return Err(Error::AngleOutOfRange(theta));
                }
            }
            GateOp::Rotation { phi, angle, .. } => {
                if !(phi.is_finite() && angle.is_finite()) {
                    return Err(Error::AngleOutOfRange(angle));
                }
            }
            GateOp::Sk1 { phi, angle, .. } => {
                if !phi.is_finite() || !(angle > 0.0 && angle < TAU) {
                    return Err(Error::AngleOutOfRange(angle));
                }
            }
            GateOp::Phase { angle, .. } => {
                if !angle.is_finite() {
                    return Err(Error::AngleOutOfRange(angle));
                }
            }
            GateOp::Barrier => {}
        }
        Ok(())
    }
}

/// Ordered gate list on `n` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidInput(format!("{n} qubits (need 1..={MAX_QUBITS})")));
        }
        Ok(Circuit { n, ops: Vec::new() })
    }

    pub fn from_ops(n: usize, ops: Vec<GateOp>) -> Result<Self> {
        let mut c = Self::new(n)?;
        for op in ops {
            c.push(op)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        op.check(self.n)?;
        self.ops.push(op);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Sum of MS angles.
    pub fn total_ms_angle(&self) -> f64 {
        self.ops
            .iter()
            .map(|op| match op {
                GateOp::Ms { theta, .. } => *theta,
                _ => 0.0,
            })
            .sum()
    }

    pub fn count_ms(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, GateOp::Ms { .. })).count()
    }

    /// Physical single-qubit pulses (an SK1 composite counts once).
    pub fn count_sq_pulses(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, GateOp::Rotation { .. } | GateOp::Sk1 { .. }))
            .count()
    }

    /// Every SK1 pulse replaced by its three rotations.
    pub fn expand_sk1(&self) -> Circuit {
        let ops = self
            .ops
            .iter()
            .flat_map(|op| match *op {
                GateOp::Sk1 { ion, phi, angle } => sk1_expand(ion, phi, angle).expect("checked on push").to_vec(),
                other => vec![other],
            })
            .collect();
        Circuit { n: self.n, ops }
    }

    /// Line-oriented text form, one op per line:
    /// `ms a b theta`, `rot ion phi angle`, `sk1 ion phi angle`,
    /// `phase ion angle`, `barrier`, preceded by `qubits n`.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.n);
        for op in &self.ops {
            let _ = match *op {
                GateOp::Ms { theta, targets: (a, b) } => writeln!(out, "ms {a} {b} {theta:?}"),
                GateOp::Rotation { ion, phi, angle } => writeln!(out, "rot {ion} {phi:?} {angle:?}"),
                GateOp::Sk1 { ion, phi, angle } => writeln!(out, "sk1 {ion} {phi:?} {angle:?}"),
                GateOp::Phase { ion, angle } => writeln!(out, "phase {ion} {angle:?}"),
                GateOp::Barrier => writeln!(out, "barrier"),
            };
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut circuit: Option<Circuit> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::InvalidCircuit(format!("line {}: {msg}", lineno + 1));
            let cols: Vec<&str> = line.split_whitespace().collect();
            let uint = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad index {s:?}")));
            let float = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
            let arity = |k: usize| {
                if cols.len() == k + 1 {
                    Ok(())
                } else {
                    Err(bad(&format!("{} takes {k} arguments", cols[0])))
                }
            };
            if cols[0] == "qubits" {
                arity(1)?;
                if circuit.is_some() {
                    return Err(bad("qubit count given twice"));
                }
                circuit = Some(Circuit::new(uint(cols[1])?)?);
                continue;
            }
            let c = circuit.as_mut().ok_or_else(|| bad("ops before the qubits line"))?;
            let op = match cols[0] {
                "ms" => {
                    arity(3)?;
                    GateOp::Ms { targets: (uint(cols[1])?, uint(cols[2])?), theta: float(cols[3])? }
                }
                "rot" => {
                    arity(3)?;
                    GateOp::Rotation { ion: uint(cols[1])?, phi: float(cols[2])?, angle: float(cols[3])? }
                }
                "sk1" => {
                    arity(3)?;
                    GateOp::Sk1 { ion: uint(cols[1])?, phi: float(cols[2])?, angle: float(cols[3])? }
                }
                "phase" => {
                    arity(2)?;
                    GateOp::Phase { ion: uint(cols[1])?, angle: float(cols[2])? }
                }
                "barrier" => {
                    arity(0)?;
                    GateOp::Barrier
                }
                other => return Err(bad(&format!("unknown op {other:?}"))),
            };
            c.push(op).map_err(|e| bad(&e.to_string()))?;
        }
        circuit.ok_or_else(|| Error::InvalidCircuit("missing qubits line".into()))
    }
}

/// SK1 composite: `angle` about `phi`, then 2π about `phi + φ₁`, then 2π
/// about `phi − φ₁`, with `φ₁ = arccos(−angle / 4π)`.
pub fn sk1_expand(ion: usize, phi: f64, angle: f64) -> Result<[GateOp; 3]> {
    if !(angle > 0.0 && angle < TAU) {
        return Err(Error::AngleOutOfRange(angle));
    }
    let phi1 = (-angle / (2.0 * TAU)).acos();
    Ok([
        GateOp::Rotation { ion, phi, angle },
        GateOp::Rotation { ion, phi: phi + phi1, angle: TAU },
        GateOp::Rotation { ion, phi: phi - phi1, angle: TAU },
    ])
}

/// Net rotation angle (in `[0, π]` after removing the `2π` ambiguity) left
/// on a spectator that sees every rotation of a pulse scaled by `eps`.
pub fn spectator_rotation_angle(pulses: &[GateOp], eps: f64) -> f64 {
    let mut u = Operator::identity(1);
    for op in pulses {
        if let GateOp::Rotation { phi, angle, .. } = *op {
            let r = Operator::pauli_exp(1, 0.5 * eps * angle, &[(0, phi)]).expect("one qubit");
            u = &r * &u;
        }
    }
    let half_trace = (u.trace() * 0.5).re.abs().min(1.0);
    2.0 * half_trace.acos()
}

/// How the circuit ends when the total angle is split around two echoes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalGate {
    /// Each half carries `⌊n/2⌋ × XX(π/4) + XX(π/8)`, so the echo pair
    /// brackets the whole angle and cancellation is exact.
    #[default]
    Echoed,
    /// `⌊n/2⌋` gates, echo, `⌊n/2⌋` gates, echo, then one bare `XX(π/4)`.
    Native,
}

/// Realisation of a `Z(π)` echo.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZEcho {
    /// `X(π) Y(π)`: a `Y(π)` pulse followed by an `X(π)` pulse.
    #[default]
    Composite,
    /// Frame update only.
    Virtual,
}

/// Echo axis used on spectators in the neighbor scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectatorEcho {
    #[default]
    Z,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EchoOptions {
    pub final_gate: FinalGate,
    pub sk1: bool,
    pub z_echo: ZEcho,
    pub spectator_echo: SpectatorEcho,
}

impl Default for EchoOptions {
    fn default() -> Self {
        EchoOptions {
            final_gate: FinalGate::Echoed,
            sk1: true,
            z_echo: ZEcho::Composite,
            spectator_echo: SpectatorEcho::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    None,
    Neighbor,
    LocalCollective,
    LocalIndividual,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::None, Scheme::Neighbor, Scheme::LocalCollective, Scheme::LocalIndividual];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::Neighbor => "neighbor",
            Scheme::LocalCollective => "local_collective",
            Scheme::LocalIndividual => "local_individual",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

fn pulse(ion: usize, phi: f64, angle: f64, sk1: bool) -> GateOp {
    if sk1 {
        GateOp::Sk1 { ion, phi, angle }
    } else {
        GateOp::Rotation { ion, phi, angle }
    }
}

fn push_y(c: &mut Circuit, ion: usize, opts: &EchoOptions) -> Result<()> {
    c.push(pulse(ion, FRAC_PI_2, PI, opts.sk1))
}

fn push_z(c: &mut Circuit, ion: usize, opts: &EchoOptions) -> Result<()> {
    match opts.z_echo {
        ZEcho::Composite => {
            c.push(pulse(ion, FRAC_PI_2, PI, opts.sk1))?;
            c.push(pulse(ion, 0.0, PI, opts.sk1))
        }
        ZEcho::Virtual => c.push(GateOp::Phase { ion, angle: PI }),
    }
}

fn check_targets(n_ions: usize, targets: (usize, usize)) -> Result<()> {
    for i in [targets.0, targets.1] {
        if i >= n_ions {
            return Err(Error::IndexOutOfRange { index: i, n: n_ions });
        }
    }
    if targets.0 == targets.1 {
        return Err(Error::InvalidPair(targets.0, targets.1));
    }
    Ok(())
}

/// `n_gates` sequential `XX(π/4)` with no echoes.
pub fn unsuppressed_circuit(n_gates: usize, targets: (usize, usize), n_ions: usize) -> Result<Circuit> {
    check_targets(n_ions, targets)?;
    let mut c = Circuit::new(n_ions)?;
    for _ in 0..n_gates {
        c.push(GateOp::Ms { theta: FRAC_PI_4, targets })?;
    }
    Ok(c)
}

fn collective(
    n_gates: usize,
    targets: (usize, usize),
    n_ions: usize,
    opts: &EchoOptions,
    echo: &dyn Fn(&mut Circuit) -> Result<()>,
) -> Result<Circuit> {
    check_targets(n_ions, targets)?;
    if n_gates == 0 || n_gates % 2 == 0 {
        return Err(Error::InvalidCircuit(format!(
            "collective echo layouts need an odd gate count, got {n_gates}"
        )));
    }
    let half = n_gates / 2;
    let mut c = Circuit::new(n_ions)?;
    if opts.final_gate == FinalGate::Native && n_gates == 1 {
        c.push(GateOp::Ms { theta: FRAC_PI_4, targets })?;
        return Ok(c);
    }
    for _ in 0..2 {
        for _ in 0..half {
            c.push(GateOp::Ms { theta: FRAC_PI_4, targets })?;
        }
        if opts.final_gate == FinalGate::Echoed {
            c.push(GateOp::Ms { theta: FRAC_PI_8, targets })?;
        }
        echo(&mut c)?;
    }
    if opts.final_gate == FinalGate::Native {
        c.push(GateOp::Ms { theta: FRAC_PI_4, targets })?;
    }
    Ok(c)
}

/// Echoes on the listed spectators between two halves of the gate sequence.
pub fn neighbor_suppression_circuit(
    n_gates: usize,
    spectators: &[usize],
    targets: (usize, usize),
    n_ions: usize,
    opts: &EchoOptions,
) -> Result<Circuit> {
    for (k, &j) in spectators.iter().enumerate() {
        if j >= n_ions {
            return Err(Error::IndexOutOfRange { index: j, n: n_ions });
        }
        if j == targets.0 || j == targets.1 {
            return Err(Error::IndexClash(j));
        }
        if spectators[..k].contains(&j) {
            return Err(Error::DuplicateIndex(j));
        }
    }
    collective(n_gates, targets, n_ions, opts, &|c| {
        for &j in spectators {
            match opts.spectator_echo {
                SpectatorEcho::Z => push_z(c, j, opts)?,
                SpectatorEcho::Y => push_y(c, j, opts)?,
            }
        }
        Ok(())
    })
}

/// `Y(π)` echoes on both targets between two halves of the gate sequence.
pub fn local_suppression_collective_circuit(
    n_gates: usize,
    targets: (usize, usize),
    n_ions: usize,
    opts: &EchoOptions,
) -> Result<Circuit> {
    collective(n_gates, targets, n_ions, opts, &|c| {
        push_y(c, targets.0, opts)?;
        push_y(c, targets.1, opts)
    })
}

/// Every `XX(π/4)` becomes `XX(π/8)`, `Y⊗Y`, `XX(π/8)`, `Y⊗Y`.
pub fn local_suppression_individual_circuit(
    n_gates: usize,
    targets: (usize, usize),
    n_ions: usize,
    opts: &EchoOptions,
) -> Result<Circuit> {
    check_targets(n_ions, targets)?;
    let mut c = Circuit::new(n_ions)?;
    for _ in 0..n_gates {
        for _ in 0..2 {
            c.push(GateOp::Ms { theta: FRAC_PI_8, targets })?;
            push_y(&mut c, targets.0, opts)?;
            push_y(&mut c, targets.1, opts)?;
        }
    }
    Ok(c)
}

/// Circuit for `scheme` with `n_gates` logical `XX(π/4)` gates. The
/// neighbor scheme echoes every non-target ion.
pub fn build_scheme(
    scheme: Scheme,
    n_gates: usize,
    targets: (usize, usize),
    n_ions: usize,
    opts: &EchoOptions,
) -> Result<Circuit> {
    match scheme {
        Scheme::None => unsuppressed_circuit(n_gates, targets, n_ions),
        Scheme::Neighbor => {
            let spectators: Vec<usize> = (0..n_ions).filter(|&j| j != targets.0 && j != targets.1).collect();
            neighbor_suppression_circuit(n_gates, &spectators, targets, n_ions, opts)
        }
        Scheme::LocalCollective => local_suppression_collective_circuit(n_gates, targets, n_ions, opts),
        Scheme::LocalIndividual => local_suppression_individual_circuit(n_gates, targets, n_ions, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sk1_at_nominal_amplitude_is_the_bare_rotation() {
        let ops = sk1_expand(0, 0.0, PI).unwrap();
        let mut u = Operator::identity(1);
        for op in ops {
            if let GateOp::Rotation { phi, angle, .. } = op {
                u = &Operator::pauli_exp(1, angle / 2.0, &[(0, phi)]).unwrap() * &u;
            }
        }
        let x = Operator::pauli_exp(1, FRAC_PI_2, &[(0, 0.0)]).unwrap();
        assert!(u.distance_up_to_phase(&x) < 1e-12);
        assert!(sk1_expand(0, 0.0, 0.0).is_err());
        assert!(sk1_expand(0, 0.0, TAU).is_err());
    }

    #[test]
    fn sk1_spill_is_second_order() {
        let bare = [GateOp::Rotation { ion: 0, phi: 0.0, angle: PI }];
        let sk1 = sk1_expand(0, 0.0, PI).unwrap();
        let eps = 0.02;
        let a_bare = spectator_rotation_angle(&bare, eps);
        let a_sk1 = spectator_rotation_angle(&sk1, eps);
        assert!((a_bare - eps * PI).abs() < 1e-12);
        assert!(a_sk1 < 0.1 * a_bare);
    }

    #[test]
    fn layouts_have_expected_shape() {
        let o = EchoOptions { sk1: false, ..Default::default() };
        let n1 = local_suppression_collective_circuit(1, (1, 2), 5, &EchoOptions { final_gate: FinalGate::Native, ..o }).unwrap();
        assert_eq!(n1.ops(), &[GateOp::Ms { theta: FRAC_PI_4, targets: (1, 2) }]);
        let c = local_suppression_collective_circuit(9, (1, 2), 5, &o).unwrap();
        assert!((c.total_ms_angle() - 9.0 * FRAC_PI_4).abs() < 1e-12);
        assert_eq!(c.count_ms(), 10);
        assert_eq!(c.count_sq_pulses(), 4);
        let native = local_suppression_collective_circuit(9, (1, 2), 5, &EchoOptions { final_gate: FinalGate::Native, ..o }).unwrap();
        assert_eq!(native.count_ms(), 9);
        assert!(matches!(native.ops().last(), Some(GateOp::Ms { .. })));
        assert!(local_suppression_collective_circuit(8, (1, 2), 5, &o).is_err());
        let ind = local_suppression_individual_circuit(3, (1, 3), 5, &o).unwrap();
        assert_eq!((ind.count_ms(), ind.count_sq_pulses()), (6, 12));
        assert!(local_suppression_individual_circuit(0, (1, 3), 5, &o).unwrap().is_empty());
        let nb = neighbor_suppression_circuit(3, &[0, 3], (1, 2), 5, &o).unwrap();
        assert_eq!(nb.count_sq_pulses(), 8);
        assert!(neighbor_suppression_circuit(3, &[2], (1, 2), 5, &o).is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = build_scheme(Scheme::Neighbor, 5, (1, 2), 5, &EchoOptions::default()).unwrap();
        let back: Circuit = c.to_text().parse().unwrap();
        assert_eq!(c, back);
        assert!("ms 0 1 0.5\n".parse::<Circuit>().is_err());
        assert!("qubits 2\nms 0 0 0.5\n".parse::<Circuit>().is_err());
        assert!("qubits 2\nfoo 1\n".parse::<Circuit>().is_err());
        assert!("qubits 2\nrot 0 0.0\n".parse::<Circuit>().is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
    }
}
