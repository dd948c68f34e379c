//! Monte-Carlo ensembles over a drifting beam phase, per-gate light shift
//! and an additive stochastic error floor.
//!
//! A trial is `sequences_per_trial` repetitions of one circuit. The beam
//! phase random-walks one step per MS gate and persists from sequence to
//! sequence; the light-shift offset of the spectator axes restarts at zero
//! with every sequence. Trial values are averages over its sequences.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::simulate::{simulate_circuit, target_fidelity, CircuitModel, GateEnvironment, StaticEnvironment};
use crate::spin::QubitState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDistribution {
    /// Uniform on `[−s, s]`.
    #[default]
    Uniform,
    /// Normal with standard deviation `s`.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftModel {
    /// Beam-path drift frequency scale (Hz).
    pub drift_rate: f64,
    /// Duration of one `XX(π/4)` gate (s).
    pub gate_duration: f64,
    pub step_distribution: StepDistribution,
    /// Spectator axis advance per `XX(π/4)` (rad).
    pub light_shift_per_gate: f64,
    pub stochastic_infidelity_per_gate: f64,
    pub sq_infidelity_per_pulse: f64,
    /// Beam phase at the start of every trial; uniform random when unset.
    pub initial_phi_beam: Option<f64>,
    pub sequences_per_trial: usize,
    /// Draw a fresh beam phase for every sequence instead of continuing
    /// the walk.
    pub reset_phase_per_sequence: bool,
}

impl Default for DriftModel {
    fn default() -> Self {
        DriftModel {
            drift_rate: 2.0,
            gate_duration: 200e-6,
            step_distribution: StepDistribution::Uniform,
            light_shift_per_gate: 4f64.to_radians(),
            stochastic_infidelity_per_gate: 4.6e-3,
            sq_infidelity_per_pulse: 0.7e-3,
            initial_phi_beam: None,
            sequences_per_trial: 100,
            reset_phase_per_sequence: false,
        }
    }
}

impl DriftModel {
    /// No drift, no light shift, no stochastic error, fixed beam phase.
    pub fn quiet(phi_beam: f64) -> Self {
        DriftModel {
            drift_rate: 0.0,
            light_shift_per_gate: 0.0,
            stochastic_infidelity_per_gate: 0.0,
            sq_infidelity_per_pulse: 0.0,
            initial_phi_beam: Some(phi_beam),
            sequences_per_trial: 1,
            ..Default::default()
        }
    }

    /// Random-walk step scale `s = 2π · drift_rate · gate_duration`.
    pub fn step_size(&self) -> f64 {
        TAU * self.drift_rate * self.gate_duration
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("drift_rate", self.drift_rate),
            ("gate_duration", self.gate_duration),
            ("stochastic_infidelity_per_gate", self.stochastic_infidelity_per_gate),
            ("sq_infidelity_per_pulse", self.sq_infidelity_per_pulse),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !(0.0..std::f64::consts::PI).contains(&self.light_shift_per_gate) {
            return Err(Error::Config(format!(
                "light_shift_per_gate must lie in [0, π), got {}",
                self.light_shift_per_gate
            )));
        }
        if self.stochastic_infidelity_per_gate > 1.0 || self.sq_infidelity_per_pulse > 1.0 {
            return Err(Error::Config("per-gate infidelities must not exceed 1".into()));
        }
        if self.sequences_per_trial == 0 {
            return Err(Error::Config("sequences_per_trial must be at least 1".into()));
        }
        if let Some(p) = self.initial_phi_beam {
            if !p.is_finite() {
                return Err(Error::Config("initial_phi_beam must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Beam-phase random walk plus light-shift bookkeeping.
pub struct DriftEnvironment<'a> {
    model: &'a DriftModel,
    rng: ChaCha8Rng,
    phi_beam: f64,
    offset: f64,
}

impl<'a> DriftEnvironment<'a> {
    pub fn new(model: &'a DriftModel, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi_beam = model
            .initial_phi_beam
            .unwrap_or_else(|| rng.random_range(0.0..TAU));
        DriftEnvironment {
            model,
            rng,
            phi_beam,
            offset: 0.0,
        }
    }

    pub fn phi_beam(&self) -> f64 {
        self.phi_beam
    }

    /// Accumulated spectator-axis offset within the current sequence.
    pub fn light_shift_offset(&self) -> f64 {
        self.offset
    }

    /// Starts a new sequence: the light shift restarts; the beam phase
    /// continues unless the model resets it.
    pub fn start_sequence(&mut self) {
        self.offset = 0.0;
        if self.model.reset_phase_per_sequence {
            self.phi_beam = self
                .model
                .initial_phi_beam
                .unwrap_or_else(|| self.rng.random_range(0.0..TAU));
        }
    }

    fn step(&mut self, fraction: f64) -> f64 {
        let s = self.model.step_size() * fraction.sqrt();
        if s == 0.0 {
            return 0.0;
        }
        match self.model.step_distribution {
            StepDistribution::Uniform => self.rng.random_range(-s..=s),
            StepDistribution::Gaussian => Normal::new(0.0, s).expect("positive scale").sample(&mut self.rng),
        }
    }
}

impl GateEnvironment for DriftEnvironment<'_> {
    fn next_ms(&mut self, fraction: f64) -> (f64, f64) {
        self.phi_beam += self.step(fraction);
        let offset = self.offset;
        self.offset += self.model.light_shift_per_gate * fraction;
        (self.phi_beam, offset)
    }
}

/// Per-trial stream seed from `(master_seed, trial, gate_count)`.
pub fn trial_seed(master_seed: u64, trial: u64, gate_count: u64) -> u64 {
    let mut z = master_seed ^ 0x243f_6a88_85a3_08d3;
    for v in [trial, gate_count] {
        z = splitmix(z ^ splitmix(v.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub gate_count: usize,
    pub trial: usize,
    /// `1 − F_target` from the statevector, averaged over sequences.
    pub coherent_infidelity: f64,
    /// Additive stochastic infidelity of one sequence (sum of per-gate terms).
    pub stochastic_infidelity: f64,
    /// `1 − ∏(1 − e_i)` over the same per-gate terms.
    pub stochastic_infidelity_multiplicative: f64,
    /// `coherent_infidelity + stochastic_infidelity`
    pub infidelity: f64,
    /// `P(|1⟩)` per ion, averaged over sequences.
    pub populations: Vec<f64>,
    pub final_phi_beam: f64,
}

/// Runs one trial of `circuit` (which implements `gate_count` logical gates).
pub fn run_trial(
    circuit: &Circuit,
    gate_count: usize,
    model: &CircuitModel,
    drift: &DriftModel,
    trial: usize,
    seed: u64,
) -> Result<TrialRecord> {
    drift.validate()?;
    let n = circuit.n_qubits();
    let targets = model.map.targets();
    let total = circuit.total_ms_angle();
    let mut env = DriftEnvironment::new(drift, seed);
    let initial = QubitState::zero(n);
    let mut coherent = 0.0;
    let mut populations = vec![0.0; n];
    let reps = drift.sequences_per_trial;
    for _ in 0..reps {
        env.start_sequence();
        let rec = simulate_circuit(circuit, model, &mut env, &initial)?;
        coherent += 1.0 - target_fidelity(&rec.state, targets, total)?;
        for (acc, p) in populations.iter_mut().zip(&rec.populations) {
            *acc += p;
        }
    }
    let scale = 1.0 / reps as f64;
    populations.iter_mut().for_each(|p| *p *= scale);
    let (linear, multiplicative) = stochastic_ledger(circuit, drift);
    let coherent_infidelity = coherent * scale;
    Ok(TrialRecord {
        gate_count,
        trial,
        coherent_infidelity,
        stochastic_infidelity: linear,
        stochastic_infidelity_multiplicative: multiplicative,
        infidelity: coherent_infidelity + linear,
        populations,
        final_phi_beam: env.phi_beam(),
    })
}

/// Additive and multiplicative combinations of the per-gate stochastic
/// errors of one sequence. MS blocks contribute in proportion to their
/// angle; every physical single-qubit pulse contributes its penalty.
pub fn stochastic_ledger(circuit: &Circuit, drift: &DriftModel) -> (f64, f64) {
    use crate::circuit::GateOp;
    let mut linear = 0.0;
    let mut survival = 1.0;
    for op in circuit.ops() {
        let e = match *op {
            GateOp::Ms { theta, .. } => drift.stochastic_infidelity_per_gate * theta.abs() / std::f64::consts::FRAC_PI_4,
            GateOp::Rotation { .. } | GateOp::Sk1 { .. } => drift.sq_infidelity_per_pulse,
            GateOp::Phase { .. } | GateOp::Barrier => 0.0,
        };
        linear += e;
        survival *= 1.0 - e;
    }
    (linear, 1.0 - survival)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeStats {
    pub gate_count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSeries {
    pub gate_counts: Vec<usize>,
    pub n_trials: usize,
    pub master_seed: u64,
    /// `trials[c][t]` for gate count `gate_counts[c]`, trial `t`.
    pub trials: Vec<Vec<TrialRecord>>,
    pub summary: Vec<EnvelopeStats>,
}

impl EnvelopeSeries {
    pub fn stats_for(&self, gate_count: usize) -> Option<&EnvelopeStats> {
        self.summary.iter().find(|s| s.gate_count == gate_count)
    }
}

/// `n_trials` independent trials for every gate count. `build` returns the
/// circuit for a gate count. Results are ordered by (gate count, trial)
/// whatever the scheduling.
pub fn envelope<F>(
    build: F,
    gate_counts: &[usize],
    n_trials: usize,
    model: &CircuitModel,
    drift: &DriftModel,
    master_seed: u64,
) -> Result<EnvelopeSeries>
where
    F: Fn(usize) -> Result<Circuit> + Sync,
{
    if n_trials == 0 {
        return Err(Error::InvalidInput("envelope needs at least one trial".into()));
    }
    drift.validate()?;
    let mut trials = Vec::with_capacity(gate_counts.len());
    let mut summary = Vec::with_capacity(gate_counts.len());
    for &count in gate_counts {
        let circuit = build(count)?;
        let records: Vec<TrialRecord> = (0..n_trials)
            .into_par_iter()
            .map(|t| run_trial(&circuit, count, model, drift, t, trial_seed(master_seed, t as u64, count as u64)))
            .collect::<Result<_>>()?;
        let values: Vec<f64> = records.iter().map(|r| r.infidelity).collect();
        summary.push(EnvelopeStats {
            gate_count: count,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: values.iter().sum::<f64>() / values.len() as f64,
        });
        trials.push(records);
    }
    Ok(EnvelopeSeries {
        gate_counts: gate_counts.to_vec(),
        n_trials,
        master_seed,
        trials,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub phi_beam: Vec<f64>,
    /// `populations[p][j]`: `P(|1⟩)` of ion `j` at scan point `p`.
    pub populations: Vec<Vec<f64>>,
    pub target_fidelity: Vec<f64>,
}

/// Sweeps a fixed beam phase over `phi_values` (no drift).
pub fn phase_scan(
    circuit: &Circuit,
    model: &CircuitModel,
    phi_values: &[f64],
    light_shift_per_gate: f64,
) -> Result<PhaseScan> {
    let total = circuit.total_ms_angle();
    let targets = model.map.targets();
    let initial = QubitState::zero(circuit.n_qubits());
    let points: Vec<(Vec<f64>, f64)> = phi_values
        .par_iter()
        .map(|&phi| {
            let mut env = StaticEnvironment::new(phi, light_shift_per_gate);
            let rec = simulate_circuit(circuit, model, &mut env, &initial)?;
            Ok((rec.populations.clone(), target_fidelity(&rec.state, targets, total)?))
        })
        .collect::<Result<_>>()?;
    let (populations, target_fidelity) = points.into_iter().unzip();
    Ok(PhaseScan {
        phi_beam: phi_values.to_vec(),
        populations,
        target_fidelity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; absent with only two points.
    pub slope_stderr: Option<f64>,
}

/// Ordinary least squares `y = slope · x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * xs.iter().map(|x| x * x).sum::<f64>() {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = (n > 2).then(|| {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    });
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Per-gate infidelity: OLS of mean infidelity against gate count.
pub fn linear_fit_fidelity(series: &EnvelopeSeries) -> Result<LinearFit> {
    let xs: Vec<f64> = series.summary.iter().map(|s| s.gate_count as f64).collect();
    let ys: Vec<f64> = series.summary.iter().map(|s| s.mean).collect();
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let f = linear_fit(&[1.0, 9.0, 21.0], &[0.005, 0.045, 0.105]).unwrap();
        assert!((f.slope - 0.005).abs() < 1e-15);
        assert!(f.intercept.abs() < 1e-15);
        assert!(f.slope_stderr.unwrap() < 1e-15);
        assert!(linear_fit(&[3.0, 3.0], &[1.0, 2.0]).is_err());
        assert!(linear_fit(&[3.0], &[1.0]).is_err());
        assert_eq!(linear_fit(&[1.0, 2.0], &[1.0, 2.0]).unwrap().slope_stderr, None);
    }

    #[test]
    fn seeds_differ_across_trials_and_counts() {
        let a = trial_seed(7, 0, 9);
        assert_ne!(a, trial_seed(7, 1, 9));
        assert_ne!(a, trial_seed(7, 0, 13));
        assert_ne!(a, trial_seed(8, 0, 9));
        assert_eq!(a, trial_seed(7, 0, 9));
    }

    #[test]
    fn light_shift_restarts_each_sequence() {
        let model = DriftModel { drift_rate: 0.0, initial_phi_beam: Some(0.3), ..Default::default() };
        let mut env = DriftEnvironment::new(&model, 1);
        env.start_sequence();
        for _ in 0..5 {
            env.next_ms(1.0);
        }
        let end_of_first = env.light_shift_offset();
        assert!((end_of_first - 5.0 * model.light_shift_per_gate).abs() < 1e-15);
        env.start_sequence();
        assert_eq!(env.light_shift_offset(), 0.0);
        assert_eq!(env.phi_beam(), 0.3);
    }

    #[test]
    fn walk_steps_are_bounded() {
        let model = DriftModel { initial_phi_beam: Some(0.0), ..Default::default() };
        let mut env = DriftEnvironment::new(&model, 3);
        let mut prev = env.phi_beam();
        for _ in 0..1000 {
            let (phi, _) = env.next_ms(1.0);
            assert!((phi - prev).abs() <= model.step_size());
            prev = phi;
        }
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(DriftModel { light_shift_per_gate: 4.0, ..Default::default() }.validate().is_err());
        assert!(DriftModel { drift_rate: -1.0, ..Default::default() }.validate().is_err());
        assert!(DriftModel { sequences_per_trial: 0, ..Default::default() }.validate().is_err());
        assert!(DriftModel::default().validate().is_ok());
    }
}
