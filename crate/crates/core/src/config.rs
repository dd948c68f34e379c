//! JSON experiment configuration, presets and dotted-path overrides.
//!
//! Angles are entered in degrees and frequencies in Hz; everything is
//! converted to radians and rad/s when an [`Experiment`] is built.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::circuit::{build_scheme, neighbor_suppression_circuit, Circuit, EchoOptions, Scheme};
use crate::crosstalk::{CrosstalkMap, CrosstalkPhysics};
use crate::drift::{DriftModel, StepDistribution};
use crate::error::{Error, Result};
use crate::motion::modes::ModeStructure;
use crate::motion::optimize::{fm_optimize, FmOptions, FmSolution};
use crate::motion::pulse::FmPulseSequence;
use crate::simulate::CircuitModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrosstalkConfig {
    /// `"tableI"` or `"tableII"`; ignored when `inline` is set.
    pub preset: Option<String>,
    pub inline: Option<CrosstalkMap>,
    /// Multiplies every spillover amplitude.
    pub scale: f64,
}

impl Default for CrosstalkConfig {
    fn default() -> Self {
        CrosstalkConfig {
            preset: Some("tableI".into()),
            inline: None,
            scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModes {
    pub frequencies_hz: Vec<f64>,
    pub eta: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonScale {
    pub ion: usize,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub com_freq_hz: f64,
    pub axial_freq_hz: f64,
    pub eta0: f64,
    /// Replaces the generated chain when set.
    pub inline: Option<InlineModes>,
    /// Rescales one ion's couplings to every mode.
    pub scale_ion: Option<IonScale>,
}

impl Default for ModesConfig {
    fn default() -> Self {
        ModesConfig {
            com_freq_hz: 3.0e6,
            axial_freq_hz: 0.5e6,
            eta0: 0.1,
            inline: None,
            scale_ion: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlinePulse {
    pub durations_s: Vec<f64>,
    pub detunings_hz: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub segments: usize,
    pub duration_s: f64,
    pub theta_deg: f64,
    pub starts: usize,
    pub seed: u64,
    pub closure_tolerance: f64,
    /// Two-column pulse file (seconds, rad/s) used instead of optimizing.
    pub file: Option<PathBuf>,
    pub inline: Option<InlinePulse>,
}

impl Default for PulseConfig {
    fn default() -> Self {
        let fm = FmOptions::default();
        PulseConfig {
            segments: 15,
            duration_s: 200e-6,
            theta_deg: 45.0,
            starts: fm.starts,
            seed: fm.seed,
            closure_tolerance: fm.closure_tolerance,
            file: None,
            inline: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub drift_rate_hz: f64,
    pub gate_duration_s: f64,
    pub step_distribution: StepDistribution,
    pub light_shift_deg: f64,
    pub stochastic_infidelity_per_gate: f64,
    pub sq_infidelity_per_pulse: f64,
    pub initial_phi_beam_deg: Option<f64>,
    pub sequences_per_trial: usize,
    pub reset_phase_per_sequence: bool,
}

impl Default for DriftConfig {
    fn default() -> Self {
        let d = DriftModel::default();
        DriftConfig {
            drift_rate_hz: d.drift_rate,
            gate_duration_s: d.gate_duration,
            step_distribution: d.step_distribution,
            light_shift_deg: d.light_shift_per_gate.to_degrees(),
            stochastic_infidelity_per_gate: d.stochastic_infidelity_per_gate,
            sq_infidelity_per_pulse: d.sq_infidelity_per_pulse,
            initial_phi_beam_deg: None,
            sequences_per_trial: d.sequences_per_trial,
            reset_phase_per_sequence: d.reset_phase_per_sequence,
        }
    }
}

impl DriftConfig {
    pub fn to_model(&self) -> Result<DriftModel> {
        let m = DriftModel {
            drift_rate: self.drift_rate_hz,
            gate_duration: self.gate_duration_s,
            step_distribution: self.step_distribution,
            light_shift_per_gate: self.light_shift_deg.to_radians(),
            stochastic_infidelity_per_gate: self.stochastic_infidelity_per_gate,
            sq_infidelity_per_pulse: self.sq_infidelity_per_pulse,
            initial_phi_beam: self.initial_phi_beam_deg.map(f64::to_radians),
            sequences_per_trial: self.sequences_per_trial,
            reset_phase_per_sequence: self.reset_phase_per_sequence,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseScanConfig {
    pub gate_count: usize,
    pub points: usize,
    pub max_phi_deg: f64,
    /// Apply the drift section's light shift during the scan.
    pub light_shift: bool,
}

impl Default for PhaseScanConfig {
    fn default() -> Self {
        PhaseScanConfig {
            gate_count: 21,
            points: 129,
            max_phi_deg: 720.0,
            light_shift: false,
        }
    }
}

impl PhaseScanConfig {
    /// `points` values from 0 to `max_phi_deg` inclusive, in radians.
    pub fn phi_values(&self) -> Vec<f64> {
        let max = self.max_phi_deg.to_radians();
        match self.points {
            0 => vec![],
            1 => vec![0.0],
            n => (0..n).map(|k| max * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random draws per identity check.
    pub draws: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { draws: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub crosstalk: CrosstalkConfig,
    pub modes: ModesConfig,
    pub pulse: PulseConfig,
    pub drift: DriftConfig,
    pub echo: EchoOptions,
    pub sq_crosstalk: bool,
    pub sq_phase_offset_deg: f64,
    pub omega_ratio: f64,
    pub keep_spectator_pairs: bool,
    /// Ions echoed by the neighbor scheme; every non-target ion when unset.
    pub neighbor_spectators: Option<Vec<usize>>,
    pub schemes: Vec<Scheme>,
    pub gate_counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub phase_scan: PhaseScanConfig,
    pub analysis_phases: usize,
    pub verify: VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            crosstalk: CrosstalkConfig::default(),
            modes: ModesConfig::default(),
            pulse: PulseConfig::default(),
            drift: DriftConfig::default(),
            echo: EchoOptions::default(),
            sq_crosstalk: true,
            sq_phase_offset_deg: 0.0,
            omega_ratio: 1.0,
            keep_spectator_pairs: false,
            neighbor_spectators: None,
            schemes: vec![Scheme::None, Scheme::Neighbor, Scheme::LocalCollective],
            gate_counts: vec![1, 9, 13, 21],
            trials: 100,
            seed: 1,
            phase_scan: PhaseScanConfig::default(),
            analysis_phases: crate::tomography::DEFAULT_ANALYSIS_PHASES,
            verify: VerifyConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// `"tableI"`: collective-gate echo experiments (4° light shift).
    /// `"tableII"`: individual-gate echo experiments (6° light shift).
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        match name {
            "tableI" => {}
            "tableII" => {
                cfg.crosstalk.preset = Some("tableII".into());
                cfg.drift.light_shift_deg = 6.0;
                cfg.schemes = vec![Scheme::None, Scheme::LocalIndividual];
                cfg.gate_counts = vec![1, 9, 13, 17, 21];
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?} (expected tableI or tableII)"
                )))
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `key.path=value` overrides. Values parse as JSON when they
    /// can and are taken as strings otherwise.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut root = serde_json::to_value(self)?;
        for item in overrides {
            let item = item.as_ref();
            let (path, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut root, path, value)?;
        }
        serde_json::from_value(root).map_err(|e| Error::Config(e.to_string()))
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed override path {path:?}")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert((*key).to_string(), value);
                    return Ok(());
                }
                let child = map.entry((*key).to_string()).or_insert(Value::Null);
                if child.is_null() {
                    *child = Value::Object(Default::default());
                }
                child
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| Error::Config(format!("{path:?}: {key:?} is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("{path:?}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("{path:?}: {key:?} is not inside an object"))),
        };
    }
    unreachable!("loop returns on the last key")
}

/// Configuration resolved into runtime objects.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub map: CrosstalkMap,
    pub modes: ModeStructure,
    pub pulse: FmPulseSequence,
    /// Present when the pulse came from the optimizer.
    pub fm: Option<FmSolution>,
    pub model: CircuitModel,
    pub drift: DriftModel,
}

impl Experiment {
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        let map = resolve_map(&config.crosstalk)?;
        let modes = resolve_modes(&config.modes, map.n_ions())?;
        if !(config.omega_ratio.is_finite() && config.omega_ratio > 0.0) {
            return Err(Error::Config("omega_ratio must be positive".into()));
        }
        let (pulse, fm) = resolve_pulse(&config.pulse, &modes, map.targets(), config.omega_ratio)?;
        let mut physics = CrosstalkPhysics::new(&modes, &pulse);
        physics.omega_ratio = config.omega_ratio;
        physics.keep_spectator_pairs = config.keep_spectator_pairs;
        let mut model = CircuitModel::new(map.clone(), physics)?;
        model.sq_crosstalk = config.sq_crosstalk;
        model.sq_phase_offset = config.sq_phase_offset_deg.to_radians();
        let drift = config.drift.to_model()?;
        if let Some(list) = &config.neighbor_spectators {
            if list.is_empty() {
                return Err(Error::Config("neighbor scheme needs at least one spectator".into()));
            }
        }
        if config.analysis_phases < 3 {
            return Err(Error::Config("analysis_phases must be at least 3".into()));
        }
        Ok(Experiment {
            config,
            map,
            modes,
            pulse,
            fm,
            model,
            drift,
        })
    }

    /// Circuit for `scheme` with `n_gates` logical gates.
    pub fn build(&self, scheme: Scheme, n_gates: usize) -> Result<Circuit> {
        let n = self.map.n_ions();
        let targets = self.map.targets();
        match (scheme, &self.config.neighbor_spectators) {
            (Scheme::Neighbor, Some(list)) => {
                neighbor_suppression_circuit(n_gates, list, targets, n, &self.config.echo)
            }
            _ => build_scheme(scheme, n_gates, targets, n, &self.config.echo),
        }
    }
}

fn resolve_map(cfg: &CrosstalkConfig) -> Result<CrosstalkMap> {
    let base = match (&cfg.inline, &cfg.preset) {
        (Some(map), _) => map.clone(),
        (None, Some(name)) => CrosstalkMap::preset(name)?,
        (None, None) => return Err(Error::Config("crosstalk needs a preset or an inline map".into())),
    };
    if cfg.scale == 1.0 {
        Ok(base)
    } else {
        base.scaled(cfg.scale)
            .map_err(|e| Error::Config(format!("crosstalk.scale: {e}")))
    }
}

fn resolve_modes(cfg: &ModesConfig, n_ions: usize) -> Result<ModeStructure> {
    let mut modes = match &cfg.inline {
        Some(m) => {
            let freqs = m.frequencies_hz.iter().map(|f| f * TAU).collect();
            ModeStructure::new(freqs, m.eta.clone())?
        }
        None => ModeStructure::linear_chain(n_ions, cfg.com_freq_hz * TAU, cfg.axial_freq_hz * TAU, cfg.eta0)?,
    };
    if modes.n_ions() != n_ions {
        return Err(Error::DimensionMismatch {
            expected: n_ions,
            found: modes.n_ions(),
        });
    }
    if let Some(s) = cfg.scale_ion {
        modes.scale_ion(s.ion, s.factor)?;
    }
    Ok(modes)
}

fn resolve_pulse(
    cfg: &PulseConfig,
    modes: &ModeStructure,
    targets: (usize, usize),
    omega_ratio: f64,
) -> Result<(FmPulseSequence, Option<FmSolution>)> {
    if let Some(p) = &cfg.inline {
        let det = p.detunings_hz.iter().map(|f| f * TAU).collect();
        return Ok((FmPulseSequence::new(p.durations_s.clone(), det)?, None));
    }
    if let Some(path) = &cfg.file {
        return Ok((FmPulseSequence::load(path)?, None));
    }
    let opts = FmOptions {
        starts: cfg.starts,
        seed: cfg.seed,
        closure_tolerance: cfg.closure_tolerance,
        omega_ratio,
        ..FmOptions::default()
    };
    let sol = fm_optimize(modes, targets, cfg.segments, cfg.duration_s, cfg.theta_deg.to_radians(), &opts)?;
    Ok((sol.pulse.clone(), Some(sol)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = ExperimentConfig::default()
            .with_overrides(&["drift.light_shift_deg=6", "crosstalk.preset=tableII", "gate_counts=[1,3]", "seed=9"])
            .unwrap();
        assert_eq!(cfg.drift.light_shift_deg, 6.0);
        assert_eq!(cfg.crosstalk.preset.as_deref(), Some("tableII"));
        assert_eq!(cfg.gate_counts, vec![1, 3]);
        assert_eq!(cfg.seed, 9);
        let cfg = cfg.with_overrides(&["gate_counts.1=5"]).unwrap();
        assert_eq!(cfg.gate_counts, vec![1, 5]);
    }

    #[test]
    fn bad_overrides_are_rejected() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.with_overrides(&["drift.nonsense=1"]).is_err());
        assert!(cfg.with_overrides(&["seed"]).is_err());
        assert!(cfg.with_overrides(&["seed.x=1"]).is_err());
        assert!(cfg.with_overrides(&["gate_counts.9=1"]).is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let cfg = ExperimentConfig::preset("tableII").unwrap();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::preset("tableIV").is_err());
    }

    #[test]
    fn scan_grid_is_inclusive() {
        let g = PhaseScanConfig { points: 5, max_phi_deg: 720.0, ..Default::default() }.phi_values();
        assert_eq!(g.len(), 5);
        assert!((g[4] - 2.0 * TAU).abs() < 1e-15);
    }
}
