//! Named experiment recipes writing CSV/JSON results and a manifest.
//!
//! Every output is a pure function of the configuration: no timestamps,
//! no host data, and parallel results are merged in a fixed order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circuit::{Circuit, Scheme};
use crate::config::{Experiment, ExperimentConfig};
use crate::drift::{envelope, linear_fit_fidelity, phase_scan, EnvelopeSeries, EnvelopeStats, LinearFit};
use crate::error::{Error, Result};
use crate::motion::integrals::{displacement, geometric_phase};
use crate::quadrature::{displacement_quadrature, geometric_phase_quadrature};
use crate::simulate::{simulate_circuit, target_fidelity, StaticEnvironment};
use crate::spin::QubitState;
use crate::tomography::{analysis_phases, parity_scan, tomographic_fidelity};
use crate::verify::run_verify;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recipe {
    PhaseScan,
    Envelope,
    FmOptimize,
    Verify,
    Simulate,
}

impl Recipe {
    pub const ALL: [Recipe; 5] = [
        Recipe::PhaseScan,
        Recipe::Envelope,
        Recipe::FmOptimize,
        Recipe::Verify,
        Recipe::Simulate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::PhaseScan => "phase-scan",
            Recipe::Envelope => "envelope",
            Recipe::FmOptimize => "fm-optimize",
            Recipe::Verify => "verify",
            Recipe::Simulate => "simulate",
        }
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown recipe {s:?}")))
    }
}

/// Files written and whether the recipe's own checks passed.
#[derive(Clone, Debug, PartialEq)]
pub struct RecipeOutcome {
    pub recipe: Recipe,
    pub files: Vec<PathBuf>,
    pub passed: bool,
    /// Human-readable digest for the terminal.
    pub summary: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    recipe: &'static str,
    seed: u64,
    outputs: &'a [String],
    config: &'a ExperimentConfig,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(mut self, recipe: Recipe, exp: &Experiment, passed: bool, summary: String) -> Result<RecipeOutcome> {
        let mut outputs: Vec<String> = self
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        outputs.push("manifest.json".into());
        let manifest = Manifest {
            tool: "xtalk",
            version: env!("CARGO_PKG_VERSION"),
            recipe: recipe.name(),
            seed: exp.config.seed,
            outputs: &outputs,
            config: &exp.config,
        };
        self.json("manifest.json", &manifest)?;
        Ok(RecipeOutcome {
            recipe,
            files: self.files,
            passed,
            summary,
        })
    }
}

fn pop_header(n: usize) -> String {
    (0..n).map(|j| format!(",pop_{j}")).collect()
}

fn schemes_or_none(exp: &Experiment) -> Vec<Scheme> {
    if exp.config.schemes.is_empty() {
        vec![Scheme::None]
    } else {
        exp.config.schemes.clone()
    }
}

#[derive(Serialize)]
struct IonCurve {
    ion: usize,
    min: f64,
    max: f64,
    mean: f64,
}

/// Spectator populations and target fidelity against a fixed beam phase.
pub fn run_phase_scan(exp: &Experiment, out: &Path) -> Result<RecipeOutcome> {
    let cfg = &exp.config.phase_scan;
    let n = exp.map.n_ions();
    let phis = cfg.phi_values();
    let light_shift = if cfg.light_shift { exp.drift.light_shift_per_gate } else { 0.0 };
    let mut csv = format!("scheme,phi_beam,target_fidelity{}\n", pop_header(n));
    let mut summary = Vec::new();
    let mut text = String::new();
    for scheme in schemes_or_none(exp) {
        let circuit = exp.build(scheme, cfg.gate_count)?;
        let scan = phase_scan(&circuit, &exp.model, &phis, light_shift)?;
        for ((phi, f), pops) in scan.phi_beam.iter().zip(&scan.target_fidelity).zip(&scan.populations) {
            write!(csv, "{},{phi},{f}", scheme.name()).unwrap();
            for p in pops {
                write!(csv, ",{p}").unwrap();
            }
            csv.push('\n');
        }
        let curves: Vec<IonCurve> = (0..n)
            .map(|j| {
                let v: Vec<f64> = scan.populations.iter().map(|p| p[j]).collect();
                IonCurve {
                    ion: j,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    mean: if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 },
                }
            })
            .collect();
        for j in exp.map.spectators() {
            let c = &curves[j];
            writeln!(
                text,
                "{:<17} ion {j}: mean {:.4e}  max {:.4e}",
                scheme.name(),
                c.mean,
                c.max
            )
            .unwrap();
        }
        summary.push(json!({
            "scheme": scheme.name(),
            "gate_count": cfg.gate_count,
            "ions": curves,
        }));
    }
    let mut w = Writer::new(out)?;
    w.write("phase_scan.csv", &csv)?;
    w.json("phase_scan_summary.json", &json!({ "schemes": summary }))?;
    w.finish(Recipe::PhaseScan, exp, true, text)
}

#[derive(Serialize)]
struct SchemeEnvelope<'a> {
    scheme: &'static str,
    summary: &'a [EnvelopeStats],
    fit: Option<LinearFit>,
}

/// Per-scheme min/max/mean and linear fit, as written to
/// `envelope_summary.json`.
pub fn envelope_summary(exp: &Experiment, all: &[(Scheme, EnvelopeSeries)]) -> Result<serde_json::Value> {
    let mut blocks = Vec::new();
    for (scheme, series) in all {
        let fit = if series.gate_counts.len() >= 2 {
            Some(linear_fit_fidelity(series)?)
        } else {
            None
        };
        blocks.push(SchemeEnvelope {
            scheme: scheme.name(),
            summary: &series.summary,
            fit,
        });
    }
    Ok(json!({
        "gate_counts": exp.config.gate_counts,
        "n_trials": exp.config.trials,
        "master_seed": exp.config.seed,
        "stochastic_infidelity_per_gate": exp.drift.stochastic_infidelity_per_gate,
        "sq_infidelity_per_pulse": exp.drift.sq_infidelity_per_pulse,
        "schemes": blocks,
    }))
}

/// Envelope series for every configured scheme.
pub fn envelope_series(exp: &Experiment) -> Result<Vec<(Scheme, EnvelopeSeries)>> {
    schemes_or_none(exp)
        .into_iter()
        .map(|scheme| {
            let series = envelope(
                |count| exp.build(scheme, count),
                &exp.config.gate_counts,
                exp.config.trials,
                &exp.model,
                &exp.drift,
                exp.config.seed,
            )?;
            Ok((scheme, series))
        })
        .collect()
}

/// Infidelity envelope against gate count with trial-level detail.
pub fn run_envelope(exp: &Experiment, out: &Path) -> Result<RecipeOutcome> {
    let n = exp.map.n_ions();
    let all = envelope_series(exp)?;
    let mut csv = format!(
        "scheme,gate_count,trial,infidelity,coherent_infidelity,stochastic_infidelity,stochastic_infidelity_multiplicative,final_phi_beam{}\n",
        pop_header(n)
    );
    let mut text = String::new();
    for (scheme, series) in &all {
        for records in &series.trials {
            for r in records {
                write!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    scheme.name(),
                    r.gate_count,
                    r.trial,
                    r.infidelity,
                    r.coherent_infidelity,
                    r.stochastic_infidelity,
                    r.stochastic_infidelity_multiplicative,
                    r.final_phi_beam
                )
                .unwrap();
                for p in &r.populations {
                    write!(csv, ",{p}").unwrap();
                }
                csv.push('\n');
            }
        }
        for s in &series.summary {
            writeln!(
                text,
                "{:<17} n={:<3} min {:.4e}  mean {:.4e}  max {:.4e}",
                scheme.name(),
                s.gate_count,
                s.min,
                s.mean,
                s.max
            )
            .unwrap();
        }
        if series.gate_counts.len() >= 2 {
            let f = linear_fit_fidelity(series)?;
            writeln!(text, "{:<17} slope {:.4e} per gate", scheme.name(), f.slope).unwrap();
        }
    }
    let mut w = Writer::new(out)?;
    w.write("envelope_trials.csv", &csv)?;
    w.json("envelope_summary.json", &envelope_summary(exp, &all)?)?;
    w.finish(Recipe::Envelope, exp, true, text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeResidual {
    pub mode: usize,
    pub frequency: f64,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub alpha_a_quadrature: f64,
    pub alpha_b_quadrature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmReport {
    pub segments: usize,
    pub tau: f64,
    pub theta_target: f64,
    pub theta: f64,
    pub theta_quadrature: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub second_beam_flipped: bool,
    pub optimized: bool,
    pub max_alpha: f64,
    pub max_alpha_quadrature: f64,
    pub modes: Vec<ModeResidual>,
    pub passed: bool,
}

/// Closure and angle of the experiment's pulse, each evaluated in closed
/// form and by quadrature. Passes when every `|α| < 1e-6` and `θ` is within
/// `1e-6` of the request by both evaluators.
pub fn fm_report(exp: &Experiment) -> FmReport {
    let pulse = &exp.pulse;
    let (a, b) = exp.map.targets();
    let modes = &exp.modes;
    let theta_target = exp.config.pulse.theta_deg.to_radians();
    let (omega_a, omega_b, flipped) = match &exp.fm {
        Some(s) => (s.omega_a, s.omega_b, s.second_beam_flipped),
        None => {
            let ratio = exp.config.omega_ratio;
            let unit = ratio * exp.model.physics.kernel(a, b);
            let om = (theta_target / unit).abs().sqrt();
            (om, om * ratio, theta_target / unit < 0.0)
        }
    };
    let sign = if flipped { -1.0 } else { 1.0 };
    let couplings = modes.pair_couplings(a, b);
    let theta = sign * geometric_phase(pulse, omega_a, omega_b, &couplings);
    let theta_quadrature = sign * geometric_phase_quadrature(pulse, omega_a, omega_b, &couplings);
    let rows: Vec<ModeResidual> = modes
        .frequencies()
        .iter()
        .enumerate()
        .map(|(k, &w)| ModeResidual {
            mode: k,
            frequency: w,
            alpha_a: displacement(pulse, modes.eta(a, k), omega_a, w).norm(),
            alpha_b: displacement(pulse, modes.eta(b, k), omega_b, w).norm(),
            alpha_a_quadrature: displacement_quadrature(pulse, modes.eta(a, k), omega_a, w).norm(),
            alpha_b_quadrature: displacement_quadrature(pulse, modes.eta(b, k), omega_b, w).norm(),
        })
        .collect();
    let max_alpha = rows.iter().map(|r| r.alpha_a.max(r.alpha_b)).fold(0.0, f64::max);
    let max_alpha_quadrature = rows
        .iter()
        .map(|r| r.alpha_a_quadrature.max(r.alpha_b_quadrature))
        .fold(0.0, f64::max);
    let passed = max_alpha < 1e-6
        && max_alpha_quadrature < 1e-6
        && (theta - theta_target).abs() < 1e-6
        && (theta_quadrature - theta_target).abs() < 1e-6;
    FmReport {
        segments: pulse.n_segments(),
        tau: pulse.tau(),
        theta_target,
        theta,
        theta_quadrature,
        omega_a,
        omega_b,
        second_beam_flipped: flipped,
        optimized: exp.fm.is_some(),
        max_alpha,
        max_alpha_quadrature,
        modes: rows,
        passed,
    }
}

/// Writes the pulse and its residual report.
pub fn run_fm_optimize(exp: &Experiment, out: &Path) -> Result<RecipeOutcome> {
    let report = fm_report(exp);
    let mut w = Writer::new(out)?;
    w.write("pulse.txt", &exp.pulse.to_text())?;
    w.json("fm_report.json", &report)?;
    let text = format!(
        "{} segments over {:.3e} s: theta {:.12} (quadrature {:.12}), max |alpha| {:.3e} (quadrature {:.3e})\n",
        report.segments, report.tau, report.theta, report.theta_quadrature, report.max_alpha, report.max_alpha_quadrature
    );
    let passed = report.passed;
    w.finish(Recipe::FmOptimize, exp, passed, text)
}

/// Identity and oracle checks; fails when any check fails.
pub fn run_verify_recipe(exp: &Experiment, out: &Path) -> Result<RecipeOutcome> {
    let report = run_verify(exp)?;
    let text = report.to_text();
    let mut w = Writer::new(out)?;
    w.json("verify_report.json", &report)?;
    w.write("verify_report.txt", &text)?;
    w.finish(Recipe::Verify, exp, report.passed, text)
}

/// Runs `circuit` from `|0…0⟩` at the first-gate beam phase and light shift
/// of the drift section, without random drift.
pub fn run_simulate(exp: &Experiment, circuit: &Circuit, out: &Path) -> Result<RecipeOutcome> {
    let targets = exp.map.targets();
    let phi = exp.drift.initial_phi_beam.unwrap_or(0.0);
    let mut env = StaticEnvironment::new(phi, exp.drift.light_shift_per_gate);
    let rec = simulate_circuit(circuit, &exp.model, &mut env, &QubitState::zero(circuit.n_qubits()))?;
    let total = circuit.total_ms_angle();
    let phases = analysis_phases(exp.config.analysis_phases);
    let fidelity = target_fidelity(&rec.state, targets, total)?;
    let scan = parity_scan(&rec.state, targets, &phases)?;
    let tomographic = tomographic_fidelity(&rec.state, targets, &phases)?;
    let mut w = Writer::new(out)?;
    w.json(
        "simulate.json",
        &json!({
            "n_qubits": circuit.n_qubits(),
            "ms_gates": rec.ms_gates,
            "sq_pulses": rec.sq_pulses,
            "total_ms_angle": total,
            "phi_beam": phi,
            "populations": rec.populations,
            "target_fidelity": fidelity,
            "tomographic_fidelity": tomographic,
            "parity_contrast": scan.contrast,
            "parity_phase": scan.phase,
        }),
    )?;
    w.write("parity_scan.csv", &scan.to_csv())?;
    let text = format!(
        "{} MS gates, {} single-qubit pulses: target fidelity {:.6}, tomographic {:.6}\n",
        rec.ms_gates, rec.sq_pulses, fidelity, tomographic
    );
    w.finish(Recipe::Simulate, exp, true, text)
}

/// Dispatches `recipe`; `circuit` is required by `simulate` only.
pub fn run_recipe(recipe: Recipe, exp: &Experiment, out: &Path, circuit: Option<&Circuit>) -> Result<RecipeOutcome> {
    match recipe {
        Recipe::PhaseScan => run_phase_scan(exp, out),
        Recipe::Envelope => run_envelope(exp, out),
        Recipe::FmOptimize => run_fm_optimize(exp, out),
        Recipe::Verify => run_verify_recipe(exp, out),
        Recipe::Simulate => {
            let c = circuit.ok_or_else(|| Error::Config("simulate needs a circuit file".into()))?;
            run_simulate(exp, c, out)
        }
    }
}
