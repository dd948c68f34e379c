//! Self-check suite run by the `verify` recipe.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{sk1_expand, spectator_rotation_angle, GateOp, Scheme, SpectatorEcho};
use crate::config::Experiment;
use crate::crosstalk::{
    bell_fidelity_analytic, build_crosstalk_unitary, spectator_population_analytic, CrosstalkMap,
    CrosstalkPhysics,
};
use crate::drift::{linear_fit, phase_scan};
use crate::error::Result;
use crate::motion::integrals::{displacement, geometric_phase, phase_integral};
use crate::quadrature::{displacement_quadrature, geometric_phase_quadrature, phase_integral_quadrature};
use crate::simulate::{target_fidelity, CircuitModel};
use crate::spin::{ms_unitary, reduced_populations, rotation, Operator, QubitState};
use crate::tomography::{analysis_phases, tomographic_fidelity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Passed only because the configured crosstalk is zero.
    pub vacuous: bool,
    /// Worst observed value of the checked quantity.
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn below(name: &str, metric: f64, tolerance: f64, detail: String) -> Self {
        Check {
            name: name.into(),
            passed: metric.is_finite() && metric <= tolerance,
            vacuous: false,
            metric,
            tolerance,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let status = match (self.passed, self.vacuous) {
            (true, true) => "PASS (vacuous)",
            (true, false) => "PASS",
            (false, _) => "FAIL",
        };
        format!(
            "{status:<15} {:<28} metric {:.3e}  tol {:.1e}  {}",
            self.name, self.metric, self.tolerance, self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn to_text(&self) -> String {
        let mut out: String = self.checks.iter().map(|c| c.line() + "\n").collect();
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            failed
        ));
        out
    }
}

/// Target pair `(0, 1)` and `n_spec` spectators with spill amplitudes up to `eps_max`.
pub fn random_map(rng: &mut impl Rng, n_spec: usize, eps_max: f64) -> CrosstalkMap {
    let n = n_spec + 2;
    let b1: Vec<(usize, f64)> = (2..n).map(|j| (j, rng.random_range(0.0..=eps_max))).collect();
    let b2: Vec<(usize, f64)> = (2..n).map(|j| (j, rng.random_range(0.0..=eps_max))).collect();
    CrosstalkMap::new(n, (0, 1), &b1, &b2).expect("valid map")
}

/// `Z(π)` as the `X(π) Y(π)` product.
fn z_pi(q: usize, n: usize) -> Operator {
    &rotation(0.0, PI, q, n).expect("index") * &rotation(FRAC_PI_2, PI, q, n).expect("index")
}

fn y_pi(q: usize, n: usize) -> Operator {
    rotation(FRAC_PI_2, PI, q, n).expect("index")
}

/// Distance up to global phase between `[E · U(θ/2)]²` and `exp(-iθXX)`.
pub fn echo_residual(map: &CrosstalkMap, phi_beam: f64, theta: f64, echo: &Operator) -> Result<f64> {
    let n = map.n_ions();
    let physics = CrosstalkPhysics::uniform(n);
    let half = physics.calibrated(map, theta / 2.0, phi_beam)?;
    let u = build_crosstalk_unitary(&half, n, map.targets())?;
    let step = echo * &u;
    let total = &step * &step;
    let (a, b) = map.targets();
    Ok(total.distance_up_to_phase(&ms_unitary(theta, 0.0, 0.0, a, b, n)?))
}

/// Echo on the two targets.
pub fn local_echo(map: &CrosstalkMap) -> Operator {
    let n = map.n_ions();
    let (a, b) = map.targets();
    &y_pi(a, n) * &y_pi(b, n)
}

/// Echo on every spectator about `axis`.
pub fn neighbor_echo(map: &CrosstalkMap, axis: SpectatorEcho) -> Operator {
    let n = map.n_ions();
    map.spectators().into_iter().fold(Operator::identity(n), |acc, j| {
        let e = match axis {
            SpectatorEcho::Z => z_pi(j, n),
            SpectatorEcho::Y => y_pi(j, n),
        };
        &e * &acc
    })
}

fn cancellation_check(name: &str, rng: &mut ChaCha8Rng, draws: usize, neighbor: Option<SpectatorEcho>) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let n_spec = rng.random_range(1..=3);
        let map = random_map(rng, n_spec, 0.05);
        let phi = rng.random_range(0.0..TAU);
        let echo = match neighbor {
            Some(axis) => neighbor_echo(&map, axis),
            None => local_echo(&map),
        };
        worst = worst.max(echo_residual(&map, phi, FRAC_PI_4, &echo)?);
    }
    let detail = match neighbor {
        Some(axis) => format!("{draws} draws, spectator echo {axis:?}"),
        None => format!("{draws} draws, Y echo on targets"),
    };
    Ok(Check::below(name, worst, 1e-10, detail))
}

/// Two-spectator-angle state `U|000⟩` on targets `(0, 1)` and spectator 2.
fn three_qubit_state(theta1: f64, theta2: f64, phi: f64) -> Result<QubitState> {
    let mut s = QubitState::zero(3);
    s.apply_pauli_exp(FRAC_PI_4, &[(0, 0.0), (1, 0.0)]);
    s.apply_pauli_exp(0.5 * theta1, &[(0, 0.0), (2, phi)]);
    s.apply_pauli_exp(0.5 * theta2, &[(1, 0.0), (2, phi)]);
    Ok(s)
}

/// `(P00 + P11)/2 + |ρ_{00,11}|`: overlap with the closest state of the
/// family `(|00⟩ + e^{iχ}|11⟩)/√2`.
pub fn best_bell_overlap(state: &QubitState, targets: (usize, usize)) -> Result<f64> {
    let rho = state.reduced_density(&[targets.0, targets.1])?;
    Ok(0.5 * (rho[0].re + rho[15].re) + rho[3].norm())
}

fn oracle_checks(rng: &mut ChaCha8Rng, draws: usize) -> Result<[Check; 3]> {
    let (mut fid, mut pop, mut tomo) = (0.0f64, 0.0f64, 0.0f64);
    let phases = analysis_phases(crate::tomography::DEFAULT_ANALYSIS_PHASES);
    for k in 0..draws {
        let t1 = rng.random_range(-PI..PI);
        let t2 = rng.random_range(-PI..PI);
        let phi = rng.random_range(0.0..TAU);
        let s = three_qubit_state(t1, t2, phi)?;
        let f = target_fidelity(&s, (0, 1), FRAC_PI_4)?;
        fid = fid.max((f - bell_fidelity_analytic(t1, t2)).abs());
        let p_spec = s.excitation(2);
        let odd = reduced_populations(&s, &[0, 1])?;
        pop = pop
            .max((p_spec - spectator_population_analytic(t1, t2)).abs())
            .max((p_spec - odd[1] - odd[2]).abs());
        let est = tomographic_fidelity(&s, (0, 1), &phases)?;
        tomo = tomo.max((est - best_bell_overlap(&s, (0, 1))?).abs());
        // one-sided crosstalk keeps the Bell phase, so the estimate is the overlap
        let one_sided = if k % 2 == 0 { three_qubit_state(t1, 0.0, phi)? } else { three_qubit_state(0.0, t2, phi)? };
        let f1 = target_fidelity(&one_sided, (0, 1), FRAC_PI_4)?;
        tomo = tomo.max((tomographic_fidelity(&one_sided, (0, 1), &phases)? - f1).abs());
    }
    Ok([
        Check::below("fidelity_oracle", fid, 1e-12, format!("{draws} angle pairs")),
        Check::below("population_oracle", pop, 1e-12, format!("{draws} angle pairs")),
        Check::below(
            "tomography_estimator",
            tomo,
            1e-9,
            format!("{draws} angle pairs: best-phase Bell overlap, and direct overlap for one-sided crosstalk"),
        ),
    ])
}

/// Log-log slopes of the spectator's net rotation against `ε ∈ [0.005, 0.05]`
/// for a bare `π` pulse and for its SK1 expansion.
pub fn sk1_slopes() -> Result<(f64, f64)> {
    let eps: Vec<f64> = (0..10).map(|k| 0.005 * 10f64.powf(k as f64 / 9.0)).collect();
    let bare = [GateOp::Rotation { ion: 0, phi: 0.0, angle: PI }];
    let sk1 = sk1_expand(0, 0.0, PI)?;
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let slope = |pulses: &[GateOp]| -> Result<f64> {
        let ys: Vec<f64> = eps.iter().map(|&e| spectator_rotation_angle(pulses, e).ln()).collect();
        Ok(linear_fit(&xs, &ys)?.slope)
    };
    Ok((slope(&bare)?, slope(&sk1)?))
}

fn quadrature_checks(exp: &Experiment) -> Result<[Check; 3]> {
    let pulse = &exp.pulse;
    let modes = &exp.modes;
    let (a, b) = exp.map.targets();
    let physics = &exp.model.physics;
    let theta = exp.config.pulse.theta_deg.to_radians();
    let unit = physics.omega_ratio * physics.kernel(a, b);
    let omega_a = (theta / unit).abs().sqrt();
    let omega_b = omega_a * physics.omega_ratio;

    let mut disp = 0.0f64;
    let mut closure = 0.0f64;
    let integrals: Vec<f64> = modes.frequencies().par_iter().map(|&w| phase_integral_quadrature(pulse, w)).collect();
    for (k, &w) in modes.frequencies().iter().enumerate() {
        for (ion, om) in [(a, omega_a), (b, omega_b)] {
            let eta = modes.eta(ion, k);
            let q = displacement_quadrature(pulse, eta, om, w);
            let scale = (eta * om * pulse.tau()).abs().max(1e-300);
            disp = disp.max((q - displacement(pulse, eta, om, w)).norm() / scale);
            closure = closure.max(q.norm());
        }
    }
    let couplings = modes.pair_couplings(a, b);
    let th_closed = geometric_phase(pulse, omega_a, omega_b, &couplings);
    let th_quad = geometric_phase_quadrature(pulse, omega_a, omega_b, &couplings);
    let mut phase = ((th_quad - th_closed) / th_closed).abs();
    // target-spectator kernels from the quadrature phase integrals
    let kmax = (0..modes.n_ions())
        .flat_map(|i| (0..modes.n_ions()).map(move |j| (i, j)))
        .map(|(i, j)| physics.kernel(i, j).abs())
        .fold(0.0, f64::max);
    for t in [a, b] {
        for j in 0..modes.n_ions() {
            let kq = 0.5
                * (0..modes.n_modes())
                    .map(|k| modes.eta(t, k) * modes.eta(j, k) * integrals[k])
                    .sum::<f64>();
            phase = phase.max((kq - physics.kernel(t, j)).abs() / kmax);
        }
    }
    for (k, &w) in modes.frequencies().iter().enumerate() {
        let closed = phase_integral(pulse, w);
        phase = phase.max((integrals[k] - closed).abs() / closed.abs().max(kmax));
    }
    Ok([
        Check::below(
            "quadrature_displacement",
            disp,
            1e-9,
            format!("{} modes, relative to ηΩτ", modes.n_modes()),
        ),
        Check::below(
            "quadrature_phase",
            phase,
            1e-9,
            format!("pair phase {th_closed:.12} closed, {th_quad:.12} quadrature; all kernels"),
        ),
        Check::below("pulse_closure", closure, 1e-6, "max |α| by quadrature".into()),
    ])
}

fn scheme_checks(exp: &Experiment) -> Result<Vec<Check>> {
    let mut model: CircuitModel = exp.model.clone();
    model.sq_crosstalk = false;
    let n_gates = exp.config.phase_scan.gate_count;
    let phis: Vec<f64> = (0..16).map(|k| TAU * k as f64 / 16.0).collect();
    let vacuous = exp.map.is_zero();
    let mut out = Vec::new();
    for &scheme in exp.config.schemes.iter().filter(|s| **s != Scheme::None) {
        let circuit = match exp.build(scheme, n_gates) {
            Ok(c) => c,
            Err(e) => {
                out.push(Check {
                    name: format!("scheme_{}", scheme.name()),
                    passed: false,
                    vacuous,
                    metric: f64::NAN,
                    tolerance: 1e-10,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let scan = phase_scan(&circuit, &model, &phis, 0.0)?;
        let spectators = exp.map.spectators();
        let worst = scan
            .populations
            .iter()
            .zip(&scan.target_fidelity)
            .map(|(pops, f)| spectators.iter().map(|&j| pops[j]).fold(1.0 - f, f64::max))
            .fold(0.0, f64::max);
        let mut c = Check::below(
            &format!("scheme_{}", scheme.name()),
            worst,
            1e-10,
            format!("{n_gates} gates, 16 beam phases, max spectator population or target infidelity"),
        );
        c.vacuous = vacuous;
        out.push(c);
    }
    Ok(out)
}

/// Runs every check; random draws are seeded from `exp.config.seed`.
pub fn run_verify(exp: &Experiment) -> Result<VerifyReport> {
    let draws = exp.config.verify.draws.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(exp.config.seed);
    let mut checks = vec![
        cancellation_check("local_cancellation", &mut rng, draws, None)?,
        cancellation_check(
            "neighbor_cancellation",
            &mut rng,
            draws,
            Some(exp.config.echo.spectator_echo),
        )?,
    ];
    checks.extend(oracle_checks(&mut rng, draws)?);
    let (bare, sk1) = sk1_slopes()?;
    checks.push(Check {
        name: "sk1_scaling".into(),
        passed: sk1 >= 1.9 && (bare - 1.0).abs() <= 0.1,
        vacuous: false,
        metric: sk1,
        tolerance: 1.9,
        detail: format!("log-log slope: SK1 {sk1:.4}, bare {bare:.4}"),
    });
    checks.extend(quadrature_checks(exp)?);
    checks.extend(scheme_checks(exp)?);
    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
