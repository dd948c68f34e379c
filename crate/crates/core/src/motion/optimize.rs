//! Levenberg–Marquardt search for FM pulses that close every motional mode.
//!
//! The detuning profile is a palindrome over equal segments. Parameters are
//! offsets from a reference frequency in units of `2π/τ`. Residuals are the
//! real and imaginary parts of `∫e^{iφ_k}/τ` for every mode, so a zero
//! residual closes all phase-space loops independently of the Rabi rate.
//! The Rabi rate is then fixed so that the target pair accumulates the
//! requested angle.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::integrals::{closure_gradient, closure_integral, displacement, geometric_phase};
use super::modes::ModeStructure;
use super::pulse::FmPulseSequence;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FmOptions {
    pub starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Largest acceptable `|α_{j,k}|` on the target ions after rescaling.
    pub closure_tolerance: f64,
    /// Reference drive frequency (rad/s); defaults to the highest mode.
    pub reference_freq: Option<f64>,
    /// `Ω_b / Ω_a`.
    pub omega_ratio: f64,
}

impl Default for FmOptions {
    fn default() -> Self {
        FmOptions {
            starts: 24,
            max_iterations: 400,
            seed: 0x5eed,
            closure_tolerance: 1e-7,
            reference_freq: None,
            omega_ratio: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmSolution {
    pub pulse: FmPulseSequence,
    pub omega_a: f64,
    pub omega_b: f64,
    /// Realized target angle, including the second beam's phase flip.
    pub theta: f64,
    /// The second beam's phase is shifted by π to give `theta` its sign.
    pub second_beam_flipped: bool,
    /// Largest `|α_{j,k}|` over both targets and all modes.
    pub max_alpha: f64,
    /// `max_k |∫e^{iφ_k}| / τ`
    pub closure_residual: f64,
    pub start_index: usize,
}

struct Problem<'a> {
    modes: &'a ModeStructure,
    n_segments: usize,
    tau: f64,
    reference: f64,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        self.n_segments.div_ceil(2)
    }

    fn param_of(&self, s: usize) -> usize {
        s.min(self.n_segments - 1 - s)
    }

    fn pulse(&self, p: &DVector<f64>) -> FmPulseSequence {
        let unit = TAU / self.tau;
        let det = (0..self.n_segments)
            .map(|s| self.reference + p[self.param_of(s)] * unit)
            .collect();
        FmPulseSequence::uniform(self.tau, det).expect("finite detunings")
    }

    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let pulse = self.pulse(p);
        let freqs = self.modes.frequencies();
        let mut r = DVector::zeros(2 * freqs.len());
        for (k, &w) in freqs.iter().enumerate() {
            let g = closure_integral(&pulse, w) / self.tau;
            r[2 * k] = g.re;
            r[2 * k + 1] = g.im;
        }
        r
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let pulse = self.pulse(p);
        let freqs = self.modes.frequencies();
        let scale = TAU / (self.tau * self.tau);
        let mut j = DMatrix::zeros(2 * freqs.len(), self.n_params());
        for (k, &w) in freqs.iter().enumerate() {
            let (_, grad) = closure_gradient(&pulse, w);
            for (s, g) in grad.iter().enumerate() {
                let col = self.param_of(s);
                j[(2 * k, col)] += g.re * scale;
                j[(2 * k + 1, col)] += g.im * scale;
            }
        }
        j
    }

    fn levenberg_marquardt(&self, mut p: DVector<f64>, max_iterations: usize) -> (DVector<f64>, f64) {
        let mut r = self.residuals(&p);
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..max_iterations {
            if r.amax() < 1e-14 {
                break;
            }
            let j = self.jacobian(&p);
            let jt = j.transpose();
            let a = &jt * &j;
            let g = &jt * &r;
            let mut improved = false;
            while lambda < 1e12 {
                let mut m = a.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += lambda * (a[(i, i)] + 1e-12);
                }
                let Some(step) = m.cholesky().map(|c| c.solve(&(-&g))) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = &p + &step;
                let r_trial = self.residuals(&trial);
                let c_trial = r_trial.norm_squared();
                if c_trial < cost {
                    let small = step.amax() < 1e-13 * (1.0 + p.amax());
                    p = trial;
                    r = r_trial;
                    cost = c_trial;
                    lambda = (lambda * 0.3).max(1e-15);
                    improved = !small;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        (p, r.amax())
    }
}

/// Finds a palindromic FM pulse of `n_segments` equal segments spanning
/// `tau` that closes every mode of `modes`, and the Rabi rates that give
/// the target pair the angle `theta_target` (`exp(-iθ σσ)`). Either sign
/// of the pulse's pair phase is accepted; the second beam's phase absorbs it.
pub fn fm_optimize(
    modes: &ModeStructure,
    targets: (usize, usize),
    n_segments: usize,
    tau: f64,
    theta_target: f64,
    opts: &FmOptions,
) -> Result<FmSolution> {
    let (a, b) = targets;
    let n = modes.n_ions();
    for i in [a, b] {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
    }
    if a == b {
        return Err(Error::InvalidPair(a, b));
    }
    if n_segments == 0 || !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidInput("need at least one segment and tau > 0".into()));
    }
    if !(theta_target.is_finite() && theta_target != 0.0) {
        return Err(Error::AngleOutOfRange(theta_target));
    }
    if !(opts.omega_ratio.is_finite() && opts.omega_ratio > 0.0) {
        return Err(Error::InvalidInput("omega ratio must be positive".into()));
    }
    let freqs = modes.frequencies();
    let top = *freqs.last().expect("at least one mode");
    let span = (top - freqs[0]) * tau / TAU;
    let problem = Problem {
        modes,
        n_segments,
        tau,
        reference: opts.reference_freq.unwrap_or(top),
    };
    let couplings = modes.pair_couplings(a, b);
    let starts = opts.starts.max(1);

    let outcomes: Vec<(usize, FmPulseSequence, f64, f64)> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                opts.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            let p0 = DVector::from_fn(problem.n_params(), |_, _| {
                rng.random_range(-(span + 3.0)..3.0)
            });
            let (p, resid) = problem.levenberg_marquardt(p0, opts.max_iterations);
            let pulse = problem.pulse(&p);
            let theta_unit = geometric_phase(&pulse, 1.0, opts.omega_ratio, &couplings);
            (i, pulse, resid, theta_unit)
        })
        .collect();

    let mut best: Option<FmSolution> = None;
    let mut best_residual = f64::INFINITY;
    let mut best_theta_unit = 0.0f64;
    for (i, pulse, resid, theta_unit) in outcomes {
        best_residual = best_residual.min(resid);
        if theta_unit == 0.0 {
            continue;
        }
        let flipped = theta_unit.signum() != theta_target.signum();
        let omega_a = (theta_target / theta_unit).abs().sqrt();
        let omega_b = omega_a * opts.omega_ratio;
        let max_alpha = freqs
            .iter()
            .enumerate()
            .flat_map(|(k, &w)| {
                [
                    displacement(&pulse, modes.eta(a, k), omega_a, w).norm(),
                    displacement(&pulse, modes.eta(b, k), omega_b, w).norm(),
                ]
            })
            .fold(0.0, f64::max);
        if max_alpha >= opts.closure_tolerance || theta_unit.abs() <= best_theta_unit.abs() {
            continue;
        }
        best_theta_unit = theta_unit;
        best = Some(FmSolution {
            theta: geometric_phase(&pulse, omega_a, omega_b, &couplings) * if flipped { -1.0 } else { 1.0 },
            second_beam_flipped: flipped,
            pulse,
            omega_a,
            omega_b,
            max_alpha,
            closure_residual: resid,
            start_index: i,
        });
    }
    best.ok_or(Error::OptimizationFailure {
        best_residual,
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn two_segment_single_mode_recovers_loop() {
        let w = 1.0e6;
        let modes = ModeStructure::new(vec![w], vec![vec![0.1], vec![0.1]]).unwrap();
        let tau = 1e-4;
        let sol = fm_optimize(&modes, (0, 1), 2, tau, FRAC_PI_4, &FmOptions::default()).unwrap();
        let d = sol.pulse.detunings();
        assert_eq!(d[0], d[1]);
        let loops = (d[0] - w) * tau / TAU;
        assert!((loops - loops.round()).abs() < 1e-9 && loops.round() != 0.0);
        assert!((sol.theta - FRAC_PI_4).abs() < 1e-12);
        assert!(sol.max_alpha < 1e-7);
    }

    #[test]
    fn one_segment_cannot_close_five_modes() {
        let modes = ModeStructure::linear_chain(5, TAU * 3e6, TAU * 0.5e6, 0.1).unwrap();
        let err = fm_optimize(&modes, (1, 2), 1, 2e-4, FRAC_PI_4, &FmOptions::default());
        assert!(matches!(err, Err(Error::OptimizationFailure { .. })));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let modes = ModeStructure::linear_chain(3, TAU * 3e6, TAU * 0.5e6, 0.1).unwrap();
        let problem = Problem {
            modes: &modes,
            n_segments: 5,
            tau: 1e-4,
            reference: modes.frequencies()[2],
        };
        let p = DVector::from_vec(vec![-1.3, 0.7, -4.2]);
        let j = problem.jacobian(&p);
        let h = 1e-6;
        for c in 0..3 {
            let mut up = p.clone();
            let mut dn = p.clone();
            up[c] += h;
            dn[c] -= h;
            let fd = (problem.residuals(&up) - problem.residuals(&dn)) / (2.0 * h);
            for r in 0..fd.len() {
                assert!((fd[r] - j[(r, c)]).abs() < 1e-7, "({r},{c})");
            }
        }
    }
}
