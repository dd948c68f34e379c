//! Time-ordered integration of the spin-dependent-force Hamiltonian in a
//! truncated Fock space.
//!
//! `H(t) = Σ_{j,k} (η_{j,k} Ω_j / 2) σ_{φ_j}^{(j)} (a_k e^{iφ_k(t)} + a_k† e^{−iφ_k(t)})`
//!
//! Amplitudes are stored spin-major: index `s · F^M + Σ_k n_k F^k` for
//! spin basis index `s`, `M` modes and `F` Fock levels per mode.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::modes::ModeStructure;
use super::pulse::FmPulseSequence;
use crate::error::{Error, Result};
use crate::spin::QubitState;

pub const TRUNCATION_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpinBosonOptions {
    /// Fock levels per mode (`0..fock_levels`).
    pub fock_levels: usize,
    /// RK4 steps per radian of the fastest rate in a segment.
    pub steps_per_radian: f64,
}

impl Default for SpinBosonOptions {
    fn default() -> Self {
        SpinBosonOptions {
            fock_levels: 15,
            steps_per_radian: 100.0,
        }
    }
}

/// Joint spin ⊗ motion state after the pulse.
#[derive(Clone, Debug)]
pub struct SpinBosonState {
    n_ions: usize,
    n_modes: usize,
    fock_levels: usize,
    amps: Vec<C64>,
    /// Largest top-Fock-level population seen at any step.
    pub top_population: f64,
}

impl SpinBosonState {
    fn motion_dim(&self) -> usize {
        self.fock_levels.pow(self.n_modes as u32)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Reduced spin density matrix, row-major.
    pub fn spin_density(&self) -> Vec<C64> {
        let ds = 1usize << self.n_ions;
        let dm = self.motion_dim();
        let mut rho = vec![C64::new(0.0, 0.0); ds * ds];
        for r in 0..ds {
            for c in 0..ds {
                rho[r * ds + c] = (0..dm)
                    .map(|m| self.amps[r * dm + m] * self.amps[c * dm + m].conj())
                    .sum();
            }
        }
        rho
    }

    /// `⟨ψ|ρ_spin|ψ⟩`
    pub fn spin_fidelity(&self, target: &QubitState) -> Result<f64> {
        if target.n_qubits() != self.n_ions {
            return Err(Error::DimensionMismatch {
                expected: self.n_ions,
                found: target.n_qubits(),
            });
        }
        let ds = 1usize << self.n_ions;
        let rho = self.spin_density();
        let psi = target.amplitudes();
        let mut f = C64::new(0.0, 0.0);
        for r in 0..ds {
            for c in 0..ds {
                f += psi[r].conj() * rho[r * ds + c] * psi[c];
            }
        }
        Ok(f.re)
    }

    /// `Tr ρ_spin²`
    pub fn spin_purity(&self) -> f64 {
        self.spin_density().iter().map(|z| z.norm_sqr()).sum()
    }
}

struct Generator {
    n_ions: usize,
    n_modes: usize,
    levels: usize,
    /// `η_{j,k} Ω_j / 2`, `[ion][mode]`
    coupling: Vec<Vec<f64>>,
    spin_phase: Vec<(C64, C64)>,
    sqrt_n: Vec<f64>,
}

impl Generator {
    /// `out = −i H ψ` for motional phases `phi[k]`.
    fn apply(&self, phi: &[f64], psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        let dm = self.levels.pow(self.n_modes as u32);
        let lower: Vec<C64> = phi.iter().map(|&p| C64::from_polar(1.0, p)).collect();
        for (idx, &amp) in psi.iter().enumerate() {
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let (s, m) = (idx / dm, idx % dm);
            for j in 0..self.n_ions {
                let bit = 1usize << j;
                let sp = if s & bit == 0 { self.spin_phase[j].0 } else { self.spin_phase[j].1 };
                let s2 = (s ^ bit) * dm;
                let base = amp * sp * C64::new(0.0, -1.0);
                let mut stride = 1;
                for k in 0..self.n_modes {
                    let c = self.coupling[j][k];
                    let n = (m / stride) % self.levels;
                    if n > 0 {
                        out[s2 + m - stride] += base * lower[k] * (c * self.sqrt_n[n]);
                    }
                    if n + 1 < self.levels {
                        out[s2 + m + stride] += base * lower[k].conj() * (c * self.sqrt_n[n + 1]);
                    }
                    stride *= self.levels;
                }
            }
        }
    }
}

/// Evolves `initial_spin` ⊗ |motional ground state⟩ through `pulse`.
///
/// `omegas[j]` and `spin_phases[j]` are the Rabi rate and spin axis of ion
/// `j`. At most two ions and two modes are supported.
pub fn simulate_spin_boson(
    pulse: &FmPulseSequence,
    modes: &ModeStructure,
    omegas: &[f64],
    spin_phases: &[f64],
    initial_spin: &QubitState,
    opts: &SpinBosonOptions,
) -> Result<SpinBosonState> {
    let n_ions = modes.n_ions();
    let n_modes = modes.n_modes();
    if n_ions > 2 || n_modes > 2 {
        return Err(Error::InvalidInput(format!(
            "spin-boson integration supports at most 2 ions and 2 modes, got {n_ions} and {n_modes}"
        )));
    }
    for len in [omegas.len(), spin_phases.len(), initial_spin.n_qubits()] {
        if len != n_ions {
            return Err(Error::DimensionMismatch {
                expected: n_ions,
                found: len,
            });
        }
    }
    if opts.fock_levels < 2 || !(opts.steps_per_radian > 0.0) {
        return Err(Error::InvalidInput(
            "need at least 2 Fock levels and a positive step density".into(),
        ));
    }
    let levels = opts.fock_levels;
    let gen = Generator {
        n_ions,
        n_modes,
        levels,
        coupling: (0..n_ions)
            .map(|j| (0..n_modes).map(|k| 0.5 * modes.eta(j, k) * omegas[j]).collect())
            .collect(),
        spin_phase: spin_phases
            .iter()
            .map(|&p| (C64::from_polar(1.0, p), C64::from_polar(1.0, -p)))
            .collect(),
        sqrt_n: (0..=levels).map(|n| (n as f64).sqrt()).collect(),
    };
    let dm = levels.pow(n_modes as u32);
    let dim = (1usize << n_ions) * dm;
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    for (s, a) in initial_spin.amplitudes().iter().enumerate() {
        psi[s * dm] = *a;
    }
    let coupling_rate: f64 = gen
        .coupling
        .iter()
        .flatten()
        .map(|c| c.abs())
        .sum::<f64>()
        * (levels as f64).sqrt();

    let freqs = modes.frequencies();
    let mut phase0 = vec![0.0; n_modes];
    let mut top = 0.0f64;
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim]);
    let mut tmp = vec![C64::new(0.0, 0.0); dim];
    let mut phi = vec![0.0; n_modes];
    for (&d, &mu) in pulse.durations().iter().zip(pulse.detunings()) {
        let deltas: Vec<f64> = freqs.iter().map(|w| mu - w).collect();
        let rate = deltas.iter().fold(coupling_rate, |m, x| m.max(x.abs()));
        let steps = ((rate * d * opts.steps_per_radian).ceil() as usize).max(4);
        let h = d / steps as f64;
        let phases_at = |t: f64, out: &mut Vec<f64>| {
            for k in 0..n_modes {
                out[k] = phase0[k] + deltas[k] * t;
            }
        };
        for step in 0..steps {
            let t = step as f64 * h;
            phases_at(t, &mut phi);
            gen.apply(&phi, &psi, &mut k1);
            phases_at(t + 0.5 * h, &mut phi);
            for i in 0..dim {
                tmp[i] = psi[i] + k1[i] * (0.5 * h);
            }
            gen.apply(&phi, &tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = psi[i] + k2[i] * (0.5 * h);
            }
            gen.apply(&phi, &tmp, &mut k3);
            phases_at(t + h, &mut phi);
            for i in 0..dim {
                tmp[i] = psi[i] + k3[i] * h;
            }
            gen.apply(&phi, &tmp, &mut k4);
            for i in 0..dim {
                psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            top = top.max(top_level_population(&psi, n_modes, levels));
        }
        for k in 0..n_modes {
            phase0[k] += deltas[k] * d;
        }
    }
    if top >= TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            population: top,
            limit: TRUNCATION_LIMIT,
        });
    }
    Ok(SpinBosonState {
        n_ions,
        n_modes,
        fock_levels: levels,
        amps: psi,
        top_population: top,
    })
}

fn top_level_population(psi: &[C64], n_modes: usize, levels: usize) -> f64 {
    let dm = levels.pow(n_modes as u32);
    psi.iter()
        .enumerate()
        .filter(|(idx, _)| {
            let mut m = idx % dm;
            (0..n_modes).any(|_| {
                let top = m % levels == levels - 1;
                m /= levels;
                top
            })
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}
