//! Adaptive Gauss–Kronrod quadrature and the brute-force integral
//! evaluators used to cross-check the closed forms in [`crate::motion`].
//!
//! The evaluators only call [`motional_phase`] pointwise. The pulse's
//! switching times are used as panel breaks, never its segment integrals.

use std::collections::BinaryHeap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::motion::modes::ModeCoupling;
use crate::motion::pulse::{motional_phase, FmPulseSequence};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

#[derive(Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

const MAX_SPLITS: usize = 20_000;

/// Adaptive G7/K15 integration of a complex integrand over `[a, b]`.
pub fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> C64 {
    integrate_with_breaks(f, &[a, b], abs_tol, rel_tol)
}

/// Adaptive G7/K15 integration over `[breaks[0], breaks[last]]`, starting
/// from one panel per consecutive pair of `breaks` (ascending).
pub fn integrate_with_breaks<F: Fn(f64) -> C64>(f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> C64 {
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (C64::new(0.0, 0.0), 0.0);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(&f, w[0], w[1]);
            total += value;
            err += error;
            heap.push(Panel { lo: w[0], hi: w[1], value, error });
        }
    }
    for _ in 0..MAX_SPLITS {
        if err <= abs_tol.max(rel_tol * total.norm()) {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break;
        }
        total -= worst.value;
        err -= worst.error;
        for (lo, hi) in [(worst.lo, mid), (mid, worst.hi)] {
            let (value, error) = gk15(&f, lo, hi);
            total += value;
            err += error;
            heap.push(Panel { lo, hi, value, error });
        }
    }
    // re-sum to drop the drift of the running total
    heap.iter().map(|p| p.value).sum()
}

fn phase_at(pulse: &FmPulseSequence, mode_freq: f64, t: f64) -> f64 {
    motional_phase(pulse, mode_freq, t.min(pulse.tau())).expect("t within pulse")
}

/// Switching times of the pulse, where the integrands lose smoothness.
fn breakpoints(pulse: &FmPulseSequence) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut t = 0.0;
    for d in pulse.durations() {
        t += d;
        out.push(t);
    }
    *out.last_mut().expect("non-empty") = pulse.tau();
    out
}

/// Displacement `(η Ω / 2) ∫ e^{iφ_k(t)} dt` by adaptive quadrature.
pub fn displacement_quadrature(pulse: &FmPulseSequence, eta: f64, omega: f64, mode_freq: f64) -> C64 {
    let tau = pulse.tau();
    let g = integrate_with_breaks(
        |t| C64::from_polar(1.0, phase_at(pulse, mode_freq, t)),
        &breakpoints(pulse),
        1e-16 * tau,
        1e-14,
    );
    g * (0.5 * eta * omega)
}

/// `∫₀^τ dt ∫₀ᵗ dt' sin(φ(t) − φ(t'))` by nested adaptive quadrature,
/// written as `Im ∫ e^{iφ(t)} G(t) dt` with `G(t) = ∫₀ᵗ e^{−iφ}`.
pub fn phase_integral_quadrature(pulse: &FmPulseSequence, mode_freq: f64) -> f64 {
    let tau = pulse.tau();
    let breaks = breakpoints(pulse);
    let back = |s: f64| C64::from_polar(1.0, -phase_at(pulse, mode_freq, s));
    let inner = |lo: f64, hi: f64| integrate(back, lo, hi, 1e-16 * tau, 1e-13);
    // G at the start of every panel
    let mut g_start = vec![C64::new(0.0, 0.0)];
    for w in breaks.windows(2) {
        let last = *g_start.last().expect("non-empty");
        g_start.push(last + inner(w[0], w[1]));
    }
    let mut total = 0.0;
    for (p, w) in breaks.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let outer = |t: f64| {
            let g = g_start[p] + inner(lo, t);
            C64::from_polar(1.0, phase_at(pulse, mode_freq, t)) * g
        };
        total += integrate(outer, lo, hi, 1e-16 * tau * tau, 1e-12).im;
    }
    total
}

/// Geometric phase from the double integral, by nested quadrature.
pub fn geometric_phase_quadrature(
    pulse: &FmPulseSequence,
    omega_a: f64,
    omega_b: f64,
    couplings: &[ModeCoupling],
) -> f64 {
    let sum: f64 = couplings
        .par_iter()
        .map(|m| m.eta_a * m.eta_b * phase_integral_quadrature(pulse, m.freq))
        .sum();
    0.5 * omega_a * omega_b * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_smooth_functions() {
        let v = integrate(|x| C64::new(x.sin(), x.cos()), 0.0, PI, 1e-15, 1e-14);
        assert!((v - C64::new(2.0, 0.0)).norm() < 1e-13);
        let v = integrate(|x| C64::new((-x * x).exp(), 0.0), -8.0, 8.0, 1e-15, 1e-14);
        assert!((v.re - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn integrates_kinked_functions() {
        let v = integrate(|x| C64::new((x - 0.3).abs(), 0.0), 0.0, 1.0, 1e-15, 1e-14);
        assert!((v.re - (0.045 + 0.245)).abs() < 1e-13);
    }

    #[test]
    fn double_integral_of_constant_detuning() {
        let (delta, tau) = (5.0, 2.3);
        let p = FmPulseSequence::new(vec![tau], vec![delta]).unwrap();
        let expect = tau / delta - (delta * tau).sin() / (delta * delta);
        assert!((phase_integral_quadrature(&p, 0.0) - expect).abs() < 1e-12);
    }
}
