//! Closed-form displacement and geometric-phase integrals for
//! piecewise-constant FM pulses.
//!
//! Within a segment the motional phase is linear, `φ(t) = φ_s + δ_s (t − t_s)`,
//! so every integral reduces to a handful of one-variable kernels in
//! `x = δ_s d_s`.

use num_complex::Complex64 as C64;

use super::modes::ModeCoupling;
use super::pulse::FmPulseSequence;

const SERIES_CUTOFF: f64 = 0.1;

/// `∫₀¹ e^{ixv} dv`
fn unit_exp_integral(x: f64) -> C64 {
    if x == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let h = (0.5 * x).sin();
    C64::new(x.sin() / x, 2.0 * h * h / x)
}

/// `∫₀¹ v e^{ixv} dv`
fn unit_first_moment(x: f64) -> C64 {
    if x.abs() < SERIES_CUTOFF {
        // Σ (ix)^m / (m! (m + 2))
        let mut term = C64::new(1.0, 0.0);
        let mut sum = C64::new(0.5, 0.0);
        for m in 1..16 {
            term *= C64::new(0.0, x) / m as f64;
            sum += term / (m as f64 + 2.0);
        }
        sum
    } else {
        let e = C64::from_polar(1.0, x);
        e / C64::new(0.0, x) + (e - 1.0) / (x * x)
    }
}

/// `∫₀¹ du ∫₀ᵘ dv sin(x (u − v)) = (x − sin x) / x²`
fn unit_self_phase(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        // Σ_{m≥1} (−1)^{m+1} x^{2m−1} / (2m+1)!
        let x2 = x * x;
        let mut term = x / 6.0;
        let mut sum = term;
        for m in 2..10 {
            let k = 2.0 * m as f64;
            term *= -x2 / (k * (k + 1.0));
            sum += term;
        }
        sum
    } else {
        (x - x.sin()) / (x * x)
    }
}

/// Per-segment integrals `E_s = ∫_seg e^{iφ_k(t)} dt` for mode frequency
/// `mode_freq`.
pub fn segment_integrals(pulse: &FmPulseSequence, mode_freq: f64) -> Vec<C64> {
    let mut phase = 0.0;
    pulse
        .durations()
        .iter()
        .zip(pulse.detunings())
        .map(|(&d, &mu)| {
            let x = (mu - mode_freq) * d;
            let e = C64::from_polar(d, phase) * unit_exp_integral(x);
            phase += x;
            e
        })
        .collect()
}

/// `∫₀^τ e^{iφ_k(t)} dt`
pub fn closure_integral(pulse: &FmPulseSequence, mode_freq: f64) -> C64 {
    segment_integrals(pulse, mode_freq).into_iter().sum()
}

/// `α = (η Ω / 2) ∫₀^τ e^{iφ_k(t)} dt`
pub fn displacement(pulse: &FmPulseSequence, eta: f64, omega: f64, mode_freq: f64) -> C64 {
    closure_integral(pulse, mode_freq) * (0.5 * eta * omega)
}

/// `∫₀^τ dt ∫₀ᵗ dt' sin(φ_k(t) − φ_k(t'))`, summed segment pair by segment pair.
pub fn phase_integral(pulse: &FmPulseSequence, mode_freq: f64) -> f64 {
    let mut phase = 0.0;
    let mut earlier = C64::new(0.0, 0.0);
    let mut total = 0.0;
    for (&d, &mu) in pulse.durations().iter().zip(pulse.detunings()) {
        let x = (mu - mode_freq) * d;
        let e = C64::from_polar(d, phase) * unit_exp_integral(x);
        total += d * d * unit_self_phase(x) + (e * earlier.conj()).im;
        earlier += e;
        phase += x;
    }
    total
}

/// `θ = (Ω_a Ω_b / 2) Σ_k η_{a,k} η_{b,k} ∫∫ sin(φ_k(t) − φ_k(t'))`
pub fn geometric_phase(
    pulse: &FmPulseSequence,
    omega_a: f64,
    omega_b: f64,
    couplings: &[ModeCoupling],
) -> f64 {
    if omega_a == 0.0 || omega_b == 0.0 {
        return 0.0;
    }
    let sum: f64 = couplings
        .iter()
        .map(|m| m.eta_a * m.eta_b * phase_integral(pulse, m.freq))
        .sum();
    0.5 * omega_a * omega_b * sum
}

/// Closure integral and its gradient with respect to each segment detuning.
pub fn closure_gradient(pulse: &FmPulseSequence, mode_freq: f64) -> (C64, Vec<C64>) {
    let durations = pulse.durations();
    let n = durations.len();
    let mut starts = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut phase = 0.0;
    for (&d, &mu) in durations.iter().zip(pulse.detunings()) {
        starts.push(phase);
        let x = (mu - mode_freq) * d;
        xs.push(x);
        phase += x;
    }
    let segs: Vec<C64> = (0..n)
        .map(|s| C64::from_polar(durations[s], starts[s]) * unit_exp_integral(xs[s]))
        .collect();
    let total: C64 = segs.iter().sum();
    let mut grad = vec![C64::new(0.0, 0.0); n];
    let mut later = C64::new(0.0, 0.0);
    for s in (0..n).rev() {
        let d = durations[s];
        // own segment: i ∫ (t − t_s) e^{iφ} dt; later segments shift by d
        let own = C64::new(0.0, 1.0) * C64::from_polar(d * d, starts[s]) * unit_first_moment(xs[s]);
        grad[s] = own + C64::new(0.0, d) * later;
        later += segs[s];
    }
    (total, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn kernels_are_continuous_across_series_cutoff() {
        for x in [SERIES_CUTOFF * (1.0 - 1e-9), SERIES_CUTOFF * (1.0 + 1e-9)] {
            let direct = (x - x.sin()) / (x * x);
            assert!((unit_self_phase(x) - direct).abs() < 1e-13);
            let e = C64::from_polar(1.0, x);
            let direct = e / C64::new(0.0, x) + (e - 1.0) / (x * x);
            assert!((unit_first_moment(x) - direct).norm() < 1e-12);
        }
        assert!((unit_self_phase(1e-9) - 1e-9 / 6.0).abs() < 1e-24);
        assert!((unit_first_moment(0.0) - C64::new(0.5, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn zero_rabi_gives_zero_displacement_and_phase() {
        let p = FmPulseSequence::new(vec![1.0], vec![3.0]).unwrap();
        assert_eq!(displacement(&p, 0.1, 0.0, 1.0), C64::new(0.0, 0.0));
        let m = [ModeCoupling { freq: 1.0, eta_a: 0.1, eta_b: 0.1 }];
        assert_eq!(geometric_phase(&p, 0.0, 2.0, &m), 0.0);
    }

    #[test]
    fn closed_loop_has_zero_displacement() {
        let delta = 3.7;
        let p = FmPulseSequence::new(vec![TAU / delta], vec![delta]).unwrap();
        assert!(displacement(&p, 0.1, 5.0, 0.0).norm() < 1e-15);
    }

    #[test]
    fn half_loop_displacement_closed_form() {
        let (delta, eta, omega) = (2.5, 0.1, 4.0);
        let p = FmPulseSequence::new(vec![PI / delta], vec![delta]).unwrap();
        let a = displacement(&p, eta, omega, 0.0);
        let expect = C64::new(0.0, eta * omega / delta);
        assert!((a - expect).norm() < 1e-15);
    }

    #[test]
    fn single_segment_geometric_phase_closed_form() {
        let (delta, tau, oa, ob, ea, eb) = (2.0, 1.7, 3.0, 1.5, 0.1, -0.07);
        let p = FmPulseSequence::new(vec![tau], vec![delta]).unwrap();
        let m = [ModeCoupling { freq: 0.0, eta_a: ea, eta_b: eb }];
        let expect = 0.5 * oa * ob * ea * eb * (tau / delta - (delta * tau).sin() / (delta * delta));
        assert!((geometric_phase(&p, oa, ob, &m) - expect).abs() < 1e-15);
        // loop closing
        let p = FmPulseSequence::new(vec![TAU / delta], vec![delta]).unwrap();
        let expect = PI * oa * ob * ea * eb / (delta * delta);
        assert!((geometric_phase(&p, oa, ob, &m) - expect).abs() < 1e-15);
    }

    #[test]
    fn splitting_a_segment_changes_nothing() {
        let whole = FmPulseSequence::new(vec![1.0, 0.6], vec![4.0, -2.0]).unwrap();
        let split = FmPulseSequence::new(vec![0.25, 0.75, 0.6], vec![4.0, 4.0, -2.0]).unwrap();
        assert!((closure_integral(&whole, 0.3) - closure_integral(&split, 0.3)).norm() < 1e-14);
        assert!((phase_integral(&whole, 0.3) - phase_integral(&split, 0.3)).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = FmPulseSequence::new(vec![0.4, 0.3, 0.5, 0.2], vec![3.0, -1.0, 0.25, 6.0]).unwrap();
        let w = 0.75;
        let (_, grad) = closure_gradient(&p, w);
        let h = 1e-6;
        for s in 0..4 {
            let mut up = p.detunings().to_vec();
            let mut dn = p.detunings().to_vec();
            up[s] += h;
            dn[s] -= h;
            let gu = closure_integral(&FmPulseSequence::new(p.durations().to_vec(), up).unwrap(), w);
            let gd = closure_integral(&FmPulseSequence::new(p.durations().to_vec(), dn).unwrap(), w);
            let fd = (gu - gd) / (2.0 * h);
            assert!((fd - grad[s]).norm() < 1e-8, "segment {s}: {fd} vs {}", grad[s]);
        }
    }
}
