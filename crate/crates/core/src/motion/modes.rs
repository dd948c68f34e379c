//! Motional mode frequencies and Lamb–Dicke couplings.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mode `k` as seen by an ion pair: frequency and the two couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeCoupling {
    pub freq: f64,
    pub eta_a: f64,
    pub eta_b: f64,
}

/// Mode frequencies (rad/s, ascending) and the `η[ion][mode]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeStructure {
    frequencies: Vec<f64>,
    eta: Vec<Vec<f64>>,
}

impl ModeStructure {
    pub fn new(frequencies: Vec<f64>, eta: Vec<Vec<f64>>) -> Result<Self> {
        let n_modes = frequencies.len();
        let n_ions = eta.len();
        if n_modes == 0 || n_modes > n_ions {
            return Err(Error::InvalidInput(format!(
                "{n_modes} modes for {n_ions} ions (need 1..=n_ions)"
            )));
        }
        if frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput("mode frequencies must be positive".into()));
        }
        if frequencies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("mode frequencies must be strictly ascending".into()));
        }
        for row in &eta {
            if row.len() != n_modes {
                return Err(Error::DimensionMismatch {
                    expected: n_modes,
                    found: row.len(),
                });
            }
            if row.iter().any(|e| !(e.is_finite() && e.abs() <= 1.0)) {
                return Err(Error::InvalidInput("|eta| must be at most 1".into()));
            }
        }
        Ok(ModeStructure { frequencies, eta })
    }

    pub fn n_ions(&self) -> usize {
        self.eta.len()
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn eta(&self, ion: usize, mode: usize) -> f64 {
        self.eta[ion][mode]
    }

    pub fn eta_table(&self) -> &[Vec<f64>] {
        &self.eta
    }

    pub fn pair_couplings(&self, a: usize, b: usize) -> Vec<ModeCoupling> {
        self.frequencies
            .iter()
            .enumerate()
            .map(|(k, &freq)| ModeCoupling {
                freq,
                eta_a: self.eta[a][k],
                eta_b: self.eta[b][k],
            })
            .collect()
    }

    /// Multiplies every coupling of `ion` by `factor` (weaker or stronger
    /// participation in all modes).
    pub fn scale_ion(&mut self, ion: usize, factor: f64) -> Result<()> {
        let n = self.n_ions();
        let row = self
            .eta
            .get_mut(ion)
            .ok_or(Error::IndexOutOfRange { index: ion, n })?;
        for e in row.iter_mut() {
            *e *= factor;
        }
        if row.iter().any(|e| e.abs() > 1.0) {
            return Err(Error::InvalidInput("scaled |eta| exceeds 1".into()));
        }
        Ok(())
    }

    /// Radial modes of a linear chain in a harmonic trap.
    ///
    /// `com_freq` is the radial centre-of-mass frequency, `axial_freq` the
    /// axial trap frequency (it sets the mode splitting through
    /// `(ω_z/ω_x)²`), `eta0` the single-ion Lamb–Dicke parameter at the COM
    /// frequency. Couplings are `η₀ b_{j,k} √(ω_com/ω_k)`.
    pub fn linear_chain(n_ions: usize, com_freq: f64, axial_freq: f64, eta0: f64) -> Result<Self> {
        if n_ions == 0 {
            return Err(Error::InvalidInput("chain needs at least one ion".into()));
        }
        if !(com_freq > 0.0 && axial_freq > 0.0 && axial_freq < com_freq) {
            return Err(Error::InvalidInput(
                "need 0 < axial frequency < radial COM frequency".into(),
            ));
        }
        let u = equilibrium_positions(n_ions)?;
        let beta = (axial_freq / com_freq).powi(2);
        let mut a = DMatrix::<f64>::zeros(n_ions, n_ions);
        for i in 0..n_ions {
            let mut diag = 1.0;
            for m in 0..n_ions {
                if m != i {
                    let c = beta / (u[i] - u[m]).abs().powi(3);
                    a[(i, m)] = c;
                    diag -= c;
                }
            }
            a[(i, i)] = diag;
        }
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..n_ions).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));

        let mut frequencies = Vec::with_capacity(n_ions);
        let mut eta = vec![Vec::with_capacity(n_ions); n_ions];
        for &k in &order {
            let lambda = eig.eigenvalues[k];
            if lambda <= 0.0 {
                return Err(Error::InvalidInput(
                    "radial mode unstable (zig-zag regime); lower the axial frequency".into(),
                ));
            }
            let freq = com_freq * lambda.sqrt();
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            // fix the eigenvector sign: largest-magnitude entry positive
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() + 1e-12 { x } else { acc });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            let scale = eta0 * (com_freq / freq).sqrt();
            for (j, b) in v.iter().enumerate() {
                eta[j].push(scale * b);
            }
            frequencies.push(freq);
        }
        Self::new(frequencies, eta)
    }
}

/// Dimensionless axial equilibrium positions of `n` ions in a harmonic well
/// (units of `(e²/4πε₀ m ω_z²)^{1/3}`), ascending.
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    if n == 1 {
        return Ok(vec![0.0]);
    }
    // initial guess from the large-N density estimate
    let mut u = DVector::<f64>::from_fn(n, |i, _| {
        let x = i as f64 - (n as f64 - 1.0) / 2.0;
        x * 2.0 * (n as f64).powf(-0.56)
    });
    for _ in 0..200 {
        let mut f = DVector::<f64>::zeros(n);
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            f[i] = u[i];
            jac[(i, i)] = 1.0;
            for m in 0..n {
                if m == i {
                    continue;
                }
                let d = u[i] - u[m];
                f[i] -= d.signum() / (d * d);
                let c = 2.0 / d.abs().powi(3);
                jac[(i, i)] += c;
                jac[(i, m)] -= c;
            }
        }
        let step = jac
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::InvalidInput("singular equilibrium Jacobian".into()))?;
        u -= &step;
        if step.amax() < 1e-14 {
            return Ok(u.iter().copied().collect());
        }
    }
    Err(Error::InvalidInput("equilibrium positions did not converge".into()))
}
