//! Dense statevector and operator algebra for small qubit registers.
//!
//! Basis ordering is little-endian: bit `q` of a basis index is the state of
//! ion `q`. `σ_φ = cos φ X + sin φ Y`, so `σ_φ|0⟩ = e^{iφ}|1⟩` and
//! `σ_φ|1⟩ = e^{-iφ}|0⟩`. Rotations follow `R_φ(a) = exp(-i a/2 σ_φ)`.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest register the dense representation is meant for.
pub const MAX_QUBITS: usize = 12;

fn check_index(index: usize, n: usize) -> Result<()> {
    if index >= n {
        Err(Error::IndexOutOfRange { index, n })
    } else {
        Ok(())
    }
}

fn check_distinct(indices: &[usize], n: usize) -> Result<()> {
    for (k, &i) in indices.iter().enumerate() {
        check_index(i, n)?;
        if indices[..k].contains(&i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// Pure state of `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitState {
    n: usize,
    amps: Vec<C64>,
}

impl QubitState {
    /// `|0…0⟩`
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "{n} qubits exceeds the dense limit");
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        QubitState { n, amps }
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, n: dim });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(QubitState { n, amps })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two
    /// and the norm must already be 1 up to rounding; the result is
    /// renormalized exactly.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("state norm^2 = {norm_sqr}")));
        }
        let scale = 1.0 / norm_sqr.sqrt();
        let n = dim.trailing_zeros() as usize;
        Ok(QubitState {
            n,
            amps: amps.into_iter().map(|a| a * scale).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &QubitState) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability that ion `q` reads `|1⟩`.
    pub fn excitation(&self, q: usize) -> f64 {
        let mask = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Excitation probability of every ion.
    pub fn excitations(&self) -> Vec<f64> {
        (0..self.n).map(|q| self.excitation(q)).collect()
    }

    /// Applies `exp(-iθ ⊗_q σ_{φ_q})` for the Pauli string given as
    /// `(qubit, φ)` pairs. The qubits must be distinct.
    pub fn apply_pauli_exp(&mut self, theta: f64, string: &[(usize, f64)]) {
        if theta == 0.0 || string.is_empty() {
            return;
        }
        let mut mask = 0usize;
        for &(q, _) in string {
            debug_assert!(q < self.n && mask & (1 << q) == 0);
            mask |= 1 << q;
        }
        let phases: Vec<(usize, C64, C64)> = string
            .iter()
            .map(|&(q, phi)| (q, C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi)))
            .collect();
        let (c, s) = (theta.cos(), theta.sin());
        let minus_is = C64::new(0.0, -s);
        for y in 0..self.amps.len() {
            let x = y ^ mask;
            if x < y {
                continue;
            }
            // P|x⟩ = ph(x)|y⟩ and P|y⟩ = ph(y)|x⟩
            let mut ph_x = ONE;
            let mut ph_y = ONE;
            for &(q, up, down) in &phases {
                if x & (1 << q) == 0 {
                    ph_x *= up;
                    ph_y *= down;
                } else {
                    ph_x *= down;
                    ph_y *= up;
                }
            }
            let (ax, ay) = (self.amps[x], self.amps[y]);
            self.amps[y] = ay * c + minus_is * ph_x * ax;
            self.amps[x] = ax * c + minus_is * ph_y * ay;
        }
    }

    /// Applies `R_φ(angle) = exp(-i angle/2 σ_φ)` to qubit `q`.
    pub fn apply_rotation(&mut self, q: usize, phi: f64, angle: f64) {
        self.apply_pauli_exp(angle / 2.0, &[(q, phi)]);
    }

    /// Applies `exp(-i angle/2 Z)` to qubit `q`.
    pub fn apply_z_rotation(&mut self, q: usize, angle: f64) {
        let down = C64::from_polar(1.0, -angle / 2.0);
        let up = C64::from_polar(1.0, angle / 2.0);
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & mask == 0 { down } else { up };
        }
    }

    /// Reduced density matrix of `subset` (row-major, `2^k × 2^k`), with bit
    /// `i` of the reduced index corresponding to `subset[i]`.
    pub fn reduced_density(&self, subset: &[usize]) -> Result<Vec<C64>> {
        check_distinct(subset, self.n)?;
        let k = subset.len();
        let dk = 1usize << k;
        let sub_mask: usize = subset.iter().map(|&q| 1usize << q).sum();
        let rest: Vec<usize> = (0..self.n).filter(|q| sub_mask & (1 << q) == 0).collect();
        let embed = |sub: usize, env: usize| -> usize {
            let mut idx = 0usize;
            for (i, &q) in subset.iter().enumerate() {
                if sub & (1 << i) != 0 {
                    idx |= 1 << q;
                }
            }
            for (i, &q) in rest.iter().enumerate() {
                if env & (1 << i) != 0 {
                    idx |= 1 << q;
                }
            }
            idx
        };
        let mut rho = vec![ZERO; dk * dk];
        for env in 0..(1usize << rest.len()) {
            for r in 0..dk {
                let ar = self.amps[embed(r, env)];
                if ar == ZERO {
                    continue;
                }
                for c in 0..dk {
                    rho[r * dk + c] += ar * self.amps[embed(c, env)].conj();
                }
            }
        }
        Ok(rho)
    }
}

/// Dense `2^n × 2^n` operator, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    n: usize,
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "{n} qubits exceeds the dense limit");
        let dim = 1usize << n;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Operator { n, dim, data }
    }

    pub fn from_rows(n: usize, data: Vec<C64>) -> Result<Self> {
        let dim = 1usize << n;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Operator { n, dim, data })
    }

    /// Tensor string `⊗_q σ_{φ_q}` with identity elsewhere.
    pub fn pauli_string(n: usize, string: &[(usize, f64)]) -> Result<Self> {
        let qubits: Vec<usize> = string.iter().map(|&(q, _)| q).collect();
        check_distinct(&qubits, n)?;
        let dim = 1usize << n;
        let mut data = vec![ZERO; dim * dim];
        let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        for col in 0..dim {
            let mut ph = ONE;
            for &(q, phi) in string {
                ph *= if col & (1 << q) == 0 {
                    C64::from_polar(1.0, phi)
                } else {
                    C64::from_polar(1.0, -phi)
                };
            }
            data[(col ^ mask) * dim + col] = ph;
        }
        Ok(Operator { n, dim, data })
    }

    /// `exp(-iθ G)` for a Pauli string `G` (`G² = I`): `cos θ I − i sin θ G`.
    pub fn pauli_exp(n: usize, theta: f64, string: &[(usize, f64)]) -> Result<Self> {
        let g = Self::pauli_string(n, string)?;
        let mut out = Self::identity(n);
        let (c, s) = (theta.cos(), theta.sin());
        for (o, gv) in out.data.iter_mut().zip(&g.data) {
            *o = *o * c - I * s * gv;
        }
        Ok(out)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        Operator { n: self.n, dim: d, data }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖U†U − I‖_max`
    pub fn unitarity_error(&self) -> f64 {
        (&self.dagger() * self).max_abs_diff(&Operator::identity(self.n))
    }

    /// `|tr(U†V)| / 2^n`: 1 exactly when the operators agree up to a global phase.
    pub fn phase_insensitive_overlap(&self, other: &Operator) -> f64 {
        let t: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        t.norm() / self.dim as f64
    }

    /// `max |V − e^{iγ}U|` with `γ` chosen to maximise `|tr(U†V)|`.
    pub fn distance_up_to_phase(&self, other: &Operator) -> f64 {
        let t: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if t.norm() > 0.0 { t / t.norm() } else { ONE };
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (b - a * phase).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * d..(k + 1) * d];
                for (o, b) in data[r * d..(r + 1) * d].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Operator { n: self.n, dim: d, data }
    }
}

/// `σ_φ` on `target`, identity elsewhere.
pub fn pauli_phi(phi: f64, target: usize, n: usize) -> Result<Operator> {
    check_index(target, n)?;
    Operator::pauli_string(n, &[(target, phi)])
}

/// `exp(-iθ σ_{φa}^{(a)} σ_{φb}^{(b)})`.
pub fn ms_unitary(theta: f64, phi_a: f64, phi_b: f64, a: usize, b: usize, n: usize) -> Result<Operator> {
    check_index(a, n)?;
    check_index(b, n)?;
    if a == b {
        return Err(Error::InvalidPair(a, b));
    }
    Operator::pauli_exp(n, theta, &[(a, phi_a), (b, phi_b)])
}

/// `exp(-i angle/2 σ_φ)` on one qubit.
pub fn rotation(phi: f64, angle: f64, target: usize, n: usize) -> Result<Operator> {
    check_index(target, n)?;
    Operator::pauli_exp(n, angle / 2.0, &[(target, phi)])
}

pub fn apply(op: &Operator, state: &QubitState) -> Result<QubitState> {
    if op.dim != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim,
            found: state.dim(),
        });
    }
    let d = op.dim;
    let mut out = vec![ZERO; d];
    for (r, o) in out.iter_mut().enumerate() {
        *o = op.data[r * d..(r + 1) * d]
            .iter()
            .zip(&state.amps)
            .map(|(a, b)| a * b)
            .sum();
    }
    let norm = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in &mut out {
            *a /= norm;
        }
    }
    Ok(QubitState { n: state.n, amps: out })
}

/// Marginal distribution over the bitstrings of `subset`. Entry `k` is the
/// probability of the outcome whose bit `i` is the reading of `subset[i]`.
pub fn reduced_populations(state: &QubitState, subset: &[usize]) -> Result<Vec<f64>> {
    check_distinct(subset, state.n)?;
    let mut probs = vec![0.0; 1 << subset.len()];
    for (idx, a) in state.amps.iter().enumerate() {
        let key = subset
            .iter()
            .enumerate()
            .filter(|(_, &q)| idx & (1 << q) != 0)
            .fold(0usize, |acc, (i, _)| acc | (1 << i));
        probs[key] += a.norm_sqr();
    }
    Ok(probs)
}
