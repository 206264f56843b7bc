//! Dense state-vector simulation.
//!
//! Qubit `q` is bit `q` of a basis index. A register is a list of qubits;
//! its value reads the first listed qubit as the least significant bit.

mod algorithms;
mod oracle;

pub use algorithms::{
    deutsch_circuit_state, deutsch_decide, order_find_core, DeutschOutcome, OrderFindingCircuit,
    OrderRun, ParityClass,
};
pub use oracle::{BlackBoxFunction, CountingOracle, Partition};

use num_complex::Complex64;
use rand::Rng;
use rustfft::{FftDirection, FftPlanner};
use serde::Serialize;
use thiserror::Error;

/// Largest simulated register (16M amplitudes).
pub const MAX_QUBITS: usize = 24;

/// Allowed drift of the squared norm.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("qubit {qubit} out of range for a {count}-qubit state")]
    QubitOutOfRange { qubit: usize, count: usize },
    #[error("qubit {0} listed twice in a register")]
    DuplicateQubit(usize),
    #[error("input and output registers overlap on qubit {0}")]
    RegisterOverlap(usize),
    #[error("{requested} qubits exceed the simulator budget of {limit}")]
    TooManyQubits { requested: usize, limit: usize },
    #[error("register has {found} qubits, function expects {expected}")]
    RegisterWidth { expected: usize, found: usize },
    #[error("function table has {found} entries, expected {expected}")]
    NonTotalTable { expected: usize, found: usize },
    #[error("f({input}) = {output} does not fit in the output width")]
    OutputOutOfRange { input: u64, output: u64 },
    #[error("oracle does not permute the basis states")]
    NotPermutation,
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error("state has squared norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("state has zero norm on the measured register")]
    ZeroNorm,
    #[error("expected a 1-bit to 1-bit function, got {input_bits} to {output_bits} bits")]
    WrongArity {
        input_bits: usize,
        output_bits: usize,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Normalized amplitudes over `2^n` computational basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    amps: Vec<Complex64>,
    qubits: usize,
}

/// Outcome of measuring a register.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub value: u64,
    /// Register bits, most significant (last listed qubit) first.
    pub bits: String,
    pub probability: f64,
}

impl QState {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self, QsimError> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self, QsimError> {
        if n > MAX_QUBITS {
            return Err(QsimError::TooManyQubits {
                requested: n,
                limit: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        let slot = amps.get_mut(index).ok_or(QsimError::Precondition(format!(
            "basis index {index} out of range"
        )))?;
        *slot = Complex64::new(1.0, 0.0);
        Ok(QState { amps, qubits: n })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, QsimError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(QsimError::BadLength(len));
        }
        let qubits = len.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(QsimError::TooManyQubits {
                requested: qubits,
                limit: MAX_QUBITS,
            });
        }
        let state = QState { amps, qubits };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn renormalize(&mut self) -> Result<(), QsimError> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(QsimError::ZeroNorm);
        }
        self.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(())
    }

    /// Largest `|<self|other>|` deviation from 1: zero iff the states agree
    /// up to a global phase.
    pub fn phase_distance(&self, other: &QState) -> f64 {
        let overlap: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        (1.0 - overlap.norm()).abs()
    }

    fn check_qubit(&self, q: usize) -> Result<(), QsimError> {
        if q >= self.qubits {
            Err(QsimError::QubitOutOfRange {
                qubit: q,
                count: self.qubits,
            })
        } else {
            Ok(())
        }
    }

    fn check_register(&self, reg: &[usize]) -> Result<(), QsimError> {
        for (i, &q) in reg.iter().enumerate() {
            self.check_qubit(q)?;
            if reg[..i].contains(&q) {
                return Err(QsimError::DuplicateQubit(q));
            }
        }
        Ok(())
    }

    /// Applies the 2x2 unitary `m` (row-major) to qubit `q`.
    pub fn apply_single(&mut self, q: usize, m: [[Complex64; 2]; 2]) -> Result<(), QsimError> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Applies `m` to `target` where `control` is 1.
    pub fn apply_controlled(
        &mut self,
        control: usize,
        target: usize,
        m: [[Complex64; 2]; 2],
    ) -> Result<(), QsimError> {
        self.check_register(&[control, target])?;
        let (cbit, tbit) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | tbit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | tbit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_x(&mut self, q: usize) -> Result<(), QsimError> {
        self.apply_single(q, gates::X)
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<(), QsimError> {
        self.apply_single(q, gates::hadamard())
    }

    /// Tensor-product Hadamard on every qubit of the register.
    pub fn apply_hadamard_all(&mut self, reg: &[usize]) -> Result<(), QsimError> {
        self.check_register(reg)?;
        for &q in reg {
            self.apply_hadamard(q)?;
        }
        Ok(())
    }

    /// Basis-index offsets of every register value, with other qubits zero.
    fn register_offsets(reg: &[usize]) -> Vec<usize> {
        (0..1usize << reg.len())
            .map(|k| {
                reg.iter()
                    .enumerate()
                    .filter(|(t, _)| k >> t & 1 == 1)
                    .fold(0, |acc, (_, &q)| acc | 1 << q)
            })
            .collect()
    }

    fn register_mask(reg: &[usize]) -> usize {
        reg.iter().fold(0, |acc, &q| acc | 1 << q)
    }

    /// Value of the register in basis state `index`.
    pub fn register_value(index: usize, reg: &[usize]) -> u64 {
        reg.iter()
            .enumerate()
            .fold(0, |acc, (t, &q)| acc | (((index >> q) & 1) as u64) << t)
    }

    /// Discrete Fourier transform over the register with kernel
    /// `omega^(jk) / 2^(m/2)`, `omega = exp(2 pi i / 2^m)`. The inverse uses
    /// the conjugate kernel.
    pub fn apply_qft(&mut self, reg: &[usize], inverse: bool) -> Result<(), QsimError> {
        self.check_register(reg)?;
        if reg.is_empty() {
            return Ok(());
        }
        let size = 1usize << reg.len();
        let offsets = Self::register_offsets(reg);
        let mask = Self::register_mask(reg);
        // rustfft's inverse direction carries the positive exponent
        let direction = if inverse {
            FftDirection::Forward
        } else {
            FftDirection::Inverse
        };
        let fft = FftPlanner::new().plan_fft(size, direction);
        let scale = 1.0 / (size as f64).sqrt();
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for base in (0..self.amps.len()).filter(|b| b & mask == 0) {
            for (slot, off) in buf.iter_mut().zip(&offsets) {
                *slot = self.amps[base | off];
            }
            fft.process(&mut buf);
            for (val, off) in buf.iter().zip(&offsets) {
                self.amps[base | off] = val * scale;
            }
        }
        Ok(())
    }

    /// Applies `|x>|y> -> |x>|y xor f(x)>`, after checking the induced map on
    /// basis states is a bijection.
    pub fn apply_oracle(
        &mut self,
        f: &BlackBoxFunction,
        input: &[usize],
        output: &[usize],
    ) -> Result<(), QsimError> {
        let perm = self.oracle_permutation(f, input, output)?;
        let mut next = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (from, &to) in perm.iter().enumerate() {
            next[to] = self.amps[from];
        }
        self.amps = next;
        Ok(())
    }

    /// Basis-state map of the oracle; errors unless it is a permutation.
    pub fn oracle_permutation(
        &self,
        f: &BlackBoxFunction,
        input: &[usize],
        output: &[usize],
    ) -> Result<Vec<usize>, QsimError> {
        self.check_register(input)?;
        self.check_register(output)?;
        if let Some(&q) = input.iter().find(|q| output.contains(q)) {
            return Err(QsimError::RegisterOverlap(q));
        }
        if input.len() != f.input_bits() {
            return Err(QsimError::RegisterWidth {
                expected: f.input_bits(),
                found: input.len(),
            });
        }
        if output.len() != f.output_bits() {
            return Err(QsimError::RegisterWidth {
                expected: f.output_bits(),
                found: output.len(),
            });
        }
        let offsets = Self::register_offsets(output);
        let out_mask = Self::register_mask(output);
        let mut perm = Vec::with_capacity(self.amps.len());
        let mut hit = vec![false; self.amps.len()];
        for b in 0..self.amps.len() {
            let x = Self::register_value(b, input);
            let y = Self::register_value(b, output);
            let to = (b & !out_mask) | offsets[(y ^ f.eval(x)) as usize];
            if std::mem::replace(&mut hit[to], true) {
                return Err(QsimError::NotPermutation);
            }
            perm.push(to);
        }
        Ok(perm)
    }

    /// Born probabilities of every register value.
    pub fn marginal(&self, reg: &[usize]) -> Result<Vec<f64>, QsimError> {
        self.check_register(reg)?;
        let mut probs = vec![0.0; 1 << reg.len()];
        for (b, a) in self.amps.iter().enumerate() {
            probs[Self::register_value(b, reg) as usize] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Samples the register by inverse CDF over its marginal, then collapses
    /// and renormalizes.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        reg: &[usize],
        rng: &mut R,
    ) -> Result<Measurement, QsimError> {
        let probs = self.marginal(reg)?;
        let value = sample_index(&probs, rng)?;
        let probability = probs[value] / probs.iter().sum::<f64>();
        let scale = probs[value].sqrt();
        for (b, a) in self.amps.iter_mut().enumerate() {
            if Self::register_value(b, reg) as usize == value {
                *a /= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Measurement {
            value: value as u64,
            bits: format_bits(value as u64, reg.len()),
            probability,
        })
    }

    /// [`QState::measure`] with a fresh generator seeded by `seed`.
    pub fn measure_seeded(&mut self, reg: &[usize], seed: u64) -> Result<Measurement, QsimError> {
        self.measure(reg, &mut crate::rng::seeded(seed))
    }
}

/// Inverse-CDF draw from unnormalized weights.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub(crate) fn sample_index<R: Rng + ?Sized>(
    weights: &[f64],
    rng: &mut R,
) -> Result<usize, QsimError> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(QsimError::ZeroNorm);
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if u < acc {
            return Ok(i);
        }
    }
    last.ok_or(QsimError::ZeroNorm)
}

pub(crate) fn format_bits(value: u64, width: usize) -> String {
    (0..width)
        .rev()
        .map(|t| if value >> t & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Common single-qubit gates.
pub mod gates {
    use num_complex::Complex64;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    pub const X: [[Complex64; 2]; 2] = [[ZERO, ONE], [ONE, ZERO]];

    pub fn hadamard() -> [[Complex64; 2]; 2] {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        [[h, h], [h, -h]]
    }

    pub fn phase(theta: f64) -> [[Complex64; 2]; 2] {
        [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, theta)]]
    }

    pub fn ry(theta: f64) -> [[Complex64; 2]; 2] {
        let (s, c) = (theta / 2.0).sin_cos();
        [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ]
    }

    pub fn rz(theta: f64) -> [[Complex64; 2]; 2] {
        [
            [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
            [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(n: usize, seed: u64) -> QState {
        let mut rng = crate::rng::seeded(seed);
        let amps: Vec<Complex64> = (0..1 << n)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut s = QState { amps, qubits: n };
        s.renormalize().unwrap();
        s
    }

    fn max_diff(a: &QState, b: &QState) -> f64 {
        a.amps
            .iter()
            .zip(&b.amps)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = QState::zero(1).unwrap();
        s.apply_hadamard_all(&[0]).unwrap();
        assert!((s.amps[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.amps[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hadamard_spreads_uniformly() {
        let n = 5;
        let mut s = QState::zero(n).unwrap();
        s.apply_hadamard_all(&(0..n).collect::<Vec<_>>()).unwrap();
        let expected = 2f64.powf(-(n as f64) / 2.0);
        assert!(s.amps.iter().all(|a| (a - c(expected, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn hadamard_is_an_involution() {
        let orig = random_state(4, 3);
        let mut s = orig.clone();
        s.apply_hadamard_all(&[0, 2, 3]).unwrap();
        s.apply_hadamard_all(&[0, 2, 3]).unwrap();
        assert!(max_diff(&s, &orig) < 1e-12);
    }

    #[test]
    fn qft_of_zero_is_uniform() {
        let mut s = QState::zero(3).unwrap();
        s.apply_qft(&[0, 1, 2], false).unwrap();
        let u = 1.0 / 8f64.sqrt();
        assert!(s.amps.iter().all(|a| (a - c(u, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn qft_roundtrip_on_subregister() {
        let orig = random_state(5, 11);
        let mut s = orig.clone();
        s.apply_qft(&[4, 1, 2], false).unwrap();
        s.apply_qft(&[4, 1, 2], true).unwrap();
        assert!(max_diff(&s, &orig) < 1e-12);
    }

    #[test]
    fn register_errors() {
        let mut s = QState::zero(2).unwrap();
        assert_eq!(
            s.apply_hadamard_all(&[0, 2]),
            Err(QsimError::QubitOutOfRange { qubit: 2, count: 2 })
        );
        assert_eq!(
            s.apply_qft(&[1, 1], false),
            Err(QsimError::DuplicateQubit(1))
        );
        assert!(matches!(
            QState::zero(25),
            Err(QsimError::TooManyQubits { .. })
        ));
    }

    #[test]
    fn measuring_basis_state_is_certain() {
        let mut s = QState::basis(1, 1).unwrap();
        let m = s.measure_seeded(&[0], 42).unwrap();
        assert_eq!(m.value, 1);
        assert_eq!(m.bits, "1");
        assert_eq!(m.probability, 1.0);
    }

    #[test]
    fn measurement_is_reproducible_and_collapses() {
        let mut plus = QState::zero(1).unwrap();
        plus.apply_hadamard(0).unwrap();
        let mut a = plus.clone();
        let mut b = plus.clone();
        let ma = a.measure_seeded(&[0], 7).unwrap();
        let mb = b.measure_seeded(&[0], 7).unwrap();
        assert_eq!(ma, mb);
        assert!((ma.probability - 0.5).abs() < 1e-12);
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(a.amps[ma.value as usize].norm(), 1.0);
    }

    #[test]
    fn plus_state_frequency() {
        // 3 sigma of a binomial(1e5, 1/2) fraction is 0.0047 < 0.01
        let mut plus = QState::zero(1).unwrap();
        plus.apply_hadamard(0).unwrap();
        let mut rng = crate::rng::seeded(2024);
        let shots = 100_000;
        let ones = (0..shots)
            .filter(|_| plus.clone().measure(&[0], &mut rng).unwrap().value == 1)
            .count();
        let freq = ones as f64 / shots as f64;
        assert!((freq - 0.5).abs() <= 0.01, "{freq}");
    }

    #[test]
    fn phase_distance_detects_global_phase() {
        let a = random_state(3, 5);
        let mut b = a.clone();
        b.amps
            .iter_mut()
            .for_each(|x| *x *= Complex64::from_polar(1.0, 0.7));
        assert!(a.phase_distance(&b) < 1e-12);
        let mut c2 = a.clone();
        c2.apply_x(0).unwrap();
        assert!(a.phase_distance(&c2) > 1e-6);
    }

    #[test]
    fn register_value_ordering() {
        // qubit 3 set, register [3, 0] reads it as the low bit
        assert_eq!(QState::register_value(0b1000, &[3, 0]), 1);
        assert_eq!(QState::register_value(0b0001, &[3, 0]), 2);
        assert_eq!(format_bits(2, 3), "010");
    }
}
