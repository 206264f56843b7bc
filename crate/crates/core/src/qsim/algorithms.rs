//! Spread, transform, fold: the Deutsch parity query and the order-finding core.

use rand::Rng;
use serde::Serialize;

use super::{
    format_bits, sample_index, BlackBoxFunction, CountingOracle, QState, QsimError, MAX_QUBITS,
};
use crate::numtheory::{gcd, mod_pow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ParityClass {
    Constant,
    NotConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeutschOutcome {
    pub function: String,
    pub class: ParityClass,
    pub outcome: String,
    pub probability: f64,
    pub oracle_calls: usize,
}

const INPUT: [usize; 1] = [0];
const ANCILLA: [usize; 1] = [1];

/// Deutsch circuit up to (not including) measurement: ancilla in `|->`,
/// Hadamard on the input, one oracle call, Hadamard on the input. With
/// `f = None` the oracle is skipped.
pub fn deutsch_circuit_state(f: Option<&BlackBoxFunction>) -> Result<(QState, usize), QsimError> {
    let mut state = QState::zero(2)?;
    state.apply_x(ANCILLA[0])?;
    state.apply_hadamard_all(&[INPUT[0], ANCILLA[0]])?;
    let mut calls = 0;
    if let Some(f) = f {
        if f.input_bits() != 1 || f.output_bits() != 1 {
            return Err(QsimError::WrongArity {
                input_bits: f.input_bits(),
                output_bits: f.output_bits(),
            });
        }
        let mut oracle = CountingOracle::new(f);
        oracle.apply(&mut state, &INPUT, &ANCILLA)?;
        calls = oracle.calls();
    }
    state.apply_hadamard_all(&INPUT)?;
    Ok((state, calls))
}

/// Decides "constant or not" for a one-bit function with a single oracle
/// call. The input qubit reads 0 for a constant function and 1 otherwise,
/// each with probability 1.
pub fn deutsch_decide(f: &BlackBoxFunction) -> Result<DeutschOutcome, QsimError> {
    let (mut state, calls) = deutsch_circuit_state(Some(f))?;
    // the outcome is certain, so the seed only fixes the code path
    let m = state.measure_seeded(&INPUT, 0)?;
    let class = if m.value == 0 {
        ParityClass::Constant
    } else {
        ParityClass::NotConstant
    };
    Ok(DeutschOutcome {
        function: f.name().to_owned(),
        class,
        outcome: m.bits,
        probability: m.probability,
        oracle_calls: calls,
    })
}

/// Order-finding circuit after the inverse QFT, ready to be sampled.
///
/// The index register is qubits `0..m`, the work register the next
/// `work_bits` qubits. The oracle writes `x^i mod N` into the work register.
#[derive(Clone, Debug)]
pub struct OrderFindingCircuit {
    base: u64,
    modulus: u64,
    index_bits: usize,
    work_bits: usize,
    distribution: Vec<f64>,
    state: QState,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderRun {
    pub measured: u64,
    pub bits: String,
    pub probability: f64,
}

impl OrderFindingCircuit {
    pub fn prepare(base: u64, modulus: u64, index_bits: usize) -> Result<Self, QsimError> {
        if modulus < 2 {
            return Err(QsimError::Precondition(format!(
                "modulus {modulus} must be at least 2"
            )));
        }
        if base == 0 || gcd(base, modulus) != 1 {
            return Err(QsimError::Precondition(format!(
                "base {base} must be positive and coprime to {modulus}"
            )));
        }
        if index_bits >= 64 || (1u128 << index_bits) < u128::from(modulus) * u128::from(modulus) {
            return Err(QsimError::Precondition(format!(
                "2^{index_bits} must be at least {modulus}^2"
            )));
        }
        let work_bits = (64 - (modulus - 1).leading_zeros() as usize).max(1);
        let total = index_bits + work_bits;
        if total > MAX_QUBITS {
            return Err(QsimError::TooManyQubits {
                requested: total,
                limit: MAX_QUBITS,
            });
        }
        let index: Vec<usize> = (0..index_bits).collect();
        let work: Vec<usize> = (index_bits..total).collect();
        let f = BlackBoxFunction::from_fn(
            format!("{base}^i mod {modulus}"),
            index_bits,
            work_bits,
            |i| mod_pow(base, i, modulus),
        )?;
        let mut state = QState::zero(total)?;
        state.apply_hadamard_all(&index)?;
        state.apply_oracle(&f, &index, &work)?;
        state.apply_qft(&index, true)?;
        let distribution = state.marginal(&index)?;
        Ok(OrderFindingCircuit {
            base,
            modulus,
            index_bits,
            work_bits,
            distribution,
            state,
        })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn index_bits(&self) -> usize {
        self.index_bits
    }

    pub fn work_bits(&self) -> usize {
        self.work_bits
    }

    /// Born probabilities of every index-register value.
    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn state(&self) -> &QState {
        &self.state
    }

    /// One measurement of the index register.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OrderRun, QsimError> {
        let v = sample_index(&self.distribution, rng)?;
        Ok(OrderRun {
            measured: v as u64,
            bits: format_bits(v as u64, self.index_bits),
            probability: self.distribution[v],
        })
    }
}

/// Prepares the order-finding circuit for `x` modulo `n` with an `m`-qubit
/// index register and measures it once. Post-processing lives in
/// [`crate::numtheory::extract_order`].
pub fn order_find_core(x: u64, n: u64, m: usize, seed: u64) -> Result<OrderRun, QsimError> {
    OrderFindingCircuit::prepare(x, n, m)?.sample(&mut crate::rng::seeded(seed))
}
