//! Classical arithmetic around the order-finding core: modular powers,
//! continued fractions, order extraction and the factoring driver.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::Serialize;
use thiserror::Error;

use crate::qsim::{OrderFindingCircuit, QsimError};
use crate::rng;

/// Quantum runs per base before moving on.
pub const RUNS_PER_BASE: usize = 32;
/// Distinct bases tried per factoring attempt.
pub const BASES_PER_ATTEMPT: usize = 8;
/// Moduli accepted by [`order_bruteforce`].
pub const BRUTEFORCE_MODULUS_LIMIT: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum NumError {
    #[error("{x} and {n} are not coprime")]
    NotCoprime { x: u64, n: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Simulator(#[from] QsimError),
    #[error("no factor of {} found after {} bases", .0.n, .0.attempts.len())]
    RetriesExhausted(Box<FactorReport>),
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// `x^e mod n` by square-and-multiply.
pub fn mod_pow(x: u64, mut e: u64, n: u64) -> u64 {
    assert!(n >= 1, "modulus must be positive");
    let n128 = u128::from(n);
    let mut base = u128::from(x) % n128;
    let mut acc = 1u128 % n128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % n128;
        }
        base = base * base % n128;
        e >>= 1;
    }
    acc as u64
}

/// Order of `x` modulo `n` by direct iteration.
pub fn order_bruteforce(x: u64, n: u64) -> Result<u64, NumError> {
    if !(2..=BRUTEFORCE_MODULUS_LIMIT).contains(&n) {
        return Err(NumError::Precondition(format!(
            "modulus {n} outside 2..={BRUTEFORCE_MODULUS_LIMIT}"
        )));
    }
    if gcd(x, n) != 1 {
        return Err(NumError::NotCoprime { x, n });
    }
    let x = x % n;
    let mut pow = x;
    let mut k = 1;
    while pow != 1 {
        pow = pow * x % n;
        k += 1;
    }
    Ok(k)
}

/// Partial quotients of `numerator / denominator`.
pub fn continued_fraction(mut numerator: u64, mut denominator: u64) -> Vec<u64> {
    assert!(denominator >= 1, "denominator must be positive");
    let mut terms = Vec::new();
    while denominator != 0 {
        terms.push(numerator / denominator);
        (numerator, denominator) = (denominator, numerator % denominator);
    }
    terms
}

/// Convergents `p_j / q_j` of `numerator / denominator`, each in lowest terms.
pub fn continued_fraction_convergents(numerator: u64, denominator: u64) -> Vec<(u64, u64)> {
    // (p_{j-2}, p_{j-1}) and (q_{j-2}, q_{j-1}), seeded with p = (0, 1), q = (1, 0)
    let (mut p, mut q) = ((0u128, 1u128), (1u128, 0u128));
    continued_fraction(numerator, denominator)
        .into_iter()
        .map(|a| {
            let a = u128::from(a);
            p = (p.1, a * p.1 + p.0);
            q = (q.1, a * q.1 + q.0);
            (p.1 as u64, q.1 as u64)
        })
        .collect()
}

/// Smallest divisor `d` of a verified exponent `k` with `x^d = 1 mod n`,
/// which is the order itself.
fn reduce_to_order(x: u64, n: u64, k: u64) -> u64 {
    (1..=k)
        .filter(|d| k.is_multiple_of(*d))
        .find(|&d| mod_pow(x, d, n) == 1)
        .unwrap_or(k)
}

fn convergent_denominators(measured: u64, m: usize, n: u64) -> Vec<u64> {
    let mut qs: Vec<u64> = continued_fraction_convergents(measured, 1u64 << m)
        .into_iter()
        .map(|(_, q)| q)
        .filter(|&q| q >= 1 && q <= n)
        .collect();
    qs.dedup();
    qs
}

fn smallest_verified(x: u64, n: u64, candidates: impl IntoIterator<Item = u64>) -> Option<u64> {
    candidates
        .into_iter()
        .filter(|&k| k >= 1 && k <= n && mod_pow(x, k, n) == 1)
        .min()
        .map(|k| reduce_to_order(x, n, k))
}

/// Recovers the order of `x` mod `n` from one measurement of an `m`-qubit
/// index register. Examines the convergent denominators of `measured / 2^m`
/// up to `n`, their small multiples and pairwise lcms, keeps the ones with
/// `x^k = 1`, and reduces the smallest to the order. `None` means the run was
/// uninformative; `measured == 0` always is.
pub fn extract_order(measured: u64, m: usize, n: u64, x: u64) -> Option<u64> {
    if measured == 0 || m >= 64 || measured >= 1u64 << m || n < 2 {
        return None;
    }
    let qs = convergent_denominators(measured, m, n);
    let mut candidates = Vec::new();
    for (i, &q) in qs.iter().enumerate() {
        candidates.extend((1..).map(|t| q * t).take_while(|&k| k <= n));
        candidates.extend(qs[i + 1..].iter().map(|&r| lcm(q, r)));
    }
    smallest_verified(x, n, candidates)
}

/// Order extraction across several runs for one base: when a single run is
/// not enough, lcms of denominators from distinct runs are tried as well.
#[derive(Clone, Debug)]
pub struct OrderSearch {
    x: u64,
    n: u64,
    m: usize,
    seen: BTreeSet<u64>,
}

impl OrderSearch {
    pub fn new(x: u64, n: u64, m: usize) -> Self {
        OrderSearch {
            x,
            n,
            m,
            seen: BTreeSet::new(),
        }
    }

    pub fn observe(&mut self, measured: u64) -> Option<u64> {
        if let Some(k) = extract_order(measured, self.m, self.n, self.x) {
            return Some(k);
        }
        if measured == 0 || measured >= 1u64 << self.m {
            return None;
        }
        let fresh = convergent_denominators(measured, self.m, self.n);
        let combined: Vec<u64> = fresh
            .iter()
            .flat_map(|&q| self.seen.iter().map(move |&r| lcm(q, r)))
            .collect();
        self.seen.extend(fresh);
        smallest_verified(self.x, self.n, combined)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorAttempt {
    pub x: u64,
    pub measured: Vec<u64>,
    pub order: Option<u64>,
    pub outcome: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorReport {
    pub n: u64,
    pub factor: Option<u64>,
    pub cofactor: Option<u64>,
    pub x: Option<u64>,
    pub order: Option<u64>,
    pub index_bits: usize,
    pub attempts: Vec<FactorAttempt>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    (2..)
        .take_while(|d| d * d <= n)
        .all(|d| !n.is_multiple_of(d))
}

/// `Some(p)` if `n = p^k` for a prime `p` and `k >= 1`.
pub fn prime_power_base(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    let p = (2..)
        .find(|d| n.is_multiple_of(*d))
        .expect("n >= 2 has a divisor");
    let mut r = n;
    while r.is_multiple_of(p) {
        r /= p;
    }
    (r == 1).then_some(p)
}

/// Smallest `m` with `2^m >= n^2`.
pub fn index_bits_for(n: u64) -> usize {
    let sq = u128::from(n) * u128::from(n);
    (0..128).find(|&m| (1u128 << m) >= sq).unwrap_or(128)
}

/// Finds a nontrivial factor of an odd composite `n` that is not a prime
/// power, using simulated order finding for randomly chosen coprime bases.
///
/// Up to [`BASES_PER_ATTEMPT`] bases are tried, each with up to
/// [`RUNS_PER_BASE`] measurements. An odd order or `x^(k/2) = -1` moves on
/// to the next base.
pub fn shor_factor(n: u64, seed: u64) -> Result<FactorReport, NumError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(NumError::Precondition(format!(
            "{n} must be odd and at least 3"
        )));
    }
    if is_prime(n) {
        return Err(NumError::Precondition(format!("{n} is prime")));
    }
    if let Some(p) = prime_power_base(n) {
        return Err(NumError::Precondition(format!(
            "{n} is a power of the prime {p}"
        )));
    }
    let m = index_bits_for(n);
    let work = (64 - (n - 1).leading_zeros()) as usize;
    if m + work > crate::qsim::MAX_QUBITS {
        return Err(NumError::Precondition(format!(
            "{n} needs {} qubits, the simulator allows {}",
            m + work,
            crate::qsim::MAX_QUBITS
        )));
    }

    let mut rng = rng::seeded(seed);
    let mut bases: Vec<u64> = (2..n).filter(|&x| gcd(x, n) == 1).collect();
    bases.shuffle(&mut rng);
    bases.truncate(BASES_PER_ATTEMPT);

    let mut report = FactorReport {
        n,
        factor: None,
        cofactor: None,
        x: None,
        order: None,
        index_bits: m,
        attempts: Vec::new(),
    };
    for x in bases {
        let circuit = OrderFindingCircuit::prepare(x, n, m)?;
        let mut search = OrderSearch::new(x, n, m);
        let mut attempt = FactorAttempt {
            x,
            measured: Vec::new(),
            order: None,
            outcome: String::new(),
        };
        for _ in 0..RUNS_PER_BASE {
            let run = circuit.sample(&mut rng)?;
            attempt.measured.push(run.measured);
            if let Some(k) = search.observe(run.measured) {
                attempt.order = Some(k);
                break;
            }
        }
        let Some(k) = attempt.order else {
            attempt.outcome = "order not found".into();
            report.attempts.push(attempt);
            continue;
        };
        if k % 2 == 1 {
            attempt.outcome = format!("order {k} is odd");
            report.attempts.push(attempt);
            continue;
        }
        let half = mod_pow(x, k / 2, n);
        if half == n - 1 {
            attempt.outcome = format!("{x}^{} = -1 mod {n}", k / 2);
            report.attempts.push(attempt);
            continue;
        }
        let factor = [gcd(half + n - 1, n), gcd(half + 1, n)]
            .into_iter()
            .find(|&f| f > 1 && f < n);
        match factor {
            Some(f) if n.is_multiple_of(f) => {
                attempt.outcome = format!("factor {f} = gcd({x}^{} -+ 1, {n})", k / 2);
                report.attempts.push(attempt);
                report.factor = Some(f);
                report.cofactor = Some(n / f);
                report.x = Some(x);
                report.order = Some(k);
                return Ok(report);
            }
            _ => {
                attempt.outcome = "gcd gave only trivial factors".into();
                report.attempts.push(attempt);
            }
        }
    }
    Err(NumError::RetriesExhausted(Box::new(report)))
}
