//! Simulated value-indefinite random bit source and the tests run on its
//! output.
//!
//! A bit is the outcome of asking, for a system prepared along `prep`,
//! whether the projector onto `target` clicks. Born statistics give
//! `P(1) = <prep, target>^2`, which is 1/2 for the built-in pair
//! `a = (1,0,0)`, `b = (sqrt2/2, 1/2, 1/2)`.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::orthorep::{RVector, DEFAULT_TOL_NORM};
use crate::rng;

/// Attached to every test report.
pub const SIMULATION_BANNER: &str = "randomness certified relative to the assumptions of \
    admissible classical value assignments and noncontextuality; source here is a seeded \
    simulation, not hardware";

pub const MAGIC: &[u8; 8] = b"QRNGBITS";
pub const FORMAT_VERSION: u8 = 1;
/// Magic, version byte and little-endian 64-bit bit count.
pub const HEADER_LEN: usize = 8 + 1 + 8;

pub const BOREL_MIN_LEN: usize = 16;
pub const AUX_MIN_LEN: usize = 100;

/// Probabilities this close to 0 or 1 are treated as exact.
const CERTAINTY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum QrngError {
    #[error("vector has norm {0}, expected 1")]
    NonUnit(f64),
    #[error("vectors have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("sequence of {len} bits is too short, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("bad bit file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSequence {
    bits: Vec<bool>,
}

impl BitSequence {
    pub fn new(bits: Vec<bool>) -> Self {
        BitSequence { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn zeros(n: usize) -> Self {
        BitSequence {
            bits: vec![false; n],
        }
    }

    /// `0101...` of length `n`.
    pub fn alternating(n: usize) -> Self {
        BitSequence {
            bits: (0..n).map(|i| i % 2 == 1).collect(),
        }
    }

    /// Header followed by the bits packed most significant bit first, the
    /// last byte zero-padded.
    pub fn to_packed(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.bits.len().div_ceil(8));
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&(self.bits.len() as u64).to_le_bytes());
        for chunk in self.bits.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)));
            out.push(byte);
        }
        out
    }

    pub fn from_packed(data: &[u8]) -> Result<Self, QrngError> {
        if data.len() < HEADER_LEN || &data[..8] != MAGIC {
            return Err(QrngError::Format("missing QRNGBITS header".into()));
        }
        if data[8] != FORMAT_VERSION {
            return Err(QrngError::Format(format!(
                "unsupported version {}",
                data[8]
            )));
        }
        let len = u64::from_le_bytes(data[9..17].try_into().expect("8 header bytes"));
        let body = &data[HEADER_LEN..];
        let len = usize::try_from(len).map_err(|_| QrngError::Format("length overflow".into()))?;
        if body.len() != len.div_ceil(8) {
            return Err(QrngError::Format(format!(
                "header declares {len} bits but body has {} bytes",
                body.len()
            )));
        }
        let bits = (0..len)
            .map(|i| body[i / 8] >> (7 - i % 8) & 1 == 1)
            .collect();
        Ok(BitSequence { bits })
    }

    pub fn to_ascii(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    /// Reads `0`/`1` characters, ignoring whitespace.
    pub fn from_ascii(text: &str) -> Result<Self, QrngError> {
        text.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(QrngError::Format(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitSequence::new)
    }

    /// Packed if the data starts with the magic bytes, ASCII otherwise.
    pub fn from_bytes(data: &[u8]) -> Result<Self, QrngError> {
        if data.starts_with(MAGIC) {
            Self::from_packed(data)
        } else {
            let text = std::str::from_utf8(data)
                .map_err(|_| QrngError::Format("neither packed nor ASCII bits".into()))?;
            Self::from_ascii(text)
        }
    }
}

/// Born probability that the `target` projector clicks after preparing `prep`.
pub fn click_probability(prep: &RVector, target: &RVector) -> Result<f64, QrngError> {
    if prep.dim() != target.dim() {
        return Err(QrngError::DimensionMismatch(prep.dim(), target.dim()));
    }
    for v in [prep, target] {
        if !v.is_unit(DEFAULT_TOL_NORM) {
            return Err(QrngError::NonUnit(v.norm()));
        }
    }
    let p = prep.dot(target).powi(2);
    Ok(if p < CERTAINTY_TOL {
        0.0
    } else if p > 1.0 - CERTAINTY_TOL {
        1.0
    } else {
        p
    })
}

/// `n` independent click/no-click bits from the seeded generator.
pub fn generate_bits(
    prep: &RVector,
    target: &RVector,
    n: usize,
    seed: u64,
) -> Result<BitSequence, QrngError> {
    let p = click_probability(prep, target)?;
    let mut rng = rng::seeded(seed);
    let bits = (0..n).map(|_| rng.random::<f64>() < p).collect();
    Ok(BitSequence { bits })
}

#[derive(Clone, Debug, Serialize)]
pub struct Statistic {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    pub observed: f64,
    pub expected: f64,
    pub deviation: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestReport {
    pub test: String,
    pub length: usize,
    pub passed: bool,
    pub statistics: Vec<Statistic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub banner: String,
}

impl TestReport {
    fn new(test: &str, length: usize, statistics: Vec<Statistic>, note: Option<String>) -> Self {
        TestReport {
            test: test.to_owned(),
            length,
            passed: statistics.iter().all(|s| s.passed),
            statistics,
            note,
            banner: SIMULATION_BANNER.to_owned(),
        }
    }
}

/// Largest `m` with `2^(2^m) <= n`, i.e. `floor(log2 log2 n)`.
pub fn borel_max_block(n: usize) -> usize {
    let n = n as u128;
    (0..8)
        .take_while(|&m| 1u128 << (1u32 << m) <= n)
        .last()
        .unwrap_or(0)
}

/// Borel normality for finite sequences: for every block length `m` from 1
/// to `floor(log2 log2 n)`, split the sequence into `floor(n/m)`
/// non-overlapping blocks and require every `m`-bit pattern's frequency to
/// lie within `sqrt(log2 n / n)` of `2^-m`.
pub fn borel_normality_test(s: &BitSequence) -> Result<TestReport, QrngError> {
    let n = s.len();
    if n < BOREL_MIN_LEN {
        return Err(QrngError::TooShort {
            len: n,
            min: BOREL_MIN_LEN,
        });
    }
    let bound = ((n as f64).log2() / n as f64).sqrt();
    let mut stats = Vec::new();
    for m in 1..=borel_max_block(n) {
        let blocks = n / m;
        let mut counts = vec![0usize; 1 << m];
        for block in s.bits.chunks_exact(m) {
            let j = block
                .iter()
                .fold(0usize, |acc, &b| acc << 1 | usize::from(b));
            counts[j] += 1;
        }
        let expected = 1.0 / (1u64 << m) as f64;
        for (j, &count) in counts.iter().enumerate() {
            let pattern: String = (0..m)
                .rev()
                .map(|t| if j >> t & 1 == 1 { '1' } else { '0' })
                .collect();
            let observed = count as f64 / blocks as f64;
            let deviation = (observed - expected).abs();
            stats.push(Statistic {
                label: format!("m={m} pattern {pattern}"),
                block_length: Some(m),
                pattern: Some(pattern),
                observed,
                expected,
                deviation,
                bound,
                passed: deviation <= bound,
            });
        }
    }
    Ok(TestReport::new("borel_normality", n, stats, None))
}

#[derive(Clone, Debug, Serialize)]
pub struct AuxiliaryReport {
    pub passed: bool,
    pub monobit: TestReport,
    pub runs: TestReport,
}

/// Frequency test (`|#ones - n/2| <= 3 sqrt(n) / 2`) and runs test (number
/// of runs within three standard deviations of its mean for i.i.d. bits with
/// the observed ones-fraction). A constant sequence fails the runs test: its
/// run count carries no information.
pub fn monobit_and_runs_tests(s: &BitSequence) -> Result<AuxiliaryReport, QrngError> {
    let n = s.len();
    if n < AUX_MIN_LEN {
        return Err(QrngError::TooShort {
            len: n,
            min: AUX_MIN_LEN,
        });
    }
    let nf = n as f64;
    let ones = s.ones() as f64;
    let mono_dev = (ones - nf / 2.0).abs();
    let mono_bound = 3.0 * nf.sqrt() / 2.0;
    let monobit = TestReport::new(
        "monobit",
        n,
        vec![Statistic {
            label: "ones".into(),
            block_length: None,
            pattern: None,
            observed: ones,
            expected: nf / 2.0,
            deviation: mono_dev,
            bound: mono_bound,
            passed: mono_dev <= mono_bound,
        }],
        None,
    );

    let runs_count = 1 + s.bits.windows(2).filter(|w| w[0] != w[1]).count();
    let p = ones / nf;
    let pq = p * (1.0 - p);
    // i.i.d. Bernoulli(p): R = 1 + sum of n-1 change indicators with mean 2pq;
    // adjacent indicators have covariance pq - 4p^2q^2
    let mean = 1.0 + (nf - 1.0) * 2.0 * pq;
    let var = (nf - 1.0) * 2.0 * pq * (1.0 - 2.0 * pq) + 2.0 * (nf - 2.0) * (pq - 4.0 * pq * pq);
    let sd = var.max(0.0).sqrt();
    let deviation = (runs_count as f64 - mean).abs();
    let degenerate = pq == 0.0;
    let runs = TestReport::new(
        "runs",
        n,
        vec![Statistic {
            label: "runs".into(),
            block_length: None,
            pattern: None,
            observed: runs_count as f64,
            expected: mean,
            deviation,
            bound: 3.0 * sd,
            passed: !degenerate && deviation <= 3.0 * sd,
        }],
        degenerate.then(|| "constant sequence: runs statistic is degenerate".to_owned()),
    );
    Ok(AuxiliaryReport {
        passed: monobit.passed && runs.passed,
        monobit,
        runs,
    })
}

/// The built-in preparation `a` and measured direction `b`.
pub fn figure1_pair() -> (RVector, RVector) {
    (
        RVector::new(vec![1.0, 0.0, 0.0]),
        RVector::new(vec![std::f64::consts::FRAC_1_SQRT_2, 0.5, 0.5]),
    )
}
