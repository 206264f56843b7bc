use std::collections::{BTreeMap, BTreeSet};

use super::{QState, QsimError};

/// A classical function given by its full truth table, `input_bits` to
/// `output_bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlackBoxFunction {
    name: String,
    input_bits: usize,
    output_bits: usize,
    table: Vec<u64>,
}

impl BlackBoxFunction {
    pub fn new(
        name: impl Into<String>,
        input_bits: usize,
        output_bits: usize,
        table: Vec<u64>,
    ) -> Result<Self, QsimError> {
        if input_bits > super::MAX_QUBITS || output_bits > super::MAX_QUBITS {
            return Err(QsimError::TooManyQubits {
                requested: input_bits.max(output_bits),
                limit: super::MAX_QUBITS,
            });
        }
        let expected = 1usize << input_bits;
        if table.len() != expected {
            return Err(QsimError::NonTotalTable {
                expected,
                found: table.len(),
            });
        }
        if let Some((x, &y)) = table
            .iter()
            .enumerate()
            .find(|(_, &y)| y >> output_bits != 0)
        {
            return Err(QsimError::OutputOutOfRange {
                input: x as u64,
                output: y,
            });
        }
        Ok(BlackBoxFunction {
            name: name.into(),
            input_bits,
            output_bits,
            table,
        })
    }

    /// Builds from a partial map; every input must be present.
    pub fn from_map(
        name: impl Into<String>,
        input_bits: usize,
        output_bits: usize,
        map: &BTreeMap<u64, u64>,
    ) -> Result<Self, QsimError> {
        let expected = 1usize << input_bits;
        let table: Option<Vec<u64>> = (0..expected as u64).map(|x| map.get(&x).copied()).collect();
        match table {
            Some(t) if map.len() == expected => Self::new(name, input_bits, output_bits, t),
            _ => Err(QsimError::NonTotalTable {
                expected,
                found: map.keys().filter(|&&k| k < expected as u64).count(),
            }),
        }
    }

    pub fn from_fn(
        name: impl Into<String>,
        input_bits: usize,
        output_bits: usize,
        f: impl Fn(u64) -> u64,
    ) -> Result<Self, QsimError> {
        let table = (0..1u64 << input_bits).map(f).collect();
        Self::new(name, input_bits, output_bits, table)
    }

    /// The one-bit functions `f0` (constant 0), `f1` (identity), `f2` (not)
    /// and `f3` (constant 1).
    pub fn one_bit(index: usize) -> Option<Self> {
        let table = match index {
            0 => vec![0, 0],
            1 => vec![0, 1],
            2 => vec![1, 0],
            3 => vec![1, 1],
            _ => return None,
        };
        Some(Self::new(format!("f{index}"), 1, 1, table).expect("one-bit tables are total"))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_bits(&self) -> usize {
        self.input_bits
    }

    pub fn output_bits(&self) -> usize {
        self.output_bits
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.table[x as usize]
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }
}

/// Oracle access that records every invocation.
pub struct CountingOracle<'f> {
    f: &'f BlackBoxFunction,
    calls: usize,
}

impl<'f> CountingOracle<'f> {
    pub fn new(f: &'f BlackBoxFunction) -> Self {
        CountingOracle { f, calls: 0 }
    }

    pub fn apply(
        &mut self,
        state: &mut QState,
        input: &[usize],
        output: &[usize],
    ) -> Result<(), QsimError> {
        state.apply_oracle(self.f, input, output)?;
        self.calls += 1;
        Ok(())
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

/// Disjoint classes of function names that together cover a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    classes: Vec<BTreeSet<String>>,
}

impl Partition {
    pub fn new(family: &[&str], classes: Vec<Vec<&str>>) -> Result<Self, QsimError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(classes.len());
        for class in classes {
            let mut set = BTreeSet::new();
            for id in class {
                if !family.contains(&id) {
                    return Err(QsimError::Precondition(format!(
                        "{id} is not in the family"
                    )));
                }
                if !seen.insert(id) {
                    return Err(QsimError::Precondition(format!(
                        "{id} appears in two classes"
                    )));
                }
                set.insert(id.to_owned());
            }
            out.push(set);
        }
        if let Some(missing) = family.iter().find(|id| !seen.contains(*id)) {
            return Err(QsimError::Precondition(format!("{missing} is in no class")));
        }
        Ok(Partition { classes: out })
    }

    /// `{{f0, f3}, {f1, f2}}`: constant versus not constant.
    pub fn deutsch_parity() -> Self {
        Self::new(
            &["f0", "f1", "f2", "f3"],
            vec![vec!["f0", "f3"], vec!["f1", "f2"]],
        )
        .expect("parity partition is well formed")
    }

    pub fn classes(&self) -> &[BTreeSet<String>] {
        &self.classes
    }

    pub fn class_of(&self, id: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_copies_input() {
        let f = BlackBoxFunction::one_bit(1).unwrap();
        for x in 0..2 {
            let mut s = QState::basis(2, x).unwrap();
            s.apply_oracle(&f, &[0], &[1]).unwrap();
            let expected = x | (x << 1);
            assert_eq!(s.amplitudes()[expected].re, 1.0);
        }
    }

    #[test]
    fn constant_zero_is_identity() {
        let f = BlackBoxFunction::one_bit(0).unwrap();
        let s = QState::zero(2).unwrap();
        let perm = s.oracle_permutation(&f, &[0], &[1]).unwrap();
        assert_eq!(perm, vec![0, 1, 2, 3]);
    }

    #[test]
    fn modular_square_is_a_permutation() {
        // x^2 mod 15 on 4+4 qubits: exhaustive check of the basis map
        let f = BlackBoxFunction::from_fn("sq15", 4, 4, |x| x * x % 15).unwrap();
        let s = QState::zero(8).unwrap();
        let perm = s
            .oracle_permutation(&f, &[0, 1, 2, 3], &[4, 5, 6, 7])
            .unwrap();
        let mut seen = vec![false; 256];
        for (from, &to) in perm.iter().enumerate() {
            let x = from & 15;
            let y = from >> 4;
            assert_eq!(to & 15, x);
            assert_eq!(to >> 4, y ^ (x * x % 15));
            assert!(!seen[to]);
            seen[to] = true;
        }
    }

    #[test]
    fn oracle_errors() {
        let f = BlackBoxFunction::one_bit(1).unwrap();
        let mut s = QState::zero(2).unwrap();
        assert_eq!(
            s.apply_oracle(&f, &[0], &[0]),
            Err(QsimError::RegisterOverlap(0))
        );
        assert!(matches!(
            s.apply_oracle(&f, &[0, 1], &[1]),
            Err(QsimError::RegisterOverlap(1))
        ));
        let wide = BlackBoxFunction::from_fn("w", 2, 1, |x| x & 1).unwrap();
        let mut s3 = QState::zero(3).unwrap();
        assert_eq!(
            s3.apply_oracle(&wide, &[0], &[2]),
            Err(QsimError::RegisterWidth {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn tables_must_be_total() {
        assert_eq!(
            BlackBoxFunction::new("bad", 2, 1, vec![0, 1, 0]),
            Err(QsimError::NonTotalTable {
                expected: 4,
                found: 3
            })
        );
        let partial = BTreeMap::from([(0, 1)]);
        assert!(matches!(
            BlackBoxFunction::from_map("p", 1, 1, &partial),
            Err(QsimError::NonTotalTable { .. })
        ));
        assert!(matches!(
            BlackBoxFunction::new("big", 1, 1, vec![0, 2]),
            Err(QsimError::OutputOutOfRange {
                input: 1,
                output: 2
            })
        ));
    }

    #[test]
    fn partition_checks() {
        let p = Partition::deutsch_parity();
        assert_eq!(p.class_of("f0"), p.class_of("f3"));
        assert_eq!(p.class_of("f1"), p.class_of("f2"));
        assert_ne!(p.class_of("f0"), p.class_of("f1"));
        assert!(Partition::new(&["f0", "f1"], vec![vec!["f0"], vec!["f0", "f1"]]).is_err());
        assert!(Partition::new(&["f0", "f1"], vec![vec!["f0"]]).is_err());
    }

    #[test]
    fn counting_oracle_counts() {
        let f = BlackBoxFunction::one_bit(2).unwrap();
        let mut oracle = CountingOracle::new(&f);
        let mut s = QState::zero(2).unwrap();
        oracle.apply(&mut s, &[0], &[1]).unwrap();
        oracle.apply(&mut s, &[0], &[1]).unwrap();
        assert_eq!(oracle.calls(), 2);
    }
}
