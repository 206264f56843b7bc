//! Quantum logics given as collections of intertwining contexts.
//!
//! A [`Logic`] is the hypergraph behind a Greechie orthogonality diagram: the
//! vertices are atoms (rank-one projectors) and every hyperedge is a context,
//! i.e. a complete orthonormal basis of the ambient space. Two contexts may
//! share atoms ("intertwine"), but never more than `dimension - 2` of them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of an atom. Non-empty and unique within its logic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomId(String);

impl AtomId {
    pub fn new(name: impl Into<String>) -> Self {
        AtomId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AtomId {
    fn from(s: &str) -> Self {
        AtomId(s.to_owned())
    }
}

impl From<String> for AtomId {
    fn from(s: String) -> Self {
        AtomId(s)
    }
}

/// A context (orthonormal basis). Member order is kept for serialization only.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Context {
    members: Vec<AtomId>,
}

impl Context {
    pub fn new(members: Vec<AtomId>) -> Self {
        Context { members }
    }

    pub fn members(&self) -> &[AtomId] {
        &self.members
    }

    pub fn arity(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, atom: &AtomId) -> bool {
        self.members.contains(atom)
    }

    fn member_set(&self) -> BTreeSet<&AtomId> {
        self.members.iter().collect()
    }
}

impl PartialEq for Context {
    fn eq(&self, other: &Self) -> bool {
        self.member_set() == other.member_set()
    }
}

impl Eq for Context {}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

/// One violated logic invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    NoAtoms,
    ZeroDimension,
    ArityMismatch {
        context: String,
        arity: usize,
        dimension: usize,
    },
    OrphanAtom {
        atom: AtomId,
    },
    DuplicateContext {
        context: String,
        first: usize,
        second: usize,
    },
    OverShared {
        first: String,
        second: String,
        shared: Vec<AtomId>,
        limit: usize,
    },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::NoAtoms => f.write_str("logic has no atoms"),
            ValidationIssue::ZeroDimension => f.write_str("dimension must be positive"),
            ValidationIssue::ArityMismatch {
                context,
                arity,
                dimension,
            } => write!(
                f,
                "context {context} has arity {arity}, expected dimension {dimension}"
            ),
            ValidationIssue::OrphanAtom { atom } => write!(f, "orphan atom {atom}"),
            ValidationIssue::DuplicateContext {
                context,
                first,
                second,
            } => write!(
                f,
                "duplicate context {context} (positions {first} and {second})"
            ),
            ValidationIssue::OverShared {
                first,
                second,
                shared,
                limit,
            } => {
                let names: Vec<&str> = shared.iter().map(AtomId::as_str).collect();
                write!(
                    f,
                    "contexts {first} and {second} share {} atoms ({}), at most {limit} allowed",
                    shared.len(),
                    names.join(",")
                )
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum LogicError {
    #[error("malformed logic file: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("empty atom name at position {0}")]
    EmptyAtomName(usize),
    #[error("atom {0} declared twice")]
    DuplicateAtom(AtomId),
    #[error("context {context} lists undeclared atom {atom}")]
    UndeclaredMember { context: usize, atom: AtomId },
    #[error("context {context} lists atom {atom} twice")]
    DuplicateMember { context: usize, atom: AtomId },
    #[error("invalid logic: {}", join_issues(.0))]
    Invalid(Vec<ValidationIssue>),
    #[error("unknown atom {0}")]
    UnknownAtom(AtomId),
    #[error("expected two distinct atoms, got {0} twice")]
    SameAtom(AtomId),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// On-disk JSON layout.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogicFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dimension: Option<usize>,
    atoms: Vec<AtomId>,
    contexts: Vec<Vec<AtomId>>,
}

/// A finite logic: atoms, contexts and the ambient dimension.
///
/// Values built through [`Logic::new`] or [`parse_logic`] satisfy every
/// invariant. [`Logic::new_unvalidated`] only enforces well-formedness (names
/// are unique and every context member is declared) so that broken logics can
/// still be inspected with [`validate_logic`].
#[derive(Clone, Debug)]
pub struct Logic {
    dimension: usize,
    atoms: Vec<AtomId>,
    contexts: Vec<Context>,
    index: HashMap<AtomId, usize>,
}

impl Logic {
    pub fn new(
        dimension: Option<usize>,
        atoms: Vec<AtomId>,
        contexts: Vec<Vec<AtomId>>,
    ) -> Result<Self, LogicError> {
        let logic = Self::new_unvalidated(dimension, atoms, contexts)?;
        let issues = validate_logic(&logic);
        if issues.is_empty() {
            Ok(logic)
        } else {
            Err(LogicError::Invalid(issues))
        }
    }

    /// Builds a well-formed but possibly invalid logic. A missing dimension
    /// defaults to the largest context arity.
    pub fn new_unvalidated(
        dimension: Option<usize>,
        atoms: Vec<AtomId>,
        contexts: Vec<Vec<AtomId>>,
    ) -> Result<Self, LogicError> {
        let mut index = HashMap::with_capacity(atoms.len());
        for (pos, atom) in atoms.iter().enumerate() {
            if atom.as_str().is_empty() {
                return Err(LogicError::EmptyAtomName(pos));
            }
            if index.insert(atom.clone(), pos).is_some() {
                return Err(LogicError::DuplicateAtom(atom.clone()));
            }
        }
        for (ci, members) in contexts.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for m in members {
                if !index.contains_key(m) {
                    return Err(LogicError::UndeclaredMember {
                        context: ci,
                        atom: m.clone(),
                    });
                }
                if !seen.insert(m) {
                    return Err(LogicError::DuplicateMember {
                        context: ci,
                        atom: m.clone(),
                    });
                }
            }
        }
        let dimension =
            dimension.unwrap_or_else(|| contexts.iter().map(Vec::len).max().unwrap_or(0));
        Ok(Logic {
            dimension,
            atoms,
            contexts: contexts.into_iter().map(Context::new).collect(),
            index,
        })
    }

    /// The 37-atom, 26-context logic whose two-valued states all assign false
    /// to `a`, so that preparing `a` leaves `b` value indefinite.
    pub fn figure1() -> Self {
        let mut atoms = vec![AtomId::from("a"), AtomId::from("b")];
        atoms.extend((1..=35).map(|i| AtomId::new(i.to_string())));
        let contexts = FIGURE1_CONTEXTS
            .iter()
            .map(|c| c.iter().map(|&s| AtomId::from(s)).collect())
            .collect();
        Logic::new(Some(3), atoms, contexts).expect("built-in figure 1 logic is valid")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn contains_atom(&self, atom: &AtomId) -> bool {
        self.index.contains_key(atom)
    }

    /// Position of `atom` in declaration order.
    pub fn atom_index(&self, atom: &AtomId) -> Option<usize> {
        self.index.get(atom).copied()
    }

    /// Contexts as lists of declaration-order atom indices.
    pub fn context_indices(&self) -> Vec<Vec<usize>> {
        self.contexts
            .iter()
            .map(|c| c.members.iter().map(|m| self.index[m]).collect())
            .collect()
    }

    /// Number of contexts containing `atom`.
    pub fn degree(&self, atom: &AtomId) -> usize {
        self.contexts.iter().filter(|c| c.contains(atom)).count()
    }

    /// Map from degree to the number of atoms with that degree.
    pub fn degree_census(&self) -> BTreeMap<usize, usize> {
        let mut census = BTreeMap::new();
        for atom in &self.atoms {
            *census.entry(self.degree(atom)).or_insert(0) += 1;
        }
        census
    }

    /// True iff some context contains both atoms.
    pub fn co_contextual(&self, x: &AtomId, y: &AtomId) -> Result<bool, LogicError> {
        for atom in [x, y] {
            if !self.contains_atom(atom) {
                return Err(LogicError::UnknownAtom(atom.clone()));
            }
        }
        if x == y {
            return Err(LogicError::SameAtom(x.clone()));
        }
        Ok(self.contexts.iter().any(|c| c.contains(x) && c.contains(y)))
    }

    /// Symmetric adjacency matrix over declaration-order indices.
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.atoms.len();
        let mut adj = vec![vec![false; n]; n];
        for ctx in self.context_indices() {
            for (i, &u) in ctx.iter().enumerate() {
                for &v in &ctx[i + 1..] {
                    adj[u][v] = true;
                    adj[v][u] = true;
                }
            }
        }
        adj
    }

    /// Canonical JSON serialization (pretty-printed, one context per line).
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        out.push_str(&format!("  \"dimension\": {},\n", self.dimension));
        let atoms: Vec<String> = self.atoms.iter().map(json_str).collect();
        out.push_str(&format!("  \"atoms\": [{}],\n", atoms.join(", ")));
        out.push_str("  \"contexts\": [\n");
        for (i, c) in self.contexts.iter().enumerate() {
            let members: Vec<String> = c.members.iter().map(json_str).collect();
            out.push_str(&format!("    [{}]", members.join(", ")));
            out.push_str(if i + 1 < self.contexts.len() {
                ",\n"
            } else {
                "\n"
            });
        }
        out.push_str("  ]\n}\n");
        out
    }
}

fn json_str(atom: &AtomId) -> String {
    serde_json::to_string(atom.as_str()).expect("strings always serialize")
}

/// Order-insensitive structural equality.
impl PartialEq for Logic {
    fn eq(&self, other: &Self) -> bool {
        let atoms = |l: &Logic| l.atoms.iter().cloned().collect::<BTreeSet<_>>();
        let contexts = |l: &Logic| {
            l.contexts
                .iter()
                .map(|c| c.members.iter().cloned().collect::<BTreeSet<_>>())
                .collect::<BTreeSet<_>>()
        };
        self.dimension == other.dimension
            && self.contexts.len() == other.contexts.len()
            && atoms(self) == atoms(other)
            && contexts(self) == contexts(other)
    }
}

impl Eq for Logic {}

/// Parses and validates a logic file.
pub fn parse_logic(source: &str) -> Result<Logic, LogicError> {
    let file: LogicFile = serde_json::from_str(source)?;
    Logic::new(file.dimension, file.atoms, file.contexts)
}

/// Lists every violated invariant; empty iff the logic is valid.
pub fn validate_logic(logic: &Logic) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if logic.atoms.is_empty() {
        issues.push(ValidationIssue::NoAtoms);
    }
    if logic.dimension == 0 {
        issues.push(ValidationIssue::ZeroDimension);
    }
    for c in &logic.contexts {
        if c.arity() != logic.dimension {
            issues.push(ValidationIssue::ArityMismatch {
                context: c.to_string(),
                arity: c.arity(),
                dimension: logic.dimension,
            });
        }
    }
    for atom in &logic.atoms {
        if logic.degree(atom) == 0 {
            issues.push(ValidationIssue::OrphanAtom { atom: atom.clone() });
        }
    }
    let limit = logic.dimension.saturating_sub(2);
    let sets: Vec<BTreeSet<&AtomId>> = logic.contexts.iter().map(Context::member_set).collect();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i] == sets[j] {
                issues.push(ValidationIssue::DuplicateContext {
                    context: logic.contexts[i].to_string(),
                    first: i,
                    second: j,
                });
                continue;
            }
            let shared: Vec<AtomId> = sets[i]
                .intersection(&sets[j])
                .map(|a| (*a).clone())
                .collect();
            if shared.len() > limit {
                issues.push(ValidationIssue::OverShared {
                    first: logic.contexts[i].to_string(),
                    second: logic.contexts[j].to_string(),
                    shared,
                    limit,
                });
            }
        }
    }
    issues
}

/// Contexts of the built-in figure 1 logic, transcribed from its Greechie diagram.
pub const FIGURE1_CONTEXTS: [[&str; 3]; 26] = [
    ["b", "2", "3"],
    ["3", "21", "23"],
    ["23", "29", "5"],
    ["5", "a", "4"],
    ["4", "10", "7"],
    ["7", "6", "b"],
    ["a", "1", "2"],
    ["5", "11", "9"],
    ["9", "8", "b"],
    ["4", "28", "22"],
    ["22", "19", "3"],
    ["22", "24", "25"],
    ["25", "35", "9"],
    ["7", "34", "27"],
    ["27", "26", "23"],
    ["10", "12", "13"],
    ["13", "31", "29"],
    ["28", "30", "15"],
    ["15", "14", "11"],
    ["15", "17", "1"],
    ["1", "16", "13"],
    ["19", "18", "16"],
    ["16", "32", "8"],
    ["6", "33", "17"],
    ["17", "20", "21"],
    ["25", "1", "27"],
];

/// The figure 1 logic file as shipped with the crate.
pub const FIGURE1_JSON: &str = include_str!("../data/figure1.json");

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<AtomId> {
        names.iter().map(|&s| AtomId::from(s)).collect()
    }

    #[test]
    fn minimal_logic_parses() {
        let l = parse_logic(r#"{"dimension":3,"atoms":["1","2","3"],"contexts":[["1","2","3"]]}"#)
            .unwrap();
        assert_eq!(l.atoms().len(), 3);
        assert_eq!(l.contexts().len(), 1);
    }

    #[test]
    fn dimension_defaults_to_max_arity() {
        let l = parse_logic(r#"{"atoms":["1","2","3"],"contexts":[["1","2","3"]]}"#).unwrap();
        assert_eq!(l.dimension(), 3);
    }

    #[test]
    fn shipped_file_equals_builtin() {
        let parsed = parse_logic(FIGURE1_JSON).unwrap();
        assert_eq!(parsed, Logic::figure1());
        assert_eq!(parsed.atoms().len(), 37);
        assert_eq!(parsed.contexts().len(), 26);
    }

    #[test]
    fn two_shared_atoms_rejected() {
        let err = parse_logic(
            r#"{"dimension":3,"atoms":["1","2","3","4"],"contexts":[["1","2","3"],["1","2","4"]]}"#,
        )
        .unwrap_err();
        match err {
            LogicError::Invalid(issues) => {
                assert!(
                    matches!(&issues[..], [ValidationIssue::OverShared { shared, .. }] if shared.len() == 2)
                )
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn syntax_error_reported() {
        assert!(matches!(
            parse_logic("{\"atoms\": [").unwrap_err(),
            LogicError::Syntax(_)
        ));
        assert!(matches!(
            parse_logic(r#"{"atoms":["1"],"contexts":[["1","9"]]}"#).unwrap_err(),
            LogicError::UndeclaredMember { atom, .. } if atom.as_str() == "9"
        ));
    }

    #[test]
    fn orphan_and_duplicate_reported() {
        let l = Logic::new_unvalidated(
            Some(3),
            ids(&["1", "2", "3", "x"]),
            vec![ids(&["1", "2", "3"]), ids(&["3", "1", "2"])],
        )
        .unwrap();
        let issues = validate_logic(&l);
        let text: Vec<String> = issues.iter().map(ToString::to_string).collect();
        assert!(text.iter().any(|t| t == "orphan atom x"), "{text:?}");
        assert!(
            text.iter().any(|t| t.starts_with("duplicate context")),
            "{text:?}"
        );
        // a duplicate context is not additionally reported as over-shared
        assert_eq!(issues.len(), 2);
    }

    #[test]
    fn figure1_is_valid_and_has_expected_census() {
        let l = Logic::figure1();
        assert!(validate_logic(&l).is_empty());
        let census = l.degree_census();
        assert_eq!(census, BTreeMap::from([(1, 12), (2, 10), (3, 14), (4, 1)]));
        assert_eq!(l.degree(&"1".into()), 4);
        let slots: usize = l.contexts().iter().map(Context::arity).sum();
        assert_eq!(slots, 78);
    }

    #[test]
    fn co_contextual_queries() {
        let l = Logic::figure1();
        assert!(l.co_contextual(&"a".into(), &"1".into()).unwrap());
        assert!(!l.co_contextual(&"a".into(), &"b".into()).unwrap());
        assert!(matches!(
            l.co_contextual(&"a".into(), &"a".into()),
            Err(LogicError::SameAtom(_))
        ));
        assert!(matches!(
            l.co_contextual(&"a".into(), &"zz".into()),
            Err(LogicError::UnknownAtom(_))
        ));
    }

    #[test]
    fn context_equality_ignores_order() {
        assert_eq!(
            Context::new(ids(&["1", "2", "3"])),
            Context::new(ids(&["3", "1", "2"]))
        );
    }

    #[test]
    fn empty_logic_flags_no_atoms() {
        let l = Logic::new_unvalidated(None, vec![], vec![]).unwrap();
        let issues = validate_logic(&l);
        assert!(issues.contains(&ValidationIssue::NoAtoms));
        assert!(issues.contains(&ValidationIssue::ZeroDimension));
    }
}
