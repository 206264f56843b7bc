//! Classical two-valued states on a logic and relational queries over them.
//!
//! A two-valued state assigns `true` to exactly one atom of every context.
//! States are enumerated by backtracking with unit propagation and returned
//! in canonical order: atoms sorted by name, `true` before `false` at the
//! first atom where two states differ.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::logic::{AtomId, Logic};

/// Largest logic accepted by [`enumerate_states_bruteforce`].
pub const BRUTEFORCE_ATOM_LIMIT: usize = 25;

/// Carried by every indefiniteness certificate.
pub const CERTIFICATE_BANNER: &str = "certification is relative to the assumptions of \
    admissible two-valued (classical) value assignments and noncontextuality; a vacuous \
    hypothesis means no such total assignment survives the preparation";

#[derive(Debug, Error)]
pub enum ValuationError {
    #[error("unknown atom {0}")]
    UnknownAtom(AtomId),
    #[error("brute-force enumeration limited to {limit} atoms, logic has {atoms}")]
    TooManyAtoms { atoms: usize, limit: usize },
}

/// A total truth assignment with exactly one true atom per context.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct TwoValuedState {
    assignment: BTreeMap<AtomId, bool>,
}

impl TwoValuedState {
    pub fn value(&self, atom: &AtomId) -> Option<bool> {
        self.assignment.get(atom).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<AtomId, bool> {
        &self.assignment
    }

    pub fn true_atoms(&self) -> impl Iterator<Item = &AtomId> {
        self.assignment.iter().filter(|(_, v)| **v).map(|(a, _)| a)
    }

    /// Number of true members in every context, in context order.
    pub fn context_sums(&self, logic: &Logic) -> Vec<usize> {
        logic
            .contexts()
            .iter()
            .map(|c| {
                c.members()
                    .iter()
                    .filter(|m| self.value(m) == Some(true))
                    .count()
            })
            .collect()
    }
}

impl PartialOrd for TwoValuedState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TwoValuedState {
    fn cmp(&self, other: &Self) -> Ordering {
        // true sorts before false
        self.assignment
            .iter()
            .map(|(a, v)| (a, !v))
            .cmp(other.assignment.iter().map(|(a, v)| (a, !v)))
    }
}

/// Atoms re-indexed by name order, with contexts and neighbourhoods.
struct Structure {
    names: Vec<AtomId>,
    contexts: Vec<Vec<usize>>,
    neighbours: Vec<Vec<usize>>,
}

impl Structure {
    fn new(logic: &Logic) -> Self {
        let mut names: Vec<AtomId> = logic.atoms().to_vec();
        names.sort();
        let pos: BTreeMap<&AtomId, usize> = names.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let contexts: Vec<Vec<usize>> = logic
            .contexts()
            .iter()
            .map(|c| {
                let mut m: Vec<usize> = c.members().iter().map(|a| pos[a]).collect();
                m.sort_unstable();
                m
            })
            .collect();
        let mut neighbours = vec![Vec::new(); names.len()];
        for ctx in &contexts {
            for &u in ctx {
                for &v in ctx {
                    if u != v && !neighbours[u].contains(&v) {
                        neighbours[u].push(v);
                    }
                }
            }
        }
        Structure {
            names,
            contexts,
            neighbours,
        }
    }

    fn state(&self, values: &[bool]) -> TwoValuedState {
        TwoValuedState {
            assignment: self
                .names
                .iter()
                .cloned()
                .zip(values.iter().copied())
                .collect(),
        }
    }
}

type Partial = Vec<Option<bool>>;

/// Sets `atom` true and propagates to a fixpoint. Returns false on conflict.
fn assign_true(s: &Structure, vals: &mut Partial, atom: usize) -> bool {
    let mut pending = vec![atom];
    while let Some(x) = pending.pop() {
        match vals[x] {
            Some(false) => return false,
            Some(true) => continue,
            None => vals[x] = Some(true),
        }
        for &y in &s.neighbours[x] {
            match vals[y] {
                Some(true) => return false,
                Some(false) => {}
                None => vals[y] = Some(false),
            }
        }
        // unit propagation over contexts still lacking a true member
        for ctx in &s.contexts {
            if ctx.iter().any(|&m| vals[m] == Some(true)) {
                continue;
            }
            let mut open = ctx.iter().filter(|&&m| vals[m].is_none());
            match (open.next(), open.next()) {
                (None, _) => return false,
                (Some(&only), None) if !pending.contains(&only) => {
                    pending.push(only);
                }
                _ => {}
            }
        }
    }
    true
}

/// Most-constrained open context: fewest unassigned members, ties broken by
/// lowest unassigned atom name.
fn pick_context<'a>(s: &'a Structure, vals: &Partial) -> Option<&'a [usize]> {
    s.contexts
        .iter()
        .filter(|ctx| !ctx.iter().any(|&m| vals[m] == Some(true)))
        .min_by_key(|ctx| {
            let open: Vec<usize> = ctx.iter().copied().filter(|&m| vals[m].is_none()).collect();
            (open.len(), open.first().copied().unwrap_or(usize::MAX))
        })
        .map(Vec::as_slice)
}

fn expand_leaf(s: &Structure, vals: &Partial, out: &mut Vec<TwoValuedState>) {
    // atoms outside every context are unconstrained
    let free: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_none()).collect();
    let fixed: Vec<bool> = vals.iter().map(|v| v.unwrap_or(false)).collect();
    for mask in 0u64..(1u64 << free.len()) {
        let mut values = fixed.clone();
        for (bit, &i) in free.iter().enumerate() {
            values[i] = mask >> bit & 1 == 1;
        }
        out.push(s.state(&values));
    }
}

fn search(s: &Structure, vals: Partial, out: &mut Vec<TwoValuedState>) {
    let Some(ctx) = pick_context(s, &vals) else {
        expand_leaf(s, &vals, out);
        return;
    };
    for &x in ctx.iter().filter(|&&m| vals[m].is_none()) {
        let mut next = vals.clone();
        if assign_true(s, &mut next, x) {
            search(s, next, out);
        }
    }
}

/// Every two-valued state of the logic, once each, in canonical order.
///
/// The first branching level runs in parallel; results are re-sorted, so the
/// output does not depend on scheduling.
pub fn enumerate_states(logic: &Logic) -> Vec<TwoValuedState> {
    let s = Structure::new(logic);
    let root: Partial = vec![None; s.names.len()];
    let mut states = match pick_context(&s, &root) {
        None => {
            let mut out = Vec::new();
            expand_leaf(&s, &root, &mut out);
            out
        }
        Some(ctx) => ctx
            .par_iter()
            .map(|&x| {
                let mut out = Vec::new();
                let mut vals = root.clone();
                if assign_true(&s, &mut vals, x) {
                    search(&s, vals, &mut out);
                }
                out
            })
            .flatten()
            .collect(),
    };
    states.sort();
    states
}

/// Independent check of [`enumerate_states`]: tests all `2^n` assignments.
pub fn enumerate_states_bruteforce(logic: &Logic) -> Result<Vec<TwoValuedState>, ValuationError> {
    let s = Structure::new(logic);
    let n = s.names.len();
    if n > BRUTEFORCE_ATOM_LIMIT {
        return Err(ValuationError::TooManyAtoms {
            atoms: n,
            limit: BRUTEFORCE_ATOM_LIMIT,
        });
    }
    let masks: Vec<u32> = s
        .contexts
        .iter()
        .map(|ctx| ctx.iter().fold(0u32, |m, &i| m | 1 << i))
        .collect();
    let mut states: Vec<TwoValuedState> = (0u32..(1u32 << n))
        .filter(|&bits| masks.iter().all(|&m| (bits & m).count_ones() == 1))
        .map(|bits| {
            let values: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            s.state(&values)
        })
        .collect();
    states.sort();
    Ok(states)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    ForcedTrue,
    ForcedFalse,
    Unconstrained,
    Vacuous,
}

/// Outcome of "given hypothesis, what is the conclusion atom's value?".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RelationalVerdict {
    pub kind: VerdictKind,
    /// States satisfying the hypothesis.
    pub witness_count: usize,
}

fn check_atom(logic: &Logic, atom: &AtomId) -> Result<(), ValuationError> {
    if logic.contains_atom(atom) {
        Ok(())
    } else {
        Err(ValuationError::UnknownAtom(atom.clone()))
    }
}

/// Evaluates a relational query over an already enumerated state list.
pub fn query_states(
    states: &[TwoValuedState],
    hypothesis: (&AtomId, bool),
    conclusion: &AtomId,
) -> RelationalVerdict {
    let (atom, value) = hypothesis;
    let mut seen_true = false;
    let mut seen_false = false;
    let mut witness_count = 0;
    for st in states.iter().filter(|st| st.value(atom) == Some(value)) {
        witness_count += 1;
        match st.value(conclusion) {
            Some(true) => seen_true = true,
            Some(false) => seen_false = true,
            None => {}
        }
    }
    let kind = match (witness_count, seen_true, seen_false) {
        (0, _, _) => VerdictKind::Vacuous,
        (_, true, false) => VerdictKind::ForcedTrue,
        (_, false, true) => VerdictKind::ForcedFalse,
        _ => VerdictKind::Unconstrained,
    };
    RelationalVerdict {
        kind,
        witness_count,
    }
}

/// Restricts the two-valued states to those satisfying `hypothesis` and
/// reports what they say about `conclusion`.
pub fn relational_query(
    logic: &Logic,
    hypothesis: (&AtomId, bool),
    conclusion: &AtomId,
) -> Result<RelationalVerdict, ValuationError> {
    check_atom(logic, hypothesis.0)?;
    check_atom(logic, conclusion)?;
    Ok(query_states(
        &enumerate_states(logic),
        hypothesis,
        conclusion,
    ))
}

/// Value an atom takes across a set of states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcedValue {
    AlwaysTrue,
    AlwaysFalse,
    Either,
    /// There are no states to inspect.
    NoStates,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndefinitenessCertificate {
    pub prepared: AtomId,
    pub target: AtomId,
    pub total_states: usize,
    /// States assigning true to the prepared atom.
    pub witness_count: usize,
    pub certified: bool,
    pub no_classical_states: bool,
    /// Query "prepared is true" against the target.
    pub verdict: RelationalVerdict,
    pub forced_table: BTreeMap<AtomId, ForcedValue>,
    pub banner: String,
    pub summary: String,
}

/// Checks whether preparing `prepared` (setting it true) is compatible with
/// any two-valued state. If none is, `target` has no consistent classical
/// value under that preparation.
///
/// A logic without any two-valued state is never certified: nothing is
/// learned about the particular preparation, and the report says so.
pub fn indefiniteness_certificate(
    logic: &Logic,
    prepared: &AtomId,
    target: &AtomId,
) -> Result<IndefinitenessCertificate, ValuationError> {
    check_atom(logic, prepared)?;
    check_atom(logic, target)?;
    let states = enumerate_states(logic);
    let verdict = query_states(&states, (prepared, true), target);
    let no_classical_states = states.is_empty();
    let certified = !no_classical_states && verdict.witness_count == 0;

    let mut forced_table = BTreeMap::new();
    for atom in logic.atoms() {
        let trues = states
            .iter()
            .filter(|s| s.value(atom) == Some(true))
            .count();
        let forced = match trues {
            _ if states.is_empty() => ForcedValue::NoStates,
            0 => ForcedValue::AlwaysFalse,
            t if t == states.len() => ForcedValue::AlwaysTrue,
            _ => ForcedValue::Either,
        };
        forced_table.insert(atom.clone(), forced);
    }

    let summary = if no_classical_states {
        "no classical states at all: the logic admits no two-valued state, so no \
         preparation can be singled out classically"
            .to_owned()
    } else if certified {
        format!(
            "certified: none of the {} two-valued states assigns true to {prepared}; \
             preparing {prepared} leaves {target} without any consistent classical value \
             (value indefinite)",
            states.len()
        )
    } else {
        format!(
            "not certified: {} of the {} two-valued states assign true to {prepared}",
            verdict.witness_count,
            states.len()
        )
    };

    Ok(IndefinitenessCertificate {
        prepared: prepared.clone(),
        target: target.clone(),
        total_states: states.len(),
        witness_count: verdict.witness_count,
        certified,
        no_classical_states,
        verdict,
        forced_table,
        banner: CERTIFICATE_BANNER.to_owned(),
        summary,
    })
}

/// States as CSV: header row of atom names, one row of 0/1 per state.
pub fn states_to_csv(states: &[TwoValuedState], atoms: &[AtomId]) -> String {
    let mut names: Vec<&AtomId> = atoms.iter().collect();
    names.sort();
    let mut out = names
        .iter()
        .map(|a| a.as_str())
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for st in states {
        let row: Vec<&str> = names
            .iter()
            .map(|a| if st.value(a) == Some(true) { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
