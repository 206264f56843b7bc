//! Faithful orthogonal representations of a logic in `R^d`.
//!
//! A representation maps every atom to a unit vector such that atoms sharing
//! a context are orthogonal, while atoms that share no context are neither
//! orthogonal nor collinear. The solver minimizes a penalty
//!
//! ```text
//!   sum over co-contextual pairs   <u,v>^2
//! + sum over atoms                 (|u|^2 - 1)^2
//! + sum over other pairs           max(0, s - |<u,v>|)^2 + max(0, |<u,v>| - (1 - s))^2
//! ```
//!
//! with `s = sep_min`, holding pinned atoms fixed, by damped Gauss-Newton
//! (Levenberg-Marquardt) from random starts. Verification is the arbiter: a
//! restart counts only if [`verify_representation`] comes back empty. A
//! failed search means no representation was found, not that none exists.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{AtomId, Logic};
use crate::rng;

pub const DEFAULT_TOL_ORTH: f64 = 1e-9;
pub const DEFAULT_TOL_NORM: f64 = 1e-9;
pub const DEFAULT_SEP_MIN: f64 = 1e-6;
pub const DEFAULT_RESTARTS: usize = 64;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

#[derive(Debug, Error)]
pub enum ReprError {
    #[error("vector has norm {norm}, expected 1")]
    NonUnit { norm: f64 },
    #[error("vectors have dimensions {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no vector for atom {0}")]
    MissingVector(AtomId),
    #[error("unknown atom {0}")]
    UnknownAtom(AtomId),
    #[error("pinned vector for {atom} has norm {norm}, expected 1")]
    NonUnitPin { atom: AtomId, norm: f64 },
    #[error("pins {first} and {second} share a context but have inner product {inner}")]
    InfeasiblePins {
        first: AtomId,
        second: AtomId,
        inner: f64,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed vector file: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("cannot read vector component {0:?}")]
    BadComponent(String),
    #[error(
        "no representation found after {} restarts (best residual {:e})",
        .0.restarts,
        .0.best_residual
    )]
    NotFound(Box<SolveFailure>),
}

/// A real vector; unit norm is checked where it matters, not on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RVector(Vec<f64>);

impl RVector {
    pub fn new(components: Vec<f64>) -> Self {
        RVector(components)
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &RVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> RVector {
        let n = self.norm();
        RVector(self.0.iter().map(|x| x / n).collect())
    }

    /// Parses a comma-separated component list such as `sqrt2/2,1/2,1/2`.
    pub fn parse_list(text: &str) -> Result<Self, ReprError> {
        text.split(',')
            .map(|t| parse_component(t.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map(RVector)
    }
}

impl fmt::Display for RVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| format!("{x}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Resolves an exact token (`sqrt2/2`, `1/2`, `-1/2`, `0`, `1` and the
/// negated forms) or any decimal literal.
pub fn parse_component(token: &str) -> Result<f64, ReprError> {
    let v = match token {
        "sqrt2/2" => std::f64::consts::FRAC_1_SQRT_2,
        "-sqrt2/2" => -std::f64::consts::FRAC_1_SQRT_2,
        "1/2" => 0.5,
        "-1/2" => -0.5,
        "0" => 0.0,
        "1" => 1.0,
        "-1" => -1.0,
        other => other
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| ReprError::BadComponent(other.to_owned()))?,
    };
    Ok(v)
}

/// Angle between the lines spanned by two unit vectors, in `[0, pi/2]`.
pub fn inner_angle(u: &RVector, v: &RVector) -> Result<f64, ReprError> {
    if u.dim() != v.dim() {
        return Err(ReprError::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    for w in [u, v] {
        if !w.is_unit(DEFAULT_TOL_NORM) {
            return Err(ReprError::NonUnit { norm: w.norm() });
        }
    }
    Ok(u.dot(v).abs().min(1.0).acos())
}

/// Atom vectors of one representation.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoRep {
    dimension: usize,
    vectors: BTreeMap<AtomId, RVector>,
}

impl OrthoRep {
    pub fn new(dimension: usize, vectors: BTreeMap<AtomId, RVector>) -> Result<Self, ReprError> {
        for v in vectors.values() {
            if v.dim() != dimension {
                return Err(ReprError::DimensionMismatch {
                    left: dimension,
                    right: v.dim(),
                });
            }
        }
        Ok(OrthoRep { dimension, vectors })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vectors(&self) -> &BTreeMap<AtomId, RVector> {
        &self.vectors
    }

    pub fn get(&self, atom: &AtomId) -> Option<&RVector> {
        self.vectors.get(atom)
    }

    pub fn set(&mut self, atom: AtomId, v: RVector) -> Result<(), ReprError> {
        if v.dim() != self.dimension {
            return Err(ReprError::DimensionMismatch {
                left: self.dimension,
                right: v.dim(),
            });
        }
        self.vectors.insert(atom, v);
        Ok(())
    }

    /// Parses a vector file: a JSON object from atom name to component array.
    /// Components are numbers or exact tokens (see [`parse_component`]).
    pub fn from_vector_file(text: &str) -> Result<Self, ReprError> {
        let raw: BTreeMap<AtomId, Vec<serde_json::Value>> = serde_json::from_str(text)?;
        let mut vectors = BTreeMap::new();
        let mut dimension = None;
        for (atom, comps) in raw {
            let v = comps
                .iter()
                .map(|c| match c {
                    serde_json::Value::Number(n) => n
                        .as_f64()
                        .ok_or_else(|| ReprError::BadComponent(n.to_string())),
                    serde_json::Value::String(s) => parse_component(s),
                    other => Err(ReprError::BadComponent(other.to_string())),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            match dimension {
                None => dimension = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(ReprError::DimensionMismatch {
                        left: d,
                        right: v.len(),
                    })
                }
                _ => {}
            }
            vectors.insert(atom, RVector(v));
        }
        OrthoRep::new(dimension.unwrap_or(0), vectors)
    }

    /// Vector file text; numbers use the shortest round-trip decimal form.
    pub fn to_vector_file(&self) -> String {
        let mut out = String::from("{\n");
        let n = self.vectors.len();
        for (i, (atom, v)) in self.vectors.iter().enumerate() {
            let comps: Vec<String> =
                v.0.iter()
                    .map(|x| serde_json::to_string(x).expect("finite floats serialize"))
                    .collect();
            out.push_str(&format!(
                "  {}: [{}]{}\n",
                serde_json::to_string(atom.as_str()).expect("strings serialize"),
                comps.join(", "),
                if i + 1 < n { "," } else { "" }
            ));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    pub tol_orth: f64,
    pub tol_norm: f64,
    pub sep_min: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub pins: BTreeMap<AtomId, RVector>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_orth: DEFAULT_TOL_ORTH,
            tol_norm: DEFAULT_TOL_NORM,
            sep_min: DEFAULT_SEP_MIN,
            restarts: DEFAULT_RESTARTS,
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
            pins: BTreeMap::new(),
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<(), ReprError> {
        let ok = 0.0 < self.tol_orth
            && 0.0 < self.tol_norm
            && self.tol_orth < self.sep_min
            && self.tol_norm < self.sep_min
            && self.sep_min < 1.0;
        if !ok {
            return Err(ReprError::InvalidConfig(format!(
                "need 0 < tol_orth, tol_norm < sep_min < 1 (got {}, {}, {})",
                self.tol_orth, self.tol_norm, self.sep_min
            )));
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(ReprError::InvalidConfig(
                "restarts and max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Norm,
    Orthogonality,
    Separation,
    Collinearity,
}

/// A single failed constraint with its measured value.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub atoms: Vec<AtomId>,
    /// `| |u| - 1 |` for norms, `|<u,v>|` for pairs.
    pub measured: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
    pub tol_orth: f64,
    pub tol_norm: f64,
    pub sep_min: f64,
    pub max_norm_deviation: f64,
    pub max_context_overlap: f64,
    /// Smallest `|<u,v>|` over pairs sharing no context.
    pub min_separation: f64,
    /// Largest `|<u,v>|` over distinct atoms.
    pub max_overlap: f64,
    pub note: String,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sep_note(sep_min: f64) -> String {
    format!(
        "faithfulness separation sep_min = {sep_min:e} is a chosen threshold: \
         atoms sharing no context must satisfy sep_min <= |<u,v>| <= 1 - sep_min"
    )
}

/// Checks a representation against every constraint, in declaration order.
// negated comparisons so that NaN counts as a violation
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn verify_representation(
    logic: &Logic,
    rep: &OrthoRep,
    cfg: &SolverConfig,
) -> Result<VerificationReport, ReprError> {
    let vecs = lookup_all(logic, rep)?;
    let adj = logic.adjacency();
    let atoms = logic.atoms();
    let mut violations = Vec::new();
    let mut max_norm_deviation: f64 = 0.0;
    let mut max_context_overlap: f64 = 0.0;
    let mut min_separation = f64::INFINITY;
    let mut max_overlap: f64 = 0.0;

    for (atom, v) in atoms.iter().zip(&vecs) {
        let dev = (v.norm() - 1.0).abs();
        max_norm_deviation = max_norm_deviation.max(dev);
        if !(dev <= cfg.tol_norm) {
            violations.push(Violation {
                kind: ViolationKind::Norm,
                atoms: vec![atom.clone()],
                measured: dev,
                bound: cfg.tol_norm,
            });
        }
    }
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            let ip = vecs[i].dot(vecs[j]).abs();
            max_overlap = max_overlap.max(ip);
            let pair = || vec![atoms[i].clone(), atoms[j].clone()];
            if adj[i][j] {
                max_context_overlap = max_context_overlap.max(ip);
                if !(ip <= cfg.tol_orth) {
                    violations.push(Violation {
                        kind: ViolationKind::Orthogonality,
                        atoms: pair(),
                        measured: ip,
                        bound: cfg.tol_orth,
                    });
                }
                continue;
            }
            min_separation = min_separation.min(ip);
            if !(ip >= cfg.sep_min) {
                violations.push(Violation {
                    kind: ViolationKind::Separation,
                    atoms: pair(),
                    measured: ip,
                    bound: cfg.sep_min,
                });
            }
            if !(ip <= 1.0 - cfg.sep_min) {
                violations.push(Violation {
                    kind: ViolationKind::Collinearity,
                    atoms: pair(),
                    measured: ip,
                    bound: 1.0 - cfg.sep_min,
                });
            }
        }
    }
    Ok(VerificationReport {
        violations,
        tol_orth: cfg.tol_orth,
        tol_norm: cfg.tol_norm,
        sep_min: cfg.sep_min,
        max_norm_deviation,
        max_context_overlap,
        min_separation,
        max_overlap,
        note: sep_note(cfg.sep_min),
    })
}

fn lookup_all<'a>(logic: &Logic, rep: &'a OrthoRep) -> Result<Vec<&'a RVector>, ReprError> {
    if rep.dimension != logic.dimension() {
        return Err(ReprError::DimensionMismatch {
            left: logic.dimension(),
            right: rep.dimension,
        });
    }
    if let Some(extra) = rep.vectors.keys().find(|a| !logic.contains_atom(a)) {
        return Err(ReprError::UnknownAtom(extra.clone()));
    }
    logic
        .atoms()
        .iter()
        .map(|a| {
            rep.get(a)
                .ok_or_else(|| ReprError::MissingVector(a.clone()))
        })
        .collect()
}

/// Residual terms of the penalty, each touching one or two atoms.
#[derive(Clone, Copy)]
enum Term {
    Orth(usize, usize),
    Norm(usize),
    Sep(usize, usize),
}

struct Penalty {
    dim: usize,
    terms: Vec<Term>,
    sep: f64,
}

/// One residual and its partial derivatives with respect to the vectors of
/// its atoms: `(atom, d r / d atom_vector)`.
struct Evaluated {
    values: [f64; 2],
    count: usize,
    grads: [[(usize, [f64; 3]); 2]; 2],
    dim: usize,
}

impl Penalty {
    #[allow(clippy::needless_range_loop)]
    fn new(logic: &Logic, sep: f64) -> Self {
        let n = logic.atoms().len();
        let adj = logic.adjacency();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                terms.push(if adj[i][j] {
                    Term::Orth(i, j)
                } else {
                    Term::Sep(i, j)
                });
            }
        }
        terms.extend((0..n).map(Term::Norm));
        Penalty {
            dim: logic.dimension(),
            terms,
            sep,
        }
    }

    fn dot(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let d = self.dim;
        (0..d).map(|k| x[i * d + k] * x[j * d + k]).sum()
    }

    fn slice(&self, x: &[f64], i: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        out[..self.dim].copy_from_slice(&x[i * self.dim..(i + 1) * self.dim]);
        out
    }

    fn scaled(v: [f64; 3], s: f64) -> [f64; 3] {
        [v[0] * s, v[1] * s, v[2] * s]
    }

    /// `x` holds all atom vectors concatenated in declaration order.
    fn evaluate(&self, term: Term, x: &[f64]) -> Evaluated {
        let mut e = Evaluated {
            values: [0.0; 2],
            count: 0,
            grads: [[(0, [0.0; 3]); 2]; 2],
            dim: self.dim,
        };
        match term {
            Term::Orth(i, j) => {
                e.values[0] = self.dot(x, i, j);
                e.grads[0] = [(i, self.slice(x, j)), (j, self.slice(x, i))];
                e.count = 1;
            }
            Term::Norm(i) => {
                e.values[0] = self.dot(x, i, i) - 1.0;
                e.grads[0] = [(i, Self::scaled(self.slice(x, i), 2.0)), (i, [0.0; 3])];
                e.count = 1;
            }
            Term::Sep(i, j) => {
                let ip = self.dot(x, i, j);
                let sign = if ip < 0.0 { -1.0 } else { 1.0 };
                let abs = ip.abs();
                let (vi, vj) = (self.slice(x, i), self.slice(x, j));
                if abs < self.sep {
                    e.values[e.count] = self.sep - abs;
                    e.grads[e.count] = [(i, Self::scaled(vj, -sign)), (j, Self::scaled(vi, -sign))];
                    e.count += 1;
                }
                if abs > 1.0 - self.sep {
                    e.values[e.count] = abs - (1.0 - self.sep);
                    e.grads[e.count] = [(i, Self::scaled(vj, sign)), (j, Self::scaled(vi, sign))];
                    e.count += 1;
                }
            }
        }
        e
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&t| {
                let e = self.evaluate(t, x);
                e.values[..e.count].iter().map(|r| r * r).sum::<f64>()
            })
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for &t in &self.terms {
            let e = self.evaluate(t, x);
            for r in 0..e.count {
                for &(atom, d) in &e.grads[r] {
                    for k in 0..e.dim {
                        g[atom * e.dim + k] += 2.0 * e.values[r] * d[k];
                    }
                }
            }
        }
        g
    }

    /// Gauss-Newton normal equations restricted to free coordinates:
    /// returns `(J^T J, J^T r, cost)`.
    fn normal_equations(
        &self,
        x: &[f64],
        col_of: &[Option<usize>],
        ncols: usize,
    ) -> (DMatrix<f64>, DVector<f64>, f64) {
        let mut jtj = DMatrix::zeros(ncols, ncols);
        let mut jtr = DVector::zeros(ncols);
        let mut cost = 0.0;
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(6);
        for &t in &self.terms {
            let e = self.evaluate(t, x);
            for r in 0..e.count {
                let res = e.values[r];
                cost += res * res;
                entries.clear();
                for &(atom, d) in &e.grads[r] {
                    for k in 0..e.dim {
                        if d[k] == 0.0 {
                            continue;
                        }
                        if let Some(c) = col_of[atom * e.dim + k] {
                            match entries.iter_mut().find(|(col, _)| *col == c) {
                                Some(slot) => slot.1 += d[k],
                                None => entries.push((c, d[k])),
                            }
                        }
                    }
                }
                for &(a, da) in &entries {
                    jtr[a] += da * res;
                    for &(b, db) in &entries {
                        jtj[(a, b)] += da * db;
                    }
                }
            }
        }
        (jtj, jtr, cost)
    }
}

fn flatten(logic: &Logic, rep: &OrthoRep) -> Result<Vec<f64>, ReprError> {
    if logic.dimension() > 3 {
        return Err(ReprError::InvalidConfig(format!(
            "dimension {} not supported (at most 3)",
            logic.dimension()
        )));
    }
    Ok(lookup_all(logic, rep)?
        .into_iter()
        .flat_map(|v| v.0.iter().copied())
        .collect())
}

/// Penalty objective with an explicit faithfulness threshold.
pub fn penalty_objective(logic: &Logic, rep: &OrthoRep, sep_min: f64) -> Result<f64, ReprError> {
    let x = flatten(logic, rep)?;
    Ok(Penalty::new(logic, sep_min).value(&x))
}

/// Analytic gradient of [`penalty_objective`] with respect to every atom vector.
pub fn penalty_gradient(
    logic: &Logic,
    rep: &OrthoRep,
    sep_min: f64,
) -> Result<BTreeMap<AtomId, RVector>, ReprError> {
    let x = flatten(logic, rep)?;
    let g = Penalty::new(logic, sep_min).gradient(&x);
    let d = logic.dimension();
    Ok(logic
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), RVector(g[i * d..(i + 1) * d].to_vec())))
        .collect())
}

/// The solver's penalty at the default separation threshold.
pub fn representation_residual(logic: &Logic, rep: &OrthoRep) -> Result<f64, ReprError> {
    penalty_objective(logic, rep, DEFAULT_SEP_MIN)
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub rep: OrthoRep,
    /// Index of the successful restart.
    pub restart: usize,
    pub iterations: usize,
    pub residual: f64,
    pub report: VerificationReport,
}

#[derive(Clone, Debug)]
pub struct SolveFailure {
    pub restarts: usize,
    pub best_residual: f64,
    pub best: Option<OrthoRep>,
    pub best_report: Option<VerificationReport>,
}

struct RestartOutcome {
    rep: OrthoRep,
    iterations: usize,
    residual: f64,
    report: VerificationReport,
}

fn check_pins(logic: &Logic, cfg: &SolverConfig) -> Result<(), ReprError> {
    for (atom, v) in &cfg.pins {
        if !logic.contains_atom(atom) {
            return Err(ReprError::UnknownAtom(atom.clone()));
        }
        if v.dim() != logic.dimension() {
            return Err(ReprError::DimensionMismatch {
                left: logic.dimension(),
                right: v.dim(),
            });
        }
        if !v.is_unit(cfg.tol_norm) {
            return Err(ReprError::NonUnitPin {
                atom: atom.clone(),
                norm: v.norm(),
            });
        }
    }
    let pins: Vec<(&AtomId, &RVector)> = cfg.pins.iter().collect();
    for (i, (a, u)) in pins.iter().enumerate() {
        for (b, v) in &pins[i + 1..] {
            let inner = u.dot(v);
            if logic.co_contextual(a, b).unwrap_or(false) && inner.abs() > cfg.tol_orth {
                return Err(ReprError::InfeasiblePins {
                    first: (*a).clone(),
                    second: (*b).clone(),
                    inner,
                });
            }
        }
    }
    Ok(())
}

fn run_restart(
    logic: &Logic,
    cfg: &SolverConfig,
    penalty: &Penalty,
    restart: usize,
) -> RestartOutcome {
    let d = logic.dimension();
    let atoms = logic.atoms();
    let mut rng = rng::substream(cfg.seed, restart as u64);
    let mut x = Vec::with_capacity(atoms.len() * d);
    let mut col_of = Vec::with_capacity(atoms.len() * d);
    let mut ncols = 0;
    for atom in atoms {
        match cfg.pins.get(atom) {
            Some(pin) => {
                x.extend_from_slice(pin.components());
                col_of.extend(std::iter::repeat_n(None, d));
            }
            None => {
                let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
                x.extend(raw.iter().map(|c| c / norm));
                for _ in 0..d {
                    col_of.push(Some(ncols));
                    ncols += 1;
                }
            }
        }
    }

    let iterations = levenberg_marquardt(penalty, &mut x, &col_of, ncols, cfg.max_iters);

    // exact renormalization of free vectors
    let mut vectors = BTreeMap::new();
    for (i, atom) in atoms.iter().enumerate() {
        let v = match cfg.pins.get(atom) {
            Some(pin) => pin.clone(),
            None => RVector(x[i * d..(i + 1) * d].to_vec()).normalized(),
        };
        vectors.insert(atom.clone(), v);
    }
    let rep = OrthoRep {
        dimension: d,
        vectors,
    };
    let residual = penalty_objective(logic, &rep, cfg.sep_min).unwrap_or(f64::INFINITY);
    let report = verify_representation(logic, &rep, cfg).expect("representation covers every atom");
    RestartOutcome {
        rep,
        iterations,
        residual,
        report,
    }
}

/// Damped Gauss-Newton on the free coordinates. Returns the iteration count.
fn levenberg_marquardt(
    penalty: &Penalty,
    x: &mut [f64],
    col_of: &[Option<usize>],
    ncols: usize,
    max_iters: usize,
) -> usize {
    if ncols == 0 {
        return 0;
    }
    let mut lambda = 1e-3;
    let (mut jtj, mut jtr, mut cost) = penalty.normal_equations(x, col_of, ncols);
    let mut stalled = 0;
    for iter in 0..max_iters {
        if cost < 1e-30 {
            return iter;
        }
        let mut damped = jtj.clone();
        for k in 0..ncols {
            damped[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
        }
        let Some(chol) = damped.cholesky() else {
            lambda *= 10.0;
            continue;
        };
        let step = chol.solve(&(-&jtr));
        let mut trial = x.to_vec();
        for (i, c) in col_of.iter().enumerate() {
            if let Some(c) = c {
                trial[i] += step[*c];
            }
        }
        let (tjtj, tjtr, tcost) = penalty.normal_equations(&trial, col_of, ncols);
        if tcost < cost {
            let gain = (cost - tcost) / cost.max(f64::MIN_POSITIVE);
            x.copy_from_slice(&trial);
            jtj = tjtj;
            jtr = tjtr;
            cost = tcost;
            lambda = (lambda / 3.0).max(1e-15);
            stalled = if gain < 1e-10 { stalled + 1 } else { 0 };
        } else {
            lambda *= 4.0;
            stalled += 1;
        }
        if stalled > 60 || lambda > 1e16 {
            return iter + 1;
        }
    }
    max_iters
}

/// Searches for a faithful representation in `R^d` with `d = logic.dimension()`.
///
/// Restarts are seeded independently from `cfg.seed`; they run in parallel
/// batches and the lowest-indexed verified restart wins, so the result does
/// not depend on the thread count.
pub fn solve_representation(logic: &Logic, cfg: &SolverConfig) -> Result<Solution, ReprError> {
    cfg.check()?;
    if logic.dimension() == 0 || logic.dimension() > 3 {
        return Err(ReprError::InvalidConfig(format!(
            "dimension {} not supported (1 to 3)",
            logic.dimension()
        )));
    }
    check_pins(logic, cfg)?;
    let penalty = Penalty::new(logic, cfg.sep_min);
    let batch = rayon::current_num_threads().max(1);
    let mut best: Option<RestartOutcome> = None;
    let mut start = 0;
    while start < cfg.restarts {
        let end = (start + batch).min(cfg.restarts);
        let outcomes: Vec<RestartOutcome> = (start..end)
            .into_par_iter()
            .map(|r| run_restart(logic, cfg, &penalty, r))
            .collect();
        for (offset, out) in outcomes.into_iter().enumerate() {
            if out.report.is_ok() {
                return Ok(Solution {
                    rep: out.rep,
                    restart: start + offset,
                    iterations: out.iterations,
                    residual: out.residual,
                    report: out.report,
                });
            }
            if best.as_ref().is_none_or(|b| out.residual < b.residual) {
                best = Some(out);
            }
        }
        start = end;
    }
    Err(ReprError::NotFound(Box::new(SolveFailure {
        restarts: cfg.restarts,
        best_residual: best.as_ref().map_or(f64::INFINITY, |b| b.residual),
        best_report: best.as_ref().map(|b| b.report.clone()),
        best: best.map(|b| b.rep),
    })))
}

/// The two pins placing `a` and `b` at `(1,0,0)` and `(sqrt2/2, 1/2, 1/2)`.
pub fn figure1_pins() -> BTreeMap<AtomId, RVector> {
    BTreeMap::from([
        (AtomId::from("a"), RVector::new(vec![1.0, 0.0, 0.0])),
        (
            AtomId::from("b"),
            RVector::new(vec![std::f64::consts::FRAC_1_SQRT_2, 0.5, 0.5]),
        ),
    ])
}
