use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;

use kso_core::numtheory::{
    continued_fraction, continued_fraction_convergents, extract_order, gcd, order_bruteforce,
};
use kso_core::orthorep::{inner_angle, penalty_gradient, penalty_objective, OrthoRep, RVector};
use kso_core::qsim::{gates, QState};
use kso_core::valuations::enumerate_states;
use kso_core::{parse_logic, AtomId, Logic};

/// Random hypergraph: up to `max_atoms` atoms named `x0..`, up to
/// `max_contexts` contexts of 1 to 3 distinct atoms each.
fn arb_logic(max_atoms: usize, max_contexts: usize) -> impl Strategy<Value = Logic> {
    (1..=max_atoms)
        .prop_flat_map(move |n| {
            let ctx = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=3.min(n));
            (Just(n), proptest::collection::vec(ctx, 0..=max_contexts))
        })
        .prop_map(|(n, contexts)| {
            let name = |i: usize| AtomId::new(format!("x{i}"));
            Logic::new_unvalidated(
                Some(3),
                (0..n).map(name).collect(),
                contexts
                    .into_iter()
                    .map(|c| c.into_iter().map(name).collect())
                    .collect(),
            )
            .expect("generated logics are well formed")
        })
}

/// Every assignment, filtered by the exactly-one rule, as sorted true-sets.
fn oracle_states(logic: &Logic) -> Vec<Vec<String>> {
    let atoms = logic.atoms();
    let mut out: Vec<Vec<String>> = (0u32..1 << atoms.len())
        .filter(|bits| {
            logic.contexts().iter().all(|c| {
                c.members()
                    .iter()
                    .filter(|m| bits >> logic.atom_index(m).unwrap() & 1 == 1)
                    .count()
                    == 1
            })
        })
        .map(|bits| {
            let mut t: Vec<String> = (0..atoms.len())
                .filter(|i| bits >> i & 1 == 1)
                .map(|i| atoms[i].as_str().to_owned())
                .collect();
            t.sort();
            t
        })
        .collect();
    out.sort();
    out
}

fn unit_vec() -> impl Strategy<Value = RVector> {
    proptest::collection::vec(-1.0f64..1.0, 3)
        .prop_filter("non-degenerate", |c| {
            c.iter().map(|x| x * x).sum::<f64>() > 1e-3
        })
        .prop_map(|c| RVector::new(c).normalized())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn enumeration_matches_exhaustive_oracle(logic in arb_logic(10, 7)) {
        let states = enumerate_states(&logic);
        let mut found: Vec<Vec<String>> = states
            .iter()
            .map(|s| s.true_atoms().map(|a| a.as_str().to_owned()).collect())
            .collect();
        for t in &mut found {
            t.sort();
        }
        let mut sorted = found.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), found.len(), "duplicate states");
        prop_assert_eq!(sorted, oracle_states(&logic));
        let mut canonical = states.clone();
        canonical.sort();
        prop_assert_eq!(canonical, states);
    }

    #[test]
    fn logic_json_round_trips(
        keep in proptest::collection::vec(any::<bool>(), 26),
        shuffle in any::<u64>(),
    ) {
        // any nonempty set of the built-in contexts, atoms in scrambled order
        let picked: Vec<&[&str; 3]> = kso_core::logic::FIGURE1_CONTEXTS
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| c)
            .collect();
        prop_assume!(!picked.is_empty());
        let mut atoms: Vec<AtomId> = picked.iter().flat_map(|c| c.iter().map(|&a| AtomId::from(a))).collect();
        atoms.sort();
        atoms.dedup();
        atoms.sort_by_key(|a| (a.as_str().len() as u64 ^ shuffle).wrapping_mul(31) ^ a.as_str().bytes().map(u64::from).sum::<u64>());
        let contexts = picked.iter().map(|c| c.iter().rev().map(|&a| AtomId::from(a)).collect()).collect();
        let logic = Logic::new(Some(3), atoms, contexts).unwrap();
        let text = logic.to_json();
        let back = parse_logic(&text).unwrap();
        prop_assert_eq!(&back, &logic);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn parsing_agrees_with_validation(logic in arb_logic(8, 6)) {
        let parsed = parse_logic(&logic.to_json());
        prop_assert_eq!(parsed.is_ok(), kso_core::validate_logic(&logic).is_empty());
    }

    #[test]
    fn inner_angle_symmetric_and_sign_blind(u in unit_vec(), v in unit_vec()) {
        let uv = inner_angle(&u, &v).unwrap();
        prop_assert!((uv - inner_angle(&v, &u).unwrap()).abs() < 1e-15);
        let neg = RVector::new(v.components().iter().map(|c| -c).collect());
        prop_assert!((uv - inner_angle(&u, &neg).unwrap()).abs() < 1e-15);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&uv));
    }

    #[test]
    fn gradient_matches_central_differences(
        vecs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 37)
    ) {
        let logic = Logic::figure1();
        let mut map = BTreeMap::new();
        for (a, c) in logic.atoms().iter().zip(&vecs) {
            map.insert(a.clone(), RVector::new(c.clone()));
        }
        let rep = OrthoRep::new(3, map).unwrap();
        // a coarse threshold so the barrier terms are active
        let sep = 0.05;
        // the barriers are not differentiable where |<u,v>| is 0, s or 1 - s
        let adj = logic.adjacency();
        let vs: Vec<&RVector> = logic.atoms().iter().map(|a| rep.get(a).unwrap()).collect();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let ip = vs[i].dot(vs[j]).abs();
                prop_assume!(adj[i][j] || [0.0, sep, 1.0 - sep].iter().all(|k| (ip - k).abs() > 1e-4));
            }
        }
        let grad = penalty_gradient(&logic, &rep, sep).unwrap();
        let h = 1e-6;
        let mut num = Vec::new();
        let mut ana = Vec::new();
        for a in logic.atoms() {
            for k in 0..3 {
                let shifted = |delta: f64| {
                    let mut r = rep.clone();
                    let mut c = r.get(a).unwrap().components().to_vec();
                    c[k] += delta;
                    r.set(a.clone(), RVector::new(c)).unwrap();
                    penalty_objective(&logic, &r, sep).unwrap()
                };
                num.push((shifted(h) - shifted(-h)) / (2.0 * h));
                ana.push(grad[a].components()[k]);
            }
        }
        let diff = num.iter().zip(&ana).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale = ana.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-8);
        prop_assert!(diff / scale <= 1e-5, "relative error {}", diff / scale);
    }

    #[test]
    fn convergents_follow_the_recurrence(num in 0u64..4096, bits in 1usize..13) {
        let den = 1u64 << bits;
        prop_assume!(num < den);
        let a = continued_fraction(num, den);
        let c = continued_fraction_convergents(num, den);
        prop_assert_eq!(a.len(), c.len());
        let (mut p2, mut p1, mut q2, mut q1) = (0u64, 1u64, 1u64, 0u64);
        for (ai, &(p, q)) in a.iter().zip(&c) {
            prop_assert_eq!(p, ai * p1 + p2);
            prop_assert_eq!(q, ai * q1 + q2);
            prop_assert_eq!(gcd(p, q), 1);
            (p2, p1, q2, q1) = (p1, p, q1, q);
        }
        let &(p, q) = c.last().unwrap();
        prop_assert_eq!(u128::from(p) * u128::from(den), u128::from(num) * u128::from(q));
    }

    #[test]
    fn gate_sequences_preserve_norm(ops in proptest::collection::vec((0u8..5, 0usize..5, 0usize..5, -3.0f64..3.0), 1..60)) {
        let mut s = QState::zero(5).unwrap();
        for (kind, q, r, theta) in ops {
            match kind {
                0 => s.apply_hadamard(q).unwrap(),
                1 => s.apply_single(q, gates::ry(theta)).unwrap(),
                2 => s.apply_single(q, gates::rz(theta)).unwrap(),
                3 if q != r => s.apply_controlled(q, r, gates::phase(theta)).unwrap(),
                _ => s.apply_qft(&[q, (q + 1) % 5, (q + 3) % 5], theta > 0.0).unwrap(),
            }
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn qft_inverts(re in proptest::collection::vec(-1.0f64..1.0, 16), im in proptest::collection::vec(-1.0f64..1.0, 16)) {
        let amps: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let s = QState::from_amplitudes(amps.iter().map(|a| a / norm).collect()).unwrap();
        let mut t = s.clone();
        t.apply_qft(&[0, 1, 2, 3], false).unwrap();
        t.apply_qft(&[0, 1, 2, 3], true).unwrap();
        for (x, y) in s.amplitudes().iter().zip(t.amplitudes()) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }
}

#[test]
fn extracted_orders_are_true_orders() {
    for n in 2..=21u64 {
        let m = kso_core::numtheory::index_bits_for(n);
        for x in (1..n).filter(|&x| gcd(x, n) == 1) {
            let r = order_bruteforce(x, n).unwrap();
            for measured in 0..1u64 << m.min(12) {
                if let Some(k) = extract_order(measured, m.min(12), n, x) {
                    assert_eq!(k, r, "x={x} n={n} measured={measured}");
                }
            }
        }
    }
}
