use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use kso_core::orthorep::{
    figure1_pins, inner_angle, solve_representation, verify_representation, ReprError, SolverConfig,
};
use kso_core::{parse_logic, AtomId, Logic};

fn figure1_config(seed: u64) -> SolverConfig {
    SolverConfig {
        seed,
        pins: figure1_pins(),
        ..SolverConfig::default()
    }
}

#[test]
fn figure1_has_a_faithful_representation() {
    let logic = Logic::figure1();
    let started = Instant::now();
    let sol = solve_representation(&logic, &figure1_config(0)).expect("solver converges");
    eprintln!(
        "restart {} iterations {} residual {:e} in {:?}",
        sol.restart,
        sol.iterations,
        sol.residual,
        started.elapsed()
    );
    let report = verify_representation(&logic, &sol.rep, &SolverConfig::default()).unwrap();
    assert!(report.is_ok(), "{:?}", report.violations);
    let a = sol.rep.get(&AtomId::from("a")).unwrap();
    let b = sol.rep.get(&AtomId::from("b")).unwrap();
    assert!((inner_angle(a, b).unwrap() - FRAC_PI_4).abs() < 1e-12);
}

#[test]
fn solver_is_deterministic_for_a_seed() {
    let logic = Logic::figure1();
    let cfg = SolverConfig {
        restarts: 4,
        ..figure1_config(11)
    };
    let first = solve_representation(&logic, &cfg);
    let second = solve_representation(&logic, &cfg);
    match (first, second) {
        (Ok(x), Ok(y)) => {
            assert_eq!(x.restart, y.restart);
            assert_eq!(x.rep, y.rep);
        }
        (Err(ReprError::NotFound(x)), Err(ReprError::NotFound(y))) => {
            assert_eq!(x.best, y.best);
        }
        (x, y) => panic!("diverging outcomes: {x:?} / {y:?}"),
    }
}

#[test]
fn two_shared_atoms_are_not_representable() {
    // two contexts of R^3 sharing two atoms force c and d to coincide
    let logic = Logic::new_unvalidated(
        Some(3),
        ["a", "b", "c", "d"].map(AtomId::from).to_vec(),
        vec![
            ["a", "b", "c"].map(AtomId::from).to_vec(),
            ["a", "b", "d"].map(AtomId::from).to_vec(),
        ],
    )
    .unwrap();
    let cfg = SolverConfig {
        restarts: 8,
        max_iters: 2_000,
        ..SolverConfig::default()
    };
    match solve_representation(&logic, &cfg) {
        Err(ReprError::NotFound(fail)) => {
            assert!(fail.best_residual > 0.0);
            assert!(!fail.best_report.unwrap().is_ok());
        }
        other => panic!("expected failure, got {other:?}"),
    }
}

#[test]
fn parsed_figure1_matches_builtin() {
    let logic = parse_logic(kso_core::logic::FIGURE1_JSON).unwrap();
    assert_eq!(logic, Logic::figure1());
    assert_eq!(logic.to_json(), kso_core::logic::FIGURE1_JSON);
}
