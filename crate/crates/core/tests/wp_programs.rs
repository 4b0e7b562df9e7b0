use proptest::prelude::*;

use qdomain::effect::rat;
use qdomain::matrix::gates;
use qdomain::random::seeded;
use qdomain::wp::{coin_loop, items, random_program, Guard, LoopPolicy, Program, QuantumProgram, WpError};
use qdomain::wstar::{random_effect, random_state, AlgebraElement, AlgebraSignature};

proptest! {
    #[test]
    fn printing_and_parsing_preserve_meaning(seed in 0u64..200, qubits in 1usize..=2, loops in any::<bool>()) {
        let mut rng = seeded(seed);
        let p = random_program(&mut rng, qubits, 4, loops);
        let back = QuantumProgram::parse(&p.to_sexp(), None).unwrap();
        let a = p.denote(LoopPolicy::default()).unwrap().transfer;
        let b = back.denote(LoopPolicy::default()).unwrap().transfer;
        prop_assert!(a.distance(&b) < 1e-12);
    }

    #[test]
    fn duality_holds_with_loops(seed in 0u64..200) {
        let mut rng = seeded(seed);
        let p = random_program(&mut rng, 1, 4, true);
        let sig = p.signature().clone();
        let rho = random_state(&mut rng, &sig);
        let post = random_effect(&mut rng, &sig);
        let r = p.duality_check(&rho, &post, LoopPolicy::default(), 1e-9).unwrap();
        prop_assert!(r.holds, "{}", r.discrepancy);
    }

    #[test]
    fn preconditions_are_subunital_effects(seed in 0u64..200, qubits in 1usize..=2) {
        let mut rng = seeded(seed);
        let p = random_program(&mut rng, qubits, 5, false);
        let one = AlgebraElement::unit(p.signature());
        let w = p.wp(&one, LoopPolicy::default(), 1e-9).unwrap();
        prop_assert!(w.effect.element().is_effect(1e-9));
        let laws = p.check_wp_laws(&mut rng, 6, 1e-9).unwrap();
        prop_assert!(laws.all_passed(), "{}", laws);
    }

    #[test]
    fn loop_free_programs_round_trip_through_wp(seed in 0u64..100) {
        let mut rng = seeded(seed);
        let p = random_program(&mut rng, 1, 4, false);
        prop_assert!(p.correspondence_roundtrip(1e-9).unwrap().holds);
    }

    #[test]
    fn choice_mixes_preconditions(num in 0i64..=8) {
        let p = rat(num, 8);
        let prog = QuantumProgram::parse(&format!("(choice {p} (unitary X) skip)"), None).unwrap();
        let post = AlgebraElement::single(gates::ket0_proj());
        let w = prog.wp(&post, LoopPolicy::default(), 1e-9).unwrap();
        let x = num as f64 / 8.0;
        let expected = AlgebraElement::single(gates::ket1_proj().scale_real(x)).add(&AlgebraElement::single(gates::ket0_proj().scale_real(1.0 - x)));
        prop_assert!(w.effect.element().max_abs_diff(&expected) < 1e-12);
    }
}

#[test]
fn coin_loop_converges_geometrically() {
    let p = coin_loop();
    let one = AlgebraElement::unit(p.signature());
    let mut prev = 1.0;
    for k in [5, 10, 20] {
        let w = p.wp(&one, LoopPolicy { max_iterations: k, ..LoopPolicy::default() }, 1e-9).unwrap();
        let dev = w.effect.element().max_abs_diff(&one);
        assert!(dev < prev);
        assert!(!w.converged);
        prev = dev;
    }
}

#[test]
fn non_terminating_loop_has_zero_precondition() {
    let guard = Guard { exit: items(vec![gates::ket1_proj()]), cont: items(vec![gates::ket0_proj()]) };
    let prog = QuantumProgram::new(AlgebraSignature::qubit(), Program::while_loop(guard, Program::Skip)).unwrap();
    let w = prog.wp(&AlgebraElement::unit(&AlgebraSignature::qubit()), LoopPolicy::default(), 1e-9).unwrap();
    let expected = AlgebraElement::single(gates::ket1_proj());
    assert!(w.effect.element().max_abs_diff(&expected) < 1e-12);
}

#[test]
fn malformed_programs_are_rejected() {
    assert!(matches!(QuantumProgram::parse("(unitary K1)", None), Err(WpError::NotUnitary { .. })));
    assert!(matches!(QuantumProgram::parse("(choice 3/2 skip skip)", None), Err(WpError::BadProbability(_)) | Err(WpError::Parse { .. })));
    assert!(QuantumProgram::parse("", None).is_err());
}
