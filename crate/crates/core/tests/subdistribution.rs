use std::collections::BTreeSet;

use num_traits::{One, Zero};
use proptest::prelude::*;

use qdomain::effect::rat;
use qdomain::random::seeded;
use qdomain::subdist::{
    arrow_from_wp, check_unit_maps, check_wp_homomorphism, coordinate_homs, named_carrier, random_arrow,
    random_predicate, random_subdistribution, wp_discrete, FuzzyPredicate, KleisliArrow, PredicateSpace,
    SubDistError, SubDistribution,
};

fn carrier(n: usize) -> BTreeSet<String> {
    named_carrier(n)
}

proptest! {
    #[test]
    fn text_round_trip(seed in 0u64..500, n in 1usize..6) {
        let mut rng = seeded(seed);
        let d = random_subdistribution(&mut rng, &carrier(n));
        prop_assert_eq!(SubDistribution::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn total_lift_round_trips(seed in 0u64..500, n in 1usize..6) {
        let mut rng = seeded(seed);
        let d = random_subdistribution(&mut rng, &carrier(n));
        let t = d.to_total();
        prop_assert!(t.is_total());
        prop_assert_eq!(SubDistribution::from_total(&t), d);
    }

    #[test]
    fn push_preserves_expectation(seed in 0u64..300, n in 1usize..5, m in 1usize..5) {
        let mut rng = seeded(seed);
        let (x, y) = (carrier(n), carrier(m).into_iter().map(|s| format!("y{s}")).collect::<BTreeSet<_>>());
        let f = random_arrow(&mut rng, &x, &y);
        let d = random_subdistribution(&mut rng, &x);
        let q = random_predicate(&mut rng, &y);
        let pre = wp_discrete(&f, &q).unwrap();
        prop_assert_eq!(d.expect(&pre), f.push(&d).unwrap().expect(&q));
    }

    #[test]
    fn wp_determines_the_arrow(seed in 0u64..300, n in 1usize..5) {
        let mut rng = seeded(seed);
        let x = carrier(n);
        let f = random_arrow(&mut rng, &x, &x);
        let back = arrow_from_wp(&x, &x, |q: &FuzzyPredicate<String>| wp_discrete(&f, q)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn wp_is_a_module_map(seed in 0u64..100) {
        let mut rng = seeded(seed);
        let x = carrier(3);
        let f = random_arrow(&mut rng, &x, &x);
        let sample: Vec<_> = (0..6).map(|_| random_predicate(&mut rng, &x)).collect();
        let r = check_wp_homomorphism(&f, &sample, &[rat(0, 1), rat(1, 3), rat(1, 1)]);
        prop_assert!(r.all_passed(), "{}", r);
    }
}

#[test]
fn mass_above_one_is_rejected() {
    let x = carrier(2);
    let e = SubDistribution::new(x, [("x0".to_string(), rat(2, 3)), ("x1".to_string(), rat(1, 2))]).unwrap_err();
    assert!(matches!(e, SubDistError::MassExceedsOne(_)));
}

#[test]
fn identity_arrow_is_neutral() {
    let mut rng = seeded(9);
    let x = carrier(4);
    let f = random_arrow(&mut rng, &x, &x);
    let id = KleisliArrow::identity(x.clone());
    assert_eq!(id.then(&f).unwrap(), f);
    assert_eq!(f.then(&id).unwrap(), f);
}

#[test]
fn deficit_is_probability_of_deadlock() {
    let d = SubDistribution::parse("a 1/4\nb 1/4\n").unwrap();
    assert_eq!(d.deficit(), rat(1, 2));
    let one = FuzzyPredicate::constant(d.carrier(), rat(1, 1)).unwrap();
    assert_eq!(d.expect(&one), d.mass());
    assert!(SubDistribution::<String>::zero(d.carrier().clone()).mass().is_zero());
    assert!(SubDistribution::unit("a".to_string(), d.carrier().clone()).unwrap().mass().is_one());
}

#[test]
fn coordinates_are_predicate_homs() {
    let mut rng = seeded(10);
    let x = carrier(3);
    let space = PredicateSpace::new(x.clone());
    let sample: Vec<_> = (0..5).map(|_| random_predicate(&mut rng, &x)).collect();
    let r = check_unit_maps(&space, &sample, &coordinate_homs(&x), &[rat(1, 2), rat(1, 1)]);
    assert!(r.all_passed(), "{r}");
}
