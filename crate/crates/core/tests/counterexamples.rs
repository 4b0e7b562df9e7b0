use num_traits::{One, Zero};
use proptest::prelude::*;

use qdomain::counterexamples::{
    chain_member, check_upper_bound, no_least_upper_bound_witness, projection_lattice_ops, CounterexampleError,
    PiecewiseLinear, Projection,
};
use qdomain::effect::{rat, Rational};
use qdomain::random::{self, seeded};

fn pl() -> impl Strategy<Value = PiecewiseLinear> {
    prop::collection::vec((1i64..20, 0i64..=40), 0..5).prop_map(|inner| {
        let mut xs: Vec<Rational> = inner.iter().map(|&(x, _)| rat(x, 20)).collect();
        xs.extend([Rational::zero(), Rational::one()]);
        xs.sort();
        xs.dedup();
        let pts = xs.into_iter().enumerate().map(|(i, x)| (x, rat(inner.get(i).map_or(7, |p| p.1), 20))).collect();
        PiecewiseLinear::new(pts).unwrap()
    })
}

proptest! {
    #[test]
    fn min_and_max_are_lattice_operations(f in pl(), g in pl()) {
        let lo = f.min(&g);
        let hi = f.max(&g);
        prop_assert!(lo.leq(&f) && lo.leq(&g));
        prop_assert!(f.leq(&hi) && g.leq(&hi));
        for k in 0..=40 {
            let x = rat(k, 40);
            prop_assert_eq!(lo.eval(&x), f.eval(&x).min(g.eval(&x)));
            prop_assert_eq!(hi.eval(&x), f.eval(&x).max(g.eval(&x)));
        }
    }

    #[test]
    fn text_round_trip(f in pl()) {
        prop_assert_eq!(PiecewiseLinear::parse(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn chain_is_increasing(n in 0u32..40) {
        prop_assert!(chain_member(n).unwrap().leq(&chain_member(n + 1).unwrap()));
    }

    #[test]
    fn every_upper_bound_can_be_lowered(c in 1i64..5, d in 2i64..9) {
        let g = PiecewiseLinear::constant(rat(c, 1));
        let w = no_least_upper_bound_witness(&g, &rat(1, d)).unwrap();
        prop_assert!(check_upper_bound(&w.improved).is_ok());
        prop_assert!(w.improved.leq(&g));
        prop_assert!(w.gap > Rational::zero());
    }

    #[test]
    fn projection_lattice_laws(seed in 0u64..200) {
        let mut rng = seeded(seed);
        let v = random::unit_vector(&mut rng, 3);
        let w = random::unit_vector(&mut rng, 3);
        let p = Projection::onto_span(3, &[v.clone()]).unwrap();
        let q = Projection::onto_span(3, &[w]).unwrap();
        let ops = projection_lattice_ops(&p, &q, 1e-9).unwrap();
        prop_assert_eq!(ops.meet.rank(), 0);
        prop_assert_eq!(ops.join.rank(), 2);
        prop_assert!(p.leq(&ops.join, 1e-9).unwrap() && q.leq(&ops.join, 1e-9).unwrap());
        prop_assert!(ops.meet.leq(&p, 1e-9).unwrap());
        prop_assert_eq!(p.meet(&p).unwrap().rank(), 1);
    }
}

#[test]
fn lower_chain_members_are_not_upper_bounds() {
    for n in 0..5 {
        assert!(matches!(check_upper_bound(&chain_member(n).unwrap()), Err(CounterexampleError::NotUpperBound { .. })));
    }
    assert!(matches!(chain_member(41), Err(CounterexampleError::IndexTooLarge(41))));
}

#[test]
fn first_knees() {
    let f1 = chain_member(1).unwrap();
    assert_eq!(f1.eval(&rat(3, 4)), Rational::one());
    assert_eq!(f1.eval(&rat(5, 8)), rat(1, 2));
    let f0 = chain_member(0).unwrap();
    assert_eq!(f0.eval(&rat(3, 4)), rat(1, 2));
}
