use proptest::prelude::*;

use qdomain::order::{function_poset, monotone_tables, FinitePoset, MonotoneMap};

/// A random poset: a random relation on `0..n` compatible with index order,
/// closed transitively.
fn random_poset(n: usize, bits: u64) -> FinitePoset {
    let mut leq = vec![vec![false; n]; n];
    let mut k = 0;
    for i in 0..n {
        leq[i][i] = true;
        for j in (i + 1)..n {
            leq[i][j] = bits >> (k % 64) & 1 == 1;
            k += 1;
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if leq[i][m] && leq[m][j] {
                    leq[i][j] = true;
                }
            }
        }
    }
    let names = (0..n).map(|i| format!("p{i}")).collect();
    FinitePoset::from_matrix(names, leq).unwrap()
}

proptest! {
    #[test]
    fn text_round_trip(n in 1usize..7, bits in any::<u64>()) {
        let p = random_poset(n, bits);
        let back = FinitePoset::parse(&p.to_text()).unwrap();
        prop_assert_eq!(back.pairs(), p.pairs());
    }

    #[test]
    fn finite_posets_are_algebraic_dcpos(n in 1usize..7, bits in any::<u64>()) {
        let p = random_poset(n, bits);
        prop_assert!(p.is_dcpo());
        prop_assert!(p.directed_subsets_have_maxima().unwrap());
        prop_assert_eq!(p.way_below().unwrap().pairs, p.pairs());
    }

    #[test]
    fn monotone_maps_are_scott_continuous(n in 1usize..5, m in 1usize..4, a in any::<u64>(), b in any::<u64>(), pick in any::<usize>()) {
        let p = random_poset(n, a);
        let q = random_poset(m, b);
        let tables = monotone_tables(&p, &q);
        prop_assert!(!tables.is_empty());
        let t = tables[pick % tables.len()].clone();
        let f = MonotoneMap::new(p, q, t).unwrap();
        prop_assert!(f.is_scott_continuous().unwrap());
    }

    #[test]
    fn function_posets_are_dcpos(n in 1usize..4, m in 1usize..4, a in any::<u64>(), b in any::<u64>()) {
        let p = random_poset(n, a);
        let q = random_poset(m, b);
        let (f, tables) = function_poset(&p, &q);
        prop_assert_eq!(f.len(), tables.len());
        prop_assert!(f.is_dcpo());
    }
}

#[test]
fn chain_and_diamond() {
    let c = FinitePoset::chain(4);
    assert_eq!(c.bottom(), Some(0));
    assert_eq!(c.top(), Some(3));
    assert_eq!(c.atoms().len(), 1);
    let d = FinitePoset::diamond();
    assert_eq!(d.atoms().len(), 2);
    let (f, _) = function_poset(&FinitePoset::chain(2), &FinitePoset::chain(2));
    assert_eq!(f.len(), 3);
}

#[test]
fn non_monotone_table_is_rejected() {
    let c = FinitePoset::chain(2);
    assert!(MonotoneMap::new(c.clone(), c, vec![1, 0]).is_err());
}

#[test]
fn parse_reports_unknown_elements() {
    assert!(FinitePoset::parse("elem a\nleq a b\n").is_err());
    assert!(FinitePoset::parse("elem a\nelem b\nleq a b\nleq b a\n").is_err());
}
