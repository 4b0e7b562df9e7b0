//! End-to-end acceptance run. Prints one line per criterion and exits with a
//! nonzero status if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use qdomain::counterexamples::{
    chain_member, check_upper_bound, ell2_closed_form, ell2_truncation_demo, no_least_upper_bound_witness,
    PiecewiseLinear,
};
use qdomain::cpmaps::{
    lub_monotone_maps, loewner_leq_maps, random_kraus_map, MapLubPolicy, OrderMode, TransferMatrix,
};
use qdomain::effect::{
    check_homomorphism, check_laws, default_scalars, matrix_downset_sample, matrix_effect_sample, rat,
    tilde_correspondence, to_f64, unit_interval_downset_sample, unit_interval_sample, DownsetAlgebra,
    FiniteEffectAlgebra, HomMode, LawConfig, LawMode, MatrixEffects, NonNegativeRationals, Rational, Tamper,
    Tampered, TruncatedUnitInterval, UnitInterval,
};
use qdomain::matrix::{gates, hermitian_eigen, inner, operator_norm, ComplexMatrix};
use qdomain::order::{function_poset, monotone_tables, posets_up_to_iso};
use qdomain::random::{self, seeded};
use qdomain::report::LawReport;
use qdomain::subdist::check_monad_laws;
use qdomain::wp::{coin_loop, random_program, LoopPolicy, Program, QuantumProgram};
use qdomain::wstar::{
    bicommutant_check, commutant, lub_monotone_sequence, random_effect, random_effect_above, random_state,
    AlgebraElement, AlgebraSignature, LubPolicy,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ensure_report(label: &str, r: &LawReport) -> Result<(), String> {
    ensure(r.all_passed(), || format!("{label}:\n{}", LawReport { checks: r.failures().into_iter().cloned().collect() }))
}

fn ensure_caught(label: &str, r: &LawReport, check: &str) -> Result<(), String> {
    let c = r.get(check).ok_or_else(|| format!("{label}: no check {check}"))?;
    ensure(!c.passed() && c.witness.is_some(), || format!("{label}: {check} not detected"))
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:.0?}"))
}

// 1. Algebra law suites.
fn algebra_laws() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(101);
    let exact = LawConfig::exhaustive();

    let unit = unit_interval_sample(&mut rng, 32);
    ensure_report("[0,1]", &check_laws(&UnitInterval, &unit, LawMode::EMod, &exact))?;
    let mut wide = unit.clone();
    wide.extend([rat(3, 2), rat(5, 1), rat(17, 3)]);
    ensure_report("[0,inf)", &check_laws(&NonNegativeRationals, &wide, LawMode::GeMod, &exact))?;
    let half = rat(1, 2);
    let down = DownsetAlgebra::new(UnitInterval, half.clone());
    ensure_report("down(1/2)", &check_laws(&down, &unit_interval_downset_sample(&unit, &half), LawMode::EMod, &exact))?;
    for t in [FiniteEffectAlgebra::chain(4), FiniteEffectAlgebra::chain(6), FiniteEffectAlgebra::boolean(3)] {
        ensure_report("finite table", &check_laws(&t, &t.carrier(), LawMode::Ea, &exact))?;
    }

    let mut matrix_checks = 0;
    for sig in [AlgebraSignature::qubit(), AlgebraSignature::new(vec![2, 1]).unwrap()] {
        let m = MatrixEffects::new(sig.clone(), 1e-9);
        let sample = matrix_effect_sample(&mut rng, &sig, 64);
        let r = check_laws(&m, &sample, LawMode::EMod, &LawConfig::sampled(7));
        matrix_checks += r.checks.len();
        ensure_report(&format!("[0,1]_{sig}"), &r)?;
        let t = AlgebraElement::scalar(&sig, 0.5);
        let dm = DownsetAlgebra::new(m, t.clone());
        ensure_report("matrix downset", &check_laws(&dm, &matrix_downset_sample(&sample, &t), LawMode::Ea, &LawConfig::sampled(8)))?;
    }

    let table = FiniteEffectAlgebra::boolean(2);
    let broken = table.without_sum(1, 2);
    ensure_caught("dropped sum", &check_laws(&broken, &broken.carrier(), LawMode::Ea, &exact), "pcm/commutativity")?;
    let small = unit_interval_sample(&mut rng, 20);
    let halved = Tampered { base: UnitInterval, tamper: Tamper::HalvedPerp };
    ensure_caught("halved perp", &check_laws(&halved, &small, LawMode::Ea, &exact), "ea/orthocomplement")?;
    let squared = Tampered { base: UnitInterval, tamper: Tamper::SquaredScalar };
    ensure_caught("squared scalar", &check_laws(&squared, &small, LawMode::EMod, &exact), "module/scalar-sum")?;
    ensure_caught("truncated sum", &check_laws(&TruncatedUnitInterval, &small, LawMode::Gea, &exact), "gea/cancellation")?;
    let z3 = FiniteEffectAlgebra::cyclic(3);
    ensure_caught("Z/3", &check_laws(&z3, &z3.carrier(), LawMode::Gea, &exact), "gea/positivity")?;

    let scalars = default_scalars();
    let halve = |x: &Rational| x * rat(1, 2);
    ensure_report("halving as GEA map", &check_homomorphism(halve, &UnitInterval, &UnitInterval, &small, HomMode::Gea, &scalars))?;
    ensure_caught("halving as EA map", &check_homomorphism(halve, &UnitInterval, &UnitInterval, &small, HomMode::Ea, &scalars), "hom/unit")?;
    let tilde = tilde_correspondence(halve, &UnitInterval, &UnitInterval, &small, true);
    ensure(tilde.consistent() && tilde.tilde_ea.all_passed(), || "tilde correspondence".into())?;

    within(Duration::from_secs(5), start)?;
    Ok(format!("{matrix_checks} matrix checks, 5 negative controls caught"))
}

// 2. Subdistribution monad.
fn monad_laws() -> Outcome {
    let mut rng = seeded(202);
    let r = check_monad_laws(&mut rng, 200, 5);
    ensure_report("monad", &r)?;
    for law in ["monad/associativity", "total/round-trip", "wp/round-trip"] {
        ensure(r.get(law).is_some_and(|c| c.passed()), || format!("{law} missing"))?;
    }
    Ok(format!("{} laws over 200 instances", r.checks.len()))
}

// 3. Monotone limits of effects and maps.
fn effect_sequence<R: Rng>(rng: &mut R, sig: &AlgebraSignature, steps: usize) -> Vec<AlgebraElement> {
    let mut e = random_effect(rng, sig).scale_real(0.25);
    let mut seq = vec![e.clone()];
    for k in 0..steps {
        let w = 0.5f64.powi(k as i32 + 1);
        e = e.map(|m| m + &random::headroom_increment(rng, m).scale_real(w));
        seq.push(e.clone());
    }
    seq
}

fn lubs() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(303);
    let tol = 1e-9;
    let policy = LubPolicy::default();
    let sigs = [AlgebraSignature::matrix_algebra(4), AlgebraSignature::new(vec![2, 2]).unwrap()];
    for i in 0..100 {
        let sig = &sigs[i % 2];
        let seq = effect_sequence(&mut rng, sig, 60);
        let lub = lub_monotone_sequence(seq.clone(), policy).map_err(|e| format!("sequence {i}: {e}"))?.lub;
        ensure(lub.is_effect(tol), || format!("sequence {i}: lub is not an effect"))?;
        for (k, x) in seq.iter().enumerate() {
            ensure(x.loewner_leq(&lub, tol).unwrap(), || format!("sequence {i}: member {k} not below lub"))?;
        }
        let last = seq.last().unwrap();
        for j in 0..8 {
            let u = if j == 0 { AlgebraElement::unit(sig) } else { random_effect_above(&mut rng, last) };
            ensure(lub.loewner_leq(&u, tol).unwrap(), || format!("sequence {i}: lub above upper bound {j}"))?;
        }
    }

    let map_sigs = [AlgebraSignature::qubit(), AlgebraSignature::new(vec![2, 1]).unwrap()];
    let mut worst_comp: f64 = 0.0;
    for i in 0..20 {
        let sig = &map_sigs[i % 2];
        let mut f = TransferMatrix::zero(sig, sig);
        let mut seq = vec![f.clone()];
        for j in 0..50 {
            let g = random_kraus_map(&mut rng, sig, sig, 2, true).transfer();
            f = f.add(&g.scale(0.5f64.powi(j + 2))).unwrap();
            seq.push(f.clone());
        }
        let lub = |s: Vec<TransferMatrix>| lub_monotone_maps(s, MapLubPolicy::default()).map(|m| m.transfer);
        let top = lub(seq.clone()).map_err(|e| format!("map sequence {i}: {e}"))?;
        ensure(top.choi_test(tol).completely_positive && top.is_subunital(tol), || {
            format!("map sequence {i}: lub is not a subunital CP map")
        })?;
        for (k, x) in seq.iter().enumerate() {
            let v = loewner_leq_maps(x, &top, tol, OrderMode::Choi).unwrap();
            ensure(v.holds, || format!("map sequence {i}: member {k} not below lub"))?;
        }
        let last = seq.last().unwrap();
        for j in 0..4 {
            let s = rng.gen_range(0.0..0.5);
            let u = last.add(&random_kraus_map(&mut rng, sig, sig, 1, false).transfer().scale(s)).unwrap();
            let v = loewner_leq_maps(&top, &u, tol, OrderMode::Choi).unwrap();
            ensure(v.holds, || format!("map sequence {i}: lub above upper bound {j}"))?;
        }
        let unital = rng.gen_bool(0.5);
        let h = random_kraus_map(&mut rng, sig, sig, 2, unital).transfer();
        let post = lub(seq.iter().map(|x| x.then(&h).unwrap()).collect()).unwrap();
        let pre = lub(seq.iter().map(|x| h.then(x).unwrap()).collect()).unwrap();
        let d = post.distance(&top.then(&h).unwrap()).max(pre.distance(&h.then(&top).unwrap()));
        worst_comp = worst_comp.max(d);
        ensure(d <= 1e-8, || format!("map sequence {i}: composition moves the lub by {d:.2e}"))?;
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!("100 effect and 20 map sequences, composition error {worst_comp:.1e}"))
}

// 4. Quantum weakest preconditions.
fn wp_engine() -> Outcome {
    let mut rng = seeded(404);
    let policy = LoopPolicy::default();
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let qubits = rng.gen_range(1..=3);
        let depth = rng.gen_range(1..=5);
        let p = random_program(&mut rng, qubits, depth, false);
        let sig = p.signature().clone();
        let rho = random_state(&mut rng, &sig);
        let post = random_effect(&mut rng, &sig);
        let r = p.duality_check(&rho, &post, policy, 1e-9).map_err(|e| format!("program {i}: {e}"))?;
        worst = worst.max(r.discrepancy);
        ensure(r.discrepancy <= 1e-9, || format!("program {i}: discrepancy {:.2e}\n{p}", r.discrepancy))?;
    }

    let coin = coin_loop();
    let one = AlgebraElement::unit(coin.signature());
    let capped = LoopPolicy { max_iterations: 30, ..policy };
    let w = coin.wp(&one, capped, 1e-9).map_err(|e| e.to_string())?;
    // Exit probability after k passes is 1 - 2^{-k}.
    let oracle: f64 = (1..=w.iterations as i32).map(|k| 0.5f64.powi(k)).sum();
    let dev = w.effect.element().max_abs_diff(&one);
    ensure(w.iterations <= 30 && dev <= 1e-6, || format!("coin loop: {} iterations, deviation {dev:.2e}", w.iterations))?;
    ensure((1.0 - dev - oracle).abs() <= 1e-6, || format!("coin loop disagrees with the series: {dev:.2e}"))?;

    let mut comp: f64 = 0.0;
    for i in 0..100 {
        let qubits = rng.gen_range(1..=2);
        let a = random_program(&mut rng, qubits, 3, false);
        let b = random_program(&mut rng, qubits, 3, false);
        let sig = a.signature().clone();
        let ab = QuantumProgram::new(sig.clone(), Program::seq(a.body().clone(), b.body().clone())).unwrap();
        let q = random_effect(&mut rng, &sig);
        let whole = ab.wp(&q, policy, 1e-9).unwrap();
        let inner_wp = b.wp(&q, policy, 1e-9).unwrap();
        let outer = a.wp(inner_wp.effect.element(), policy, 1e-9).unwrap();
        let d = whole.effect.element().max_abs_diff(outer.effect.element());
        comp = comp.max(d);
        ensure(d <= 1e-10, || format!("pair {i}: seq compositionality off by {d:.2e}"))?;
    }
    Ok(format!("max duality {worst:.1e}, coin loop {} iterations, seq {comp:.1e}", w.iterations))
}

// 5. Commutants.
fn commutants() -> Outcome {
    let cases = [
        (vec![ComplexMatrix::identity(2)], 4),
        (vec![ComplexMatrix::diag(&[1.0, 2.0])], 2),
        ((0..2).flat_map(|a| (0..2).map(move |b| ComplexMatrix::unit(2, a, b))).collect(), 1),
        (vec![gates::pauli_x(), gates::pauli_z()], 1),
    ];
    for (gens, want) in &cases {
        let d = commutant(2, gens).unwrap().dim();
        ensure(d == *want, || format!("commutant dim {d}, expected {want}"))?;
    }

    let mut rng = seeded(505);
    let mut dims = std::collections::BTreeSet::new();
    for i in 0..50 {
        let gens: Vec<ComplexMatrix> = match i % 3 {
            0 => (0..rng.gen_range(1..=2)).map(|_| random::complex_matrix(&mut rng, 3, 3)).collect(),
            1 => {
                let u = random::unitary(&mut rng, 3);
                (0..rng.gen_range(1..=2))
                    .map(|_| {
                        let mut m = ComplexMatrix::zeros(3, 3);
                        let a = random::complex_matrix(&mut rng, 2, 2);
                        for r in 0..2 {
                            for c in 0..2 {
                                m[(r, c)] = a[(r, c)];
                            }
                        }
                        m[(2, 2)] = random::complex(&mut rng);
                        &(&u * &m) * &u.adjoint()
                    })
                    .collect()
            }
            _ => {
                let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                vec![ComplexMatrix::diag(&a)]
            }
        };
        let r = bicommutant_check(3, &gens, true, 1e-8).map_err(|e| format!("set {i}: {e}"))?;
        ensure(r.equal(1e-8), || {
            format!("set {i}: span {} vs bicommutant {}, residual {:.2e}", r.span_dim, r.bicommutant_dim, r.containment_residual)
        })?;
        dims.insert(r.span_dim);
    }
    Ok(format!("50 sets, algebra dims {dims:?}"))
}

// 6. Counterexamples.
fn random_rational<R: Rng>(rng: &mut R, lo: i64, hi: i64) -> Rational {
    let den = rng.gen_range(1..=12);
    rat(rng.gen_range(lo * den..=hi * den), den)
}

fn random_upper_bound<R: Rng>(rng: &mut R) -> PiecewiseLinear {
    let mut xs: Vec<Rational> = (0..rng.gen_range(0..4)).map(|_| rat(rng.gen_range(1..50), 100)).collect();
    let right: Vec<Rational> = (0..rng.gen_range(0..4)).map(|_| rat(rng.gen_range(51..100), 100)).collect();
    xs.extend(right);
    xs.extend([Rational::zero(), rat(1, 2), Rational::one()]);
    xs.sort();
    xs.dedup();
    let pts = xs
        .into_iter()
        .map(|x| {
            let y = if x < rat(1, 2) { random_rational(rng, 0, 2) } else { Rational::one() + random_rational(rng, 0, 2) };
            (x, y)
        })
        .collect();
    PiecewiseLinear::new(pts).unwrap()
}

/// Squared distance from `e_1` to span{e_1 + e_k / k}, by exact normal equations.
fn ell2_oracle(n: usize) -> f64 {
    let m = n - 1;
    let col = |k: usize, i: usize| -> Rational {
        if i == 0 {
            Rational::one()
        } else if i == k + 1 {
            rat(1, (k + 2) as i64)
        } else {
            Rational::zero()
        }
    };
    let mut a: Vec<Vec<Rational>> = (0..m)
        .map(|j| {
            let mut row: Vec<Rational> = (0..m).map(|k| (0..n).map(|i| col(j, i) * col(k, i)).sum()).collect();
            row.push(col(j, 0));
            row
        })
        .collect();
    for p in 0..m {
        let pivot = a[p][p].clone();
        for c in p..=m {
            a[p][c] = &a[p][c] / &pivot;
        }
        for r in 0..m {
            if r != p && !a[r][p].is_zero() {
                let f = a[r][p].clone();
                for c in p..=m {
                    let v = &f * &a[p][c];
                    a[r][c] -= v;
                }
            }
        }
    }
    let coef: Vec<Rational> = a.iter().map(|row| row[m].clone()).collect();
    let residual: Rational = (0..n)
        .map(|i| {
            let proj: Rational = (0..m).map(|k| &coef[k] * col(k, i)).sum();
            let e = if i == 0 { Rational::one() } else { Rational::zero() };
            let d = e - proj;
            &d * &d
        })
        .sum();
    to_f64(&residual).sqrt()
}

fn counterexamples() -> Outcome {
    let mut rng = seeded(606);
    let chain: Vec<PiecewiseLinear> = (0..=40).map(|n| chain_member(n).unwrap()).collect();
    for i in 0..20 {
        let g = random_upper_bound(&mut rng);
        check_upper_bound(&g).map_err(|e| format!("generator {i}: {e}"))?;
        let delta = rat(1, rng.gen_range(2..=6));
        let w = no_least_upper_bound_witness(&g, &delta).map_err(|e| format!("bound {i}: {e}"))?;
        check_upper_bound(&w.improved).map_err(|e| format!("bound {i}: witness {e}"))?;
        ensure(chain.iter().all(|f| f.leq(&w.improved)), || format!("bound {i}: witness misses a chain member"))?;
        ensure(w.improved.leq(&g), || format!("bound {i}: witness not below g"))?;
        let gap = g.eval(&w.point) - w.improved.eval(&w.point);
        ensure(gap.is_positive() && gap == w.gap, || format!("bound {i}: no strict gap"))?;
    }

    let mut prev = f64::INFINITY;
    for n in 2..=32 {
        let row = ell2_truncation_demo(n, 1e-9).map_err(|e| e.to_string())?;
        let closed = ell2_closed_form(n);
        let oracle = ell2_oracle(n);
        ensure((row.distance - closed).abs() <= 1e-12 && (closed - oracle).abs() <= 1e-12, || {
            format!("N={n}: distance {} closed form {closed} oracle {oracle}", row.distance)
        })?;
        ensure(row.distance < prev, || format!("N={n}: distance did not decrease"))?;
        ensure(!row.p1_leq_join, || format!("N={n}: p1 below the join"))?;
        prev = row.distance;
    }
    Ok(format!("20 bounds improved, ell2 distance at N=32 is {prev:.6}"))
}

// 7. Eigensolver.
fn eigensolver() -> Outcome {
    let mut rng = seeded(707);
    let (mut rec, mut orth): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let n = 1 + i % 16;
        let scale = 10f64.powi(rng.gen_range(-3..=3));
        let m = random::hermitian(&mut rng, n).scale_real(scale);
        let e = hermitian_eigen(&m, 1e-12).map_err(|e| format!("matrix {i}: {e}"))?;
        let err = (&e.reconstruct() - &m).max_abs() / operator_norm(&m).max(1.0);
        let mut o: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { 1.0 } else { 0.0 };
                o = o.max((inner(&e.vector(a), &e.vector(b)) - Complex64::new(want, 0.0)).norm());
            }
        }
        let sorted = e.eigenvalues.windows(2).all(|w| w[0] <= w[1]);
        ensure(err <= 1e-10 && o <= 1e-10 && sorted, || format!("matrix {i} (n={n}): reconstruction {err:.2e}, orthonormality {o:.2e}"))?;
        rec = rec.max(err);
        orth = orth.max(o);
    }
    Ok(format!("reconstruction {rec:.1e}, orthonormality {orth:.1e}"))
}

// 8. Finite posets.
fn finite_order() -> Outcome {
    let mut posets = Vec::new();
    for n in 1..=5 {
        for p in posets_up_to_iso(n) {
            let wb = p.way_below().map_err(|e| e.to_string())?;
            ensure(wb.pairs == p.pairs(), || format!("way-below differs from order on\n{p}"))?;
            if n <= 4 {
                posets.push(p);
            }
        }
    }
    let mut largest = 0;
    for p in &posets {
        for q in &posets {
            let (f, tables) = function_poset(p, q);
            ensure(tables.len() == monotone_tables(p, q).len() && f.len() == tables.len(), || "function poset size".into())?;
            // Pointwise order, checked directly from the tables.
            for (i, s) in tables.iter().enumerate() {
                for (j, t) in tables.iter().enumerate() {
                    let pointwise = s.iter().zip(t).all(|(&a, &b)| q.leq(a, b));
                    ensure(f.leq(i, j) == pointwise, || "function poset order is not pointwise".into())?;
                }
            }
            ensure(f.is_dcpo(), || format!("[{p} -> {q}] is not a dcpo"))?;
            largest = largest.max(f.len());
        }
    }
    Ok(format!("{} posets of size <= 4 squared, largest function poset {largest}", posets.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("algebra law suites", algebra_laws),
        ("subdistribution monad", monad_laws),
        ("monotone limits", lubs),
        ("wp engine", wp_engine),
        ("commutants", commutants),
        ("counterexamples", counterexamples),
        ("eigensolver", eigensolver),
        ("finite order", finite_order),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("{} {name} ... PASS ({t:.2?}; {detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("{} {name} ... FAIL ({t:.2?}; {why})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
