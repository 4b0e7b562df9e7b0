//! One function per subcommand. Each loads its inputs, runs the library
//! checks and returns an [`Outcome`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qdomain::counterexamples::{
    chain_member, check_upper_bound, ell2_closed_form, ell2_truncation_demo, no_least_upper_bound_witness,
    projection_lattice_ops, PiecewiseLinear, Projection,
};
use qdomain::cpmaps::{lub_monotone_maps, loewner_leq_maps, KrausMap, MapLubPolicy, OrderMode};
use qdomain::effect::{
    check_laws, default_scalars, matrix_effect_sample, parse_rational, rat, unit_interval_downset_sample,
    unit_interval_sample, DownsetAlgebra, FiniteEffectAlgebra, LawConfig, LawMode, MatrixEffects,
    NonNegativeRationals, UnitInterval,
};
use qdomain::matrix::{parse_matrices, parse_matrix};
use qdomain::order::{function_poset, DcpoStrategy, FinitePoset};
use qdomain::random::seeded;
use qdomain::report::{Check, LawReport};
use qdomain::subdist::{
    check_counit_maps, check_monad_laws, check_unit_maps, check_wp_homomorphism, coordinate_homs,
    evaluation_homs, named_carrier, random_arrow, random_predicate, random_subdistribution, PredicateSpace,
};
use qdomain::wp::{LoopPolicy, QuantumProgram, WpError};
use qdomain::wstar::{
    bicommutant_check, commutant as commutant_of, lub_monotone_sequence, AlgebraElement, AlgebraSignature,
    LubPolicy, NormalState, WstarError,
};
use serde_json::json;

use crate::output::{CliError, Outcome, RunConfig};

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(path, e))
}

/// Folds reports with identical check names into one check per name,
/// keeping the first failure.
fn merge(reports: Vec<LawReport>) -> LawReport {
    let mut by_name: BTreeMap<String, Check> = BTreeMap::new();
    for r in reports {
        for c in r.checks {
            match by_name.get(&c.name) {
                Some(old) if !old.passed() => {}
                _ => {
                    by_name.insert(c.name.clone(), c);
                }
            }
        }
    }
    LawReport {
        checks: by_name.into_values().collect(),
    }
}

fn summary(r: &LawReport) -> String {
    format!("{} checked, {} failed\n", r.checks.len(), r.failures().len())
}

pub fn laws_effect_algebra(cfg: &RunConfig, table: Option<&Path>, mode: LawMode, samples: usize) -> Result<Outcome> {
    let mut out = Outcome::new("laws effect-algebra");
    let exact = LawConfig::exhaustive();
    let sampled = LawConfig::sampled(cfg.seed);
    if let Some(path) = table {
        let t = FiniteEffectAlgebra::parse(&read(path)?).map_err(|e| CliError::input(path, e))?;
        out.report.extend(check_laws(&t, &t.carrier(), mode, &exact).prefixed("table/"));
        out.data = json!({ "elements": t.names() });
        out.text = format!("table with {} elements: {}\n", t.len(), t.names().join(" "));
        return Ok(out);
    }
    let mut rng = seeded(cfg.seed);
    let unit = unit_interval_sample(&mut rng, samples);
    out.report.extend(check_laws(&UnitInterval, &unit, LawMode::EMod, &sampled).prefixed("unit-interval/"));
    let mut wide = unit.clone();
    wide.extend([rat(3, 2), rat(7, 3), rat(5, 1)]);
    out.report.extend(check_laws(&NonNegativeRationals, &wide, LawMode::GeMod, &sampled).prefixed("non-negative-rationals/"));
    let half = rat(1, 2);
    let down = DownsetAlgebra::new(UnitInterval, half.clone());
    out.report.extend(
        check_laws(&down, &unit_interval_downset_sample(&unit, &half), LawMode::EMod, &sampled).prefixed("downset-half/"),
    );
    for (name, t) in [("chain4/", FiniteEffectAlgebra::chain(4)), ("boolean2/", FiniteEffectAlgebra::boolean(2))] {
        out.report.extend(check_laws(&t, &t.carrier(), LawMode::Ea, &exact).prefixed(name));
    }
    for (name, sig) in [("m2/", AlgebraSignature::qubit()), ("m2+c/", AlgebraSignature::new(vec![2, 1]).expect("valid"))] {
        let sample = matrix_effect_sample(&mut rng, &sig, samples);
        let m = MatrixEffects::new(sig, cfg.tol);
        out.report.extend(check_laws(&m, &sample, LawMode::EMod, &sampled).prefixed(name));
    }
    out.data = json!({ "samples": samples });
    out.text = summary(&out.report);
    Ok(out)
}

pub fn laws_discrete(cfg: &RunConfig, instances: usize, max_size: usize) -> Result<Outcome> {
    if max_size == 0 {
        return Err(CliError::Usage("--max-size must be at least 1".into()));
    }
    let mut out = Outcome::new("laws discrete");
    let mut rng = seeded(cfg.seed);
    out.report.extend(check_monad_laws(&mut rng, instances, max_size));

    let scalars = default_scalars();
    let mut homs = Vec::new();
    for n in 1..=max_size.min(4) {
        let x = named_carrier(n);
        let f = random_arrow(&mut rng, &x, &x);
        let preds: Vec<_> = (0..6).map(|_| random_predicate(&mut rng, &x)).collect();
        homs.push(check_wp_homomorphism(&f, &preds, &scalars).prefixed("wp-transformer/"));
        let space = PredicateSpace::new(x.clone());
        homs.push(check_unit_maps(&space, &preds, &coordinate_homs(&x), &scalars));
        let dists: Vec<_> = (0..6).map(|_| random_subdistribution(&mut rng, &x)).collect();
        homs.push(check_counit_maps(&mut rng, &x, &dists, &evaluation_homs(&preds), 32));
    }
    out.report.extend(merge(homs));
    out.data = json!({ "instances": instances, "max_size": max_size });
    out.text = summary(&out.report);
    Ok(out)
}

pub fn wp_run(cfg: &RunConfig, program: &Path, post: &Path, state: Option<&Path>, max_iterations: usize) -> Result<Outcome> {
    let mut out = Outcome::new("wp run");
    let q = AlgebraElement::parse(&read(post)?).map_err(|e| CliError::input(post, e))?;
    let p = QuantumProgram::parse(&read(program)?, Some(q.signature())).map_err(|e| CliError::input(program, e))?;
    let policy = LoopPolicy {
        max_iterations,
        ..LoopPolicy::default()
    };
    let w = p.wp(&q, policy, cfg.tol).map_err(|e| match e {
        WpError::NotEffect(_) | WpError::Wstar(_) => CliError::input(post, e),
        e => CliError::input(program, e),
    })?;
    out.report.push(Check::pass("wp/effect", "weakest precondition"));
    out.report.push(if w.converged {
        Check::pass("wp/loops-converged", "Kleene iteration")
    } else {
        Check::skip("wp/loops-converged", "Kleene iteration", format!("stopped after {} iterations, residual {:.3e}", w.iterations, w.residual))
    });
    let effect = w.effect.element();
    out.text = format!("precondition\n{}", effect.to_text());
    let mut data = json!({
        "precondition": effect.to_text(),
        "iterations": w.iterations,
        "residual": w.residual,
        "converged": w.converged,
    });
    if let Some(path) = state {
        let rho = AlgebraElement::parse(&read(path)?)
            .and_then(|e| NormalState::new(e, cfg.tol))
            .map_err(|e| CliError::input(path, e))?;
        let r = p.duality_check(&rho, &q, policy, cfg.tol).map_err(|e| CliError::input(path, e))?;
        out.report.push(if r.holds {
            Check::pass("wp/duality", "state and effect duality")
        } else {
            Check::fail("wp/duality", "state and effect duality", format!("discrepancy {:.3e}", r.discrepancy))
        });
        out.text.push_str(&format!(
            "pairing <rho, wp(q)> = {}\npairing <f_*(rho), q> = {}\n",
            r.precondition_pairing, r.state_pairing
        ));
        data["precondition_pairing"] = json!(r.precondition_pairing);
        data["state_pairing"] = json!(r.state_pairing);
        data["discrepancy"] = json!(r.discrepancy);
    }
    out.data = data;
    Ok(out)
}

fn load_map(path: &Path) -> Result<KrausMap> {
    KrausMap::parse(&read(path)?).map_err(|e| CliError::input(path, e))
}

pub fn order_check(cfg: &RunConfig, f: &Path, g: &Path, sampled: bool, samples: usize) -> Result<Outcome> {
    let mut out = Outcome::new("order check");
    let (fm, gm) = (load_map(f)?, load_map(g)?);
    let mode = if sampled {
        OrderMode::Sampled { samples, seed: cfg.seed }
    } else {
        OrderMode::Choi
    };
    let v = loewner_leq_maps(&fm.transfer(), &gm.transfer(), cfg.tol, mode).map_err(|e| CliError::input(g, e))?;
    let concept = "Löwner order on maps";
    out.report.push(if v.holds {
        Check::pass("order/leq", concept)
    } else {
        Check::fail("order/leq", concept, format!("{}; min eigenvalue {:.3e}", v.strength(), v.min_eigenvalue))
    });
    out.text = format!("f <= g: {} ({})\nmin eigenvalue {:e}\n", v.holds, v.strength(), v.min_eigenvalue);
    out.data = json!({
        "holds": v.holds,
        "mode": if sampled { "sampled" } else { "choi" },
        "strength": v.strength(),
        "min_eigenvalue": v.min_eigenvalue,
        "witness": v.witness,
    });
    Ok(out)
}

pub fn order_lub(cfg: &RunConfig, files: &[PathBuf], maps: bool, max_iterations: usize) -> Result<Outcome> {
    let mut out = Outcome::new("order lub");
    let concept = "least upper bound of a monotone sequence";
    if maps {
        let seq: Vec<_> = files.iter().map(|p| load_map(p).map(|m| m.transfer())).collect::<Result<_>>()?;
        let policy = MapLubPolicy {
            max_iterations,
            order_tol: cfg.tol,
            allow_unconverged: true,
            ..MapLubPolicy::default()
        };
        let lub = match lub_monotone_maps(seq.clone(), policy) {
            Ok(l) => l,
            Err(e) => {
                out.report.push(Check::fail("lub/monotone", concept, e.to_string()));
                return Ok(out);
            }
        };
        out.report.push(Check::pass("lub/monotone", concept));
        let low = seq.iter().position(|x| !loewner_leq_maps(x, &lub.transfer, cfg.tol, OrderMode::Choi).is_ok_and(|v| v.holds));
        out.report.push(Check::from_witness("lub/dominates", concept, low.map(|i| format!("member {i}"))));
        let cp = lub.transfer.choi_test(cfg.tol).completely_positive && lub.transfer.is_subunital(cfg.tol);
        out.report.push(Check::from_witness("lub/subunital-cp", concept, (!cp).then(|| "lub leaves the subunital CP maps".into())));
        let unit = lub
            .transfer
            .apply(&AlgebraElement::unit(lub.transfer.source()))
            .map_err(|e| CliError::input(&files[0], e))?;
        out.text = format!("lub(1)\n{}iterations {} residual {:e}\n", unit.to_text(), lub.iterations, lub.residual);
        out.data = json!({ "unit_image": unit.to_text(), "iterations": lub.iterations, "residual": lub.residual, "converged": lub.converged });
        return Ok(out);
    }
    let seq: Vec<AlgebraElement> = files
        .iter()
        .map(|p| read(p).and_then(|t| AlgebraElement::parse(&t).map_err(|e| CliError::input(p, e))))
        .collect::<Result<_>>()?;
    let policy = LubPolicy {
        max_iterations,
        order_tol: cfg.tol,
        ..LubPolicy::default()
    };
    let lub = match lub_monotone_sequence(seq.clone(), policy) {
        Ok(l) => l,
        Err(e @ (WstarError::OrderViolation { .. } | WstarError::Divergence { .. })) => {
            out.report.push(Check::fail("lub/monotone", concept, e.to_string()));
            return Ok(out);
        }
        Err(e) => return Err(CliError::input(&files[0], e)),
    };
    out.report.push(Check::pass("lub/monotone", concept));
    let low = seq.iter().position(|x| !x.loewner_leq(&lub.lub, cfg.tol).unwrap_or(false));
    out.report.push(Check::from_witness("lub/dominates", concept, low.map(|i| format!("member {i}"))));
    out.report.push(if seq.iter().all(|x| x.is_effect(cfg.tol)) {
        Check::from_witness("lub/effect", concept, (!lub.lub.is_effect(cfg.tol)).then(|| "limit is not an effect".into()))
    } else {
        Check::skip("lub/effect", concept, "members are not all effects")
    });
    out.text = format!("lub\n{}iterations {} residual {:e}\n", lub.lub.to_text(), lub.iterations, lub.residual);
    out.data = json!({ "lub": lub.lub.to_text(), "iterations": lub.iterations, "residual": lub.residual });
    Ok(out)
}

fn load_poset(path: &Path) -> Result<FinitePoset> {
    FinitePoset::parse(&read(path)?).map_err(|e| CliError::input(path, e))
}

/// Exhaustive up to the enumeration limit, sampled with the run seed beyond.
fn dcpo_strategy(p: &FinitePoset, seed: u64) -> DcpoStrategy {
    if p.len() > qdomain::order::MAX_EXHAUSTIVE {
        DcpoStrategy::Sampled { seed, samples: 4096 }
    } else {
        DcpoStrategy::Exhaustive
    }
}

pub fn order_poset(cfg: &RunConfig, file: &Path, function_to: Option<&Path>) -> Result<Outcome> {
    let mut out = Outcome::new("order poset");
    let p = load_poset(file)?;
    let d = p.dcpo_report(dcpo_strategy(&p, cfg.seed));
    out.report.push(Check::from_witness("order/dcpo", "directed-complete partial order", d.witness.as_ref().map(|w| format!("{w:?}"))));
    let mut data = json!({
        "elements": p.names(),
        "leq": p.pairs(),
        "directed_checked": d.directed_checked,
    });
    let mut text = format!("{} elements, {} directed subsets checked\n", p.len(), d.directed_checked);
    match p.way_below() {
        Ok(wb) => {
            let collapse = wb.pairs == p.pairs();
            out.report.push(Check::from_witness(
                "order/way-below-is-order",
                "way-below relation",
                (!collapse).then(|| "way-below differs from the order".into()),
            ));
            text.push_str(&format!("compact: {}\natoms: {}\n", wb.compact.join(" "), wb.atoms.join(" ")));
            data["way_below"] = json!(wb.pairs);
            data["compact"] = json!(wb.compact);
            data["atoms"] = json!(wb.atoms);
        }
        Err(e) => out.report.push(Check::skip("order/way-below-is-order", "way-below relation", e.to_string())),
    }
    if let Some(q_path) = function_to {
        let q = load_poset(q_path)?;
        let (f, _) = function_poset(&p, &q);
        let r = f.dcpo_report(dcpo_strategy(&f, cfg.seed));
        out.report.push(Check::from_witness("function-poset/dcpo", "monotone function space", r.witness.map(|w| format!("{w:?}"))));
        text.push_str(&format!("function poset: {} monotone maps\n", f.len()));
        data["function_poset_size"] = json!(f.len());
    }
    out.text = text;
    out.data = data;
    Ok(out)
}

pub fn demo_no_lub(_cfg: &RunConfig, g_path: &Path, delta: &str) -> Result<Outcome> {
    let mut out = Outcome::new("demo no-lub");
    let concept = "continuous functions without least upper bound";
    let g = PiecewiseLinear::parse(&read(g_path)?).map_err(|e| CliError::input(g_path, e))?;
    let delta = parse_rational(delta).map_err(|e| CliError::Usage(format!("--delta: {e}")))?;
    if let Err(e) = check_upper_bound(&g) {
        out.report.push(Check::fail("no-lub/input-upper-bound", concept, e.to_string()));
        return Ok(out);
    }
    out.report.push(Check::pass("no-lub/input-upper-bound", concept));
    let w = no_least_upper_bound_witness(&g, &delta).map_err(|e| CliError::Usage(format!("--delta: {e}")))?;
    out.report.push(Check::from_witness(
        "no-lub/improved-upper-bound",
        concept,
        check_upper_bound(&w.improved).err().map(|e| e.to_string()),
    ));
    let strict = w.improved.leq(&g) && w.gap > rat(0, 1);
    out.report.push(Check::from_witness("no-lub/strictly-below", concept, (!strict).then(|| "no strict decrease".into())));
    let missed = (0..=40).find(|&n| !chain_member(n).is_ok_and(|f| f.leq(&w.improved)));
    out.report.push(Check::from_witness("no-lub/above-chain", concept, missed.map(|n| format!("below f_{n}"))));
    out.text = format!("delta {}\npoint {}\ngap {}\nimproved\n{}", w.delta, w.point, w.gap, w.improved.to_text());
    out.data = json!({
        "delta": w.delta.to_string(),
        "point": w.point.to_string(),
        "gap": w.gap.to_string(),
        "improved": w.improved.to_text(),
    });
    Ok(out)
}

pub fn demo_ell2(cfg: &RunConfig, n: usize, csv: bool) -> Result<Outcome> {
    if !(2..=64).contains(&n) {
        return Err(CliError::Usage(format!("--n must be in 2..=64, got {n}")));
    }
    let mut out = Outcome::new("demo ell2");
    let concept = "projection joins in truncated l2";
    let mut rows = Vec::new();
    let (mut closed_bad, mut decreasing_bad, mut below_bad) = (None, None, None);
    let mut prev = f64::INFINITY;
    for k in 2..=n {
        let r = ell2_truncation_demo(k, cfg.tol).expect("N in range");
        let c = ell2_closed_form(k);
        if (r.distance - c).abs() > 1e-12 && closed_bad.is_none() {
            closed_bad = Some(format!("N={k}: {} vs {c}", r.distance));
        }
        if r.distance >= prev && decreasing_bad.is_none() {
            decreasing_bad = Some(format!("N={k}"));
        }
        if r.p1_leq_join && below_bad.is_none() {
            below_bad = Some(format!("N={k}"));
        }
        prev = r.distance;
        rows.push((k, r.distance, r.leq_residual));
    }
    out.report.push(Check::from_witness("ell2/closed-form", concept, closed_bad));
    out.report.push(Check::from_witness("ell2/decreasing", concept, decreasing_bad));
    out.report.push(Check::from_witness("ell2/p1-not-below-join", concept, below_bad));
    out.text = rows.iter().map(|(k, d, _)| format!("{k}, {d}\n")).collect();
    if csv {
        let mut s = String::from("N,distance\n");
        s.extend(rows.iter().map(|(k, d, _)| format!("{k},{d}\n")));
        out.raw = Some(s);
    }
    out.data = json!({
        "rows": rows.iter().map(|(k, d, r)| json!({ "n": k, "distance": d, "leq_residual": r })).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn load_projection(path: &Path, tol: f64) -> Result<Projection> {
    let m = parse_matrix(&read(path)?).map_err(|e| CliError::input(path, e))?;
    Projection::new(m, tol).map_err(|e| CliError::input(path, e))
}

pub fn lattice(cfg: &RunConfig, p_path: &Path, q_path: &Path) -> Result<Outcome> {
    let mut out = Outcome::new("lattice");
    let concept = "projection lattice";
    let p = load_projection(p_path, cfg.tol)?;
    let q = load_projection(q_path, cfg.tol)?;
    let ops = projection_lattice_ops(&p, &q, cfg.tol).map_err(|e| CliError::input(q_path, e))?;
    let leq = |a: &Projection, b: &Projection| a.leq(b, cfg.tol).unwrap_or(false);
    let meet_ok = leq(&ops.meet, &p) && leq(&ops.meet, &q);
    let join_ok = leq(&p, &ops.join) && leq(&q, &ops.join);
    out.report.push(Check::from_witness("lattice/meet-below", concept, (!meet_ok).then(|| "meet not below both".into())));
    out.report.push(Check::from_witness("lattice/join-above", concept, (!join_ok).then(|| "join not above both".into())));
    out.text = format!(
        "p <= q: {}\nq <= p: {}\nmeet rank {}\n{}join rank {}\n{}atoms of join: {}\n",
        ops.p_leq_q,
        ops.q_leq_p,
        ops.meet.rank(),
        ops.meet.matrix(),
        ops.join.rank(),
        ops.join.matrix(),
        ops.atoms_of_join.len()
    );
    out.data = json!({
        "p_leq_q": ops.p_leq_q,
        "q_leq_p": ops.q_leq_p,
        "meet": ops.meet.matrix().to_string(),
        "join": ops.join.matrix().to_string(),
        "meet_rank": ops.meet.rank(),
        "join_rank": ops.join.rank(),
        "atoms_of_join": ops.atoms_of_join.len(),
    });
    Ok(out)
}

pub fn commutant(cfg: &RunConfig, path: &Path, close: bool) -> Result<Outcome> {
    let mut out = Outcome::new("commutant");
    let gens = parse_matrices(&read(path)?).map_err(|e| CliError::input(path, e))?;
    let n = gens.first().map(|g| g.rows()).ok_or_else(|| CliError::input(path, "no generators"))?;
    let c = commutant_of(n, &gens).map_err(|e| CliError::input(path, e))?;
    let mut data = json!({ "n": n, "commutant_dim": c.dim() });
    let mut text = format!("commutant dimension {}\n", c.dim());
    let concept = "bicommutant of a *-algebra";
    match bicommutant_check(n, &gens, close, cfg.tol) {
        Ok(r) => {
            out.report.push(Check::from_witness(
                "commutant/bicommutant-equals-algebra",
                concept,
                (!r.equal(cfg.tol)).then(|| format!("dims {} vs {}, residual {:.3e}", r.span_dim, r.bicommutant_dim, r.containment_residual)),
            ));
            text.push_str(&format!("algebra dimension {}\nbicommutant dimension {}\n", r.span_dim, r.bicommutant_dim));
            data["algebra_dim"] = json!(r.span_dim);
            data["bicommutant_dim"] = json!(r.bicommutant_dim);
            data["containment_residual"] = json!(r.containment_residual);
        }
        Err(e @ WstarError::NotStarClosed { .. }) => {
            out.report.push(Check::skip("commutant/bicommutant-equals-algebra", concept, format!("{e}; pass --close")));
        }
        Err(e) => return Err(CliError::input(path, e)),
    }
    out.text = text;
    out.data = data;
    Ok(out)
}
