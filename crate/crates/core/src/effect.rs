//! Partial commutative monoids, effect algebras, generalized effect algebras
//! and (generalized) effect modules: executable axioms, the downset
//! construction `↓t`, homomorphism checks and the `f ↦ f̃` correspondence.
//!
//! One trait covers every flavour. Operations a structure lacks (a top, an
//! orthocomplement, scalars) return `None`, and the law checks report the
//! corresponding axioms as skipped. The scalar laws use the partial sum `⊎`
//! on the right-hand side of `(r + s)•x = r•x ⊎ s•x`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::report::{Check, LawReport};
use crate::wstar::{random_effect, AlgebraElement, AlgebraSignature};

pub type Rational = BigRational;

/// `n / d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `3`, `1/3` or `-2/5`.
pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    let s = s.trim();
    let parse_int = |t: &str| t.trim().parse::<BigInt>().map_err(|e| format!("`{s}`: {e}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(format!("`{s}`: zero denominator"));
            }
            Ok(Rational::new(parse_int(n)?, d))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EffectError {
    #[error("undefined operation: {0}")]
    Undefined(String),
    #[error("line {line}: {msg}")]
    Table { line: usize, msg: String },
    #[error("inconsistent table: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, EffectError>;

/// A partial commutative monoid with optional effect-algebra and module
/// structure.
pub trait EffectStructure {
    type Elem: Clone + fmt::Debug;

    fn zero(&self) -> Self::Elem;
    /// `x ⊎ y`, or `None` when `x ⊥ y` fails.
    fn sum(&self, x: &Self::Elem, y: &Self::Elem) -> Option<Self::Elem>;
    fn equal(&self, x: &Self::Elem, y: &Self::Elem) -> bool;

    fn show(&self, x: &Self::Elem) -> String {
        format!("{x:?}")
    }

    fn one(&self) -> Option<Self::Elem> {
        None
    }

    fn perp(&self, _x: &Self::Elem) -> Option<Self::Elem> {
        None
    }

    /// `r • x`.
    fn scale(&self, _r: &Rational, _x: &Self::Elem) -> Option<Self::Elem> {
        None
    }

    /// `y ⊖ x`, the `z` with `x ⊎ z = y`. Defaults to `(x ⊎ y⊥)⊥`.
    fn difference(&self, y: &Self::Elem, x: &Self::Elem) -> Option<Self::Elem> {
        let yp = self.perp(y)?;
        let s = self.sum(x, &yp)?;
        self.perp(&s)
    }

    fn defined(&self, x: &Self::Elem, y: &Self::Elem) -> bool {
        self.sum(x, y).is_some()
    }

    /// The induced order `x ≤ y ⇔ ∃z. x ⊎ z = y`.
    fn leq(&self, x: &Self::Elem, y: &Self::Elem) -> bool {
        self.difference(y, x).is_some()
    }
}

/// `x ⊘ y`, `y ⊖ x` and `x ≤ y` for an effect algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedOps<E> {
    pub dual_sum: Option<E>,
    pub difference: Result<E>,
    pub leq: bool,
}

pub fn derived_ops<S: EffectStructure>(e: &S, x: &S::Elem, y: &S::Elem) -> DerivedOps<S::Elem> {
    let dual_sum = e
        .perp(x)
        .zip(e.perp(y))
        .and_then(|(xp, yp)| e.sum(&xp, &yp))
        .and_then(|s| e.perp(&s));
    let difference = e.difference(y, x).ok_or_else(|| {
        EffectError::Undefined(format!("{} ⊖ {}: first operand is not below", e.show(y), e.show(x)))
    });
    DerivedOps {
        dual_sum,
        leq: difference.is_ok(),
        difference,
    }
}

// ---------------------------------------------------------------------------
// Law suites

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawMode {
    Pcm,
    Gea,
    Ea,
    GeMod,
    EMod,
}

impl LawMode {
    fn gea(self) -> bool {
        !matches!(self, LawMode::Pcm)
    }

    fn ea(self) -> bool {
        matches!(self, LawMode::Ea | LawMode::EMod)
    }

    fn module(self) -> bool {
        matches!(self, LawMode::GeMod | LawMode::EMod)
    }
}

#[derive(Clone, Debug)]
pub struct LawConfig {
    /// Number of sampled triples; `None` enumerates all of them.
    pub triple_budget: Option<usize>,
    pub seed: u64,
    pub scalars: Vec<Rational>,
}

impl LawConfig {
    /// All triples, for finite carriers.
    pub fn exhaustive() -> Self {
        Self {
            triple_budget: None,
            seed: 0,
            scalars: default_scalars(),
        }
    }

    pub fn sampled(seed: u64) -> Self {
        Self {
            triple_budget: Some(4096),
            seed,
            scalars: default_scalars(),
        }
    }
}

pub fn default_scalars() -> Vec<Rational> {
    [(0, 1), (1, 4), (1, 3), (1, 2), (2, 3), (3, 4), (1, 1)]
        .iter()
        .map(|&(n, d)| rat(n, d))
        .collect()
}

const PCM: &str = "partial commutative monoid";
const GEA: &str = "generalized effect algebra";
const EA: &str = "effect algebra";
const ORDER: &str = "induced order of a generalized effect algebra";
const EMOD: &str = "effect module";

fn triples(n: usize, config: &LawConfig) -> Vec<(usize, usize, usize)> {
    let all = n * n * n;
    match config.triple_budget {
        Some(b) if b < all => {
            let mut rng = crate::random::seeded(config.seed ^ 0x7472_6970);
            (0..b).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))).collect()
        }
        _ => (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
            .collect(),
    }
}

/// Runs the axioms of `mode` over `sample`.
pub fn check_laws<S: EffectStructure>(s: &S, sample: &[S::Elem], mode: LawMode, config: &LawConfig) -> LawReport {
    let mut r = LawReport::new();
    let n = sample.len();
    let show = |x: &S::Elem| s.show(x);
    let z = s.zero();
    let pairs = || (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
    let tri = triples(n, config);

    // Commutativity.
    let w = pairs().find_map(|(i, j)| {
        let (x, y) = (&sample[i], &sample[j]);
        match (s.sum(x, y), s.sum(y, x)) {
            (None, None) => None,
            (Some(a), Some(b)) if s.equal(&a, &b) => None,
            (a, b) => Some(format!(
                "x={} y={}: x⊎y={} y⊎x={}",
                show(x),
                show(y),
                a.map_or("undefined".into(), |v| show(&v)),
                b.map_or("undefined".into(), |v| show(&v))
            )),
        }
    });
    r.push(Check::from_witness("pcm/commutativity", PCM, w));

    // Associativity: y ⊥ z and x ⊥ (y ⊎ z) imply x ⊥ y, (x ⊎ y) ⊥ z and equality.
    let w = tri.iter().find_map(|&(i, j, k)| {
        let (x, y, zz) = (&sample[i], &sample[j], &sample[k]);
        let yz = s.sum(y, zz)?;
        let lhs = s.sum(x, &yz)?;
        let bad = || Some(format!("x={} y={} z={}", show(x), show(y), show(zz)));
        let Some(xy) = s.sum(x, y) else { return bad() };
        let Some(rhs) = s.sum(&xy, zz) else { return bad() };
        if s.equal(&lhs, &rhs) {
            None
        } else {
            bad()
        }
    });
    r.push(Check::from_witness("pcm/associativity", PCM, w));

    // Zero.
    let w = sample.iter().find_map(|x| match s.sum(&z, x) {
        Some(v) if s.equal(&v, x) => None,
        _ => Some(format!("x={}", show(x))),
    });
    r.push(Check::from_witness("pcm/zero", PCM, w));

    if mode.gea() {
        let w = tri.iter().find_map(|&(i, j, k)| {
            let (x, y, zz) = (&sample[i], &sample[j], &sample[k]);
            let a = s.sum(x, y)?;
            let b = s.sum(x, zz)?;
            (s.equal(&a, &b) && !s.equal(y, zz)).then(|| format!("x={} y={} z={}", show(x), show(y), show(zz)))
        });
        r.push(Check::from_witness("gea/cancellation", GEA, w));

        let w = pairs().find_map(|(i, j)| {
            let (x, y) = (&sample[i], &sample[j]);
            let v = s.sum(x, y)?;
            (s.equal(&v, &z) && !(s.equal(x, &z) && s.equal(y, &z))).then(|| format!("x={} y={}", show(x), show(y)))
        });
        r.push(Check::from_witness("gea/positivity", GEA, w));

        let w = sample.iter().find(|x| !s.leq(x, x)).map(|x| format!("x={}", show(x)));
        r.push(Check::from_witness("order/reflexive", ORDER, w));
        let w = pairs().find_map(|(i, j)| {
            let (x, y) = (&sample[i], &sample[j]);
            (s.leq(x, y) && s.leq(y, x) && !s.equal(x, y)).then(|| format!("x={} y={}", show(x), show(y)))
        });
        r.push(Check::from_witness("order/antisymmetric", ORDER, w));
        let w = tri.iter().find_map(|&(i, j, k)| {
            let (x, y, zz) = (&sample[i], &sample[j], &sample[k]);
            (s.leq(x, y) && s.leq(y, zz) && !s.leq(x, zz)).then(|| format!("x={} y={} z={}", show(x), show(y), show(zz)))
        });
        r.push(Check::from_witness("order/transitive", ORDER, w));
        let w = sample.iter().find(|x| !s.leq(&z, x)).map(|x| format!("x={}", show(x)));
        r.push(Check::from_witness("order/zero-bottom", ORDER, w));
    }

    if mode.ea() {
        match s.one() {
            None => {
                for name in ["ea/orthocomplement", "ea/orthocomplement-unique", "ea/zero-one", "ea/top"] {
                    r.push(Check::skip(name, EA, "structure has no top element"));
                }
            }
            Some(one) => {
                let w = sample.iter().find_map(|x| {
                    let Some(xp) = s.perp(x) else {
                        return Some(format!("x={}: no orthocomplement", show(x)));
                    };
                    match s.sum(x, &xp) {
                        Some(v) if s.equal(&v, &one) => None,
                        _ => Some(format!("x={} x⊥={}", show(x), show(&xp))),
                    }
                });
                let w = w.or_else(|| match s.perp(&z) {
                    Some(v) if s.equal(&v, &one) => None,
                    _ => Some("0⊥ ≠ 1".into()),
                });
                r.push(Check::from_witness("ea/orthocomplement", EA, w));

                let w = pairs().find_map(|(i, j)| {
                    let (x, y) = (&sample[i], &sample[j]);
                    let v = s.sum(x, y)?;
                    let xp = s.perp(x)?;
                    (s.equal(&v, &one) && !s.equal(y, &xp)).then(|| format!("x={} z={} x⊥={}", show(x), show(y), show(&xp)))
                });
                r.push(Check::from_witness("ea/orthocomplement-unique", EA, w));

                let w = sample
                    .iter()
                    .find(|x| s.defined(x, &one) && !s.equal(x, &z))
                    .map(|x| format!("x={} is summable with 1", show(x)));
                r.push(Check::from_witness("ea/zero-one", EA, w));

                let w = sample.iter().find(|x| !s.leq(x, &one)).map(|x| format!("x={}", show(x)));
                r.push(Check::from_witness("ea/top", EA, w));
            }
        }
    }

    if mode.module() {
        r.extend(check_module_laws(s, sample, &config.scalars));
    }
    r
}

fn check_module_laws<S: EffectStructure>(s: &S, sample: &[S::Elem], scalars: &[Rational]) -> LawReport {
    let mut r = LawReport::new();
    let show = |x: &S::Elem| s.show(x);
    if sample.first().and_then(|x| s.scale(&Rational::one(), x)).is_none() && !sample.is_empty() {
        for name in ["module/unit", "module/scalar-sum", "module/scalar-product", "module/distributivity"] {
            r.push(Check::skip(name, EMOD, "structure has no scalar multiplication"));
        }
        return r;
    }
    let sc = |a: &Rational, x: &S::Elem| s.scale(a, x).expect("scalars available");
    let one = Rational::one();

    let w = sample
        .iter()
        .find(|x| !s.equal(&sc(&one, x), x))
        .map(|x| format!("x={}", show(x)));
    r.push(Check::from_witness("module/unit", EMOD, w));

    let w = scalars.iter().find_map(|a| {
        scalars.iter().find_map(|b| {
            let ab = a + b;
            if ab > one {
                return None;
            }
            sample.iter().find_map(|x| match s.sum(&sc(a, x), &sc(b, x)) {
                Some(v) if s.equal(&v, &sc(&ab, x)) => None,
                _ => Some(format!("r={a} s={b} x={}", show(x))),
            })
        })
    });
    r.push(Check::from_witness("module/scalar-sum", EMOD, w));

    let w = scalars.iter().find_map(|a| {
        scalars.iter().find_map(|b| {
            sample.iter().find_map(|x| {
                (!s.equal(&sc(&(a * b), x), &sc(a, &sc(b, x)))).then(|| format!("r={a} s={b} x={}", show(x)))
            })
        })
    });
    r.push(Check::from_witness("module/scalar-product", EMOD, w));

    let n = sample.len();
    let w = scalars.iter().find_map(|a| {
        (0..n).find_map(|i| {
            (0..n).find_map(|j| {
                let (x, y) = (&sample[i], &sample[j]);
                let xy = s.sum(x, y)?;
                match s.sum(&sc(a, x), &sc(a, y)) {
                    Some(v) if s.equal(&v, &sc(a, &xy)) => None,
                    _ => Some(format!("r={a} x={} y={}", show(x), show(y))),
                }
            })
        })
    });
    r.push(Check::from_witness("module/distributivity", EMOD, w));
    r
}

// ---------------------------------------------------------------------------
// Homomorphisms

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HomMode {
    Ea,
    Gea,
    EMod,
    GeMod,
}

const HOM: &str = "homomorphism of effect structures";

/// Checks the preservation laws of `mode` for `f` on `sample` (closed under
/// orthocomplements and extended by `0`, `1` in the EA modes), then the
/// consequences that preservation implies.
pub fn check_homomorphism<S, T, F>(f: F, source: &S, target: &T, sample: &[S::Elem], mode: HomMode, scalars: &[Rational]) -> LawReport
where
    S: EffectStructure,
    T: EffectStructure,
    F: Fn(&S::Elem) -> T::Elem,
{
    let mut r = LawReport::new();
    let ea = matches!(mode, HomMode::Ea | HomMode::EMod);
    let mut pts: Vec<S::Elem> = sample.to_vec();
    pts.push(source.zero());
    if ea {
        if let Some(one) = source.one() {
            pts.push(one);
        }
        let perps: Vec<S::Elem> = sample.iter().filter_map(|x| source.perp(x)).collect();
        pts.extend(perps);
    }
    let show = |x: &S::Elem| source.show(x);

    if ea {
        let w = match (source.one(), target.one()) {
            (Some(a), Some(b)) => {
                let fa = f(&a);
                (!target.equal(&fa, &b)).then(|| format!("f(1)={} but 1={}", target.show(&fa), target.show(&b)))
            }
            _ => Some("missing top element".into()),
        };
        r.push(Check::from_witness("hom/unit", HOM, w));
    } else {
        let f0 = f(&source.zero());
        let w = (!target.equal(&f0, &target.zero())).then(|| format!("f(0)={}", target.show(&f0)));
        r.push(Check::from_witness("hom/zero", HOM, w));
    }

    let n = pts.len();
    let w = (0..n).find_map(|i| {
        (0..n).find_map(|j| {
            let (x, y) = (&pts[i], &pts[j]);
            let xy = source.sum(x, y)?;
            match target.sum(&f(x), &f(y)) {
                Some(v) if target.equal(&v, &f(&xy)) => None,
                _ => Some(format!("x={} y={}", show(x), show(y))),
            }
        })
    });
    r.push(Check::from_witness("hom/sum", HOM, w));

    if ea {
        let w = pts.iter().find_map(|x| {
            let xp = source.perp(x)?;
            let fx = target.perp(&f(x))?;
            (!target.equal(&f(&xp), &fx)).then(|| format!("x={}", show(x)))
        });
        r.push(Check::from_witness("hom/derived-orthocomplement", HOM, w));
        let f0 = f(&source.zero());
        let w = (!target.equal(&f0, &target.zero())).then(|| format!("f(0)={}", target.show(&f0)));
        r.push(Check::from_witness("hom/derived-zero", HOM, w));
    } else {
        let w = (0..n).find_map(|i| {
            (0..n).find_map(|j| {
                let (x, y) = (&pts[i], &pts[j]);
                (source.leq(x, y) && !target.leq(&f(x), &f(y))).then(|| format!("x={} y={}", show(x), show(y)))
            })
        });
        r.push(Check::from_witness("hom/derived-monotone", HOM, w));
    }

    if matches!(mode, HomMode::EMod | HomMode::GeMod) {
        let w = scalars.iter().find_map(|a| {
            pts.iter().find_map(|x| match (source.scale(a, x), target.scale(a, &f(x))) {
                (Some(sx), Some(tx)) if target.equal(&f(&sx), &tx) => None,
                _ => Some(format!("r={a} x={}", show(x))),
            })
        });
        r.push(Check::from_witness("hom/scalars", HOM, w));
    }
    r
}

/// Both sides of the `f` / `f̃` biconditional.
#[derive(Clone, Debug)]
pub struct TildeReport {
    /// `f` as a GEA (or GEMod) map into `F`.
    pub gea: LawReport,
    /// `f̃` as an EA (or EMod) map into `↓f(1)`.
    pub tilde_ea: LawReport,
}

impl TildeReport {
    pub fn consistent(&self) -> bool {
        self.gea.all_passed() == self.tilde_ea.all_passed()
    }
}

pub fn tilde_correspondence<S, T, F>(f: F, source: &S, target: &T, sample: &[S::Elem], modules: bool) -> TildeReport
where
    S: EffectStructure,
    T: EffectStructure + Clone,
    F: Fn(&S::Elem) -> T::Elem,
{
    let scalars = default_scalars();
    let top = f(&source.one().expect("source must have a top"));
    let down = DownsetAlgebra::new(target.clone(), top);
    let (gm, em) = if modules { (HomMode::GeMod, HomMode::EMod) } else { (HomMode::Gea, HomMode::Ea) };
    TildeReport {
        gea: check_homomorphism(&f, source, target, sample, gm, &scalars),
        tilde_ea: check_homomorphism(&f, source, &down, sample, em, &scalars),
    }
}

// ---------------------------------------------------------------------------
// Instances

/// `[0, 1]` over exact rationals: `x ⊥ y ⇔ x + y ≤ 1`, `x⊥ = 1 − x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitInterval;

impl EffectStructure for UnitInterval {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }

    fn sum(&self, x: &Rational, y: &Rational) -> Option<Rational> {
        let s = x + y;
        (s <= Rational::one()).then_some(s)
    }

    fn equal(&self, x: &Rational, y: &Rational) -> bool {
        x == y
    }

    fn show(&self, x: &Rational) -> String {
        x.to_string()
    }

    fn one(&self) -> Option<Rational> {
        Some(Rational::one())
    }

    fn perp(&self, x: &Rational) -> Option<Rational> {
        Some(Rational::one() - x)
    }

    fn scale(&self, r: &Rational, x: &Rational) -> Option<Rational> {
        Some(r * x)
    }

    fn difference(&self, y: &Rational, x: &Rational) -> Option<Rational> {
        let d = y - x;
        (!d.is_negative()).then_some(d)
    }
}

/// `[0, ∞)` over exact rationals: a generalized effect module with no top.
#[derive(Clone, Copy, Debug, Default)]
pub struct NonNegativeRationals;

impl EffectStructure for NonNegativeRationals {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }

    fn sum(&self, x: &Rational, y: &Rational) -> Option<Rational> {
        Some(x + y)
    }

    fn equal(&self, x: &Rational, y: &Rational) -> bool {
        x == y
    }

    fn show(&self, x: &Rational) -> String {
        x.to_string()
    }

    fn scale(&self, r: &Rational, x: &Rational) -> Option<Rational> {
        Some(r * x)
    }

    fn difference(&self, y: &Rational, x: &Rational) -> Option<Rational> {
        let d = y - x;
        (!d.is_negative()).then_some(d)
    }
}

/// `[0, 1]` with truncated addition `min(x + y, 1)`, always defined: a PCM
/// without cancellation (negative control).
#[derive(Clone, Copy, Debug, Default)]
pub struct TruncatedUnitInterval;

impl EffectStructure for TruncatedUnitInterval {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }

    fn sum(&self, x: &Rational, y: &Rational) -> Option<Rational> {
        Some((x + y).min(Rational::one()))
    }

    fn equal(&self, x: &Rational, y: &Rational) -> bool {
        x == y
    }

    fn show(&self, x: &Rational) -> String {
        x.to_string()
    }

    fn difference(&self, y: &Rational, x: &Rational) -> Option<Rational> {
        let d = y - x;
        (!d.is_negative()).then_some(d)
    }
}

/// Effects `[0,1]_A` of a finite-dimensional W*-algebra: `x ⊥ y ⇔ x + y ≤ 1`
/// in the Löwner order, `x⊥ = 1 − x`, equality up to `tol` in operator norm.
#[derive(Clone, Debug)]
pub struct MatrixEffects {
    pub signature: AlgebraSignature,
    pub tol: f64,
}

impl MatrixEffects {
    pub fn new(signature: AlgebraSignature, tol: f64) -> Self {
        Self { signature, tol }
    }
}

impl EffectStructure for MatrixEffects {
    type Elem = AlgebraElement;

    fn zero(&self) -> AlgebraElement {
        AlgebraElement::zero(&self.signature)
    }

    fn sum(&self, x: &AlgebraElement, y: &AlgebraElement) -> Option<AlgebraElement> {
        let s = x.add(y);
        s.loewner_leq(&AlgebraElement::unit(&self.signature), self.tol)
            .ok()
            .filter(|&b| b)
            .map(|_| s)
    }

    fn equal(&self, x: &AlgebraElement, y: &AlgebraElement) -> bool {
        x.sub(y).norm() <= self.tol
    }

    fn show(&self, x: &AlgebraElement) -> String {
        let blocks: Vec<String> = x
            .blocks()
            .iter()
            .map(|m| {
                let rows: Vec<String> = (0..m.rows())
                    .map(|i| {
                        (0..m.cols())
                            .map(|j| {
                                let z = m[(i, j)];
                                if z.im.abs() < 5e-5 {
                                    format!("{:.4}", z.re)
                                } else {
                                    format!("{:.4}{:+.4}i", z.re, z.im)
                                }
                            })
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect();
                format!("[{}]", rows.join("; "))
            })
            .collect();
        blocks.join("⊕")
    }

    fn one(&self) -> Option<AlgebraElement> {
        Some(AlgebraElement::unit(&self.signature))
    }

    fn perp(&self, x: &AlgebraElement) -> Option<AlgebraElement> {
        Some(AlgebraElement::unit(&self.signature).sub(x))
    }

    fn scale(&self, r: &Rational, x: &AlgebraElement) -> Option<AlgebraElement> {
        Some(x.scale_real(to_f64(r)))
    }

    fn difference(&self, y: &AlgebraElement, x: &AlgebraElement) -> Option<AlgebraElement> {
        let d = y.sub(x);
        d.is_positive(self.tol).then_some(d)
    }
}

/// `↓t` with the restricted sum, top `t` and `x⊥ = t ⊖ x`.
#[derive(Clone, Debug)]
pub struct DownsetAlgebra<S: EffectStructure> {
    pub base: S,
    pub top: S::Elem,
}

impl<S: EffectStructure> DownsetAlgebra<S> {
    pub fn new(base: S, top: S::Elem) -> Self {
        Self { base, top }
    }

    pub fn contains(&self, x: &S::Elem) -> bool {
        self.base.leq(x, &self.top)
    }
}

impl<S: EffectStructure> EffectStructure for DownsetAlgebra<S> {
    type Elem = S::Elem;

    fn zero(&self) -> S::Elem {
        self.base.zero()
    }

    fn sum(&self, x: &S::Elem, y: &S::Elem) -> Option<S::Elem> {
        self.base.sum(x, y).filter(|s| self.base.leq(s, &self.top))
    }

    fn equal(&self, x: &S::Elem, y: &S::Elem) -> bool {
        self.base.equal(x, y)
    }

    fn show(&self, x: &S::Elem) -> String {
        self.base.show(x)
    }

    fn one(&self) -> Option<S::Elem> {
        Some(self.top.clone())
    }

    fn perp(&self, x: &S::Elem) -> Option<S::Elem> {
        self.base.difference(&self.top, x)
    }

    fn scale(&self, r: &Rational, x: &S::Elem) -> Option<S::Elem> {
        self.base.scale(r, x)
    }

    fn difference(&self, y: &S::Elem, x: &S::Elem) -> Option<S::Elem> {
        self.base.difference(y, x)
    }
}

/// Deliberate axiom breakers for negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tamper {
    /// `x⊥ := ½ • x⊥`.
    HalvedPerp,
    /// `r • x := r² • x`.
    SquaredScalar,
}

#[derive(Clone, Debug)]
pub struct Tampered<S> {
    pub base: S,
    pub tamper: Tamper,
}

impl<S: EffectStructure> EffectStructure for Tampered<S> {
    type Elem = S::Elem;

    fn zero(&self) -> S::Elem {
        self.base.zero()
    }

    fn sum(&self, x: &S::Elem, y: &S::Elem) -> Option<S::Elem> {
        self.base.sum(x, y)
    }

    fn equal(&self, x: &S::Elem, y: &S::Elem) -> bool {
        self.base.equal(x, y)
    }

    fn show(&self, x: &S::Elem) -> String {
        self.base.show(x)
    }

    fn one(&self) -> Option<S::Elem> {
        self.base.one()
    }

    fn perp(&self, x: &S::Elem) -> Option<S::Elem> {
        let p = self.base.perp(x)?;
        match self.tamper {
            Tamper::HalvedPerp => self.base.scale(&rat(1, 2), &p),
            Tamper::SquaredScalar => Some(p),
        }
    }

    fn scale(&self, r: &Rational, x: &S::Elem) -> Option<S::Elem> {
        match self.tamper {
            Tamper::SquaredScalar => self.base.scale(&(r * r), x),
            Tamper::HalvedPerp => self.base.scale(r, x),
        }
    }

    fn difference(&self, y: &S::Elem, x: &S::Elem) -> Option<S::Elem> {
        self.base.difference(y, x)
    }
}

/// A finite structure given by its sum table. Elements are indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteEffectAlgebra {
    names: Vec<String>,
    zero: usize,
    table: BTreeMap<(usize, usize), usize>,
    perp: Vec<Option<usize>>,
}

impl FiniteEffectAlgebra {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn carrier(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `{0, 1/n, …, 1}` with `i/n ⊎ j/n = (i+j)/n` when `i + j ≤ n`.
    pub fn chain(n: usize) -> Self {
        let names: Vec<String> = (0..=n).map(|i| rat(i as i64, n as i64).to_string()).collect();
        let mut table = BTreeMap::new();
        for i in 0..=n {
            for j in 0..=(n - i) {
                table.insert((i, j), i + j);
            }
        }
        let perp = (0..=n).map(|i| Some(n - i)).collect();
        Self { names, zero: 0, table, perp }
    }

    /// Subsets of `k` atoms under disjoint union; complements are set complements.
    pub fn boolean(k: usize) -> Self {
        let size = 1usize << k;
        let names = (0..size)
            .map(|m| {
                let atoms: Vec<String> = (0..k).filter(|b| m >> b & 1 == 1).map(|b| ((b'a' + b as u8) as char).to_string()).collect();
                format!("{{{}}}", atoms.join(","))
            })
            .collect();
        let mut table = BTreeMap::new();
        for a in 0..size {
            for b in 0..size {
                if a & b == 0 {
                    table.insert((a, b), a | b);
                }
            }
        }
        let perp = (0..size).map(|m| Some(!m & (size - 1))).collect();
        Self { names, zero: 0, table, perp }
    }

    /// `ℤ/n` under addition: a total commutative monoid that violates positivity.
    pub fn cyclic(n: usize) -> Self {
        let names = (0..n).map(|i| i.to_string()).collect();
        let mut table = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                table.insert((a, b), (a + b) % n);
            }
        }
        Self {
            names,
            zero: 0,
            table,
            perp: vec![None; n],
        }
    }

    /// Removes the single entry `a ⊎ b` (not `b ⊎ a`).
    pub fn without_sum(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        out.table.remove(&(a, b));
        out
    }

    /// Reads `sum a b c` and `perp a b` lines, plus an optional `zero z`
    /// (default: the element named `0`). Closes under commutativity, the zero
    /// law, symmetry of `perp` and `x ⊎ x⊥ = 1`, rejecting contradictions.
    pub fn parse(text: &str) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let intern = |s: &str, names: &mut Vec<String>| -> usize {
            match names.iter().position(|n| n == s) {
                Some(i) => i,
                None => {
                    names.push(s.to_string());
                    names.len() - 1
                }
            }
        };
        let mut sums = Vec::new();
        let mut perps = Vec::new();
        let mut zero_name = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let w: Vec<&str> = l.split_whitespace().collect();
            match w.as_slice() {
                ["sum", a, b, c] => {
                    let t = (intern(a, &mut names), intern(b, &mut names), intern(c, &mut names));
                    sums.push((t, line));
                }
                ["perp", a, b] => {
                    let t = (intern(a, &mut names), intern(b, &mut names));
                    perps.push((t, line));
                }
                ["zero", a] => {
                    intern(a, &mut names);
                    zero_name = Some(a.to_string());
                }
                ["elem", a] => {
                    intern(a, &mut names);
                }
                _ => {
                    return Err(EffectError::Table {
                        line,
                        msg: format!("expected `sum a b c`, `perp a b` or `zero a`, found `{l}`"),
                    })
                }
            }
        }
        let zero_name = zero_name.unwrap_or_else(|| "0".into());
        let zero = names
            .iter()
            .position(|n| *n == zero_name)
            .ok_or_else(|| EffectError::Inconsistent(format!("no zero element `{zero_name}`")))?;
        let n = names.len();
        let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let put = |table: &mut BTreeMap<(usize, usize), usize>, a: usize, b: usize, c: usize, names: &[String], why: &str| -> Result<()> {
            match table.get(&(a, b)) {
                Some(&old) if old != c => Err(EffectError::Inconsistent(format!(
                    "{} ⊎ {} is both {} and {} ({why})",
                    names[a], names[b], names[old], names[c]
                ))),
                _ => {
                    table.insert((a, b), c);
                    Ok(())
                }
            }
        };
        for &((a, b, c), line) in &sums {
            put(&mut table, a, b, c, &names, &format!("line {line}"))?;
            put(&mut table, b, a, c, &names, "commutativity")?;
        }
        for x in 0..n {
            put(&mut table, zero, x, x, &names, "zero law")?;
            put(&mut table, x, zero, x, &names, "zero law")?;
        }
        let mut perp = vec![None; n];
        for &((a, b), line) in &perps {
            for (x, y) in [(a, b), (b, a)] {
                match perp[x] {
                    Some(old) if old != y => {
                        return Err(EffectError::Inconsistent(format!(
                            "line {line}: {}⊥ is both {} and {}",
                            names[x], names[old], names[y]
                        )))
                    }
                    _ => perp[x] = Some(y),
                }
            }
        }
        let one = perp[zero].ok_or_else(|| EffectError::Inconsistent(format!("no orthocomplement for `{zero_name}`")))?;
        for x in 0..n {
            let xp = perp[x].ok_or_else(|| EffectError::Inconsistent(format!("no orthocomplement for `{}`", names[x])))?;
            put(&mut table, x, xp, one, &names, "orthocomplement")?;
        }
        Ok(Self { names, zero, table, perp })
    }

    pub fn to_text(&self) -> String {
        let n = &self.names;
        let mut sums: Vec<String> = self.table.iter().map(|(&(a, b), &c)| format!("sum {} {} {}", n[a], n[b], n[c])).collect();
        sums.sort();
        let mut perps: Vec<String> = self
            .perp
            .iter()
            .enumerate()
            .filter_map(|(x, p)| p.map(|y| (n[x].clone().min(n[y].clone()), n[x].clone().max(n[y].clone()))))
            .map(|(a, b)| format!("perp {a} {b}"))
            .collect();
        perps.sort();
        perps.dedup();
        let mut s = format!("zero {}\n", n[self.zero]);
        for l in sums.iter().chain(&perps) {
            s.push_str(l);
            s.push('\n');
        }
        s
    }
}

impl EffectStructure for FiniteEffectAlgebra {
    type Elem = usize;

    fn zero(&self) -> usize {
        self.zero
    }

    fn sum(&self, x: &usize, y: &usize) -> Option<usize> {
        self.table.get(&(*x, *y)).copied()
    }

    fn equal(&self, x: &usize, y: &usize) -> bool {
        x == y
    }

    fn show(&self, x: &usize) -> String {
        self.names[*x].clone()
    }

    fn one(&self) -> Option<usize> {
        self.perp[self.zero]
    }

    fn perp(&self, x: &usize) -> Option<usize> {
        self.perp[*x]
    }

    /// Solves `x ⊎ z = y` by search.
    fn difference(&self, y: &usize, x: &usize) -> Option<usize> {
        (0..self.len()).find(|z| self.table.get(&(*x, *z)) == Some(y))
    }
}

// ---------------------------------------------------------------------------
// Samples

/// `0`, `1` and random fractions with denominators up to 12, closed under
/// `1 − x` until `n` elements are collected.
pub fn unit_interval_sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(), Rational::one()];
    while out.len() < n {
        let d = rng.gen_range(1..=12i64);
        let x = rat(rng.gen_range(0..=d), d);
        out.push(Rational::one() - &x);
        out.push(x);
    }
    out.truncate(n);
    out
}

/// `0`, `1`, random effects at several scales, and some complements.
pub fn matrix_effect_sample<R: Rng + ?Sized>(rng: &mut R, signature: &AlgebraSignature, n: usize) -> Vec<AlgebraElement> {
    let one = AlgebraElement::unit(signature);
    let mut out = vec![AlgebraElement::zero(signature), one.clone(), one.scale_real(0.5)];
    let scales = [1.0, 0.5, 0.25, 0.125];
    while out.len() < n {
        let e = random_effect(rng, signature).scale_real(*scales.choose(rng).expect("nonempty"));
        if rng.gen_bool(0.25) {
            out.push(one.sub(&e));
        }
        out.push(e);
    }
    out.truncate(n);
    out
}

/// Elements of `↓t` for `[0,1]`: `t · x` for each `x`.
pub fn unit_interval_downset_sample(sample: &[Rational], t: &Rational) -> Vec<Rational> {
    sample.iter().map(|x| t * x).collect()
}

/// Elements of `↓t` for effects: `t^{1/2} x t^{1/2}`.
pub fn matrix_downset_sample(sample: &[AlgebraElement], t: &AlgebraElement) -> Vec<AlgebraElement> {
    let roots: Vec<_> = t
        .blocks()
        .iter()
        .map(|m| {
            crate::matrix::hermitian_eigen(&m.hermitian_part(), f64::INFINITY)
                .expect("Hermitian")
                .map_spectrum(|v| v.max(0.0).sqrt())
        })
        .collect();
    sample
        .iter()
        .map(|x| {
            let blocks = x.blocks().iter().zip(&roots).map(|(b, r)| b.congruence(r)).collect();
            AlgebraElement::new(x.signature().clone(), blocks).expect("same signature")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::seeded;

    fn passes(r: &LawReport) -> bool {
        r.checks.iter().all(|c| c.passed())
    }

    #[test]
    fn unit_interval_is_an_effect_module() {
        let mut rng = seeded(1);
        let sample = unit_interval_sample(&mut rng, 40);
        let r = check_laws(&UnitInterval, &sample, LawMode::EMod, &LawConfig::exhaustive());
        assert!(passes(&r), "{r}");
    }

    #[test]
    fn derived_operation_examples() {
        let u = UnitInterval;
        let d = derived_ops(&u, &rat(2, 10), &rat(7, 10));
        assert_eq!(d.difference, Ok(rat(1, 2)));
        assert!(d.leq);
        let d = derived_ops(&u, &rat(6, 10), &rat(7, 10));
        assert_eq!(d.dual_sum, Some(rat(3, 10)));
        let d = derived_ops(&u, &rat(7, 10), &rat(2, 10));
        assert!(matches!(d.difference, Err(EffectError::Undefined(_))));
        let x = rat(1, 3);
        assert_eq!(u.difference(&x, &x), Some(Rational::zero()));
    }

    #[test]
    fn finite_tables_pass() {
        for t in [FiniteEffectAlgebra::chain(4), FiniteEffectAlgebra::boolean(2)] {
            let r = check_laws(&t, &t.carrier(), LawMode::Ea, &LawConfig::exhaustive());
            assert!(passes(&r), "{r}");
        }
    }

    #[test]
    fn dropped_commutativity_is_caught() {
        let t = FiniteEffectAlgebra::boolean(2).without_sum(1, 2);
        let r = check_laws(&t, &t.carrier(), LawMode::Ea, &LawConfig::exhaustive());
        let c = r.get("pcm/commutativity").unwrap();
        assert!(!c.passed());
        assert!(c.witness.as_ref().unwrap().contains("undefined"));
    }

    #[test]
    fn other_negative_controls() {
        let mut rng = seeded(2);
        let sample = unit_interval_sample(&mut rng, 24);
        let cfg = LawConfig::exhaustive();
        let broken = Tampered { base: UnitInterval, tamper: Tamper::HalvedPerp };
        assert!(!check_laws(&broken, &sample, LawMode::Ea, &cfg).get("ea/orthocomplement").unwrap().passed());
        let broken = Tampered { base: UnitInterval, tamper: Tamper::SquaredScalar };
        assert!(!check_laws(&broken, &sample, LawMode::EMod, &cfg).get("module/scalar-sum").unwrap().passed());
        let r = check_laws(&TruncatedUnitInterval, &sample, LawMode::Gea, &cfg);
        assert!(!r.get("gea/cancellation").unwrap().passed());
        let z3 = FiniteEffectAlgebra::cyclic(3);
        let r = check_laws(&z3, &z3.carrier(), LawMode::Gea, &cfg);
        assert!(r.get("pcm/commutativity").unwrap().passed());
        assert!(!r.get("gea/positivity").unwrap().passed());
    }

    #[test]
    fn non_negative_rationals_form_a_gemod_without_top() {
        let mut rng = seeded(3);
        let mut sample = unit_interval_sample(&mut rng, 20);
        sample.push(rat(7, 2));
        let r = check_laws(&NonNegativeRationals, &sample, LawMode::GeMod, &LawConfig::exhaustive());
        assert!(passes(&r), "{r}");
        let r = check_laws(&NonNegativeRationals, &sample, LawMode::Ea, &LawConfig::exhaustive());
        assert_eq!(r.get("ea/top").unwrap().verdict, crate::report::Verdict::Skip);
    }

    #[test]
    fn matrix_effects_pass_on_samples() {
        let mut rng = seeded(4);
        for sig in [AlgebraSignature::qubit(), AlgebraSignature::new(vec![2, 1]).unwrap()] {
            let s = MatrixEffects::new(sig.clone(), 1e-9);
            let sample = matrix_effect_sample(&mut rng, &sig, 32);
            let r = check_laws(&s, &sample, LawMode::EMod, &LawConfig::sampled(4));
            assert!(passes(&r), "{r}");
        }
    }

    #[test]
    fn downset_examples() {
        let half = rat(1, 2);
        let d = DownsetAlgebra::new(UnitInterval, half.clone());
        assert_eq!(d.perp(&rat(1, 5)), Some(rat(3, 10)));
        assert_eq!(d.sum(&rat(1, 3), &rat(1, 4)), None);
        let mut rng = seeded(5);
        let sample = unit_interval_downset_sample(&unit_interval_sample(&mut rng, 24), &half);
        let r = check_laws(&d, &sample, LawMode::EMod, &LawConfig::exhaustive());
        assert!(passes(&r), "{r}");
        let whole = DownsetAlgebra::new(UnitInterval, Rational::one());
        assert_eq!(whole.perp(&rat(1, 5)), UnitInterval.perp(&rat(1, 5)));

        let sig = AlgebraSignature::qubit();
        let m = MatrixEffects::new(sig.clone(), 1e-9);
        let t = AlgebraElement::scalar(&sig, 0.5);
        let dm = DownsetAlgebra::new(m.clone(), t.clone());
        let quarter = AlgebraElement::scalar(&sig, 0.25);
        assert!(m.equal(&dm.perp(&quarter).unwrap(), &quarter));
        let sample = matrix_downset_sample(&matrix_effect_sample(&mut rng, &sig, 24), &t);
        let r = check_laws(&dm, &sample, LawMode::Ea, &LawConfig::sampled(5));
        assert!(passes(&r), "{r}");
    }

    #[test]
    fn homomorphism_examples() {
        let mut rng = seeded(6);
        let sample = unit_interval_sample(&mut rng, 16);
        let s = default_scalars();
        let id = |x: &Rational| x.clone();
        for mode in [HomMode::Ea, HomMode::Gea, HomMode::EMod, HomMode::GeMod] {
            assert!(passes(&check_homomorphism(id, &UnitInterval, &UnitInterval, &sample, mode, &s)));
        }
        let halve = |x: &Rational| x * rat(1, 2);
        assert!(passes(&check_homomorphism(halve, &UnitInterval, &UnitInterval, &sample, HomMode::Gea, &s)));
        let r = check_homomorphism(halve, &UnitInterval, &UnitInterval, &sample, HomMode::Ea, &s);
        assert!(!r.get("hom/unit").unwrap().passed());
        let t = tilde_correspondence(halve, &UnitInterval, &UnitInterval, &sample, true);
        assert!(t.gea.all_passed() && t.tilde_ea.all_passed() && t.consistent());
        let square = |x: &Rational| x * x;
        let t = tilde_correspondence(square, &UnitInterval, &UnitInterval, &sample, false);
        assert!(!t.gea.all_passed() && t.consistent());
    }

    #[test]
    fn table_loader() {
        let t = FiniteEffectAlgebra::parse("sum h h 1\nperp 0 1\nperp h h\n").unwrap();
        assert_eq!(t.len(), 3);
        let r = check_laws(&t, &t.carrier(), LawMode::Ea, &LawConfig::exhaustive());
        assert!(passes(&r), "{r}");
        let back = FiniteEffectAlgebra::parse(&t.to_text()).unwrap();
        assert_eq!(back.to_text(), t.to_text());
        assert!(matches!(
            FiniteEffectAlgebra::parse("sum a a 1\nsum a a 0\nperp 0 1\nperp a a\n"),
            Err(EffectError::Inconsistent(_))
        ));
        assert!(matches!(FiniteEffectAlgebra::parse("perp 0 1\nbogus\n"), Err(EffectError::Table { line: 2, .. })));
        assert!(matches!(FiniteEffectAlgebra::parse("sum a a a\nperp 0 1\n"), Err(EffectError::Inconsistent(_))));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rational(" -2/4 ").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("5").unwrap(), rat(5, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }
}
