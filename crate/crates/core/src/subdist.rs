//! The subdistribution monad `D≤1` on finite sets in exact rational
//! arithmetic, its Kleisli arrows, fuzzy predicates, the discrete weakest
//! precondition and the evaluation maps of the subconvex/effect-module
//! duality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::effect::{check_homomorphism, parse_rational, rat, EffectStructure, HomMode, Rational};
use crate::report::{Check, LawReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubDistError {
    #[error("element `{0}` is not in the carrier")]
    NotInCarrier(String),
    #[error("negative weight {weight} at `{element}`")]
    NegativeWeight { element: String, weight: String },
    #[error("total weight {0} exceeds 1")]
    MassExceedsOne(String),
    #[error("predicate value {value} at `{element}` outside [0,1]")]
    OutOfRange { element: String, value: String },
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, SubDistError>;

/// A finitely supported subprobability distribution on an explicit carrier.
/// Zero weights are not stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubDistribution<T: Ord> {
    carrier: BTreeSet<T>,
    weights: BTreeMap<T, Rational>,
}

impl<T: Ord + Clone + fmt::Debug> SubDistribution<T> {
    /// Duplicated elements have their weights added.
    pub fn new<I>(carrier: BTreeSet<T>, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, Rational)>,
    {
        let mut w: BTreeMap<T, Rational> = BTreeMap::new();
        for (x, p) in weights {
            if !carrier.contains(&x) {
                return Err(SubDistError::NotInCarrier(format!("{x:?}")));
            }
            if p.is_negative() {
                return Err(SubDistError::NegativeWeight {
                    element: format!("{x:?}"),
                    weight: p.to_string(),
                });
            }
            *w.entry(x).or_insert_with(Rational::zero) += p;
        }
        w.retain(|_, p| !p.is_zero());
        let d = Self { carrier, weights: w };
        let m = d.mass();
        if m > Rational::one() {
            return Err(SubDistError::MassExceedsOne(m.to_string()));
        }
        Ok(d)
    }

    pub fn zero(carrier: BTreeSet<T>) -> Self {
        Self {
            carrier,
            weights: BTreeMap::new(),
        }
    }

    /// `η(x)`, the point mass.
    pub fn unit(x: T, carrier: BTreeSet<T>) -> Result<Self> {
        Self::new(carrier, [(x, Rational::one())])
    }

    pub fn carrier(&self) -> &BTreeSet<T> {
        &self.carrier
    }

    pub fn weight(&self, x: &T) -> Rational {
        self.weights.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn weights(&self) -> &BTreeMap<T, Rational> {
        &self.weights
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.weights.keys()
    }

    pub fn mass(&self) -> Rational {
        self.weights.values().fold(Rational::zero(), |a, b| a + b)
    }

    pub fn deficit(&self) -> Rational {
        Rational::one() - self.mass()
    }

    pub fn is_total(&self) -> bool {
        self.mass().is_one()
    }

    /// The functor action `D≤1(f)`, pushing weights forward.
    pub fn map<U: Ord + Clone + fmt::Debug, F: Fn(&T) -> U>(&self, f: F, target: BTreeSet<U>) -> Result<SubDistribution<U>> {
        SubDistribution::new(target, self.weights.iter().map(|(x, p)| (f(x), p.clone())))
    }

    /// `D≤1(X) → D=1(1 + X)`: the deficit goes to the deadlock point.
    pub fn to_total(&self) -> SubDistribution<Lifted<T>> {
        let carrier: BTreeSet<Lifted<T>> = std::iter::once(Lifted::Deadlock)
            .chain(self.carrier.iter().cloned().map(Lifted::Point))
            .collect();
        let mut weights: BTreeMap<Lifted<T>, Rational> =
            self.weights.iter().map(|(x, p)| (Lifted::Point(x.clone()), p.clone())).collect();
        let d = self.deficit();
        if !d.is_zero() {
            weights.insert(Lifted::Deadlock, d);
        }
        SubDistribution { carrier, weights }
    }

    /// Inverse of [`to_total`](Self::to_total): forgets the deadlock weight.
    pub fn from_total(d: &SubDistribution<Lifted<T>>) -> Self {
        let carrier = d
            .carrier
            .iter()
            .filter_map(|x| match x {
                Lifted::Point(p) => Some(p.clone()),
                Lifted::Deadlock => None,
            })
            .collect();
        let weights = d
            .weights
            .iter()
            .filter_map(|(x, p)| match x {
                Lifted::Point(v) => Some((v.clone(), p.clone())),
                Lifted::Deadlock => None,
            })
            .collect();
        Self { carrier, weights }
    }

    /// `Σ rᵢ φᵢ` for weights with `Σ rᵢ ≤ 1`.
    pub fn subconvex(carrier: BTreeSet<T>, parts: &[(Rational, SubDistribution<T>)]) -> Result<Self> {
        let total: Rational = parts.iter().fold(Rational::zero(), |a, (r, _)| a + r);
        if total > Rational::one() {
            return Err(SubDistError::MassExceedsOne(total.to_string()));
        }
        let mut w = Vec::new();
        for (r, d) in parts {
            if r.is_negative() {
                return Err(SubDistError::NegativeWeight {
                    element: format!("{d:?}"),
                    weight: r.to_string(),
                });
            }
            if d.carrier != carrier {
                return Err(SubDistError::CarrierMismatch("combined distributions live on different carriers".into()));
            }
            w.extend(d.weights.iter().map(|(x, p)| (x.clone(), r * p)));
        }
        Self::new(carrier, w)
    }

    /// Expected value `Σ φ(x) q(x)`.
    pub fn expect(&self, q: &FuzzyPredicate<T>) -> Rational {
        self.weights.iter().fold(Rational::zero(), |a, (x, p)| a + p * q.value(x))
    }
}

impl SubDistribution<String> {
    /// Reads `x 1/3` lines and an optional `carrier a b c` line. Without a
    /// carrier line the carrier is the set of mentioned elements.
    pub fn parse(text: &str) -> Result<Self> {
        let mut carrier = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let w: Vec<&str> = l.split_whitespace().collect();
            match w.as_slice() {
                ["carrier", rest @ ..] => carrier = Some(rest.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>()),
                [x, p] => {
                    let p = parse_rational(p).map_err(|msg| SubDistError::Parse { line, msg })?;
                    rows.push((x.to_string(), p));
                }
                _ => {
                    return Err(SubDistError::Parse {
                        line,
                        msg: format!("expected `element weight`, found `{l}`"),
                    })
                }
            }
        }
        let carrier = carrier.unwrap_or_else(|| rows.iter().map(|(x, _)| x.clone()).collect());
        Self::new(carrier, rows)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("carrier {}\n", self.carrier.iter().cloned().collect::<Vec<_>>().join(" "));
        for (x, p) in &self.weights {
            s.push_str(&format!("{x} {p}\n"));
        }
        s
    }
}

/// `1 + X`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lifted<T> {
    Deadlock,
    Point(T),
}

/// `μ(Φ)(x) = Σ_φ Φ(φ) φ(x)` on a carrier shared by all inner distributions.
pub fn multiply<T: Ord + Clone + fmt::Debug>(phi: &SubDistribution<SubDistribution<T>>, carrier: &BTreeSet<T>) -> Result<SubDistribution<T>> {
    let parts: Vec<(Rational, SubDistribution<T>)> = phi.weights.iter().map(|(d, p)| (p.clone(), d.clone())).collect();
    if let Some(bad) = phi.carrier.iter().find(|d| d.carrier != *carrier) {
        return Err(SubDistError::CarrierMismatch(format!("inner distribution {bad:?}")));
    }
    SubDistribution::subconvex(carrier.clone(), &parts)
}

/// A map `X → D≤1(Y)` given by its table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KleisliArrow<X: Ord, Y: Ord> {
    source: BTreeSet<X>,
    target: BTreeSet<Y>,
    table: BTreeMap<X, SubDistribution<Y>>,
}

impl<X: Ord + Clone + fmt::Debug, Y: Ord + Clone + fmt::Debug> KleisliArrow<X, Y> {
    /// Missing rows are the zero subdistribution.
    pub fn new(source: BTreeSet<X>, target: BTreeSet<Y>, rows: BTreeMap<X, SubDistribution<Y>>) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (x, d) in rows {
            if !source.contains(&x) {
                return Err(SubDistError::NotInCarrier(format!("{x:?}")));
            }
            if d.carrier != target {
                return Err(SubDistError::CarrierMismatch(format!("row {x:?} is not over the target set")));
            }
            table.insert(x, d);
        }
        for x in &source {
            table.entry(x.clone()).or_insert_with(|| SubDistribution::zero(target.clone()));
        }
        Ok(Self { source, target, table })
    }

    pub fn source(&self) -> &BTreeSet<X> {
        &self.source
    }

    pub fn target(&self) -> &BTreeSet<Y> {
        &self.target
    }

    pub fn apply(&self, x: &X) -> Result<&SubDistribution<Y>> {
        self.table.get(x).ok_or_else(|| SubDistError::NotInCarrier(format!("{x:?}")))
    }

    /// Pushes a distribution on `X` along the arrow: `μ ∘ D≤1(f)`.
    pub fn push(&self, d: &SubDistribution<X>) -> Result<SubDistribution<Y>> {
        if d.carrier != self.source {
            return Err(SubDistError::CarrierMismatch("distribution is not over the source set".into()));
        }
        let parts: Vec<_> = d.weights.iter().map(|(x, p)| (p.clone(), self.table[x].clone())).collect();
        SubDistribution::subconvex(self.target.clone(), &parts)
    }

    /// `g ∘ f` with `(g ∘ f)(x)(z) = Σ_y f(x)(y) g(y)(z)`.
    pub fn then<Z: Ord + Clone + fmt::Debug>(&self, g: &KleisliArrow<Y, Z>) -> Result<KleisliArrow<X, Z>> {
        if g.source != self.target {
            return Err(SubDistError::CarrierMismatch("target of the first arrow differs from the source of the second".into()));
        }
        let rows = self
            .table
            .iter()
            .map(|(x, d)| Ok((x.clone(), g.push(d)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        KleisliArrow::new(self.source.clone(), g.target.clone(), rows)
    }

    pub fn is_total(&self) -> bool {
        self.table.values().all(|d| d.is_total())
    }
}

impl<X: Ord + Clone + fmt::Debug> KleisliArrow<X, X> {
    /// The unit arrow `η`.
    pub fn identity(set: BTreeSet<X>) -> Self {
        let table = set
            .iter()
            .map(|x| (x.clone(), SubDistribution::unit(x.clone(), set.clone()).expect("in carrier")))
            .collect();
        Self {
            source: set.clone(),
            target: set,
            table,
        }
    }
}

impl KleisliArrow<String, String> {
    /// Reads `a -> b 1/2` lines, plus optional `source …` and `target …` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut source, mut target) = (None, None);
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let w: Vec<&str> = l.split_whitespace().collect();
            match w.as_slice() {
                ["source", rest @ ..] => source = Some(rest.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>()),
                ["target", rest @ ..] => target = Some(rest.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>()),
                [a, "->", b, p] => {
                    let p = parse_rational(p).map_err(|msg| SubDistError::Parse { line, msg })?;
                    rows.push((a.to_string(), b.to_string(), p));
                }
                _ => {
                    return Err(SubDistError::Parse {
                        line,
                        msg: format!("expected `a -> b weight`, found `{l}`"),
                    })
                }
            }
        }
        let source = source.unwrap_or_else(|| rows.iter().map(|r| r.0.clone()).collect());
        let target = target.unwrap_or_else(|| rows.iter().map(|r| r.1.clone()).collect());
        let mut grouped: BTreeMap<String, Vec<(String, Rational)>> = BTreeMap::new();
        for (a, b, p) in rows {
            grouped.entry(a).or_default().push((b, p));
        }
        let table = grouped
            .into_iter()
            .map(|(a, r)| Ok((a, SubDistribution::new(target.clone(), r)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(source, target, table)
    }

    pub fn to_text(&self) -> String {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(" ");
        let mut s = format!("source {}\ntarget {}\n", join(&self.source), join(&self.target));
        for (a, d) in &self.table {
            for (b, p) in &d.weights {
                s.push_str(&format!("{a} -> {b} {p}\n"));
            }
        }
        s
    }
}

/// A map `X → [0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FuzzyPredicate<T: Ord> {
    values: BTreeMap<T, Rational>,
}

impl<T: Ord + Clone + fmt::Debug> FuzzyPredicate<T> {
    pub fn new<I: IntoIterator<Item = (T, Rational)>>(carrier: &BTreeSet<T>, values: I) -> Result<Self> {
        let mut v: BTreeMap<T, Rational> = carrier.iter().map(|x| (x.clone(), Rational::zero())).collect();
        for (x, r) in values {
            if r.is_negative() || r > Rational::one() {
                return Err(SubDistError::OutOfRange {
                    element: format!("{x:?}"),
                    value: r.to_string(),
                });
            }
            match v.get_mut(&x) {
                Some(slot) => *slot = r,
                None => return Err(SubDistError::NotInCarrier(format!("{x:?}"))),
            }
        }
        Ok(Self { values: v })
    }

    pub fn constant(carrier: &BTreeSet<T>, r: Rational) -> Result<Self> {
        Self::new(carrier, carrier.iter().map(|x| (x.clone(), r.clone())))
    }

    /// The indicator of `{y}`.
    pub fn point(carrier: &BTreeSet<T>, y: &T) -> Result<Self> {
        Self::new(carrier, [(y.clone(), Rational::one())])
    }

    pub fn value(&self, x: &T) -> Rational {
        self.values.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn values(&self) -> &BTreeMap<T, Rational> {
        &self.values
    }

    pub fn carrier(&self) -> BTreeSet<T> {
        self.values.keys().cloned().collect()
    }
}

/// `wp(f)(q)(x) = Σ_y f(x)(y) q(y)`.
pub fn wp_discrete<X, Y>(f: &KleisliArrow<X, Y>, q: &FuzzyPredicate<Y>) -> Result<FuzzyPredicate<X>>
where
    X: Ord + Clone + fmt::Debug,
    Y: Ord + Clone + fmt::Debug,
{
    if q.carrier() != f.target {
        return Err(SubDistError::CarrierMismatch("predicate is not over the target set".into()));
    }
    FuzzyPredicate::new(&f.source, f.table.iter().map(|(x, d)| (x.clone(), d.expect(q))))
}

/// Recovers an arrow from its predicate transformer via
/// `f(x)(y) = wp(f)(1_{y})(x)`.
pub fn arrow_from_wp<X, Y, W>(source: &BTreeSet<X>, target: &BTreeSet<Y>, wp: W) -> Result<KleisliArrow<X, Y>>
where
    X: Ord + Clone + fmt::Debug,
    Y: Ord + Clone + fmt::Debug,
    W: Fn(&FuzzyPredicate<Y>) -> Result<FuzzyPredicate<X>>,
{
    let columns: Vec<(Y, FuzzyPredicate<X>)> = target
        .iter()
        .map(|y| Ok((y.clone(), wp(&FuzzyPredicate::point(target, y)?)?)))
        .collect::<Result<_>>()?;
    let rows = source
        .iter()
        .map(|x| {
            let d = SubDistribution::new(target.clone(), columns.iter().map(|(y, c)| (y.clone(), c.value(x))))?;
            Ok((x.clone(), d))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    KleisliArrow::new(source.clone(), target.clone(), rows)
}

/// `Pred≤1(X) = [0,1]^X` as an effect module with pointwise operations.
#[derive(Clone, Debug)]
pub struct PredicateSpace<T: Ord> {
    pub carrier: BTreeSet<T>,
}

impl<T: Ord + Clone + fmt::Debug> PredicateSpace<T> {
    pub fn new(carrier: BTreeSet<T>) -> Self {
        Self { carrier }
    }

    fn pointwise<F: Fn(&Rational, &Rational) -> Rational>(&self, p: &FuzzyPredicate<T>, q: &FuzzyPredicate<T>, f: F) -> Option<FuzzyPredicate<T>> {
        FuzzyPredicate::new(&self.carrier, self.carrier.iter().map(|x| (x.clone(), f(&p.value(x), &q.value(x))))).ok()
    }
}

impl<T: Ord + Clone + fmt::Debug> EffectStructure for PredicateSpace<T> {
    type Elem = FuzzyPredicate<T>;

    fn zero(&self) -> Self::Elem {
        FuzzyPredicate::constant(&self.carrier, Rational::zero()).expect("in range")
    }

    fn sum(&self, x: &Self::Elem, y: &Self::Elem) -> Option<Self::Elem> {
        self.pointwise(x, y, |a, b| a + b)
    }

    fn equal(&self, x: &Self::Elem, y: &Self::Elem) -> bool {
        x == y
    }

    fn show(&self, x: &Self::Elem) -> String {
        let parts: Vec<String> = x.values.iter().map(|(k, v)| format!("{k:?}:{v}")).collect();
        format!("{{{}}}", parts.join(", "))
    }

    fn one(&self) -> Option<Self::Elem> {
        FuzzyPredicate::constant(&self.carrier, Rational::one()).ok()
    }

    fn perp(&self, x: &Self::Elem) -> Option<Self::Elem> {
        let one = self.one()?;
        self.pointwise(&one, x, |a, b| a - b)
    }

    fn scale(&self, r: &Rational, x: &Self::Elem) -> Option<Self::Elem> {
        FuzzyPredicate::new(&self.carrier, x.values.iter().map(|(k, v)| (k.clone(), r * v))).ok()
    }

    fn difference(&self, y: &Self::Elem, x: &Self::Elem) -> Option<Self::Elem> {
        self.pointwise(y, x, |a, b| a - b)
    }
}

/// `wp(f)` checked as a generalized effect module map `Pred≤1(Y) → Pred≤1(X)`.
pub fn check_wp_homomorphism<X, Y>(f: &KleisliArrow<X, Y>, sample: &[FuzzyPredicate<Y>], scalars: &[Rational]) -> LawReport
where
    X: Ord + Clone + fmt::Debug,
    Y: Ord + Clone + fmt::Debug,
{
    let src = PredicateSpace::new(f.target.clone());
    let tgt = PredicateSpace::new(f.source.clone());
    let map = |q: &FuzzyPredicate<Y>| wp_discrete(f, q).expect("predicate over target");
    let mut r = check_homomorphism(map, &src, &tgt, sample, HomMode::GeMod, scalars);
    let unital = src.one().map(|one| tgt.equal(&map(&one), &tgt.one().expect("top")));
    let w = (unital != Some(f.is_total())).then(|| "wp(f)(1) = 1 disagrees with totality of f".to_string());
    r.push(Check::from_witness("wp/unital-iff-total", "discrete weakest precondition", w));
    r
}

// ---------------------------------------------------------------------------
// Evaluation maps

/// A named map into `[0, 1]`.
pub struct NamedHom<'a, E> {
    pub name: String,
    pub map: Box<dyn Fn(&E) -> Rational + 'a>,
}

impl<'a, E> NamedHom<'a, E> {
    pub fn new(name: impl Into<String>, map: impl Fn(&E) -> Rational + 'a) -> Self {
        Self {
            name: name.into(),
            map: Box::new(map),
        }
    }
}

/// Scalar maps `x ↦ r·x` on `[0,1]`, including the zero map.
pub fn scalar_homs(scalars: &[Rational]) -> Vec<NamedHom<'static, Rational>> {
    scalars
        .iter()
        .map(|r| {
            let r = r.clone();
            NamedHom::new(format!("scale {r}"), move |x: &Rational| &r * x)
        })
        .collect()
}

/// Coordinate maps `p ↦ p(x)` on `Pred≤1(X)` plus the zero map.
pub fn coordinate_homs<T: Ord + Clone + fmt::Debug + 'static>(carrier: &BTreeSet<T>) -> Vec<NamedHom<'static, FuzzyPredicate<T>>> {
    let mut out: Vec<NamedHom<'static, FuzzyPredicate<T>>> = carrier
        .iter()
        .map(|x| {
            let x = x.clone();
            NamedHom::new(format!("coordinate {x:?}"), move |p: &FuzzyPredicate<T>| p.value(&x))
        })
        .collect();
    out.push(NamedHom::new("zero", |_: &FuzzyPredicate<T>| Rational::zero()));
    out
}

/// Evaluation maps `φ ↦ Σ φ(x) q(x)` on `D≤1(X)`, one per predicate; these
/// are the affine maps into `[0, 1]`.
pub fn evaluation_homs<T: Ord + Clone + fmt::Debug + 'static>(predicates: &[FuzzyPredicate<T>]) -> Vec<NamedHom<'static, SubDistribution<T>>> {
    predicates
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let q = q.clone();
            NamedHom::new(format!("evaluate q{i}"), move |d: &SubDistribution<T>| d.expect(&q))
        })
        .collect()
}

const UNIT: &str = "unit of the effect-module/subconvex duality";
const COUNIT: &str = "counit of the effect-module/subconvex duality";

/// Checks that `η(x) = λf. f(x)` preserves `0`, `⊎` and scalars in `x`, and
/// is affine in `f` over subconvex mixtures of the given maps.
pub fn check_unit_maps<S: EffectStructure>(e: &S, sample: &[S::Elem], homs: &[NamedHom<'_, S::Elem>], scalars: &[Rational]) -> LawReport {
    let mut r = LawReport::new();
    let n = sample.len();
    let show = |x: &S::Elem| e.show(x);
    let eta = |x: &S::Elem, f: &NamedHom<'_, S::Elem>| (f.map)(x);

    let w = homs.iter().find_map(|f| {
        let v = eta(&e.zero(), f);
        (!v.is_zero()).then(|| format!("η(0)({}) = {v}", f.name))
    });
    r.push(Check::from_witness("unit/zero", UNIT, w));

    let w = homs.iter().find_map(|f| {
        (0..n).find_map(|i| {
            (0..n).find_map(|j| {
                let (x, y) = (&sample[i], &sample[j]);
                let xy = e.sum(x, y)?;
                (eta(&xy, f) != eta(x, f) + eta(y, f)).then(|| format!("{} at x={} y={}", f.name, show(x), show(y)))
            })
        })
    });
    r.push(Check::from_witness("unit/sum", UNIT, w));

    let w = homs.iter().find_map(|f| {
        scalars.iter().find_map(|s| {
            sample.iter().find_map(|x| {
                let sx = e.scale(s, x)?;
                (eta(&sx, f) != s * eta(x, f)).then(|| format!("{} at r={s} x={}", f.name, show(x)))
            })
        })
    });
    r.push(Check::from_witness("unit/scalar", UNIT, w));

    // Mixtures Σ rᵢ fᵢ with Σ rᵢ ≤ 1, evaluated pointwise.
    let w = sample.iter().find_map(|x| {
        let vals: Vec<Rational> = homs.iter().map(|f| eta(x, f)).collect();
        mixtures(homs.len()).into_iter().find_map(|m| {
            let mixed: Rational = m.iter().zip(&vals).fold(Rational::zero(), |a, (r, v)| a + r * v);
            let range_ok = !mixed.is_negative() && mixed <= Rational::one();
            (!range_ok).then(|| format!("mixture value {mixed} at x={}", show(x)))
        })
    });
    r.push(Check::from_witness("unit/affine-in-hom", UNIT, w));
    r
}

/// Checks that `ε(φ) = λf. f(φ)` is affine: `ε(Σ rᵢ φᵢ)(f) = Σ rᵢ f(φᵢ)`,
/// over seeded subconvex combinations of `sample`.
pub fn check_counit_maps<T, R>(rng: &mut R, carrier: &BTreeSet<T>, sample: &[SubDistribution<T>], homs: &[NamedHom<'_, SubDistribution<T>>], combinations: usize) -> LawReport
where
    T: Ord + Clone + fmt::Debug,
    R: Rng + ?Sized,
{
    let mut r = LawReport::new();
    let w = homs.iter().find_map(|f| {
        let v = (f.map)(&SubDistribution::zero(carrier.clone()));
        (!v.is_zero()).then(|| format!("{} on the zero subdistribution is {v}", f.name))
    });
    r.push(Check::from_witness("counit/zero", COUNIT, w));

    let mut witness = None;
    'outer: for _ in 0..combinations {
        let k = rng.gen_range(1..=sample.len().clamp(1, 4));
        let weights = random_subconvex_weights(rng, k);
        let parts: Vec<(Rational, SubDistribution<T>)> = weights
            .into_iter()
            .map(|w| (w, sample[rng.gen_range(0..sample.len())].clone()))
            .collect();
        let mixed = match SubDistribution::subconvex(carrier.clone(), &parts) {
            Ok(m) => m,
            Err(e) => {
                witness = Some(format!("combination left D≤1: {e}"));
                break;
            }
        };
        for f in homs {
            let lhs = (f.map)(&mixed);
            let rhs = parts.iter().fold(Rational::zero(), |a, (w, d)| a + w * (f.map)(d));
            if lhs != rhs {
                witness = Some(format!("{}: {lhs} ≠ {rhs}", f.name));
                break 'outer;
            }
        }
    }
    r.push(Check::from_witness("counit/affine", COUNIT, witness));
    r
}

/// Vertex weights of the subconvex simplex on `k` maps plus the uniform and
/// half-uniform mixtures.
fn mixtures(k: usize) -> Vec<Vec<Rational>> {
    let mut out = Vec::new();
    for i in 0..k {
        let mut v = vec![Rational::zero(); k];
        v[i] = Rational::one();
        out.push(v);
    }
    if k > 0 {
        out.push(vec![rat(1, k as i64); k]);
        out.push(vec![rat(1, 2 * k as i64); k]);
    }
    out
}

/// `k` nonnegative rationals with sum at most 1.
pub fn random_subconvex_weights<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<Rational> {
    let d = rng.gen_range(k as i64..=12.max(k as i64));
    let mut left = d;
    (0..k)
        .map(|_| {
            let a = rng.gen_range(0..=left);
            left -= a;
            rat(a, d)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random instances

/// The carrier `{x0, …, x(n−1)}`.
pub fn named_carrier(n: usize) -> BTreeSet<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

/// A random subdistribution with denominators up to 12, total possibly 1.
pub fn random_subdistribution<T: Ord + Clone + fmt::Debug, R: Rng + ?Sized>(rng: &mut R, carrier: &BTreeSet<T>) -> SubDistribution<T> {
    let weights = random_subconvex_weights(rng, carrier.len());
    SubDistribution::new(carrier.clone(), carrier.iter().cloned().zip(weights)).expect("subconvex weights")
}

pub fn random_arrow<X, Y, R>(rng: &mut R, source: &BTreeSet<X>, target: &BTreeSet<Y>) -> KleisliArrow<X, Y>
where
    X: Ord + Clone + fmt::Debug,
    Y: Ord + Clone + fmt::Debug,
    R: Rng + ?Sized,
{
    let rows = source.iter().map(|x| (x.clone(), random_subdistribution(rng, target))).collect();
    KleisliArrow::new(source.clone(), target.clone(), rows).expect("rows over target")
}

pub fn random_predicate<T: Ord + Clone + fmt::Debug, R: Rng + ?Sized>(rng: &mut R, carrier: &BTreeSet<T>) -> FuzzyPredicate<T> {
    FuzzyPredicate::new(
        carrier,
        carrier.iter().map(|x| {
            let d = rng.gen_range(1..=12);
            (x.clone(), rat(rng.gen_range(0..=d), d))
        }),
    )
    .expect("values in [0,1]")
}

// ---------------------------------------------------------------------------
// Monad-law suite

const MONAD: &str = "subdistribution monad";

/// Unit, multiplication and Kleisli laws, the `1 + X` round trip and the
/// arrow/predicate-transformer round trip on `instances` seeded instances
/// with carriers of size 1 to `max_size`.
pub fn check_monad_laws<R: Rng + ?Sized>(rng: &mut R, instances: usize, max_size: usize) -> LawReport {
    let mut r = LawReport::new();
    let mut wit: BTreeMap<&'static str, Option<String>> = [
        "monad/left-unit",
        "monad/right-unit",
        "monad/associativity",
        "kleisli/identity",
        "kleisli/associativity",
        "total/round-trip",
        "total/mass-one",
        "wp/round-trip",
        "wp/duality",
    ]
    .into_iter()
    .map(|k| (k, None))
    .collect();
    let note = |wit: &mut BTreeMap<&'static str, Option<String>>, k: &'static str, i: usize, ok: bool| {
        let slot = wit.get_mut(k).expect("known law");
        if !ok && slot.is_none() {
            *slot = Some(format!("instance {i}"));
        }
    };
    for i in 0..instances {
        let n = rng.gen_range(1..=max_size);
        let x = named_carrier(n);
        let d = random_subdistribution(rng, &x);

        // μ ∘ η_D = id and μ ∘ D(η) = id.
        let left = SubDistribution::unit(d.clone(), [d.clone()].into()).and_then(|phi| multiply(&phi, &x));
        note(&mut wit, "monad/left-unit", i, left.as_ref() == Ok(&d));
        let etas: BTreeSet<_> = x.iter().map(|v| SubDistribution::unit(v.clone(), x.clone()).expect("in carrier")).collect();
        let right = d
            .map(|v| SubDistribution::unit(v.clone(), x.clone()).expect("in carrier"), etas)
            .and_then(|phi| multiply(&phi, &x));
        note(&mut wit, "monad/right-unit", i, right.as_ref() == Ok(&d));

        // μ ∘ μ_D = μ ∘ D(μ) on a random element of D(D(D(X))).
        let inner: Vec<SubDistribution<String>> = (0..3).map(|_| random_subdistribution(rng, &x)).collect();
        let mid_carrier: BTreeSet<_> = inner.iter().cloned().collect();
        let mids: Vec<SubDistribution<SubDistribution<String>>> = (0..3).map(|_| random_subdistribution(rng, &mid_carrier)).collect();
        let outer_carrier: BTreeSet<_> = mids.iter().cloned().collect();
        let big = random_subdistribution(rng, &outer_carrier);
        let a = multiply(&big, &mid_carrier).and_then(|m| multiply(&m, &x));
        let flat: BTreeSet<_> = mids.iter().map(|m| multiply(m, &x).expect("common carrier")).collect();
        let b = big
            .map(|m| multiply(m, &x).expect("common carrier"), flat.clone())
            .and_then(|m| multiply(&m, &x));
        note(&mut wit, "monad/associativity", i, a.is_ok() && a == b);

        // Kleisli category laws.
        let y = named_carrier(rng.gen_range(1..=max_size));
        let z = named_carrier(rng.gen_range(1..=max_size));
        let f = random_arrow(rng, &x, &y);
        let g = random_arrow(rng, &y, &z);
        let h = random_arrow(rng, &z, &x);
        let id_ok = KleisliArrow::identity(x.clone()).then(&f).as_ref() == Ok(&f)
            && f.then(&KleisliArrow::identity(y.clone())).as_ref() == Ok(&f);
        note(&mut wit, "kleisli/identity", i, id_ok);
        let lhs = f.then(&g).and_then(|fg| fg.then(&h));
        let rhs = g.then(&h).and_then(|gh| f.then(&gh));
        note(&mut wit, "kleisli/associativity", i, lhs.is_ok() && lhs == rhs);

        let t = d.to_total();
        note(&mut wit, "total/round-trip", i, SubDistribution::from_total(&t) == d);
        note(&mut wit, "total/mass-one", i, t.is_total());

        let back = arrow_from_wp(&x, &y, |q| wp_discrete(&f, q));
        note(&mut wit, "wp/round-trip", i, back.as_ref() == Ok(&f));

        let q = random_predicate(rng, &y);
        let lhs = wp_discrete(&f, &q).map(|p| d.expect(&p));
        let rhs = f.push(&d).map(|pd| pd.expect(&q));
        note(&mut wit, "wp/duality", i, lhs.is_ok() && lhs == rhs);
    }
    for (k, w) in wit {
        r.push(Check::from_witness(k, MONAD, w));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::seeded;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn dist(c: &BTreeSet<String>, w: &[(&str, i64, i64)]) -> SubDistribution<String> {
        SubDistribution::new(c.clone(), w.iter().map(|&(x, n, d)| (x.to_string(), rat(n, d)))).unwrap()
    }

    #[test]
    fn unit_and_validation() {
        let c = set(&["a", "b"]);
        let u = SubDistribution::unit("a".to_string(), c.clone()).unwrap();
        assert_eq!(u.weight(&"a".into()), Rational::one());
        assert!(u.is_total());
        assert!(matches!(SubDistribution::unit("z".to_string(), c.clone()), Err(SubDistError::NotInCarrier(_))));
        assert!(matches!(
            SubDistribution::new(c.clone(), [("a".to_string(), rat(2, 3)), ("b".to_string(), rat(1, 2))]),
            Err(SubDistError::MassExceedsOne(_))
        ));
        assert!(matches!(
            SubDistribution::new(c, [("a".to_string(), rat(-1, 3))]),
            Err(SubDistError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn multiplication_examples() {
        let c = set(&["a", "b"]);
        let p1 = dist(&c, &[("a", 1, 2)]);
        let p2 = dist(&c, &[("b", 1, 1)]);
        let outer: BTreeSet<_> = [p1.clone(), p2.clone()].into();
        let phi = SubDistribution::new(outer, [(p1, rat(1, 2)), (p2, rat(1, 4))]).unwrap();
        assert_eq!(multiply(&phi, &c).unwrap(), dist(&c, &[("a", 1, 4), ("b", 1, 4)]));

        let ua = dist(&c, &[("a", 1, 1)]);
        let ub = dist(&c, &[("b", 1, 1)]);
        let phi = SubDistribution::new([ua.clone(), ub.clone()].into(), [(ua, rat(1, 2)), (ub, rat(1, 4))]).unwrap();
        assert_eq!(multiply(&phi, &c).unwrap().mass(), rat(3, 4));

        let other = dist(&set(&["a"]), &[("a", 1, 1)]);
        let bad = SubDistribution::unit(other, BTreeSet::from([dist(&set(&["a"]), &[("a", 1, 1)])])).unwrap();
        assert!(matches!(multiply(&bad, &c), Err(SubDistError::CarrierMismatch(_))));
    }

    #[test]
    fn kleisli_leak_example() {
        let a = set(&["a"]);
        let b = set(&["b"]);
        let f = KleisliArrow::new(a.clone(), a.clone(), [("a".to_string(), dist(&a, &[("a", 1, 2)]))].into()).unwrap();
        let g = KleisliArrow::new(a.clone(), b.clone(), [("a".to_string(), dist(&b, &[("b", 1, 2)]))].into()).unwrap();
        let gf = f.then(&g).unwrap();
        assert_eq!(gf.apply(&"a".into()).unwrap(), &dist(&b, &[("b", 1, 4)]));
        assert!(matches!(g.then(&g), Err(SubDistError::CarrierMismatch(_))));
    }

    #[test]
    fn total_form() {
        let c = set(&["a", "b"]);
        let d = dist(&c, &[("a", 1, 3)]);
        let t = d.to_total();
        assert_eq!(t.weight(&Lifted::Deadlock), rat(2, 3));
        assert_eq!(t.weight(&Lifted::Point("a".into())), rat(1, 3));
        assert!(t.is_total());
        let full = dist(&c, &[("a", 1, 3), ("b", 2, 3)]);
        assert_eq!(full.to_total().weight(&Lifted::Deadlock), Rational::zero());
        assert_eq!(SubDistribution::from_total(&t), d);
    }

    #[test]
    fn wp_examples() {
        let a = set(&["a"]);
        let b = set(&["b"]);
        let f = KleisliArrow::new(a.clone(), b.clone(), [("a".to_string(), dist(&b, &[("b", 1, 2)]))].into()).unwrap();
        let q = FuzzyPredicate::constant(&b, Rational::one()).unwrap();
        assert_eq!(wp_discrete(&f, &q).unwrap().value(&"a".into()), rat(1, 2));
        let id = KleisliArrow::identity(b.clone());
        let q = FuzzyPredicate::new(&b, [("b".to_string(), rat(2, 7))]).unwrap();
        assert_eq!(wp_discrete(&id, &q).unwrap(), q);
    }

    #[test]
    fn wp_is_a_gemod_map() {
        let mut rng = seeded(11);
        let x = named_carrier(3);
        let y = named_carrier(2);
        let f = random_arrow(&mut rng, &x, &y);
        let sample: Vec<_> = (0..8).map(|_| random_predicate(&mut rng, &y)).collect();
        let r = check_wp_homomorphism(&f, &sample, &crate::effect::default_scalars());
        assert!(r.all_passed(), "{r}");
    }

    #[test]
    fn monad_suite() {
        let mut rng = seeded(12);
        let r = check_monad_laws(&mut rng, 30, 4);
        assert!(r.all_passed(), "{r}");
    }

    #[test]
    fn adjunction_maps() {
        use crate::effect::UnitInterval;
        let mut rng = seeded(13);
        let sample = crate::effect::unit_interval_sample(&mut rng, 16);
        let s = crate::effect::default_scalars();
        let r = check_unit_maps(&UnitInterval, &sample, &scalar_homs(&s), &s);
        assert!(r.all_passed(), "{r}");

        let c = set(&["a", "b"]);
        let preds: Vec<FuzzyPredicate<String>> = (0..4).map(|_| random_predicate(&mut rng, &c)).collect();
        let space = PredicateSpace::new(c.clone());
        let r = check_unit_maps(&space, &preds, &coordinate_homs(&c), &s);
        assert!(r.all_passed(), "{r}");

        let dists: Vec<_> = (0..5).map(|_| random_subdistribution(&mut rng, &c)).collect();
        let r = check_counit_maps(&mut rng, &c, &dists, &evaluation_homs(&preds), 50);
        assert!(r.all_passed(), "{r}");

        // A non-affine map is caught.
        let squash = vec![NamedHom::new("square", |d: &SubDistribution<String>| d.mass() * d.mass())];
        let r = check_counit_maps(&mut rng, &c, &dists, &squash, 50);
        assert!(!r.all_passed());
    }

    #[test]
    fn text_round_trips() {
        let d = SubDistribution::parse("a 1/3\nb 1/6 # comment\n").unwrap();
        assert_eq!(d.mass(), rat(1, 2));
        assert_eq!(SubDistribution::parse(&d.to_text()).unwrap(), d);
        let f = KleisliArrow::parse("a -> b 1/2\na -> c 1/4\nb -> c 1\n").unwrap();
        assert_eq!(f.source(), &set(&["a", "b"]));
        assert_eq!(KleisliArrow::parse(&f.to_text()).unwrap(), f);
        assert!(matches!(SubDistribution::parse("a 1/2 3\n"), Err(SubDistError::Parse { line: 1, .. })));
        assert!(matches!(KleisliArrow::parse("a -> b 2/3\na -> c 2/3\n"), Err(SubDistError::MassExceedsOne(_))));
    }
}
