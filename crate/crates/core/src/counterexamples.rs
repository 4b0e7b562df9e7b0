//! Failure witnesses outside the W* setting.
//!
//! * An increasing chain of piecewise-linear functions in `C([0,1])` whose
//!   pointwise supremum is a step, together with a constructor that strictly
//!   improves any continuous upper bound, so no upper bound is least.
//! * Projection lattices of `M_n` (meet, join, order, atoms) and the
//!   truncated `ℓ²` family `e'_n = e_1 + e_n / n`, whose joins approach `e_1`
//!   without ever containing it.
//!
//! # Upper bounds of the chain
//!
//! `f_n` is `0` on `[0, ½]`, rises linearly to `1` at `½ + 2^{-(n+1)}` and is
//! `1` afterwards. A continuous `g` dominates every `f_n` iff `g ≥ 0` on
//! `[0, ½]` and `g ≥ 1` on `[½, 1]`. Sufficiency: `f_n ≤ 1` everywhere and
//! `f_n = 0` on `[0, ½]`. Necessity: every `x > ½` has some `n` with
//! `f_n(x) = 1`, so `g ≥ 1` on `(½, 1]`, and continuity gives `g(½) ≥ 1`.
//! For piecewise-linear `g` both conditions are decided exactly at the
//! breakpoints that lie in each interval plus its endpoints.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::effect::{parse_rational, rat, Rational};
use crate::matrix::{hermitian_eigen, operator_norm, svd, vec_norm, ComplexMatrix, MatrixError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CounterexampleError {
    #[error("breakpoints must strictly increase from 0 to 1: {0}")]
    BadBreakpoints(String),
    #[error("chain index {0} exceeds 40")]
    IndexTooLarge(u32),
    #[error("not an upper bound of the chain: g({point}) = {value} < {required}")]
    NotUpperBound { point: String, value: String, required: String },
    #[error("delta must lie in (0, 1/2], got {0}")]
    BadDelta(String),
    #[error("not a projection: {0}")]
    NotProjection(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("N must lie in 2..=64, got {0}")]
    BadTruncation(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

pub type Result<T> = std::result::Result<T, CounterexampleError>;

/// A continuous piecewise-linear function on `[0, 1]` with rational
/// breakpoints and values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseLinear {
    points: Vec<(Rational, Rational)>,
}

impl PiecewiseLinear {
    /// Breakpoints must strictly increase from `0` to `1`; a repeated
    /// abscissa (a jump) is rejected.
    pub fn new(points: Vec<(Rational, Rational)>) -> Result<Self> {
        let ok = points.len() >= 2
            && points[0].0.is_zero()
            && points[points.len() - 1].0.is_one()
            && points.windows(2).all(|w| w[0].0 < w[1].0);
        if !ok {
            let xs: Vec<String> = points.iter().map(|p| p.0.to_string()).collect();
            return Err(CounterexampleError::BadBreakpoints(xs.join(", ")));
        }
        Ok(Self { points }.simplified())
    }

    pub fn constant(c: Rational) -> Self {
        Self {
            points: vec![(Rational::zero(), c.clone()), (Rational::one(), c)],
        }
    }

    /// `0` on `[0, ½ − δ]`, linear up to `1` at `½`, then `1`.
    pub fn ramp(delta: &Rational) -> Result<Self> {
        let half = rat(1, 2);
        if !delta.is_positive() || *delta > half {
            return Err(CounterexampleError::BadDelta(delta.to_string()));
        }
        let mut pts = vec![(Rational::zero(), Rational::zero())];
        if *delta < half {
            pts.push((&half - delta, Rational::zero()));
        }
        pts.push((half, Rational::one()));
        pts.push((Rational::one(), Rational::one()));
        Self::new(pts)
    }

    pub fn points(&self) -> &[(Rational, Rational)] {
        &self.points
    }

    pub fn breakpoints(&self) -> Vec<Rational> {
        self.points.iter().map(|p| p.0.clone()).collect()
    }

    /// Values outside `[0, 1]` are clamped to the end values.
    pub fn eval(&self, x: &Rational) -> Rational {
        let pts = &self.points;
        if *x <= pts[0].0 {
            return pts[0].1.clone();
        }
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
            if x <= x1 {
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        pts[pts.len() - 1].1.clone()
    }

    /// Drops breakpoints lying on the segment between their neighbours.
    fn simplified(mut self) -> Self {
        let mut i = 1;
        while i + 1 < self.points.len() {
            let ((x0, y0), (x1, y1), (x2, y2)) = (&self.points[i - 1], &self.points[i], &self.points[i + 1]);
            if (y1 - y0) * (x2 - x1) == (y2 - y1) * (x1 - x0) {
                self.points.remove(i);
            } else {
                i += 1;
            }
        }
        self
    }

    /// Union of both breakpoint sets plus all crossings of `self − other`.
    fn merged_grid(&self, other: &Self) -> Vec<Rational> {
        let mut xs: Vec<Rational> = self.breakpoints().into_iter().chain(other.breakpoints()).collect();
        xs.sort();
        xs.dedup();
        let mut out = Vec::with_capacity(xs.len() * 2);
        for w in xs.windows(2) {
            out.push(w[0].clone());
            let d0 = self.eval(&w[0]) - other.eval(&w[0]);
            let d1 = self.eval(&w[1]) - other.eval(&w[1]);
            if (d0.is_positive() && d1.is_negative()) || (d0.is_negative() && d1.is_positive()) {
                out.push(&w[0] + (&w[1] - &w[0]) * &d0 / (&d0 - &d1));
            }
        }
        out.push(xs[xs.len() - 1].clone());
        out
    }

    fn combine(&self, other: &Self, f: impl Fn(Rational, Rational) -> Rational) -> Self {
        let pts = self
            .merged_grid(other)
            .into_iter()
            .map(|x| {
                let v = f(self.eval(&x), other.eval(&x));
                (x, v)
            })
            .collect();
        Self { points: pts }.simplified()
    }

    pub fn min(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.min(b))
    }

    pub fn max(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.max(b))
    }

    /// Pointwise `self ≤ other`, decided exactly on the merged breakpoints.
    pub fn leq(&self, other: &Self) -> bool {
        self.first_excess(other).is_none()
    }

    /// A breakpoint where `self > other`.
    pub fn first_excess(&self, other: &Self) -> Option<Rational> {
        self.merged_grid(other).into_iter().find(|x| self.eval(x) > other.eval(x))
    }

    /// Reads `x y` lines of rationals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let w: Vec<&str> = l.split_whitespace().collect();
            let [x, y] = w.as_slice() else {
                return Err(CounterexampleError::Parse {
                    line,
                    msg: format!("expected `x y`, found `{l}`"),
                });
            };
            let p = |s: &str| parse_rational(s).map_err(|msg| CounterexampleError::Parse { line, msg });
            pts.push((p(x)?, p(y)?));
        }
        Self::new(pts)
    }

    pub fn to_text(&self) -> String {
        self.points.iter().map(|(x, y)| format!("{x} {y}\n")).collect()
    }
}

impl fmt::Display for PiecewiseLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.points.iter().map(|(x, y)| format!("({x}, {y})")).collect();
        write!(f, "PL[{}]", parts.join(" "))
    }
}

fn pow2(k: u32) -> Rational {
    Rational::from_integer(BigInt::one() << k)
}

/// `f_n`, with knee at `½ + 2^{-(n+1)}`.
pub fn chain_member(n: u32) -> Result<PiecewiseLinear> {
    if n > 40 {
        return Err(CounterexampleError::IndexTooLarge(n));
    }
    let half = rat(1, 2);
    let knee = &half + Rational::one() / pow2(n + 1);
    let mut pts = vec![(Rational::zero(), Rational::zero()), (half, Rational::zero()), (knee.clone(), Rational::one())];
    if knee < Rational::one() {
        pts.push((Rational::one(), Rational::one()));
    }
    PiecewiseLinear::new(pts)
}

/// The pointwise supremum of the chain: `0` up to `½`, `1` after.
pub fn chain_supremum_at(x: &Rational) -> Rational {
    if *x <= rat(1, 2) {
        Rational::zero()
    } else {
        Rational::one()
    }
}

/// Rejects `g` unless `g ≥ 0` on `[0, ½]` and `g ≥ 1` on `[½, 1]`.
pub fn check_upper_bound(g: &PiecewiseLinear) -> Result<()> {
    let half = rat(1, 2);
    let mut left: Vec<Rational> = g.breakpoints().into_iter().filter(|x| *x <= half).collect();
    left.push(half.clone());
    let mut right: Vec<Rational> = g.breakpoints().into_iter().filter(|x| *x >= half).collect();
    right.push(half);
    let fail = |x: &Rational, req: Rational| CounterexampleError::NotUpperBound {
        point: x.to_string(),
        value: g.eval(x).to_string(),
        required: req.to_string(),
    };
    if let Some(x) = left.iter().find(|x| g.eval(x).is_negative()) {
        return Err(fail(x, Rational::zero()));
    }
    if let Some(x) = right.iter().find(|x| g.eval(x) < Rational::one()) {
        return Err(fail(x, Rational::one()));
    }
    Ok(())
}

/// A strictly smaller upper bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoLubWitness {
    pub improved: PiecewiseLinear,
    /// The ramp width that produced a strict decrease.
    pub delta: Rational,
    /// A rational point with `improved(point) < g(point)`.
    pub point: Rational,
    pub gap: Rational,
}

const MAX_HALVINGS: u32 = 256;

/// `min(g, r_δ)`, halving `δ` until the result is strictly below `g`.
pub fn no_least_upper_bound_witness(g: &PiecewiseLinear, delta: &Rational) -> Result<NoLubWitness> {
    check_upper_bound(g)?;
    let mut d = delta.clone();
    PiecewiseLinear::ramp(&d)?;
    for _ in 0..MAX_HALVINGS {
        let improved = g.min(&PiecewiseLinear::ramp(&d)?);
        if let Some(point) = g.first_excess(&improved) {
            let gap = g.eval(&point) - improved.eval(&point);
            return Ok(NoLubWitness {
                improved,
                delta: d,
                point,
                gap,
            });
        }
        d /= Rational::from_integer(2.into());
    }
    unreachable!("a continuous upper bound exceeds a steep enough ramp left of 1/2")
}

// ---------------------------------------------------------------------------
// Projections

/// Orthogonal projection in `M_n`: `P = P* = P²` up to tolerance.
#[derive(Clone, Debug)]
pub struct Projection {
    p: ComplexMatrix,
}

const RANK_REL: f64 = 1e-10;

impl Projection {
    pub fn new(p: ComplexMatrix, tol: f64) -> Result<Self> {
        if !p.is_square() {
            return Err(CounterexampleError::NotProjection(format!("{}x{} is not square", p.rows(), p.cols())));
        }
        let sa = operator_norm(&(&p - &p.adjoint()));
        let idem = operator_norm(&(&p - &(&p * &p)));
        if sa > tol || idem > tol {
            return Err(CounterexampleError::NotProjection(format!("‖P − P*‖ = {sa:.3e}, ‖P − P²‖ = {idem:.3e}")));
        }
        Ok(Self { p })
    }

    pub fn zero(n: usize) -> Self {
        Self { p: ComplexMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { p: ComplexMatrix::identity(n) }
    }

    /// Projection onto the span of arbitrary vectors.
    pub fn onto_span(n: usize, vectors: &[Vec<Complex64>]) -> Result<Self> {
        if vectors.is_empty() {
            return Ok(Self::zero(n));
        }
        let a = ComplexMatrix::from_columns(n, vectors);
        Ok(Self::from_orthonormal(n, &svd(&a)?.range(RANK_REL)))
    }

    fn from_orthonormal(n: usize, basis: &[Vec<Complex64>]) -> Self {
        let mut p = ComplexMatrix::zeros(n, n);
        for u in basis {
            p = &p + &ComplexMatrix::projector(u);
        }
        Self { p }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn rank(&self) -> usize {
        self.p.trace().re.round() as usize
    }

    /// Orthonormal basis of the range.
    pub fn range(&self) -> Vec<Vec<Complex64>> {
        let e = hermitian_eigen(&self.p, f64::INFINITY).expect("Hermitian");
        (0..self.dim()).filter(|&j| e.eigenvalues[j] > 0.5).map(|j| e.vector(j)).collect()
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(CounterexampleError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// Projection onto `ran p ∩ ran q`: the null space of `[I − p; I − q]`.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let n = self.dim();
        let id = ComplexMatrix::identity(n);
        let (a, b) = (&id - &self.p, &id - &other.p);
        let mut stacked = ComplexMatrix::zeros(2 * n, n);
        for i in 0..n {
            for j in 0..n {
                stacked[(i, j)] = a[(i, j)];
                stacked[(n + i, j)] = b[(i, j)];
            }
        }
        let s = svd(&stacked)?;
        // An all-zero stack has no scale; its null space is everything.
        let basis = if s.max_singular_value() == 0.0 {
            (0..n).map(|j| id.column(j)).collect()
        } else {
            s.null_space(RANK_REL)
        };
        Ok(Self::from_orthonormal(n, &basis))
    }

    /// Projection onto `span(ran p ∪ ran q)`: the range of `[p q]`.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let n = self.dim();
        let mut side = ComplexMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                side[(i, j)] = self.p[(i, j)];
                side[(i, n + j)] = other.p[(i, j)];
            }
        }
        Ok(Self::from_orthonormal(n, &svd(&side)?.range(RANK_REL)))
    }

    /// `‖pq − p‖` in operator norm; zero exactly when `p ≤ q`.
    pub fn leq_residual(&self, other: &Self) -> Result<f64> {
        self.same_dim(other)?;
        Ok(operator_norm(&(&(&self.p * &other.p) - &self.p)))
    }

    pub fn leq(&self, other: &Self, tol: f64) -> Result<bool> {
        Ok(self.leq_residual(other)? <= tol)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        operator_norm(&(&self.p - &other.p))
    }

    /// Rank-one projections onto an orthonormal eigenbasis of the range.
    pub fn atoms(&self) -> Vec<Projection> {
        self.range().iter().map(|u| Self { p: ComplexMatrix::projector(u) }).collect()
    }
}

/// Meet, join, both orders and the atoms of the join.
#[derive(Clone, Debug)]
pub struct LatticeOps {
    pub meet: Projection,
    pub join: Projection,
    pub p_leq_q: bool,
    pub q_leq_p: bool,
    pub atoms_of_join: Vec<Projection>,
}

pub fn projection_lattice_ops(p: &Projection, q: &Projection, tol: f64) -> Result<LatticeOps> {
    let join = p.join(q)?;
    Ok(LatticeOps {
        meet: p.meet(q)?,
        atoms_of_join: join.atoms(),
        join,
        p_leq_q: p.leq(q, tol)?,
        q_leq_p: q.leq(p, tol)?,
    })
}

// ---------------------------------------------------------------------------
// Truncated ℓ²

/// One row of the truncation table.
#[derive(Clone, Debug)]
pub struct Ell2Row {
    pub n: usize,
    /// `‖(1 − p'_N) e_1‖`.
    pub distance: f64,
    /// `‖p_1 p'_N − p_1‖`, positive when `p_1 ≰ p'_N`.
    pub leq_residual: f64,
    pub p1_leq_join: bool,
    pub join: Projection,
}

/// `e'_k = e_1 + e_k / k` for `k = 2..=N` in `ℂ^N`, the join
/// `p'_N = p_2 ∨ … ∨ p_N` and the distance from `e_1` to its range.
pub fn ell2_truncation_demo(n: usize, tol: f64) -> Result<Ell2Row> {
    if !(2..=64).contains(&n) {
        return Err(CounterexampleError::BadTruncation(n));
    }
    let e = |k: usize| {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[k] = Complex64::new(1.0, 0.0);
        v
    };
    let mut join = Projection::zero(n);
    for k in 2..=n {
        let mut v = e(0);
        v[k - 1] = Complex64::new(1.0 / k as f64, 0.0);
        join = join.join(&Projection::onto_span(n, &[v])?)?;
    }
    let e1 = e(0);
    let proj = join.matrix().mul_vec(&e1);
    let diff: Vec<Complex64> = e1.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let p1 = Projection { p: ComplexMatrix::projector(&e1) };
    let leq_residual = p1.leq_residual(&join)?;
    Ok(Ell2Row {
        n,
        distance: vec_norm(&diff),
        leq_residual,
        p1_leq_join: leq_residual <= tol,
        join,
    })
}

/// `1 / √(1 + Σ_{k=2}^N k²)`.
pub fn ell2_closed_form(n: usize) -> f64 {
    let s: f64 = (2..=n).map(|k| (k * k) as f64).sum();
    1.0 / (1.0 + s).sqrt()
}
