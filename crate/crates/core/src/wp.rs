//! Weakest preconditions for a small quantum command language.
//!
//! Programs act on one ambient finite-dimensional W*-algebra. Their meaning
//! is a predicate transformer in the Heisenberg picture: a sub-unital CP map
//! sending a postcondition effect to its weakest precondition. Loops are
//! interpreted as the least upper bound of their Kleene iterates. State
//! transformers are always obtained as duals.
//!
//! # Surface syntax
//!
//! ```text
//! ; comments run to the end of the line
//! (algebra 2)                       ; block sizes, optional
//! (def R (scale (sqrt 1/2) (matrix (1 1) (1 -1))))
//! (program
//!   (seq (unitary H)
//!        (while (guard K0 K1) (unitary R))))
//! ```
//!
//! Commands: `skip`, `abort`, `(unitary U …)` with one matrix per block,
//! `(seq P …)`, `(choice p P Q)`, `(measure (branch KS P) …)` and
//! `(while (guard EXIT CONT) BODY)`, also written
//! `(guard (exit KS) (continue KS))`. A Kraus set `KS` is a matrix or
//! `(kraus item …)` where an item is a matrix or `(item s t M)` mapping
//! source block `s` to target block `t`. Matrices: the names `I X Y Z H S T
//! CNOT K0 K1`, definitions, `(matrix (row …) …)`, `(id n)`, `(kron A B …)`,
//! `(mul A B …)`, `(scale c A)` and `(adjoint A)`. Scalars are decimals,
//! rationals, `a+bi` literals or `(sqrt r)`.
//!
//! Every measurement and guard must be a unital instrument, `Σ K* K = 1` in
//! each block; a violation is reported with the spectrum of the sum.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::cpmaps::{lub_monotone_maps, CpError, KrausItem, KrausMap, MapLubPolicy, TransferMatrix};
use crate::effect::{check_homomorphism, default_scalars, matrix_effect_sample, parse_rational, rat, to_f64, HomMode, MatrixEffects, Rational};
use crate::matrix::{decompose_general, gates, hermitian_eigen, parse_complex, ComplexMatrix, MatrixError};
use crate::report::{Check, LawReport};
use crate::wstar::{pairing, AlgebraElement, AlgebraSignature, Effect, NormalState, WstarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{what} is not a unital instrument: Σ K*K in block {block} has spectrum {spectrum:?}")]
    NonUnital { what: String, block: usize, spectrum: Vec<f64> },
    #[error("unitary for block {block} is not unitary (‖U*U − 1‖ = {defect:.3e})")]
    NotUnitary { block: usize, defect: f64 },
    #[error("probability {0} outside [0, 1]")]
    BadProbability(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("program contains a loop; exact reconstruction needs a loop-free program")]
    LoopPresent,
    #[error("weakest precondition is not an effect: {0}")]
    NotEffect(String),
    #[error(transparent)]
    Cp(#[from] CpError),
    #[error(transparent)]
    Wstar(#[from] WstarError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

pub type Result<T> = std::result::Result<T, WpError>;

/// Unitarity and instrument checks.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Kraus forms with more operators than this are dropped in favour of the
/// transfer matrix alone.
pub const MAX_KRAUS_ITEMS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub kraus: Vec<KrausItem>,
    pub program: Program,
}

/// Loop guard: the exit and continue operators together form a unital
/// instrument.
#[derive(Clone, Debug, PartialEq)]
pub struct Guard {
    pub exit: Vec<KrausItem>,
    pub cont: Vec<KrausItem>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Program {
    Skip,
    Abort,
    /// One unitary per block, acting as `x ↦ U* x U`.
    Unitary(Vec<ComplexMatrix>),
    Measure(Vec<Branch>),
    Choice { p: Rational, left: Box<Program>, right: Box<Program> },
    Seq(Box<Program>, Box<Program>),
    While { guard: Guard, body: Box<Program> },
}

impl Program {
    pub fn seq(first: Program, second: Program) -> Self {
        Program::Seq(Box::new(first), Box::new(second))
    }

    pub fn choice(p: Rational, left: Program, right: Program) -> Self {
        Program::Choice {
            p,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn while_loop(guard: Guard, body: Program) -> Self {
        Program::While { guard, body: Box::new(body) }
    }

    /// A single-block unitary.
    pub fn unitary(u: ComplexMatrix) -> Self {
        Program::Unitary(vec![u])
    }

    pub fn has_loop(&self) -> bool {
        match self {
            Program::Skip | Program::Abort | Program::Unitary(_) => false,
            Program::Measure(bs) => bs.iter().any(|b| b.program.has_loop()),
            Program::Choice { left, right, .. } => left.has_loop() || right.has_loop(),
            Program::Seq(a, b) => a.has_loop() || b.has_loop(),
            Program::While { .. } => true,
        }
    }

    pub fn size(&self) -> usize {
        1 + match self {
            Program::Skip | Program::Abort | Program::Unitary(_) => 0,
            Program::Measure(bs) => bs.iter().map(|b| b.program.size()).sum(),
            Program::Choice { left, right, .. } => left.size() + right.size(),
            Program::Seq(a, b) => a.size() + b.size(),
            Program::While { body, .. } => body.size(),
        }
    }
}

/// Single-block Kraus items `0 → 0`.
pub fn items(ops: Vec<ComplexMatrix>) -> Vec<KrausItem> {
    ops.into_iter().map(|op| KrausItem { source: 0, target: 0, op }).collect()
}

/// A program together with its ambient algebra, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumProgram {
    signature: AlgebraSignature,
    body: Program,
}

/// Loop policy: stop when the transfer step drops to `step_tol` or after
/// `max_iterations`, reporting the residual either way.
#[derive(Clone, Copy, Debug)]
pub struct LoopPolicy {
    pub step_tol: f64,
    pub max_iterations: usize,
    pub order_tol: f64,
}

impl Default for LoopPolicy {
    fn default() -> Self {
        Self {
            step_tol: 1e-12,
            max_iterations: 100_000,
            order_tol: 1e-9,
        }
    }
}

/// Aggregated fixed-point statistics over all loops of a program.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl LoopStats {
    fn none() -> Self {
        Self {
            iterations: 0,
            residual: 0.0,
            converged: true,
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            iterations: self.iterations + other.iterations,
            residual: self.residual.max(other.residual),
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Denotation {
    pub transfer: TransferMatrix,
    /// Present for loop-free programs of moderate Kraus rank.
    pub kraus: Option<KrausMap>,
    pub loops: LoopStats,
}

#[derive(Clone, Debug)]
pub struct WpResult {
    pub effect: Effect,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct DualityReport {
    /// `⟨ρ, wp(q)⟩`.
    pub precondition_pairing: f64,
    /// `⟨f_*(ρ), q⟩`.
    pub state_pairing: f64,
    pub discrepancy: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct RoundTripReport {
    pub distance: f64,
    pub holds: bool,
}

impl QuantumProgram {
    pub fn new(signature: AlgebraSignature, body: Program) -> Result<Self> {
        validate(&signature, &body)?;
        Ok(Self { signature, body })
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn body(&self) -> &Program {
        &self.body
    }

    pub fn denote(&self, policy: LoopPolicy) -> Result<Denotation> {
        denote(&self.signature, &self.body, policy)
    }

    /// `wp(prog)(q)`, the denotation applied to the postcondition.
    pub fn wp(&self, post: &AlgebraElement, policy: LoopPolicy, tol: f64) -> Result<WpResult> {
        let d = self.denote(policy)?;
        wp_from(&d, post, tol)
    }

    /// Both sides of `⟨ρ, wp(q)⟩ = ⟨f_*(ρ), q⟩`. The state side uses the
    /// Kraus form when available and the dual transfer matrix otherwise.
    pub fn duality_check(&self, state: &NormalState, post: &AlgebraElement, policy: LoopPolicy, tol: f64) -> Result<DualityReport> {
        let d = self.denote(policy)?;
        let pre = d.transfer.apply(post)?;
        let pushed = match &d.kraus {
            Some(k) => k.dual_state(state)?,
            None => d.transfer.dual_state(state)?,
        };
        let a = pairing(state, &pre)?.re;
        let b = pairing(&pushed, post)?.re;
        let discrepancy = (a - b).abs();
        Ok(DualityReport {
            precondition_pairing: a,
            state_pairing: b,
            discrepancy,
            holds: discrepancy <= tol,
        })
    }

    /// Rebuilds the full map from its action on effects only and compares it
    /// with the denotation.
    pub fn correspondence_roundtrip(&self, tol: f64) -> Result<RoundTripReport> {
        if self.body.has_loop() {
            return Err(WpError::LoopPresent);
        }
        let d = self.denote(LoopPolicy::default())?;
        let rebuilt = reconstruct_from_effects(&self.signature, |e| Ok(d.transfer.apply(e.element())?))?;
        let distance = rebuilt.distance(&d.transfer);
        Ok(RoundTripReport { distance, holds: distance <= tol })
    }

    /// Effect-module homomorphism laws of `q ↦ wp(q)` on sampled effects,
    /// strictness and sub-unitality.
    pub fn check_wp_laws<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize, tol: f64) -> Result<LawReport> {
        let d = self.denote(LoopPolicy::default())?;
        let sig = &self.signature;
        let space = MatrixEffects::new(sig.clone(), tol);
        let sample = matrix_effect_sample(rng, sig, samples);
        let f = |x: &AlgebraElement| d.transfer.apply(x).expect("ambient signature");
        let mut r = check_homomorphism(f, &space, &space, &sample, HomMode::GeMod, &default_scalars());
        let zero = f(&AlgebraElement::zero(sig));
        r.push(Check::from_witness(
            "wp/strict",
            WP,
            (zero.norm() > tol).then(|| format!("‖wp(0)‖ = {:.3e}", zero.norm())),
        ));
        let one = f(&AlgebraElement::unit(sig));
        r.push(Check::from_witness(
            "wp/subunital",
            WP,
            (!one.is_effect(tol)).then(|| format!("wp(1) violates the effect bounds by {:.3e}", one.effect_violation())),
        ));
        Ok(r)
    }

    pub fn to_sexp(&self) -> String {
        let mut s = format!("(algebra {})\n(program\n  ", self.signature.blocks().iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "));
        write_program(&mut s, &self.body, 2);
        s.push_str(")\n");
        s
    }

    /// Reads a program file. The ambient algebra comes from an `(algebra …)`
    /// form, else from `default`, else from the first matrix in the program.
    pub fn parse(text: &str, default: Option<&AlgebraSignature>) -> Result<Self> {
        let forms = read_sexps(text)?;
        let mut env = Env::default();
        let mut signature = None;
        let mut program = None;
        for f in &forms {
            match f.head() {
                Some("def") => {
                    let items = f.list()?;
                    if items.len() != 3 {
                        return Err(f.err("expected (def NAME MATRIX)"));
                    }
                    let name = items[1].atom()?;
                    if builtin(name).is_some() {
                        return Err(items[1].err(&format!("cannot redefine built-in `{name}`")));
                    }
                    let m = env.matrix(&items[2])?;
                    env.defs.insert(name.to_string(), m);
                }
                Some("algebra") => {
                    let blocks = f.list()?[1..]
                        .iter()
                        .map(|b| b.atom()?.parse::<usize>().map_err(|_| b.err("block size must be a positive integer")))
                        .collect::<Result<Vec<_>>>()?;
                    signature = Some(AlgebraSignature::new(blocks).map_err(|e| f.err(&e.to_string()))?);
                }
                Some("program") => {
                    let items = f.list()?;
                    if items.len() != 2 || program.is_some() {
                        return Err(f.err("expected a single (program P)"));
                    }
                    program = Some(&items[1]);
                }
                _ if program.is_none() => program = Some(f),
                _ => return Err(f.err("more than one program in the file")),
            }
        }
        let p = program.ok_or(WpError::Parse {
            line: 1,
            msg: "no program found".into(),
        })?;
        let signature = match signature.or_else(|| default.cloned()) {
            Some(s) => s,
            None => {
                let n = env.first_dimension(p)?.ok_or(WpError::Parse {
                    line: p.line(),
                    msg: "cannot infer the algebra; add (algebra n)".into(),
                })?;
                AlgebraSignature::matrix_algebra(n)
            }
        };
        env.signature = Some(signature.clone());
        let body = env.program(p)?;
        Self::new(signature, body)
    }
}

const WP: &str = "weakest precondition";

fn wp_from(d: &Denotation, post: &AlgebraElement, tol: f64) -> Result<WpResult> {
    let e = d.transfer.apply(post)?;
    let violation = e.effect_violation();
    let effect = Effect::new(e, tol).map_err(|_| WpError::NotEffect(format!("violation {violation:.3e}")))?;
    Ok(WpResult {
        effect,
        iterations: d.loops.iterations,
        residual: d.loops.residual,
        converged: d.loops.converged,
    })
}

/// Tabulates a linear map from its values on effects: every matrix unit is
/// split as `x₁ − x₂ + i x₃ − i x₄` with effects `xᵢ`, blockwise.
pub fn reconstruct_from_effects<F>(signature: &AlgebraSignature, f: F) -> Result<TransferMatrix>
where
    F: Fn(&Effect) -> Result<AlgebraElement>,
{
    let basis = AlgebraElement::basis(signature);
    let mut cols = Vec::with_capacity(basis.len());
    for e in &basis {
        let split: Vec<_> = e.blocks().iter().map(decompose_general).collect::<std::result::Result<_, _>>()?;
        let mut parts = Vec::with_capacity(4);
        for k in 0..4 {
            let blocks = split.iter().map(|p| p.parts[k].clone()).collect();
            let x = AlgebraElement::new(signature.clone(), blocks)?;
            parts.push(f(&Effect::new(x, 1e-9)?)?);
        }
        let i = Complex64::new(0.0, 1.0);
        let v = parts[0].sub(&parts[1]).add(&parts[2].sub(&parts[3]).scale(i));
        cols.push(v.to_vector());
    }
    let m = ComplexMatrix::from_columns(signature.total_dim(), &cols);
    Ok(TransferMatrix::new(signature.clone(), signature.clone(), m)?)
}

// ---------------------------------------------------------------------------
// Validation and semantics

fn validate(sig: &AlgebraSignature, p: &Program) -> Result<()> {
    match p {
        Program::Skip | Program::Abort => Ok(()),
        Program::Unitary(us) => {
            if us.len() != sig.num_blocks() {
                return Err(WpError::Shape(format!("{} unitaries for {} blocks", us.len(), sig.num_blocks())));
            }
            for (b, u) in us.iter().enumerate() {
                let n = sig.block(b);
                if u.rows() != n || u.cols() != n {
                    return Err(WpError::Shape(format!("block {b} needs a {n}x{n} unitary, got {}x{}", u.rows(), u.cols())));
                }
                let defect = (&(&u.adjoint() * u) - &ComplexMatrix::identity(n)).max_abs();
                if defect > VALIDATION_TOL {
                    return Err(WpError::NotUnitary { block: b, defect });
                }
            }
            Ok(())
        }
        Program::Measure(bs) => {
            let all: Vec<KrausItem> = bs.iter().flat_map(|b| b.kraus.iter().cloned()).collect();
            check_instrument(sig, &all, "measurement")?;
            bs.iter().try_for_each(|b| validate(sig, &b.program))
        }
        Program::Choice { p, left, right } => {
            if *p < rat(0, 1) || *p > rat(1, 1) {
                return Err(WpError::BadProbability(p.to_string()));
            }
            validate(sig, left)?;
            validate(sig, right)
        }
        Program::Seq(a, b) => {
            validate(sig, a)?;
            validate(sig, b)
        }
        Program::While { guard, body } => {
            let all: Vec<KrausItem> = guard.exit.iter().chain(&guard.cont).cloned().collect();
            check_instrument(sig, &all, "loop guard")?;
            validate(sig, body)
        }
    }
}

fn check_instrument(sig: &AlgebraSignature, items: &[KrausItem], what: &str) -> Result<()> {
    let k = KrausMap::new(sig.clone(), sig.clone(), items.to_vec())?;
    let one = k.unit_image();
    for (b, blk) in one.blocks().iter().enumerate() {
        let defect = (blk - &ComplexMatrix::identity(blk.rows())).max_abs();
        if defect > VALIDATION_TOL {
            let spectrum = hermitian_eigen(&blk.hermitian_part(), f64::INFINITY)?.eigenvalues;
            return Err(WpError::NonUnital {
                what: what.into(),
                block: b,
                spectrum,
            });
        }
    }
    Ok(())
}

fn kraus_of(sig: &AlgebraSignature, items: &[KrausItem]) -> Result<KrausMap> {
    Ok(KrausMap::new(sig.clone(), sig.clone(), items.to_vec())?)
}

fn capped(k: Option<KrausMap>) -> Option<KrausMap> {
    k.filter(|k| k.items().len() <= MAX_KRAUS_ITEMS)
}

fn denote(sig: &AlgebraSignature, p: &Program, policy: LoopPolicy) -> Result<Denotation> {
    let exact = |k: KrausMap| Denotation {
        transfer: k.transfer(),
        kraus: Some(k),
        loops: LoopStats::none(),
    };
    match p {
        Program::Skip => Ok(exact(KrausMap::identity(sig))),
        Program::Abort => Ok(exact(KrausMap::zero(sig, sig))),
        Program::Unitary(us) => {
            let ops: Vec<KrausItem> = us
                .iter()
                .enumerate()
                .map(|(b, u)| KrausItem { source: b, target: b, op: u.clone() })
                .collect();
            Ok(exact(kraus_of(sig, &ops)?))
        }
        Program::Measure(bs) => {
            let mut transfer = TransferMatrix::zero(sig, sig);
            let mut kraus = Some(KrausMap::zero(sig, sig));
            let mut loops = LoopStats::none();
            for b in bs {
                let inner = denote(sig, &b.program, policy)?;
                let k = kraus_of(sig, &b.kraus)?;
                transfer = transfer.add(&inner.transfer.then(&k.transfer())?)?;
                kraus = match (kraus, inner.kraus) {
                    (Some(acc), Some(ik)) => capped(Some(acc.add(&ik.then(&k)?)?)),
                    _ => None,
                };
                loops = loops.merge(inner.loops);
            }
            Ok(Denotation { transfer, kraus, loops })
        }
        Program::Choice { p, left, right } => {
            let p = to_f64(p);
            let l = denote(sig, left, policy)?;
            let r = denote(sig, right, policy)?;
            let transfer = l.transfer.scale(p).add(&r.transfer.scale(1.0 - p))?;
            let kraus = match (l.kraus, r.kraus) {
                (Some(a), Some(b)) => capped(Some(a.scale(p).add(&b.scale(1.0 - p))?)),
                _ => None,
            };
            Ok(Denotation {
                transfer,
                kraus,
                loops: l.loops.merge(r.loops),
            })
        }
        Program::Seq(a, b) => {
            let da = denote(sig, a, policy)?;
            let db = denote(sig, b, policy)?;
            // wp(a; b) = wp(a) ∘ wp(b).
            let transfer = db.transfer.then(&da.transfer)?;
            let kraus = match (da.kraus, db.kraus) {
                (Some(ka), Some(kb)) => capped(Some(kb.then(&ka)?)),
                _ => None,
            };
            Ok(Denotation {
                transfer,
                kraus,
                loops: da.loops.merge(db.loops),
            })
        }
        Program::While { guard, body } => {
            let exit = kraus_of(sig, &guard.exit)?.transfer();
            let cont = kraus_of(sig, &guard.cont)?.transfer();
            let db = denote(sig, body, policy)?;
            // T_{k+1} = exit + cont ∘ body ∘ T_k.
            let step = db.transfer.then(&cont)?;
            let iterates = std::iter::successors(Some(TransferMatrix::zero(sig, sig)), |t| {
                Some(exit.add(&t.then(&step).expect("ambient signature")).expect("ambient signature"))
            });
            let lub = lub_monotone_maps(
                iterates,
                MapLubPolicy {
                    step_tol: policy.step_tol,
                    max_iterations: policy.max_iterations,
                    order_tol: policy.order_tol,
                    allow_unconverged: true,
                },
            )?;
            Ok(Denotation {
                transfer: lub.transfer,
                kraus: None,
                loops: db.loops.merge(LoopStats {
                    iterations: lub.iterations,
                    residual: lub.residual,
                    converged: lub.converged,
                }),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Printing

fn fmt_scalar(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn fmt_matrix(m: &ComplexMatrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| format!("({})", (0..m.cols()).map(|j| fmt_scalar(m[(i, j)])).collect::<Vec<_>>().join(" ")))
        .collect();
    format!("(matrix {})", rows.join(" "))
}

fn fmt_kraus(items: &[KrausItem]) -> String {
    let parts: Vec<String> = items
        .iter()
        .map(|k| format!("(item {} {} {})", k.source, k.target, fmt_matrix(&k.op)))
        .collect();
    format!("(kraus {})", parts.join(" "))
}

fn write_program(s: &mut String, p: &Program, indent: usize) {
    let pad = " ".repeat(indent + 2);
    match p {
        Program::Skip => s.push_str("skip"),
        Program::Abort => s.push_str("abort"),
        Program::Unitary(us) => {
            let _ = write!(s, "(unitary {})", us.iter().map(fmt_matrix).collect::<Vec<_>>().join(" "));
        }
        Program::Measure(bs) => {
            s.push_str("(measure");
            for b in bs {
                let _ = write!(s, "\n{pad}(branch {} ", fmt_kraus(&b.kraus));
                write_program(s, &b.program, indent + 2);
                s.push(')');
            }
            s.push(')');
        }
        Program::Choice { p, left, right } => {
            let _ = write!(s, "(choice {p}\n{pad}");
            write_program(s, left, indent + 2);
            let _ = write!(s, "\n{pad}");
            write_program(s, right, indent + 2);
            s.push(')');
        }
        Program::Seq(a, b) => {
            let _ = write!(s, "(seq\n{pad}");
            write_program(s, a, indent + 2);
            let _ = write!(s, "\n{pad}");
            write_program(s, b, indent + 2);
            s.push(')');
        }
        Program::While { guard, body } => {
            let _ = write!(s, "(while (guard (exit {}) (continue {}))\n{pad}", fmt_kraus(&guard.exit), fmt_kraus(&guard.cont));
            write_program(s, body, indent + 2);
            s.push(')');
        }
    }
}

impl fmt::Display for QuantumProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexp())
    }
}

// ---------------------------------------------------------------------------
// S-expressions

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }

    fn err(&self, msg: &str) -> WpError {
        WpError::Parse {
            line: self.line(),
            msg: msg.to_string(),
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Atom(a, _)) => Some(a),
                _ => None,
            },
            Sexp::Atom(..) => None,
        }
    }

    fn list(&self) -> Result<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Ok(items),
            Sexp::Atom(a, _) => Err(self.err(&format!("expected a list, found `{a}`"))),
        }
    }

    fn atom(&self) -> Result<&str> {
        match self {
            Sexp::Atom(a, _) => Ok(a),
            Sexp::List(..) => Err(self.err("expected an atom, found a list")),
        }
    }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>> {
    let mut tokens = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split(';').next().unwrap_or("");
        let spaced = l.replace('(', " ( ").replace(')', " ) ");
        tokens.extend(spaced.split_whitespace().map(|t| (t.to_string(), line)));
    }
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        out.push(read_one(&tokens, &mut pos)?);
    }
    Ok(out)
}

fn read_one(tokens: &[(String, usize)], pos: &mut usize) -> Result<Sexp> {
    let (t, line) = &tokens[*pos];
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => {
                        return Err(WpError::Parse {
                            line: *line,
                            msg: "unclosed parenthesis".into(),
                        })
                    }
                    Some((t, _)) if t == ")" => {
                        *pos += 1;
                        return Ok(Sexp::List(items, *line));
                    }
                    Some(_) => items.push(read_one(tokens, pos)?),
                }
            }
        }
        ")" => Err(WpError::Parse {
            line: *line,
            msg: "unexpected `)`".into(),
        }),
        _ => Ok(Sexp::Atom(t.clone(), *line)),
    }
}

fn builtin(name: &str) -> Option<ComplexMatrix> {
    Some(match name {
        "I" => ComplexMatrix::identity(2),
        "X" => gates::pauli_x(),
        "Y" => gates::pauli_y(),
        "Z" => gates::pauli_z(),
        "H" => gates::hadamard(),
        "S" => gates::phase_s(),
        "T" => gates::phase_t(),
        "CNOT" => gates::cnot(),
        "K0" => gates::ket0_proj(),
        "K1" => gates::ket1_proj(),
        _ => return None,
    })
}

/// A rational `p/q` or a finite decimal.
fn parse_probability(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).or_else(|_| {
        let f: f64 = s.parse().map_err(|_| format!("malformed probability `{s}`"))?;
        Rational::from_float(f).ok_or_else(|| format!("malformed probability `{s}`"))
    })
}

const MATRIX_HEADS: [&str; 6] = ["matrix", "id", "kron", "mul", "scale", "adjoint"];

#[derive(Default)]
struct Env {
    defs: BTreeMap<String, ComplexMatrix>,
    signature: Option<AlgebraSignature>,
}

impl Env {
    fn scalar(&self, e: &Sexp) -> Result<Complex64> {
        match e {
            Sexp::Atom(a, _) => {
                if let Ok(r) = parse_rational(a) {
                    return Ok(Complex64::new(to_f64(&r), 0.0));
                }
                parse_complex(a).map_err(|m| e.err(&m))
            }
            Sexp::List(items, _) => match (e.head(), items.len()) {
                (Some("sqrt"), 2) => {
                    let v = self.scalar(&items[1])?;
                    if v.im != 0.0 || v.re < 0.0 {
                        return Err(e.err("sqrt needs a nonnegative real"));
                    }
                    Ok(Complex64::new(v.re.sqrt(), 0.0))
                }
                _ => Err(e.err("expected a scalar")),
            },
        }
    }

    fn matrix(&self, e: &Sexp) -> Result<ComplexMatrix> {
        match e {
            Sexp::Atom(a, _) => self
                .defs
                .get(a.as_str())
                .cloned()
                .or_else(|| builtin(a))
                .ok_or_else(|| e.err(&format!("unknown matrix `{a}`"))),
            Sexp::List(items, _) => {
                let args = &items[1..];
                match e.head() {
                    Some("matrix") => {
                        let rows = args
                            .iter()
                            .map(|r| r.list()?.iter().map(|x| self.scalar(x)).collect::<Result<Vec<_>>>())
                            .collect::<Result<Vec<_>>>()?;
                        ComplexMatrix::from_rows(&rows).map_err(|m| e.err(&m.to_string()))
                    }
                    Some("id") if args.len() == 1 => {
                        let n = args[0].atom()?.parse::<usize>().map_err(|_| e.err("(id n) needs a positive integer"))?;
                        Ok(ComplexMatrix::identity(n))
                    }
                    Some("kron") if !args.is_empty() => {
                        let mut m = self.matrix(&args[0])?;
                        for a in &args[1..] {
                            m = m.kron(&self.matrix(a)?);
                        }
                        Ok(m)
                    }
                    Some("mul") if !args.is_empty() => {
                        let mut m = self.matrix(&args[0])?;
                        for a in &args[1..] {
                            m = m.try_mul(&self.matrix(a)?).map_err(|x| a.err(&x.to_string()))?;
                        }
                        Ok(m)
                    }
                    Some("scale") if args.len() == 2 => Ok(self.matrix(&args[1])?.scale(self.scalar(&args[0])?)),
                    Some("adjoint") if args.len() == 1 => Ok(self.matrix(&args[0])?.adjoint()),
                    _ => Err(e.err("expected a matrix expression")),
                }
            }
        }
    }

    fn signature(&self) -> &AlgebraSignature {
        self.signature.as_ref().expect("signature fixed before programs are read")
    }

    fn item(&self, e: &Sexp) -> Result<KrausItem> {
        if e.head() == Some("item") {
            let items = e.list()?;
            if items.len() != 4 {
                return Err(e.err("expected (item s t M)"));
            }
            let idx = |x: &Sexp| x.atom()?.parse::<usize>().map_err(|_| x.err("block index must be a nonnegative integer"));
            let (s, t) = (idx(&items[1])?, idx(&items[2])?);
            let sig = self.signature();
            if s >= sig.num_blocks() || t >= sig.num_blocks() {
                return Err(e.err("block index out of range"));
            }
            let op = self.matrix(&items[3])?;
            if op.rows() != sig.block(s) || op.cols() != sig.block(t) {
                return Err(e.err(&format!("item {s} {t} needs a {}x{} matrix", sig.block(s), sig.block(t))));
            }
            return Ok(KrausItem { source: s, target: t, op });
        }
        let op = self.matrix(e)?;
        let sig = self.signature();
        if sig.num_blocks() != 1 || op.rows() != sig.block(0) || op.cols() != sig.block(0) {
            return Err(e.err("bare Kraus operators need a single-block algebra of matching size; use (item s t M)"));
        }
        Ok(KrausItem { source: 0, target: 0, op })
    }

    fn kraus_set(&self, e: &Sexp) -> Result<Vec<KrausItem>> {
        if e.head() == Some("kraus") {
            e.list()?[1..].iter().map(|x| self.item(x)).collect()
        } else {
            Ok(vec![self.item(e)?])
        }
    }

    fn program(&self, e: &Sexp) -> Result<Program> {
        if let Sexp::Atom(a, _) = e {
            return match a.as_str() {
                "skip" => Ok(Program::Skip),
                "abort" => Ok(Program::Abort),
                _ => Err(e.err(&format!("unknown command `{a}`"))),
            };
        }
        let items = e.list()?;
        let args = &items[1..];
        match e.head() {
            Some("skip") if args.is_empty() => Ok(Program::Skip),
            Some("abort") if args.is_empty() => Ok(Program::Abort),
            Some("unitary") if !args.is_empty() => Ok(Program::Unitary(args.iter().map(|a| self.matrix(a)).collect::<Result<_>>()?)),
            Some("seq") if !args.is_empty() => {
                let mut ps = args.iter().map(|a| self.program(a)).collect::<Result<Vec<_>>>()?;
                let mut acc = ps.pop().expect("nonempty");
                while let Some(p) = ps.pop() {
                    acc = Program::seq(p, acc);
                }
                Ok(acc)
            }
            Some("choice") if args.len() == 3 => {
                let p = parse_probability(args[0].atom()?).map_err(|m| args[0].err(&m))?;
                Ok(Program::choice(p, self.program(&args[1])?, self.program(&args[2])?))
            }
            Some("measure") if !args.is_empty() => {
                let branches = args
                    .iter()
                    .map(|b| {
                        let parts = b.list()?;
                        if b.head() != Some("branch") || parts.len() != 3 {
                            return Err(b.err("expected (branch KRAUS PROGRAM)"));
                        }
                        Ok(Branch {
                            kraus: self.kraus_set(&parts[1])?,
                            program: self.program(&parts[2])?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Program::Measure(branches))
            }
            Some("while") if args.len() == 2 => {
                let g = args[0].list()?;
                if args[0].head() != Some("guard") || g.len() != 3 {
                    return Err(args[0].err("expected (guard EXIT CONTINUE)"));
                }
                let tagged = |x: &Sexp, tag: &str| -> Result<Vec<KrausItem>> {
                    if x.head() == Some(tag) {
                        let inner = x.list()?;
                        if inner.len() != 2 {
                            return Err(x.err(&format!("expected ({tag} KRAUS)")));
                        }
                        self.kraus_set(&inner[1])
                    } else {
                        self.kraus_set(x)
                    }
                };
                let guard = Guard {
                    exit: tagged(&g[1], "exit")?,
                    cont: tagged(&g[2], "continue")?,
                };
                Ok(Program::while_loop(guard, self.program(&args[1])?))
            }
            _ => Err(e.err("expected a command: skip, abort, unitary, seq, choice, measure or while")),
        }
    }

    /// Size of the first matrix mentioned in a command, for inferring a
    /// single-block algebra.
    fn first_dimension(&self, e: &Sexp) -> Result<Option<usize>> {
        if let Sexp::List(items, _) = e {
            if let Some(h) = e.head() {
                if MATRIX_HEADS.contains(&h) {
                    return Ok(Some(self.matrix(e)?.rows()));
                }
            }
            for (k, x) in items.iter().enumerate() {
                if let Sexp::Atom(a, _) = x {
                    if k > 0 || items.len() == 1 {
                        if let Some(m) = self.defs.get(a.as_str()).cloned().or_else(|| builtin(a)) {
                            return Ok(Some(m.rows()));
                        }
                    }
                } else if let Some(n) = self.first_dimension(x)? {
                    return Ok(Some(n));
                }
            }
        }
        Ok(None)
    }
}

// ---------------------------------------------------------------------------
// Random programs

/// Random program on `qubits ≤ 3` qubits of nesting depth at most `depth`.
/// With `loops`, while-loops may appear; they are never nested and use a
/// damped guard that exits with probability at least ½ per pass of the
/// continue branch.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, qubits: usize, depth: usize, loops: bool) -> QuantumProgram {
    let sig = AlgebraSignature::qubits(qubits);
    let n = sig.block(0);
    let body = random_node(rng, n, depth, loops);
    QuantumProgram::new(sig, body).expect("generated programs are well formed")
}

fn random_unitary_op<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    if n == 2 && rng.gen_bool(0.5) {
        let gs = [gates::hadamard(), gates::pauli_x(), gates::pauli_y(), gates::pauli_z(), gates::phase_s(), gates::phase_t()];
        return gs.choose(rng).expect("nonempty").clone();
    }
    crate::random::unitary(rng, n)
}

fn random_node<R: Rng + ?Sized>(rng: &mut R, n: usize, depth: usize, loops_allowed: bool) -> Program {
    if depth == 0 {
        return match rng.gen_range(0..10) {
            0 => Program::Skip,
            1 => Program::Abort,
            _ => Program::unitary(random_unitary_op(rng, n)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0 | 1 => Program::unitary(random_unitary_op(rng, n)),
        2..=4 => Program::seq(random_node(rng, n, d, loops_allowed), random_node(rng, n, d, loops_allowed)),
        5 | 6 => {
            let den = rng.gen_range(1..=8);
            let p = rat(rng.gen_range(0..=den), den);
            Program::choice(p, random_node(rng, n, d, loops_allowed), random_node(rng, n, d, loops_allowed))
        }
        7 | 8 => {
            let outcomes = rng.gen_range(2..=3);
            let ks = crate::random::instrument(rng, n, outcomes);
            Program::Measure(
                ks.into_iter()
                    .map(|k| Branch {
                        kraus: items(vec![k]),
                        program: random_node(rng, n, d.min(2), loops_allowed),
                    })
                    .collect(),
            )
        }
        _ if loops_allowed => {
            let ks = crate::random::instrument(rng, n, 2);
            let half = std::f64::consts::FRAC_1_SQRT_2;
            let guard = Guard {
                exit: items(vec![ks[0].clone(), ks[1].scale_real(half)]),
                cont: items(vec![ks[1].scale_real(half)]),
            };
            Program::while_loop(guard, random_node(rng, n, d.min(1), false))
        }
        _ => Program::unitary(random_unitary_op(rng, n)),
    }
}

/// `(seq (unitary H) (while (guard K0 K1) (unitary H)))` on one qubit: each
/// pass exits with probability ½.
pub fn coin_loop() -> QuantumProgram {
    let guard = Guard {
        exit: items(vec![gates::ket0_proj()]),
        cont: items(vec![gates::ket1_proj()]),
    };
    let body = Program::seq(
        Program::unitary(gates::hadamard()),
        Program::while_loop(guard, Program::unitary(gates::hadamard())),
    );
    QuantumProgram::new(AlgebraSignature::qubit(), body).expect("well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::seeded;

    fn qubit() -> AlgebraSignature {
        AlgebraSignature::qubit()
    }

    fn el(m: ComplexMatrix) -> AlgebraElement {
        AlgebraElement::single(m)
    }

    #[test]
    fn basic_denotations() {
        let skip = QuantumProgram::new(qubit(), Program::Skip).unwrap();
        let d = skip.denote(LoopPolicy::default()).unwrap();
        assert!(d.transfer.distance(&TransferMatrix::identity(&qubit())) < 1e-15);

        let hh = QuantumProgram::parse("(seq (unitary H) (unitary H))", None).unwrap();
        let d = hh.denote(LoopPolicy::default()).unwrap();
        assert!(d.transfer.distance(&TransferMatrix::identity(&qubit())) < 1e-12);

        let mix = QuantumProgram::parse("(choice 1/2 skip abort)", Some(&qubit())).unwrap();
        let w = mix.wp(&AlgebraElement::unit(&qubit()), LoopPolicy::default(), 1e-9).unwrap();
        assert!(w.effect.element().max_abs_diff(&AlgebraElement::scalar(&qubit(), 0.5)) < 1e-15);
    }

    #[test]
    fn hadamard_precondition() {
        let p = QuantumProgram::parse("(unitary H)", None).unwrap();
        let w = p.wp(&el(gates::ket0_proj()), LoopPolicy::default(), 1e-9).unwrap();
        assert!(w.effect.element().max_abs_diff(&el(gates::plus_proj())) < 1e-12);
        let rho = NormalState::vector(&qubit(), 0, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let r = p.duality_check(&rho, &el(gates::ket0_proj()), LoopPolicy::default(), 1e-12).unwrap();
        assert!((r.precondition_pairing - 0.5).abs() < 1e-12);
        assert!((r.state_pairing - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coin_loop_terminates_almost_surely() {
        let p = coin_loop();
        let policy = LoopPolicy {
            max_iterations: 30,
            ..LoopPolicy::default()
        };
        let w = p.wp(&AlgebraElement::unit(&qubit()), policy, 1e-9).unwrap();
        assert!(w.iterations <= 30);
        assert!(w.effect.element().max_abs_diff(&AlgebraElement::unit(&qubit())) < 1e-6);
        let full = p.wp(&AlgebraElement::unit(&qubit()), LoopPolicy::default(), 1e-9).unwrap();
        assert!(full.converged);
        assert!(full.residual <= 1e-12);
    }

    #[test]
    fn parser_rejects_bad_instruments() {
        let e = QuantumProgram::parse("(measure (branch K0 skip))", None).unwrap_err();
        match e {
            WpError::NonUnital { spectrum, .. } => assert_eq!(spectrum.len(), 2),
            other => panic!("{other}"),
        }
        assert!(matches!(QuantumProgram::parse("(unitary K0)", None), Err(WpError::NotUnitary { .. })));
        assert!(matches!(QuantumProgram::parse("(seq (unitary H)", None), Err(WpError::Parse { .. })));
        assert!(matches!(QuantumProgram::parse("(frob)", Some(&qubit())), Err(WpError::Parse { line: 1, .. })));
        assert!(matches!(QuantumProgram::parse("(def H X)\n(unitary H)", None), Err(WpError::Parse { .. })));
    }

    #[test]
    fn preamble_and_blocks() {
        let text = "(algebra 2 1)\n(def R (scale (sqrt 1/2) (matrix (1 1) (1 -1))))\n(program (seq (unitary R (id 1)) (measure (branch (kraus (item 0 0 K0)) skip) (branch (kraus (item 0 0 K1) (item 1 1 (id 1))) abort))))\n";
        let p = QuantumProgram::parse(text, None).unwrap();
        assert_eq!(p.signature().blocks(), &[2, 1]);
        let back = QuantumProgram::parse(&p.to_sexp(), None).unwrap();
        let a = p.denote(LoopPolicy::default()).unwrap().transfer;
        let b = back.denote(LoopPolicy::default()).unwrap().transfer;
        assert!(a.distance(&b) < 1e-15);
    }

    #[test]
    fn roundtrip_and_distinctness() {
        let id = QuantumProgram::new(qubit(), Program::Skip).unwrap();
        assert!(id.correspondence_roundtrip(1e-12).unwrap().holds);
        let m = QuantumProgram::parse("(measure (branch K0 (unitary X)) (branch K1 (unitary H)))", None).unwrap();
        assert!(m.correspondence_roundtrip(1e-10).unwrap().holds);
        let da = id.denote(LoopPolicy::default()).unwrap().transfer;
        let db = m.denote(LoopPolicy::default()).unwrap().transfer;
        assert!(da.distance(&db) > 0.1);
        assert!(matches!(coin_loop().correspondence_roundtrip(1e-9), Err(WpError::LoopPresent)));
    }

    #[test]
    fn random_programs_satisfy_duality_and_laws() {
        let mut rng = seeded(21);
        for _ in 0..20 {
            let q = rng.gen_range(1..=2);
            let p = random_program(&mut rng, q, 4, true);
            let sig = p.signature().clone();
            let rho = crate::wstar::random_state(&mut rng, &sig);
            let post = crate::wstar::random_effect(&mut rng, &sig);
            let r = p.duality_check(&rho, &post, LoopPolicy::default(), 1e-9).unwrap();
            assert!(r.holds, "{}: {}", p, r.discrepancy);
            let laws = p.check_wp_laws(&mut rng, 8, 1e-9).unwrap();
            assert!(laws.all_passed(), "{laws}");
            let back = QuantumProgram::parse(&p.to_sexp(), None).unwrap();
            let a = p.denote(LoopPolicy::default()).unwrap().transfer;
            let b = back.denote(LoopPolicy::default()).unwrap().transfer;
            assert!(a.distance(&b) < 1e-12);
        }
    }
}
