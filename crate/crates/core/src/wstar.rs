//! Finite-dimensional W*-algebras `⊕ M_{nᵢ}`: elements, effects, normal
//! states and their trace pairing, separation by states, commutants, and
//! least upper bounds of monotone effect sequences.
//!
//! In finite dimension the norm, strong and weak operator topologies agree,
//! so nets are specialized to sequences and limits are plain entrywise limits.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::matrix::{
    self, hermitian_eigen, loewner_leq, operator_norm, psd, svd, ComplexMatrix, MatrixError,
};

/// Cap on `Σ nᵢ²`.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Largest `n` accepted by [`commutant`].
pub const MAX_COMMUTANT_DIM: usize = 16;

/// Relative singular-value cutoff for commutant null spaces.
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WstarError {
    #[error("invalid signature: {0}")]
    BadSignature(String),
    #[error("signature mismatch: {left} vs {right}")]
    SignatureMismatch { left: String, right: String },
    #[error("element is not an effect (violation {violation:.3e})")]
    NotEffect { violation: f64 },
    #[error("not a normal state: {0}")]
    NotState(String),
    #[error("commutant dimension {0} exceeds the limit of {MAX_COMMUTANT_DIM}")]
    TooLarge(usize),
    #[error("generator set is not closed under adjoints (residual {residual:.3e}); pass the closure flag")]
    NotStarClosed { residual: f64 },
    #[error("sequence is not monotone at index {index}")]
    OrderViolation { index: usize },
    #[error("sequence did not settle after {iterations} steps (last step {residual:.3e})")]
    Divergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

pub type Result<T> = std::result::Result<T, WstarError>;

/// Block dimensions of `⊕ M_{nᵢ}`. A qubit is `[2]`, a bit is `[1, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraSignature {
    blocks: Vec<usize>,
}

impl AlgebraSignature {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(WstarError::BadSignature("no blocks".into()));
        }
        if blocks.contains(&0) {
            return Err(WstarError::BadSignature("zero-dimensional block".into()));
        }
        let total: usize = blocks.iter().map(|n| n * n).sum();
        if total > MAX_TOTAL_DIM {
            return Err(WstarError::BadSignature(format!(
                "total dimension {total} exceeds {MAX_TOTAL_DIM}"
            )));
        }
        Ok(Self { blocks })
    }

    pub fn matrix_algebra(n: usize) -> Self {
        Self::new(vec![n]).expect("valid block")
    }

    pub fn qubit() -> Self {
        Self::matrix_algebra(2)
    }

    pub fn bit() -> Self {
        Self::new(vec![1, 1]).expect("valid blocks")
    }

    pub fn qubits(count: usize) -> Self {
        Self::matrix_algebra(1 << count)
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> usize {
        self.blocks[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `Σ nᵢ²`, the vector-space dimension.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Offset of block `i` in the stacked entry vector.
    pub fn offset(&self, i: usize) -> usize {
        self.blocks[..i].iter().map(|n| n * n).sum()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut words = text.split_whitespace();
        if words.next() != Some("blocks") {
            return Err(WstarError::BadSignature(format!("expected `blocks ...`, found `{text}`")));
        }
        let blocks = words
            .map(|w| w.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| WstarError::BadSignature(e.to_string()))?;
        Self::new(blocks)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(WstarError::SignatureMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for AlgebraSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "blocks")?;
        for b in &self.blocks {
            write!(f, " {b}")?;
        }
        Ok(())
    }
}

/// One square matrix per block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    signature: AlgebraSignature,
    blocks: Vec<ComplexMatrix>,
}

impl AlgebraElement {
    pub fn new(signature: AlgebraSignature, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let ok = blocks.len() == signature.num_blocks()
            && blocks
                .iter()
                .zip(signature.blocks())
                .all(|(m, &n)| m.rows() == n && m.cols() == n);
        if !ok {
            return Err(WstarError::BadSignature(format!(
                "blocks do not match {signature}"
            )));
        }
        Ok(Self { signature, blocks })
    }

    /// Element of the single-block algebra `M_n`.
    pub fn single(m: ComplexMatrix) -> Self {
        let sig = AlgebraSignature::matrix_algebra(m.rows());
        Self::new(sig, vec![m]).expect("square matrix")
    }

    pub fn zero(signature: &AlgebraSignature) -> Self {
        let blocks = signature.blocks().iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
        Self {
            signature: signature.clone(),
            blocks,
        }
    }

    pub fn unit(signature: &AlgebraSignature) -> Self {
        let blocks = signature.blocks().iter().map(|&n| ComplexMatrix::identity(n)).collect();
        Self {
            signature: signature.clone(),
            blocks,
        }
    }

    /// `r · 1`.
    pub fn scalar(signature: &AlgebraSignature, r: f64) -> Self {
        Self::unit(signature).scale_real(r)
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &ComplexMatrix {
        &self.blocks[i]
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix) -> Self {
        assert_eq!(self.signature, other.signature, "signature mismatch");
        Self {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn map(&self, f: impl FnMut(&ComplexMatrix) -> ComplexMatrix) -> Self {
        Self {
            signature: self.signature.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|m| m.scale(s))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|m| m.scale_real(s))
    }

    pub fn adjoint(&self) -> Self {
        self.map(ComplexMatrix::adjoint)
    }

    /// C*-norm: the largest block operator norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(operator_norm).fold(0.0, f64::max)
    }

    /// Cheap entrywise distance used by stopping rules and equality tests.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).max_abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_selfadjoint(&self, tol: f64) -> bool {
        self.blocks.iter().all(|m| m.asymmetry() <= tol)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.blocks.iter().all(|m| psd(m, tol))
    }

    /// Blockwise Löwner order.
    pub fn loewner_leq(&self, other: &Self, tol: f64) -> Result<bool> {
        self.signature.check(&other.signature)?;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            if !loewner_leq(a, b, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `0 ≤ self ≤ 1` within `tol`.
    pub fn is_effect(&self, tol: f64) -> bool {
        self.effect_violation() <= tol
    }

    /// How far the spectrum strays outside `[0, 1]` (∞ if not Hermitian-ish).
    pub fn effect_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in &self.blocks {
            let asym = m.asymmetry();
            match hermitian_eigen(m, f64::INFINITY) {
                Ok(e) => {
                    worst = worst.max(asym).max(-e.min()).max(e.max() - 1.0);
                }
                Err(_) => return f64::INFINITY,
            }
        }
        worst
    }

    /// Entries of all blocks, row-major, concatenated.
    pub fn to_vector(&self) -> Vec<Complex64> {
        self.blocks.iter().flat_map(|m| m.data().iter().copied()).collect()
    }

    pub fn from_vector(signature: &AlgebraSignature, v: &[Complex64]) -> Result<Self> {
        if v.len() != signature.total_dim() {
            return Err(WstarError::BadSignature(format!(
                "vector of length {} for {signature}",
                v.len()
            )));
        }
        let mut blocks = Vec::with_capacity(signature.num_blocks());
        let mut at = 0;
        for &n in signature.blocks() {
            blocks.push(ComplexMatrix::new(n, n, v[at..at + n * n].to_vec())?);
            at += n * n;
        }
        Self::new(signature.clone(), blocks)
    }

    /// Matrix units `E_ab` of every block, in stacked-vector order.
    pub fn basis(signature: &AlgebraSignature) -> Vec<Self> {
        let mut out = Vec::with_capacity(signature.total_dim());
        for (bi, &n) in signature.blocks().iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    let mut e = Self::zero(signature);
                    e.blocks[bi] = ComplexMatrix::unit(n, a, b);
                    out.push(e);
                }
            }
        }
        out
    }

    /// Serializes as consecutive matrix blocks.
    pub fn to_text(&self) -> String {
        self.blocks.iter().map(ComplexMatrix::to_string).collect()
    }

    /// Reads consecutive blocks; an optional leading `blocks ...` line fixes
    /// the signature, otherwise it is inferred from the block sizes.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = matrix::MatrixReader::new(text);
        let declared = match reader.peek_line() {
            Some((_, line)) if line.starts_with("blocks") => {
                let (_, l) = reader.take_line().expect("peeked");
                Some(AlgebraSignature::parse(l)?)
            }
            _ => None,
        };
        let mut blocks = Vec::new();
        while let Some(m) = reader.read_matrix()? {
            blocks.push(m);
        }
        let signature = match declared {
            Some(s) => s,
            None => AlgebraSignature::new(blocks.iter().map(ComplexMatrix::rows).collect())?,
        };
        Self::new(signature, blocks)
    }
}

/// An element with `0 ≤ e ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect(AlgebraElement);

impl Effect {
    pub fn new(e: AlgebraElement, tol: f64) -> Result<Self> {
        let violation = e.effect_violation();
        if violation > tol {
            return Err(WstarError::NotEffect { violation });
        }
        Ok(Self(e))
    }

    pub fn truth(signature: &AlgebraSignature) -> Self {
        Self(AlgebraElement::unit(signature))
    }

    pub fn falsity(signature: &AlgebraSignature) -> Self {
        Self(AlgebraElement::zero(signature))
    }

    pub fn element(&self) -> &AlgebraElement {
        &self.0
    }

    pub fn into_element(self) -> AlgebraElement {
        self.0
    }
}

/// A normal sub-unital state: density blocks `ρᵢ ≥ 0` with `Σ tr ρᵢ ≤ 1`,
/// acting by `x ↦ Σ tr(ρᵢ xᵢ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalState(AlgebraElement);

impl NormalState {
    pub fn new(rho: AlgebraElement, tol: f64) -> Result<Self> {
        if !rho.is_positive(tol) {
            return Err(WstarError::NotState("density blocks must be positive".into()));
        }
        let mass = rho.blocks().iter().map(|m| m.trace().re).sum::<f64>();
        if mass > 1.0 + tol {
            return Err(WstarError::NotState(format!("total trace {mass} exceeds 1")));
        }
        Ok(Self(rho))
    }

    pub fn zero(signature: &AlgebraSignature) -> Self {
        Self(AlgebraElement::zero(signature))
    }

    /// Pure state `|v⟩⟨v|` supported in one block.
    pub fn vector(signature: &AlgebraSignature, block: usize, v: &[Complex64]) -> Result<Self> {
        let mut rho = AlgebraElement::zero(signature);
        if v.len() != signature.block(block) {
            return Err(WstarError::NotState("vector length does not match block".into()));
        }
        rho.blocks[block] = ComplexMatrix::projector(v);
        Ok(Self(rho))
    }

    pub fn maximally_mixed(signature: &AlgebraSignature) -> Self {
        let n: usize = signature.blocks().iter().sum();
        Self(AlgebraElement::unit(signature).scale_real(1.0 / n as f64))
    }

    pub fn density(&self) -> &AlgebraElement {
        &self.0
    }

    pub fn signature(&self) -> &AlgebraSignature {
        self.0.signature()
    }

    pub fn mass(&self) -> f64 {
        self.0.blocks().iter().map(|m| m.trace().re).sum()
    }
}

/// `φ(x) = Σ tr(ρᵢ xᵢ)`.
pub fn pairing(state: &NormalState, x: &AlgebraElement) -> Result<Complex64> {
    state.signature().check(x.signature())?;
    Ok(state
        .density()
        .blocks()
        .iter()
        .zip(x.blocks())
        .map(|(rho, a)| {
            let n = rho.rows();
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += rho[(i, j)] * a[(j, i)];
                }
            }
            acc
        })
        .sum())
}

/// Pure states on `e_j`, `(e_j + e_k)/√2` and `(e_j + i e_k)/√2` in every
/// block. Their span is the whole dual, so they separate all elements.
pub fn canonical_states(signature: &AlgebraSignature) -> Vec<NormalState> {
    let mut out = Vec::new();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (b, &n) in signature.blocks().iter().enumerate() {
        let zero = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let mut v = zero.clone();
            v[j] = Complex64::new(1.0, 0.0);
            out.push(NormalState::vector(signature, b, &v).expect("block vector"));
            for k in (j + 1)..n {
                for phase in [Complex64::new(h, 0.0), Complex64::new(0.0, h)] {
                    let mut v = zero.clone();
                    v[j] = Complex64::new(h, 0.0);
                    v[k] = phase;
                    out.push(NormalState::vector(signature, b, &v).expect("block vector"));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeparationOutcome {
    /// Separated by the caller's family at this index.
    Family { state: usize, gap: f64 },
    /// Separated only by a canonical pure state.
    Canonical { state: usize, gap: f64 },
    /// `x = y`, nothing to separate.
    Skipped,
    /// The caller's family fails and (should never happen) so does the canonical one.
    Unseparated,
}

#[derive(Clone, Debug)]
pub struct SeparationReport {
    pub outcomes: Vec<SeparationOutcome>,
    /// Probes the caller's family alone failed to separate.
    pub family_failures: Vec<usize>,
}

impl SeparationReport {
    pub fn canonical_separates_all(&self) -> bool {
        !self.outcomes.contains(&SeparationOutcome::Unseparated)
    }

    pub fn family_separates_all(&self) -> bool {
        self.family_failures.is_empty()
    }
}

/// For each probe pair `x ≠ y` look for a state with `φ(x) ≠ φ(y)`.
pub fn separating_check(
    signature: &AlgebraSignature,
    family: &[NormalState],
    probes: &[(AlgebraElement, AlgebraElement)],
    tol: f64,
) -> Result<SeparationReport> {
    let canonical = canonical_states(signature);
    let mut outcomes = Vec::with_capacity(probes.len());
    let mut family_failures = Vec::new();
    let gap_of = |s: &NormalState, x: &AlgebraElement, y: &AlgebraElement| -> Result<f64> {
        Ok((pairing(s, x)? - pairing(s, y)?).norm())
    };
    for (idx, (x, y)) in probes.iter().enumerate() {
        signature.check(x.signature())?;
        signature.check(y.signature())?;
        if x.max_abs_diff(y) <= tol {
            outcomes.push(SeparationOutcome::Skipped);
            continue;
        }
        let mut found = None;
        for (i, s) in family.iter().enumerate() {
            let gap = gap_of(s, x, y)?;
            if gap > tol {
                found = Some(SeparationOutcome::Family { state: i, gap });
                break;
            }
        }
        if found.is_none() {
            family_failures.push(idx);
            for (i, s) in canonical.iter().enumerate() {
                let gap = gap_of(s, x, y)?;
                if gap > tol {
                    found = Some(SeparationOutcome::Canonical { state: i, gap });
                    break;
                }
            }
        }
        outcomes.push(found.unwrap_or(SeparationOutcome::Unseparated));
    }
    Ok(SeparationReport {
        outcomes,
        family_failures,
    })
}

// ---------------------------------------------------------------------------
// Commutants

fn vectorize(m: &ComplexMatrix) -> Vec<Complex64> {
    m.data().to_vec()
}

fn devectorize(n: usize, v: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::new(n, n, v.to_vec()).expect("n² entries")
}

/// Frobenius-orthonormal basis of `span(mats)`.
pub fn span_basis(n: usize, mats: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    if mats.is_empty() {
        return Ok(Vec::new());
    }
    let cols: Vec<Vec<Complex64>> = mats.iter().map(vectorize).collect();
    let stacked = ComplexMatrix::from_columns(n * n, &cols);
    let s = svd(&stacked)?;
    Ok(s.range(RANK_THRESHOLD).iter().map(|v| devectorize(n, v)).collect())
}

/// `‖m − P_span(m)‖_F` for an orthonormal `basis`.
pub fn residual_outside(m: &ComplexMatrix, basis: &[ComplexMatrix]) -> f64 {
    let mut r = m.clone();
    for b in basis {
        let c = matrix::inner(&vectorize(m), &vectorize(b));
        r = &r - &b.scale(c);
    }
    r.frobenius_norm()
}

/// Basis of `{T ∈ M_n | T S = S T for all generators S}`.
#[derive(Clone, Debug)]
pub struct Commutant {
    pub n: usize,
    /// Frobenius-orthonormal.
    pub basis: Vec<ComplexMatrix>,
}

impl Commutant {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Null space of the stacked linear system `T S − S T = 0`, one block of
/// `n²` equations per generator.
pub fn commutant(n: usize, generators: &[ComplexMatrix]) -> Result<Commutant> {
    if n > MAX_COMMUTANT_DIM {
        return Err(WstarError::TooLarge(n));
    }
    if let Some(g) = generators.iter().find(|g| g.rows() != n || g.cols() != n) {
        return Err(WstarError::BadSignature(format!(
            "generator of shape {}x{} in M_{n}",
            g.rows(),
            g.cols()
        )));
    }
    let nn = n * n;
    if generators.is_empty() {
        let basis = (0..nn).map(|k| ComplexMatrix::unit(n, k / n, k % n)).collect();
        return Ok(Commutant { n, basis });
    }
    let mut system = ComplexMatrix::zeros(generators.len() * nn, nn);
    for (g, s) in generators.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let row = g * nn + i * n + j;
                // (TS)_ij = Σ_b T_ib S_bj ; (ST)_ij = Σ_a S_ia T_aj
                for b in 0..n {
                    system[(row, i * n + b)] += s[(b, j)];
                }
                for a in 0..n {
                    system[(row, a * n + j)] -= s[(i, a)];
                }
            }
        }
    }
    // `X ↦ XS − SX` has norm at most `2‖S‖`, so the cutoff scales with the
    // generators rather than with the system, which vanishes for `S ≈ 1`.
    let scale = generators.iter().map(ComplexMatrix::frobenius_norm).fold(0.0, f64::max);
    let decomposition = svd(&system)?;
    let basis = decomposition
        .null_space_below(RANK_THRESHOLD * scale)
        .iter()
        .map(|v| devectorize(n, v))
        .collect();
    Ok(Commutant { n, basis })
}

/// Smallest *-subalgebra span containing `generators` (plus `1` and adjoints
/// when `close` is set).
pub fn star_algebra_span(n: usize, generators: &[ComplexMatrix], close: bool, tol: f64) -> Result<Vec<ComplexMatrix>> {
    let mut gens: Vec<ComplexMatrix> = generators.to_vec();
    if close {
        gens.push(ComplexMatrix::identity(n));
        gens.extend(generators.iter().map(ComplexMatrix::adjoint));
    } else {
        let basis = span_basis(n, &gens)?;
        let residual = generators
            .iter()
            .map(|g| residual_outside(&g.adjoint(), &basis))
            .fold(0.0, f64::max);
        if residual > tol {
            return Err(WstarError::NotStarClosed { residual });
        }
    }
    let mut basis = span_basis(n, &gens)?;
    loop {
        let mut candidates = basis.clone();
        for a in &basis {
            for b in &basis {
                candidates.push(a * b);
            }
        }
        let next = span_basis(n, &candidates)?;
        if next.len() == basis.len() {
            return Ok(next);
        }
        basis = next;
    }
}

#[derive(Clone, Debug)]
pub struct BicommutantReport {
    pub span_dim: usize,
    pub commutant_dim: usize,
    pub bicommutant_dim: usize,
    /// Largest residual of `A ⊆ A″` and `A″ ⊆ A` over the two bases.
    pub containment_residual: f64,
    /// Residual of `A ⊆ A″` alone, which holds for every generator set.
    pub forward_residual: f64,
}

impl BicommutantReport {
    pub fn equal(&self, tol: f64) -> bool {
        self.span_dim == self.bicommutant_dim && self.containment_residual <= tol
    }
}

pub fn bicommutant_check(
    n: usize,
    generators: &[ComplexMatrix],
    include_unit_and_adjoints: bool,
    tol: f64,
) -> Result<BicommutantReport> {
    let span = star_algebra_span(n, generators, include_unit_and_adjoints, tol)?;
    let first = commutant(n, &span)?;
    let second = commutant(n, &first.basis)?;
    let forward = span
        .iter()
        .map(|m| residual_outside(m, &second.basis))
        .fold(0.0, f64::max);
    let backward = second
        .basis
        .iter()
        .map(|m| residual_outside(m, &span))
        .fold(0.0, f64::max);
    Ok(BicommutantReport {
        span_dim: span.len(),
        commutant_dim: first.dim(),
        bicommutant_dim: second.dim(),
        containment_residual: forward.max(backward),
        forward_residual: forward,
    })
}

// ---------------------------------------------------------------------------
// Least upper bounds of monotone sequences

/// Halting policy for monotone limits.
#[derive(Clone, Copy, Debug)]
pub struct LubPolicy {
    /// Stop once `‖x_{k+1} − x_k‖_F` drops to this.
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Tolerance of the per-step monotonicity check.
    pub order_tol: f64,
}

impl Default for LubPolicy {
    fn default() -> Self {
        Self {
            step_tol: 1e-12,
            max_iterations: 1_000_000,
            order_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LubResult {
    pub lub: AlgebraElement,
    pub iterations: usize,
    pub residual: f64,
}

/// Limit of a monotone sequence, checking `x_k ≤ x_{k+1}` at every step.
pub fn lub_monotone_sequence<I>(seq: I, policy: LubPolicy) -> Result<LubResult>
where
    I: IntoIterator<Item = AlgebraElement>,
{
    let mut iter = seq.into_iter();
    let mut current = iter
        .next()
        .ok_or_else(|| WstarError::BadSignature("empty sequence".into()))?;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for next in iter {
        iterations += 1;
        if !current.loewner_leq(&next, policy.order_tol)? {
            return Err(WstarError::OrderViolation { index: iterations });
        }
        residual = current.frobenius_diff(&next);
        current = next;
        if residual <= policy.step_tol {
            return Ok(LubResult {
                lub: current,
                iterations,
                residual,
            });
        }
        if iterations >= policy.max_iterations {
            return Err(WstarError::Divergence {
                iterations,
                residual,
            });
        }
    }
    // A finite sequence is its own last element.
    Ok(LubResult {
        lub: current,
        iterations,
        residual: if iterations == 0 { 0.0 } else { residual },
    })
}

// ---------------------------------------------------------------------------
// Random elements

pub fn random_element<R: Rng + ?Sized>(rng: &mut R, signature: &AlgebraSignature) -> AlgebraElement {
    let blocks = signature
        .blocks()
        .iter()
        .map(|&n| crate::random::complex_matrix(rng, n, n))
        .collect();
    AlgebraElement::new(signature.clone(), blocks).expect("matching blocks")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, signature: &AlgebraSignature) -> AlgebraElement {
    random_element(rng, signature).map(ComplexMatrix::hermitian_part)
}

pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, signature: &AlgebraSignature) -> AlgebraElement {
    let blocks = signature
        .blocks()
        .iter()
        .map(|&n| crate::random::positive(rng, n))
        .collect();
    AlgebraElement::new(signature.clone(), blocks).expect("matching blocks")
}

pub fn random_effect<R: Rng + ?Sized>(rng: &mut R, signature: &AlgebraSignature) -> AlgebraElement {
    let blocks = signature
        .blocks()
        .iter()
        .map(|&n| crate::random::effect(rng, n))
        .collect();
    AlgebraElement::new(signature.clone(), blocks).expect("matching blocks")
}

/// Random effect `f ≥ e` (still `≤ 1`).
pub fn random_effect_above<R: Rng + ?Sized>(rng: &mut R, e: &AlgebraElement) -> AlgebraElement {
    e.map(|m| m + &crate::random::headroom_increment(rng, m))
}

/// Random normal state, trace drawn from `[0, 1]`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, signature: &AlgebraSignature) -> NormalState {
    let rho = random_positive(rng, signature);
    let mass: f64 = rho.blocks().iter().map(|m| m.trace().re).sum();
    let target: f64 = rng.gen_range(0.0..=1.0);
    NormalState(rho.scale_real(target / mass))
}
