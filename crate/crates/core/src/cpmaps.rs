//! Completely positive sub-unital maps between finite-dimensional W*-algebras
//! in Heisenberg-picture Kraus form, their transfer matrices, the Löwner order
//! on maps, least upper bounds of monotone map sequences, and dual state maps.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::matrix::{hermitian_eigen, ComplexMatrix, MatrixError, MatrixReader};
use crate::wstar::{
    random_positive, AlgebraElement, AlgebraSignature, NormalState, WstarError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CpError {
    #[error("signature mismatch: {left} vs {right}")]
    SignatureMismatch { left: String, right: String },
    #[error("Kraus item {index}: {msg}")]
    BadItem { index: usize, msg: String },
    #[error("map is not sub-unital (f(1) violates 0 ≤ f(1) ≤ 1 by {violation:.3e})")]
    NotSubunital { violation: f64 },
    #[error("map sequence is not monotone at index {index} (Choi eigenvalue {min_eigenvalue:.3e})")]
    OrderViolation { index: usize, min_eigenvalue: f64 },
    #[error("map sequence did not settle after {iterations} steps (last step {residual:.3e})")]
    Divergence { iterations: usize, residual: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Wstar(#[from] WstarError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

pub type Result<T> = std::result::Result<T, CpError>;

fn check_sig(left: &AlgebraSignature, right: &AlgebraSignature) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(CpError::SignatureMismatch {
            left: left.to_string(),
            right: right.to_string(),
        })
    }
}

/// One Kraus operator from source block `source` to target block `target`,
/// of shape `dim(source) × dim(target)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausItem {
    pub source: usize,
    pub target: usize,
    pub op: ComplexMatrix,
}

/// `x ↦ (Σ_{items with target t} K* x_s K)_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausMap {
    source: AlgebraSignature,
    target: AlgebraSignature,
    items: Vec<KrausItem>,
}

/// Inclusion flags, always downward consistent: `miu ⇒ pu ⇒ psu`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub psu: bool,
    pub pu: bool,
    pub miu: bool,
}

impl KrausMap {
    pub fn new(source: AlgebraSignature, target: AlgebraSignature, items: Vec<KrausItem>) -> Result<Self> {
        for (index, it) in items.iter().enumerate() {
            if it.source >= source.num_blocks() || it.target >= target.num_blocks() {
                return Err(CpError::BadItem {
                    index,
                    msg: format!("block pair ({}, {}) out of range", it.source, it.target),
                });
            }
            let (r, c) = (source.block(it.source), target.block(it.target));
            if it.op.rows() != r || it.op.cols() != c {
                return Err(CpError::BadItem {
                    index,
                    msg: format!("operator is {}x{}, expected {r}x{c}", it.op.rows(), it.op.cols()),
                });
            }
        }
        Ok(Self { source, target, items })
    }

    /// Single-block map `x ↦ Σ K* x K` on `M_n`.
    pub fn from_kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let n = ops.first().map(ComplexMatrix::rows).unwrap_or(1);
        let sig = AlgebraSignature::matrix_algebra(n);
        let items = ops.into_iter().map(|op| KrausItem { source: 0, target: 0, op }).collect();
        Self::new(sig.clone(), sig, items)
    }

    pub fn identity(signature: &AlgebraSignature) -> Self {
        let items = signature
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, &n)| KrausItem {
                source: b,
                target: b,
                op: ComplexMatrix::identity(n),
            })
            .collect();
        Self {
            source: signature.clone(),
            target: signature.clone(),
            items,
        }
    }

    /// The bottom element: no items.
    pub fn zero(source: &AlgebraSignature, target: &AlgebraSignature) -> Self {
        Self {
            source: source.clone(),
            target: target.clone(),
            items: Vec::new(),
        }
    }

    /// `x ↦ U* x U` on `M_n`.
    pub fn conjugation(u: ComplexMatrix) -> Self {
        Self::from_kraus(vec![u]).expect("square operator")
    }

    pub fn source(&self) -> &AlgebraSignature {
        &self.source
    }

    pub fn target(&self) -> &AlgebraSignature {
        &self.target
    }

    pub fn items(&self) -> &[KrausItem] {
        &self.items
    }

    pub fn apply(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        check_sig(&self.source, x.signature())?;
        let mut out: Vec<ComplexMatrix> = self
            .target
            .blocks()
            .iter()
            .map(|&n| ComplexMatrix::zeros(n, n))
            .collect();
        for it in &self.items {
            out[it.target] = &out[it.target] + &x.block(it.source).congruence(&it.op);
        }
        Ok(AlgebraElement::new(self.target.clone(), out)?)
    }

    /// `x ↦ g(f(x))` where `self = f`.
    pub fn then(&self, g: &KrausMap) -> Result<KrausMap> {
        check_sig(&self.target, &g.source)?;
        let mut items = Vec::new();
        for k in &self.items {
            for l in g.items.iter().filter(|l| l.source == k.target) {
                items.push(KrausItem {
                    source: k.source,
                    target: l.target,
                    op: &k.op * &l.op,
                });
            }
        }
        Ok(KrausMap {
            source: self.source.clone(),
            target: g.target.clone(),
            items,
        })
    }

    /// Pointwise sum.
    pub fn add(&self, other: &KrausMap) -> Result<KrausMap> {
        check_sig(&self.source, &other.source)?;
        check_sig(&self.target, &other.target)?;
        let mut items = self.items.clone();
        items.extend(other.items.iter().cloned());
        Ok(KrausMap {
            source: self.source.clone(),
            target: self.target.clone(),
            items,
        })
    }

    /// `p · f` for `p ≥ 0`, scaling every Kraus operator by `√p`.
    pub fn scale(&self, p: f64) -> KrausMap {
        assert!(p >= 0.0, "negative scalar {p}");
        let s = p.sqrt();
        KrausMap {
            source: self.source.clone(),
            target: self.target.clone(),
            items: self
                .items
                .iter()
                .map(|it| KrausItem {
                    op: it.op.scale_real(s),
                    ..it.clone()
                })
                .collect(),
        }
    }

    pub fn unit_image(&self) -> AlgebraElement {
        self.apply(&AlgebraElement::unit(&self.source)).expect("own signature")
    }

    pub fn check_subunital(&self, tol: f64) -> Result<()> {
        let violation = self.unit_image().effect_violation();
        if violation > tol {
            Err(CpError::NotSubunital { violation })
        } else {
            Ok(())
        }
    }

    pub fn classify(&self, tol: f64) -> Classification {
        self.transfer().classify(tol)
    }

    pub fn transfer(&self) -> TransferMatrix {
        TransferMatrix::from_fn(&self.source, &self.target, |x| self.apply(x).expect("own signature"))
    }

    /// Schrödinger-picture push-forward `ρ_t ↦ Σ K ρ_t K*` into source blocks.
    pub fn dual_state(&self, state: &NormalState) -> Result<NormalState> {
        check_sig(&self.target, state.signature())?;
        let mut out: Vec<ComplexMatrix> = self
            .source
            .blocks()
            .iter()
            .map(|&n| ComplexMatrix::zeros(n, n))
            .collect();
        for it in &self.items {
            let rho = state.density().block(it.target);
            out[it.source] = &out[it.source] + &(&(&it.op * rho) * &it.op.adjoint());
        }
        let sigma = AlgebraElement::new(self.source.clone(), out)?;
        // Mass can exceed 1 only if the map is not sub-unital.
        Ok(NormalState::new(sigma, f64::INFINITY)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("map {} -> {}\n", self.source, self.target);
        for it in &self.items {
            s.push_str(&format!("item {} {}\n{}", it.source, it.target, it.op));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = MatrixReader::new(text);
        let (line, header) = reader.take_line().ok_or(CpError::Parse {
            line: 1,
            msg: "empty map file".into(),
        })?;
        let rest = header.strip_prefix("map").ok_or_else(|| CpError::Parse {
            line,
            msg: format!("expected `map A -> B`, found `{header}`"),
        })?;
        let (a, b) = rest.split_once("->").ok_or_else(|| CpError::Parse {
            line,
            msg: "missing `->`".into(),
        })?;
        let source = AlgebraSignature::parse(a.trim()).map_err(|e| CpError::Parse { line, msg: e.to_string() })?;
        let target = AlgebraSignature::parse(b.trim()).map_err(|e| CpError::Parse { line, msg: e.to_string() })?;
        let mut items = Vec::new();
        while let Some((line, l)) = reader.take_line() {
            let words: Vec<&str> = l.split_whitespace().collect();
            let parsed = match words.as_slice() {
                ["item", s, t] => s.parse::<usize>().ok().zip(t.parse::<usize>().ok()),
                _ => None,
            };
            let (s, t) = parsed.ok_or_else(|| CpError::Parse {
                line,
                msg: format!("expected `item s t`, found `{l}`"),
            })?;
            let op = reader.read_matrix()?.ok_or(CpError::Parse {
                line,
                msg: "item without matrix".into(),
            })?;
            items.push(KrausItem { source: s, target: t, op });
        }
        Self::new(source, target, items)
    }
}

impl fmt::Display for KrausMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A linear map `A → B` as a matrix acting on stacked row-major entry
/// vectors. Also represents positive maps that are not completely positive.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    source: AlgebraSignature,
    target: AlgebraSignature,
    matrix: ComplexMatrix,
}

/// Outcome of a Choi test: the smallest eigenvalue over all block pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChoiVerdict {
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
    /// `(source block, target block)` attaining the minimum.
    pub block: (usize, usize),
}

impl TransferMatrix {
    pub fn new(source: AlgebraSignature, target: AlgebraSignature, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != target.total_dim() || matrix.cols() != source.total_dim() {
            return Err(CpError::Matrix(MatrixError::Shape {
                expected: format!("{}x{}", target.total_dim(), source.total_dim()),
                got: format!("{}x{}", matrix.rows(), matrix.cols()),
            }));
        }
        Ok(Self { source, target, matrix })
    }

    /// Tabulates a linear map on the matrix-unit basis.
    pub fn from_fn(
        source: &AlgebraSignature,
        target: &AlgebraSignature,
        f: impl Fn(&AlgebraElement) -> AlgebraElement,
    ) -> Self {
        let cols: Vec<Vec<Complex64>> = AlgebraElement::basis(source).iter().map(|e| f(e).to_vector()).collect();
        Self {
            source: source.clone(),
            target: target.clone(),
            matrix: ComplexMatrix::from_columns(target.total_dim(), &cols),
        }
    }

    pub fn identity(signature: &AlgebraSignature) -> Self {
        Self {
            source: signature.clone(),
            target: signature.clone(),
            matrix: ComplexMatrix::identity(signature.total_dim()),
        }
    }

    pub fn zero(source: &AlgebraSignature, target: &AlgebraSignature) -> Self {
        Self {
            source: source.clone(),
            target: target.clone(),
            matrix: ComplexMatrix::zeros(target.total_dim(), source.total_dim()),
        }
    }

    /// `x ↦ xᵀ` on `M_n`: positive, unital, not completely positive.
    pub fn transpose_map(n: usize) -> Self {
        let sig = AlgebraSignature::matrix_algebra(n);
        Self::from_fn(&sig, &sig, |x| AlgebraElement::single(x.block(0).transpose()))
    }

    pub fn source(&self) -> &AlgebraSignature {
        &self.source
    }

    pub fn target(&self) -> &AlgebraSignature {
        &self.target
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &AlgebraElement) -> Result<AlgebraElement> {
        check_sig(&self.source, x.signature())?;
        Ok(AlgebraElement::from_vector(&self.target, &self.matrix.mul_vec(&x.to_vector()))?)
    }

    /// `x ↦ g(f(x))` where `self = f`: the product `T_g · T_f`.
    pub fn then(&self, g: &TransferMatrix) -> Result<TransferMatrix> {
        check_sig(&self.target, &g.source)?;
        Ok(Self {
            source: self.source.clone(),
            target: g.target.clone(),
            matrix: &g.matrix * &self.matrix,
        })
    }

    fn zip(&self, other: &Self, f: impl Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        check_sig(&self.source, &other.source)?;
        check_sig(&self.target, &other.target)?;
        Ok(Self {
            source: self.source.clone(),
            target: self.target.clone(),
            matrix: f(&self.matrix, &other.matrix),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, p: f64) -> Self {
        Self {
            matrix: self.matrix.scale_real(p),
            ..self.clone()
        }
    }

    /// Largest entrywise difference.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).max_abs()
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).frobenius_norm()
    }

    /// Image of `E_ab` in source block `s`, restricted to target block `t`.
    fn component(&self, s: usize, a: usize, b: usize, t: usize) -> ComplexMatrix {
        let ns = self.source.block(s);
        let nt = self.target.block(t);
        let col = self.source.offset(s) + a * ns + b;
        let row0 = self.target.offset(t);
        let data = (0..nt * nt).map(|k| self.matrix[(row0 + k, col)]).collect();
        ComplexMatrix::new(nt, nt, data).expect("block entries")
    }

    /// `Σ_ab E_ab ⊗ Φ(E_ab)_t` for source block `s` and target block `t`.
    pub fn choi_block(&self, s: usize, t: usize) -> ComplexMatrix {
        let ns = self.source.block(s);
        let nt = self.target.block(t);
        let mut c = ComplexMatrix::zeros(ns * nt, ns * nt);
        for a in 0..ns {
            for b in 0..ns {
                let img = self.component(s, a, b, t);
                for i in 0..nt {
                    for j in 0..nt {
                        c[(a * nt + i, b * nt + j)] = img[(i, j)];
                    }
                }
            }
        }
        c
    }

    /// A direct-sum map is CP iff each block-to-block component is, and a
    /// component is CP iff its Choi matrix is positive.
    pub fn choi_test(&self, tol: f64) -> ChoiVerdict {
        let mut verdict = ChoiVerdict {
            completely_positive: true,
            min_eigenvalue: f64::INFINITY,
            block: (0, 0),
        };
        for s in 0..self.source.num_blocks() {
            for t in 0..self.target.num_blocks() {
                let c = self.choi_block(s, t);
                let scale = c.frobenius_norm().max(1.0);
                let min = if c.asymmetry() > tol * scale {
                    f64::NEG_INFINITY
                } else {
                    hermitian_eigen(&c.hermitian_part(), f64::INFINITY)
                        .map(|e| e.min())
                        .unwrap_or(f64::NEG_INFINITY)
                };
                if min < verdict.min_eigenvalue {
                    verdict.min_eigenvalue = min;
                    verdict.block = (s, t);
                }
            }
        }
        verdict.completely_positive = verdict.min_eigenvalue >= -tol;
        verdict
    }

    pub fn is_subunital(&self, tol: f64) -> bool {
        self.apply(&AlgebraElement::unit(&self.source))
            .map(|u| u.is_effect(tol))
            .unwrap_or(false)
    }

    /// PsU on the unit; PU if `f(1) = 1`; MIU if additionally `f(xy) = f(x)f(y)`
    /// and `f(x*) = f(x)*` on all pairs of matrix units.
    pub fn classify(&self, tol: f64) -> Classification {
        let one = self.apply(&AlgebraElement::unit(&self.source)).expect("own signature");
        let psu = one.is_effect(tol);
        let pu = psu && one.max_abs_diff(&AlgebraElement::unit(&self.target)) <= tol;
        let miu = pu && {
            let basis = AlgebraElement::basis(&self.source);
            let images: Vec<AlgebraElement> = basis.iter().map(|e| self.apply(e).expect("basis")).collect();
            let involutive = basis
                .iter()
                .zip(&images)
                .all(|(e, fe)| self.apply(&e.adjoint()).expect("basis").max_abs_diff(&fe.adjoint()) <= tol);
            involutive
                && (0..basis.len()).all(|i| {
                    (0..basis.len()).all(|j| {
                        let lhs = self.apply(&basis[i].mul(&basis[j])).expect("basis");
                        lhs.max_abs_diff(&images[i].mul(&images[j])) <= tol
                    })
                })
        };
        Classification { psu, pu, miu }
    }

    /// State transformer: `vec(σᵀ) = Tᵀ vec(ρᵀ)` blockwise, so that
    /// `tr(σ x) = tr(ρ f(x))`.
    pub fn dual_state(&self, state: &NormalState) -> Result<NormalState> {
        check_sig(&self.target, state.signature())?;
        let rho_t: Vec<ComplexMatrix> = state.density().blocks().iter().map(ComplexMatrix::transpose).collect();
        let rho_t = AlgebraElement::new(self.target.clone(), rho_t)?;
        let v = self.matrix.transpose().mul_vec(&rho_t.to_vector());
        let sigma_t = AlgebraElement::from_vector(&self.source, &v)?;
        let sigma = AlgebraElement::new(
            self.source.clone(),
            sigma_t.blocks().iter().map(ComplexMatrix::transpose).collect(),
        )?;
        Ok(NormalState::new(sigma, f64::INFINITY)?)
    }
}

// ---------------------------------------------------------------------------
// Order on maps

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderMode {
    /// `g − f` completely positive: sufficient for `f ⊑ g`, not necessary.
    Choi,
    /// `f(x) ≤ g(x)` on random positive `x`: a sound falsifier only.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct MapOrderVerdict {
    pub holds: bool,
    pub mode: OrderMode,
    /// In Choi mode the smallest Choi eigenvalue of `g − f`; in sampled mode
    /// the smallest eigenvalue of `g(x) − f(x)` over the samples.
    pub min_eigenvalue: f64,
    /// Index of the first falsifying sample in sampled mode.
    pub witness: Option<usize>,
}

impl MapOrderVerdict {
    /// What a `holds` verdict guarantees.
    pub fn strength(&self) -> &'static str {
        match (self.mode, self.holds) {
            (OrderMode::Choi, true) => "proved: g - f is completely positive",
            (OrderMode::Choi, false) => "inconclusive: g - f is not completely positive but may be positive",
            (OrderMode::Sampled { .. }, true) => "no counterexample among samples",
            (OrderMode::Sampled { .. }, false) => "refuted by a positive sample",
        }
    }
}

pub fn loewner_leq_maps(f: &TransferMatrix, g: &TransferMatrix, tol: f64, mode: OrderMode) -> Result<MapOrderVerdict> {
    let diff = g.sub(f)?;
    match mode {
        OrderMode::Choi => {
            let v = diff.choi_test(tol);
            Ok(MapOrderVerdict {
                holds: v.completely_positive,
                mode,
                min_eigenvalue: v.min_eigenvalue,
                witness: None,
            })
        }
        OrderMode::Sampled { samples, seed } => {
            let mut rng = crate::random::seeded(seed);
            let mut worst = f64::INFINITY;
            let mut witness = None;
            for i in 0..samples {
                let x = random_positive(&mut rng, &f.source);
                let d = diff.apply(&x)?;
                for block in d.blocks() {
                    let e = hermitian_eigen(&block.hermitian_part(), f64::INFINITY)?;
                    let scale = block.frobenius_norm().max(1.0);
                    let min = if block.asymmetry() > tol * scale { f64::NEG_INFINITY } else { e.min() };
                    if min < worst {
                        worst = min;
                    }
                    if min < -tol && witness.is_none() {
                        witness = Some(i);
                    }
                }
            }
            Ok(MapOrderVerdict {
                holds: witness.is_none(),
                mode,
                min_eigenvalue: worst,
                witness,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Least upper bounds of monotone map sequences

#[derive(Clone, Copy, Debug)]
pub struct MapLubPolicy {
    /// Stop once `‖T_{k+1} − T_k‖_F` drops to this.
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Tolerance of the per-step Choi monotonicity check.
    pub order_tol: f64,
    /// Return the last iterate instead of failing when the cap is hit.
    pub allow_unconverged: bool,
}

impl Default for MapLubPolicy {
    fn default() -> Self {
        Self {
            step_tol: 1e-12,
            max_iterations: 1_000_000,
            order_tol: 1e-9,
            allow_unconverged: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MapLub {
    pub transfer: TransferMatrix,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Limit of `f₀ ⊑ f₁ ⊑ …`, checking each step in Choi mode.
pub fn lub_monotone_maps<I>(seq: I, policy: MapLubPolicy) -> Result<MapLub>
where
    I: IntoIterator<Item = TransferMatrix>,
{
    let mut iter = seq.into_iter();
    let mut current = iter.next().ok_or(CpError::Divergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let mut iterations = 0;
    let mut residual = 0.0;
    for next in iter {
        iterations += 1;
        let step = next.sub(&current)?;
        let v = step.choi_test(policy.order_tol);
        if !v.completely_positive {
            return Err(CpError::OrderViolation {
                index: iterations,
                min_eigenvalue: v.min_eigenvalue,
            });
        }
        residual = step.matrix.frobenius_norm();
        current = next;
        if residual <= policy.step_tol {
            return Ok(MapLub {
                transfer: current,
                iterations,
                residual,
                converged: true,
            });
        }
        if iterations >= policy.max_iterations {
            if policy.allow_unconverged {
                return Ok(MapLub {
                    transfer: current,
                    iterations,
                    residual,
                    converged: false,
                });
            }
            return Err(CpError::Divergence { iterations, residual });
        }
    }
    Ok(MapLub {
        transfer: current,
        iterations,
        residual,
        converged: true,
    })
}

// ---------------------------------------------------------------------------
// Random maps

/// Random CP map `A → B`. Each target block gets a Kraus family cut from an
/// isometry, so `f(1)_t = c_t · 1` with `c_t = 1` when `unital` and
/// `c_t ∈ [0, 1]` otherwise.
pub fn random_kraus_map<R: Rng + ?Sized>(
    rng: &mut R,
    source: &AlgebraSignature,
    target: &AlgebraSignature,
    rank: usize,
    unital: bool,
) -> KrausMap {
    let total: usize = source.blocks().iter().sum();
    let mut items = Vec::new();
    for (t, &m) in target.blocks().iter().enumerate() {
        let r = rank.max(1).max(m.div_ceil(total));
        let d = total * r;
        let u = crate::random::unitary(rng, d);
        let c: f64 = if unital { 1.0 } else { rng.gen_range(0.0..=1.0) };
        let mut row = 0;
        for (s, &n) in source.blocks().iter().enumerate() {
            for _ in 0..r {
                let mut k = ComplexMatrix::zeros(n, m);
                for i in 0..n {
                    for j in 0..m {
                        k[(i, j)] = u[(row + i, j)] * c.sqrt();
                    }
                }
                row += n;
                items.push(KrausItem { source: s, target: t, op: k });
            }
        }
    }
    KrausMap::new(source.clone(), target.clone(), items).expect("shapes by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::gates::*;
    use crate::random::seeded;
    use crate::wstar::{pairing, random_hermitian, random_state};

    fn qubit() -> AlgebraSignature {
        AlgebraSignature::qubit()
    }

    #[test]
    fn apply_examples() {
        let x = AlgebraElement::single(pauli_y());
        assert_eq!(KrausMap::identity(&qubit()).apply(&x).unwrap(), x);
        let h = KrausMap::conjugation(hadamard());
        let out = h.apply(&AlgebraElement::single(ket0_proj())).unwrap();
        assert!(out.max_abs_diff(&AlgebraElement::single(plus_proj())) < 1e-15);
        let z = KrausMap::zero(&qubit(), &qubit()).apply(&x).unwrap();
        assert_eq!(z, AlgebraElement::zero(&qubit()));
        assert!(h.apply(&AlgebraElement::unit(&AlgebraSignature::bit())).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            KrausMap::conjugation(hadamard()).classify(1e-9),
            Classification { psu: true, pu: true, miu: true }
        );
        let measure = KrausMap::from_kraus(vec![ket0_proj(), ket1_proj()]).unwrap();
        assert_eq!(measure.classify(1e-9), Classification { psu: true, pu: true, miu: false });
        let post = KrausMap::from_kraus(vec![ket0_proj()]).unwrap();
        assert_eq!(post.classify(1e-9), Classification { psu: true, pu: false, miu: false });
        let big = KrausMap::from_kraus(vec![ComplexMatrix::identity(2).scale_real(2.0)]).unwrap();
        assert!(!big.classify(1e-9).psu);
    }

    #[test]
    fn composition_convention() {
        let mut rng = seeded(4);
        let a = AlgebraSignature::new(vec![2, 1]).unwrap();
        let b = AlgebraSignature::qubit();
        let c = AlgebraSignature::new(vec![1, 1, 2]).unwrap();
        let f = random_kraus_map(&mut rng, &a, &b, 2, false);
        let g = random_kraus_map(&mut rng, &b, &c, 1, true);
        let fg = f.then(&g).unwrap();
        let x = random_hermitian(&mut rng, &a);
        let direct = g.apply(&f.apply(&x).unwrap()).unwrap();
        assert!(fg.apply(&x).unwrap().max_abs_diff(&direct) < 1e-12);
        let product = f.transfer().then(&g.transfer()).unwrap();
        assert!(fg.transfer().distance(&product) < 1e-12);
        let hh = KrausMap::conjugation(hadamard()).then(&KrausMap::conjugation(hadamard())).unwrap();
        assert!(hh.transfer().distance(&TransferMatrix::identity(&qubit())) < 1e-12);
        assert!(g.then(&f).is_err());
    }

    #[test]
    fn transfer_agrees_with_kraus_action() {
        let mut rng = seeded(8);
        let a = AlgebraSignature::new(vec![2, 1]).unwrap();
        let f = random_kraus_map(&mut rng, &a, &a, 2, false);
        let t = f.transfer();
        for e in AlgebraElement::basis(&a) {
            assert!(t.apply(&e).unwrap().max_abs_diff(&f.apply(&e).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn order_examples() {
        let id = TransferMatrix::identity(&qubit());
        for mode in [OrderMode::Choi, OrderMode::Sampled { samples: 20, seed: 1 }] {
            assert!(loewner_leq_maps(&id, &id, 1e-9, mode).unwrap().holds);
            assert!(loewner_leq_maps(&id.scale(1.0 - 0.5f64.powi(5)), &id, 1e-9, mode).unwrap().holds);
        }
        let tr = TransferMatrix::transpose_map(2);
        let choi = loewner_leq_maps(&id, &tr, 1e-9, OrderMode::Choi).unwrap();
        assert!(!choi.holds);
        assert!(choi.min_eigenvalue < -0.5);
        assert!(!tr.choi_test(1e-9).completely_positive);
        let half = loewner_leq_maps(&id, &id.scale(0.5), 1e-9, OrderMode::Sampled { samples: 5, seed: 1 }).unwrap();
        assert_eq!(half.witness, Some(0));
    }

    #[test]
    fn transpose_is_positive_but_not_cp() {
        let tr = TransferMatrix::transpose_map(2);
        let zero = TransferMatrix::zero(&qubit(), &qubit());
        let v = loewner_leq_maps(&zero, &tr, 1e-9, OrderMode::Sampled { samples: 50, seed: 3 }).unwrap();
        assert!(v.holds);
        assert!(!loewner_leq_maps(&zero, &tr, 1e-9, OrderMode::Choi).unwrap().holds);
    }

    #[test]
    fn lub_examples() {
        let id = TransferMatrix::identity(&qubit());
        let constant = lub_monotone_maps(std::iter::repeat(id.clone()).take(5), MapLubPolicy::default()).unwrap();
        assert_eq!(constant.transfer, id);
        let seq = (0..).map(|k: i32| id.scale(1.0 - 0.5f64.powi(k)));
        let r = lub_monotone_maps(seq, MapLubPolicy::default()).unwrap();
        assert!(r.converged && r.transfer.distance(&id) < 1e-9);
        let down = (0..).map(|k: i32| id.scale(0.5f64.powi(k)));
        assert!(matches!(
            lub_monotone_maps(down, MapLubPolicy::default()),
            Err(CpError::OrderViolation { index: 1, .. })
        ));
    }

    #[test]
    fn duals() {
        let mut rng = seeded(11);
        let zero_state = NormalState::new(AlgebraElement::single(ket0_proj()), 1e-9).unwrap();
        let d = KrausMap::conjugation(hadamard()).dual_state(&zero_state).unwrap();
        assert!(d.density().max_abs_diff(&AlgebraElement::single(plus_proj())) < 1e-15);
        let a = AlgebraSignature::new(vec![2, 1]).unwrap();
        let b = AlgebraSignature::new(vec![1, 2]).unwrap();
        for _ in 0..20 {
            let f = random_kraus_map(&mut rng, &a, &b, 2, false);
            let s = random_state(&mut rng, &b);
            let x = random_hermitian(&mut rng, &a);
            let lhs = pairing(&s, &f.apply(&x).unwrap()).unwrap();
            let via_kraus = pairing(&f.dual_state(&s).unwrap(), &x).unwrap();
            let via_transfer = pairing(&f.transfer().dual_state(&s).unwrap(), &x).unwrap();
            assert!((lhs - via_kraus).norm() < 1e-12);
            assert!((lhs - via_transfer).norm() < 1e-12);
        }
    }

    #[test]
    fn kraus_text_round_trip() {
        let mut rng = seeded(6);
        let a = AlgebraSignature::new(vec![2, 1]).unwrap();
        let f = random_kraus_map(&mut rng, &a, &AlgebraSignature::qubit(), 1, false);
        let back = KrausMap::parse(&f.to_text()).unwrap();
        assert_eq!(back, f);
        assert!(matches!(KrausMap::parse("map blocks 2 -> blocks 2\nitem 0\n"), Err(CpError::Parse { line: 2, .. })));
    }

    #[test]
    fn random_maps_respect_unitality() {
        let mut rng = seeded(12);
        let a = AlgebraSignature::new(vec![1, 2]).unwrap();
        let b = AlgebraSignature::new(vec![3]).unwrap();
        let f = random_kraus_map(&mut rng, &a, &b, 1, true);
        assert!(f.unit_image().max_abs_diff(&AlgebraElement::unit(&b)) < 1e-12);
        let g = random_kraus_map(&mut rng, &a, &b, 2, false);
        assert!(g.check_subunital(1e-12).is_ok());
    }
}
