//! Dense complex matrices and the spectral machinery the rest of the crate
//! rests on: adjoints, a cyclic Jacobi eigensolver for Hermitian matrices,
//! positivity, the Löwner order, operator norms and positive decompositions.
//!
//! Everything here is self-contained; no BLAS/LAPACK kernel is involved.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Default tolerance for positivity and order predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Off-diagonal Frobenius threshold (relative to `max(1, ‖M‖_F)`) at which
/// the Jacobi eigensolver stops.
pub const JACOBI_THRESHOLD: f64 = 1e-14;

/// Sweep cap for both Jacobi solvers.
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (‖m − m*‖_F = {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, MatrixError>;

/// Row-major dense complex matrix. Square in most uses; Kraus operators
/// between blocks of different sizes are rectangular.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MatrixError::Shape {
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatrixError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(MatrixError::Shape {
                expected: format!("rows of length {c}"),
                got: "ragged rows".into(),
            });
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    /// Convenience constructor from real entries.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let data: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&data).expect("real rows must be rectangular and finite")
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `u v*` for column vectors `u`, `v`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    /// Orthogonal projector onto the line spanned by `v` (`v` need not be normalized).
    pub fn projector(v: &[Complex64]) -> Self {
        let n2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        Self::outer(v, v).scale_real(1.0 / n2)
    }

    /// Matrix unit `E_ab` in `M_n`.
    pub fn unit(n: usize, a: usize, b: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(a, b)] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖m − m*‖_F`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self - &self.adjoint()).frobenius_norm()
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut m = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `K* self K`, the Heisenberg-picture conjugation used by Kraus maps.
    pub fn congruence(&self, k: &Self) -> Self {
        &(&k.adjoint() * self) * k
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(MatrixError::Shape {
                expected: format!("{} rows", self.cols),
                got: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(self * other)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert!(self.same_shape(rhs), "shape mismatch in matrix addition");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert!(self.same_shape(rhs), "shape mismatch in matrix subtraction");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matrix product");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $m(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Standard inner product `⟨x, y⟩ = Σ x_i conj(y_i)` (linear in the first slot).
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Jacobi rotations

/// Rotation `[[c, s·e^{iφ}], [−s·e^{−iφ}, c]]` that diagonalizes the Hermitian
/// 2×2 matrix `[[app, apq], [conj(apq), aqq]]` by congruence `J* A J`.
#[derive(Clone, Copy, Debug)]
struct Rotation {
    c: f64,
    s_phase: Complex64,
}

impl Rotation {
    fn annihilating(app: f64, aqq: f64, apq: Complex64) -> Self {
        let r = apq.norm();
        let phase = apq / r;
        let theta = (aqq - app) / (2.0 * r);
        let t = if theta.is_finite() {
            theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
        } else {
            0.0
        };
        let t = if theta == 0.0 { 1.0 } else { t };
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        Rotation {
            c,
            s_phase: phase * s,
        }
    }

    /// Replace columns p, q of `m` by `[m_p m_q] J`.
    fn apply_right(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        let (c, sp) = (self.c, self.s_phase);
        for i in 0..m.rows {
            let a = m[(i, p)];
            let b = m[(i, q)];
            m[(i, p)] = a * c - b * sp.conj();
            m[(i, q)] = a * sp + b * c;
        }
    }

    /// Replace rows p, q of `m` by `J* [m_p; m_q]`.
    fn apply_left_adjoint(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        let (c, sp) = (self.c, self.s_phase);
        for j in 0..m.cols {
            let a = m[(p, j)];
            let b = m[(q, j)];
            m[(p, j)] = a * c - b * sp;
            m[(q, j)] = a * sp.conj() + b * c;
        }
    }
}

/// Spectral decomposition `M = V Λ V*` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `j` is the eigenvector for `eigenvalues[j]`.
    pub vectors: ComplexMatrix,
    pub sweeps: usize,
}

impl EigenDecomposition {
    /// `V f(Λ) V*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        &scaled * &self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|x| x)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        self.vectors.column(j)
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi eigensolver for Hermitian `m`.
///
/// Rejects inputs with `‖m − m*‖_F > tol`; the Hermitian part is diagonalized.
pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(MatrixError::Shape {
            expected: "square matrix".into(),
            got: format!("{}x{}", m.rows, m.cols),
        });
    }
    let asymmetry = m.asymmetry();
    if asymmetry > tol {
        return Err(MatrixError::NotHermitian { asymmetry });
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_THRESHOLD * a.frobenius_norm().max(1.0);
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(MatrixError::NoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() == 0.0 {
                    continue;
                }
                let rot = Rotation::annihilating(a[(p, p)].re, a[(q, q)].re, apq);
                rot.apply_right(&mut a, p, q);
                rot.apply_left_adjoint(&mut a, p, q);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                rot.apply_right(&mut v, p, q);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_j)] = v[(i, old_j)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
        sweeps,
    })
}

/// Singular value decomposition `A = U Σ V*` by one-sided (Hestenes) Jacobi.
///
/// `u` has the shape of `A`; its columns with non-zero singular value are
/// orthonormal. `v` is `cols × cols` unitary. Singular values are not sorted.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.iter().copied().fold(0.0, f64::max)
    }

    fn cutoff(&self, rel: f64) -> f64 {
        rel * self.max_singular_value()
    }

    /// Orthonormal basis of `{x | A x = 0}`, deciding rank with
    /// `σ ≤ rel · σ_max`.
    pub fn null_space(&self, rel: f64) -> Vec<Vec<Complex64>> {
        self.null_space_below(self.cutoff(rel))
    }

    /// Right singular vectors with `σ ≤ cut`.
    pub fn null_space_below(&self, cut: f64) -> Vec<Vec<Complex64>> {
        self.singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= cut || s == 0.0)
            .map(|(j, _)| self.v.column(j))
            .collect()
    }

    /// Orthonormal basis of the column space of `A`.
    pub fn range(&self, rel: f64) -> Vec<Vec<Complex64>> {
        let cut = self.cutoff(rel);
        self.singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > cut && s > 0.0)
            .map(|(j, &s)| self.u.column(j).iter().map(|z| z / s).collect())
            .collect()
    }

    pub fn rank(&self, rel: f64) -> usize {
        self.range(rel).len()
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let (rows, cols) = (m.rows, m.cols);
    let mut u = m.clone();
    let mut v = ComplexMatrix::identity(cols);
    // Columns below this squared norm are rounding noise and left alone.
    let floor = (f64::EPSILON * m.frobenius_norm()).powi(2);
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        let mut worst: f64 = 0.0;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, Complex64::new(0.0, 0.0));
                for r in 0..rows {
                    let a = u[(r, i)];
                    let b = u[(r, j)];
                    alpha += a.norm_sqr();
                    beta += b.norm_sqr();
                    gamma += a.conj() * b;
                }
                let scale = (alpha * beta).sqrt();
                if alpha <= floor || beta <= floor || gamma.norm() <= 1e-15 * scale {
                    continue;
                }
                worst = worst.max(gamma.norm() / scale);
                rotated = true;
                let rot = Rotation::annihilating(alpha, beta, gamma);
                rot.apply_right(&mut u, i, j);
                rot.apply_right(&mut v, i, j);
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps >= MAX_SWEEPS {
            return Err(MatrixError::NoConvergence { sweeps, off: worst });
        }
    }
    let singular_values = (0..cols).map(|j| vec_norm(&u.column(j))).collect();
    Ok(Svd {
        u,
        singular_values,
        v,
    })
}

// ---------------------------------------------------------------------------
// Predicates

/// Outcome of [`is_selfadjoint`]: the norm test plus the quadratic-form
/// cross-check `Im⟨mx, x⟩ = 0`.
#[derive(Clone, Debug)]
pub struct SelfAdjointReport {
    pub selfadjoint: bool,
    pub asymmetry: f64,
    pub max_imag_quadratic: f64,
    /// Vector with the largest `|Im⟨mx, x⟩|` among the samples.
    pub witness: Option<Vec<Complex64>>,
}

pub fn is_selfadjoint<R: Rng + ?Sized>(
    m: &ComplexMatrix,
    tol: f64,
    samples: usize,
    rng: &mut R,
) -> SelfAdjointReport {
    let asymmetry = m.asymmetry();
    let mut max_imag: f64 = 0.0;
    let mut witness = None;
    if m.is_square() {
        for _ in 0..samples {
            let x = crate::random::unit_vector(rng, m.rows);
            let q = inner(&m.mul_vec(&x), &x).im.abs();
            if q > max_imag {
                max_imag = q;
                witness = Some(x);
            }
        }
    }
    SelfAdjointReport {
        selfadjoint: asymmetry <= tol,
        asymmetry,
        max_imag_quadratic: max_imag,
        witness,
    }
}

#[derive(Clone, Debug)]
pub struct PositivityReport {
    pub positive: bool,
    pub min_eigenvalue: f64,
    /// `y` with `y* y ≈ m`, present when `positive`.
    pub root: Option<ComplexMatrix>,
}

/// `m ≥ 0`: Hermitian within `tol` and smallest eigenvalue `≥ −tol`.
pub fn is_positive(m: &ComplexMatrix, tol: f64) -> PositivityReport {
    let eig = match hermitian_eigen(m, tol) {
        Ok(e) => e,
        Err(_) => {
            return PositivityReport {
                positive: false,
                min_eigenvalue: f64::NAN,
                root: None,
            }
        }
    };
    let min = eig.min();
    let positive = min >= -tol;
    let root = positive.then(|| {
        let n = eig.eigenvalues.len();
        let mut y = eig.vectors.adjoint();
        for i in 0..n {
            let s = eig.eigenvalues[i].max(0.0).sqrt();
            for j in 0..n {
                y[(i, j)] *= s;
            }
        }
        y
    });
    PositivityReport {
        positive,
        min_eigenvalue: min,
        root,
    }
}

pub fn psd(m: &ComplexMatrix, tol: f64) -> bool {
    is_positive(m, tol).positive
}

/// Löwner order `a ≤ b` iff `b − a ≥ 0`.
pub fn loewner_leq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<bool> {
    for m in [a, b] {
        let asymmetry = m.asymmetry();
        if asymmetry > tol {
            return Err(MatrixError::NotHermitian { asymmetry });
        }
    }
    if !a.same_shape(b) {
        return Err(MatrixError::Shape {
            expected: format!("{}x{}", a.rows, a.cols),
            got: format!("{}x{}", b.rows, b.cols),
        });
    }
    Ok(psd(&(b - a), tol))
}

/// Largest singular value, `sqrt(λ_max(m* m))`.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.data.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    let gram = &m.adjoint() * m;
    let gram = gram.hermitian_part();
    match hermitian_eigen(&gram, f64::INFINITY) {
        Ok(e) => e.max().max(0.0).sqrt(),
        Err(_) => svd(m)
            .map(|s| s.max_singular_value())
            .unwrap_or(m.frobenius_norm()),
    }
}

/// Spectral split `x = x₊ − x₋` of a Hermitian matrix.
pub fn decompose_selfadjoint(m: &ComplexMatrix, tol: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let eig = hermitian_eigen(m, tol)?;
    Ok((
        eig.map_spectrum(|x| x.max(0.0)),
        eig.map_spectrum(|x| (-x).max(0.0)),
    ))
}

/// `x = x₁ − x₂ + i x₃ − i x₄` with every `xᵢ ≥ 0` and `‖xᵢ‖ ≤ ‖x‖`.
#[derive(Clone, Debug)]
pub struct FourPositiveParts {
    pub parts: [ComplexMatrix; 4],
}

impl FourPositiveParts {
    pub fn recombine(&self) -> ComplexMatrix {
        let i = Complex64::new(0.0, 1.0);
        let [a, b, c, d] = &self.parts;
        &(a - b) + &(c - d).scale(i)
    }
}

pub fn decompose_general(m: &ComplexMatrix) -> Result<FourPositiveParts> {
    let re = m.hermitian_part();
    let im = (m - &m.adjoint()).scale(Complex64::new(0.0, -0.5));
    let (p1, p2) = decompose_selfadjoint(&re, f64::INFINITY)?;
    let (p3, p4) = decompose_selfadjoint(&im, f64::INFINITY)?;
    Ok(FourPositiveParts {
        parts: [p1, p2, p3, p4],
    })
}

// ---------------------------------------------------------------------------
// Text format: `dim n` (or `dim r c`) then one line per row of `a+bi` entries.

pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
}

pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    let bad = || format!("malformed complex literal `{s}`");
    let real = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(real(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        t => real(t),
    };
    match split {
        Some(k) => Ok(Complex64::new(real(&body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_square() {
            writeln!(f, "dim {}", self.rows)?;
        } else {
            writeln!(f, "dim {} {}", self.rows, self.cols)?;
        }
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format_complex(self[(i, j)])).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Streaming reader over the matrix text format; several blocks may follow
/// one another in a single file.
pub struct MatrixReader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> MatrixReader<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
        }
    }

    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.lines.by_ref() {
            let t = line.split('#').next().unwrap_or("").trim();
            if !t.is_empty() {
                return Some((i + 1, t));
            }
        }
        None
    }

    /// Returns the next non-empty line without consuming it.
    pub fn peek_line(&mut self) -> Option<(usize, &'a str)> {
        while let Some(&(i, line)) = self.lines.peek() {
            let t = line.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                self.lines.next();
            } else {
                return Some((i + 1, t));
            }
        }
        None
    }

    pub fn take_line(&mut self) -> Option<(usize, &'a str)> {
        self.next_content()
    }

    pub fn read_matrix(&mut self) -> Result<Option<ComplexMatrix>> {
        let Some((line, header)) = self.next_content() else {
            return Ok(None);
        };
        let parse_err = |line: usize, msg: String| MatrixError::Parse { line, msg };
        let mut words = header.split_whitespace();
        if words.next() != Some("dim") {
            return Err(parse_err(line, format!("expected `dim n`, found `{header}`")));
        }
        let dims: Vec<usize> = words
            .map(|w| w.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, e.to_string()))?;
        let (rows, cols) = match dims.as_slice() {
            [n] => (*n, *n),
            [r, c] => (*r, *c),
            _ => return Err(parse_err(line, "expected `dim n` or `dim r c`".into())),
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (l, text) = self
                .next_content()
                .ok_or_else(|| parse_err(line, "unexpected end of matrix".into()))?;
            let row: Vec<Complex64> = text
                .split_whitespace()
                .map(parse_complex)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(l, e))?;
            if row.len() != cols {
                return Err(parse_err(l, format!("expected {cols} entries, found {}", row.len())));
            }
            data.extend(row);
        }
        ComplexMatrix::new(rows, cols, data).map_err(|e| parse_err(line, e.to_string()))
            .map(Some)
    }
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    MatrixReader::new(text)
        .read_matrix()?
        .ok_or(MatrixError::Parse {
            line: 1,
            msg: "no matrix found".into(),
        })
}

pub fn parse_matrices(text: &str) -> Result<Vec<ComplexMatrix>> {
    let mut reader = MatrixReader::new(text);
    let mut out = Vec::new();
    while let Some(m) = reader.read_matrix()? {
        out.push(m);
    }
    Ok(out)
}

/// Named single-qubit operators used across tests, demos and the program preamble.
pub mod gates {
    use super::ComplexMatrix;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y() -> ComplexMatrix {
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        ComplexMatrix::from_rows(&[vec![z, -i], vec![i, z]]).unwrap()
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diag(&[1.0, -1.0])
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = FRAC_1_SQRT_2;
        ComplexMatrix::from_real(&[&[h, h], &[h, -h]])
    }

    pub fn phase_s() -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(2);
        m[(1, 1)] = Complex64::new(0.0, 1.0);
        m
    }

    pub fn phase_t() -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(2);
        m[(1, 1)] = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        m
    }

    pub fn cnot() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(i, j)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// `|0⟩⟨0|`.
    pub fn ket0_proj() -> ComplexMatrix {
        ComplexMatrix::diag(&[1.0, 0.0])
    }

    /// `|1⟩⟨1|`.
    pub fn ket1_proj() -> ComplexMatrix {
        ComplexMatrix::diag(&[0.0, 1.0])
    }

    /// `|+⟩⟨+|`.
    pub fn plus_proj() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]])
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn eigen_small_cases() {
        let e = hermitian_eigen(&ComplexMatrix::identity(2), 1e-12).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
        let e = hermitian_eigen(&pauli_x(), 1e-12).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let e = hermitian_eigen(&ComplexMatrix::diag(&[0.75, 0.25]), 1e-12).unwrap();
        assert_eq!(e.eigenvalues, vec![0.25, 0.75]);
        let e = hermitian_eigen(&pauli_y(), 1e-12).unwrap();
        assert!(close(&e.reconstruct(), &pauli_y(), 1e-14));
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            hermitian_eigen(&m, 1e-9),
            Err(MatrixError::NotHermitian { .. })
        ));
    }

    #[test]
    fn selfadjoint_quadratic_form_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = is_selfadjoint(&pauli_z(), 1e-9, 32, &mut rng);
        assert!(z.selfadjoint && z.max_imag_quadratic <= 1e-12);
        let ix = pauli_x().scale(Complex64::new(0.0, 1.0));
        let r = is_selfadjoint(&ix, 1e-9, 32, &mut rng);
        assert!(!r.selfadjoint);
        assert!(r.max_imag_quadratic > 1e-3);
        let w = r.witness.unwrap();
        assert!(inner(&ix.mul_vec(&w), &w).im.abs() > 1e-3);
        assert!(is_selfadjoint(&ComplexMatrix::zeros(3, 3), 1e-9, 4, &mut rng).selfadjoint);
    }

    #[test]
    fn positivity_examples() {
        let p = is_positive(&plus_proj(), 1e-9);
        assert!(p.positive);
        let y = p.root.unwrap();
        assert!(close(&(&y.adjoint() * &y), &plus_proj(), 1e-12));
        let e = hermitian_eigen(&plus_proj(), 1e-9).unwrap();
        assert!(e.eigenvalues[0].abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(!is_positive(&pauli_z(), 1e-9).positive);
    }

    #[test]
    fn loewner_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert!(loewner_leq(&ComplexMatrix::zeros(2, 2), &i2, 1e-9).unwrap());
        assert!(loewner_leq(&ket0_proj(), &i2, 1e-9).unwrap());
        assert!(!loewner_leq(&ket0_proj(), &plus_proj(), 1e-9).unwrap());
        let bad = ComplexMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(loewner_leq(&bad, &i2, 1e-9).is_err());
    }

    #[test]
    fn operator_norms() {
        assert!((operator_norm(&ComplexMatrix::identity(3)) - 1.0).abs() < 1e-14);
        assert!((operator_norm(&ComplexMatrix::identity(2).scale_real(2.0)) - 2.0).abs() < 1e-14);
        assert!((operator_norm(&pauli_x()) - 1.0).abs() < 1e-14);
        let rect = ComplexMatrix::from_real(&[&[3.0, 0.0, 0.0], &[0.0, 4.0, 0.0]]);
        assert!((operator_norm(&rect) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_split_of_pauli_z() {
        let (p, m) = decompose_selfadjoint(&pauli_z(), 1e-9).unwrap();
        assert!(close(&p, &ket0_proj(), 1e-14));
        assert!(close(&m, &ket1_proj(), 1e-14));
        let (p, m) = decompose_selfadjoint(&plus_proj(), 1e-9).unwrap();
        assert!(close(&p, &plus_proj(), 1e-14));
        assert!(m.max_abs() < 1e-14);
    }

    #[test]
    fn svd_null_space_and_range() {
        let m = ComplexMatrix::from_real(&[&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]]);
        let s = svd(&m).unwrap();
        assert_eq!(s.rank(1e-10), 1);
        let null = s.null_space(1e-10);
        assert_eq!(null.len(), 1);
        assert!(vec_norm(&m.mul_vec(&null[0])) < 1e-14);
        let range = s.range(1e-10);
        let r = &range[0];
        assert!((r[0].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn complex_literals() {
        for (s, z) in [
            ("1", Complex64::new(1.0, 0.0)),
            ("-2.5", Complex64::new(-2.5, 0.0)),
            ("i", Complex64::new(0.0, 1.0)),
            ("-i", Complex64::new(0.0, -1.0)),
            ("3-4i", Complex64::new(3.0, -4.0)),
            ("1e-3+2E+2i", Complex64::new(1e-3, 200.0)),
            ("-0.5i", Complex64::new(0.0, -0.5)),
        ] {
            assert_eq!(parse_complex(s).unwrap(), z, "{s}");
        }
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = crate::random::complex_matrix(&mut rng, 3, 2);
        let back = parse_matrix(&m.to_string()).unwrap();
        assert_eq!(back, m);
        let h = hadamard();
        assert_eq!(parse_matrix(&h.to_string()).unwrap(), h);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_matrix("dim 2\n1 0\n0\n").unwrap_err();
        assert!(matches!(err, MatrixError::Parse { line: 3, .. }));
    }
}
