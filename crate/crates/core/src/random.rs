//! Seeded generators for matrices, effects, states and maps used by the law
//! suites, the CLI and the tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{hermitian_eigen, operator_norm, vec_norm, ComplexMatrix};

/// The generator every seeded entry point uses.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex(rng)).collect();
    ComplexMatrix::new(rows, cols, data).expect("finite entries")
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n).map(|_| complex(rng)).collect();
        let norm = vec_norm(&v);
        if norm > 1e-3 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    complex_matrix(rng, n, n).hermitian_part()
}

/// `y* y` for a random `y`.
pub fn positive<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let y = complex_matrix(rng, n, n);
    (&y.adjoint() * &y).hermitian_part()
}

/// Random effect `0 ≤ e ≤ 1` whose largest eigenvalue is drawn from `[0, 1]`.
pub fn effect<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let p = positive(rng, n);
    let norm = operator_norm(&p);
    let top: f64 = rng.gen_range(0.0..1.0);
    if norm == 0.0 {
        p
    } else {
        p.scale_real(top / norm)
    }
}

/// Random effect with spectrum inside `[0, scale]`.
pub fn small_effect<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> ComplexMatrix {
    effect(rng, n).scale_real(scale)
}

/// Haar-ish unitary from Gram–Schmidt on a random matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    loop {
        let m = complex_matrix(rng, n, n);
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut v = m.column(j);
            for q in &cols {
                let proj: Complex64 = crate::matrix::inner(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
            let norm = vec_norm(&v);
            if norm < 1e-6 {
                ok = false;
                break;
            }
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
        if ok {
            return ComplexMatrix::from_columns(n, &cols);
        }
    }
}

/// Density matrix with unit trace.
pub fn density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let p = positive(rng, n);
    let tr = p.trace().re;
    p.scale_real(1.0 / tr)
}

/// Kraus operators `{K_i}` (each `n × n`) of a random unital instrument,
/// i.e. `Σ K_i* K_i = 1`, cut from a random isometry.
pub fn instrument<R: Rng + ?Sized>(rng: &mut R, n: usize, outcomes: usize) -> Vec<ComplexMatrix> {
    let u = unitary(rng, n * outcomes);
    (0..outcomes)
        .map(|o| {
            let mut k = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    k[(i, j)] = u[(o * n + i, j)];
                }
            }
            k
        })
        .collect()
}

/// `(1 − e)^{1/2} q (1 − e)^{1/2}` for a random effect `q`: a random
/// increment that keeps `e + increment` an effect.
pub fn headroom_increment<R: Rng + ?Sized>(rng: &mut R, e: &ComplexMatrix) -> ComplexMatrix {
    let n = e.rows();
    let gap = &ComplexMatrix::identity(n) - e;
    let root = hermitian_eigen(&gap.hermitian_part(), f64::INFINITY)
        .expect("eigen")
        .map_spectrum(|x| x.max(0.0).sqrt());
    effect(rng, n).congruence(&root).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{loewner_leq, psd};

    #[test]
    fn generators_respect_their_contracts() {
        let mut rng = seeded(5);
        for n in 1..5 {
            let u = unitary(&mut rng, n);
            assert!((&(&u.adjoint() * &u) - &ComplexMatrix::identity(n)).max_abs() < 1e-12);
            let e = effect(&mut rng, n);
            assert!(psd(&e, 1e-12));
            assert!(loewner_leq(&e, &ComplexMatrix::identity(n), 1e-12).unwrap());
            let ks = instrument(&mut rng, n, 3);
            let total = ks
                .iter()
                .fold(ComplexMatrix::zeros(n, n), |acc, k| &acc + &(&k.adjoint() * k));
            assert!((&total - &ComplexMatrix::identity(n)).max_abs() < 1e-12);
            let inc = headroom_increment(&mut rng, &e);
            assert!(loewner_leq(&(&e + &inc), &ComplexMatrix::identity(n), 1e-10).unwrap());
        }
    }
}
