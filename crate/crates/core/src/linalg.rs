//! Small dense-matrix helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Bilinear form `aᵀ M b*`.
pub fn bilinear(a: &[Complex64], m: &CMatrix, b: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, ai) in a.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (j, bj) in b.iter().enumerate() {
            row += m[(i, j)] * bj.conj();
        }
        acc += ai * row;
    }
    acc
}

/// `aᵀ Z a*` for a real symmetric `Z`.
pub fn real_quadratic_form(a: &[Complex64], z: &DMatrix<f64>) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            acc += ai * z[(i, j)] * aj.conj();
        }
    }
    acc.re
}

pub fn mat_vec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// 2-norm condition number of a general complex matrix.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
