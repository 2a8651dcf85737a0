//! Radiated-power (normalized impedance) matrix and directivity.
//!
//! `z_mn = (1/4π) ∮ |k|² exp(j k r̂·(r_m − r_n)) dΩ`, so that `aᵀ Z a*` is the
//! radiated power of excitation `a` relative to an isotropic unit source.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::Hasher;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::{steering_vector, ArrayGeometry, ElementPattern};
use crate::error::{Error, Result};
use crate::linalg::real_quadratic_form;
use crate::quadrature::SphereQuadrature;

/// Imaginary residue tolerated before the integral is rejected as non-real.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Default change tolerated between a rule and its refinement.
pub const CERTIFY_TOL: f64 = 1e-10;

/// Identifies the (geometry, pattern) pair a matrix was integrated for.
pub fn model_id(geometry: &ArrayGeometry, pattern: &ElementPattern) -> u64 {
    let mut h = DefaultHasher::new();
    geometry.hash_into(&mut h);
    pattern.hash_into(&mut h);
    h.finish()
}

/// Real symmetric radiated-power matrix `Z`, optionally diagonally loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceMatrix {
    values: DMatrix<f64>,
    model_id: Option<u64>,
    quadrature: Option<(usize, usize)>,
    loading: f64,
    condition_number: f64,
}

impl ImpedanceMatrix {
    /// Wraps an externally supplied matrix. It must be square and symmetric.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Dimension {
                expected: values.nrows(),
                got: values.ncols(),
            });
        }
        let asym = (&values - values.transpose()).amax();
        if asym > IMAG_RESIDUE_TOL * values.amax().max(1.0) {
            return Err(Error::Domain(format!("impedance matrix is not symmetric (max deviation {asym:.3e})")));
        }
        let condition_number = symmetric_condition(&values);
        Ok(Self {
            values,
            model_id: None,
            quadrature: None,
            loading: 0.0,
            condition_number,
        })
    }

    /// Adds `delta·I`. Loading accumulates if applied twice.
    pub fn with_loading(mut self, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::Domain(format!("diagonal loading must be >= 0, got {delta}")));
        }
        for i in 0..self.values.nrows() {
            self.values[(i, i)] += delta;
        }
        self.loading += delta;
        self.condition_number = symmetric_condition(&self.values);
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn model_id(&self) -> Option<u64> {
        self.model_id
    }

    /// `(theta nodes, phi nodes)` of the rule that produced the matrix.
    pub fn quadrature(&self) -> Option<(usize, usize)> {
        self.quadrature
    }

    pub fn loading(&self) -> f64 {
        self.loading
    }

    /// Ratio of extreme eigenvalues; infinite when the smallest is not positive.
    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.values.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Radiated power `aᵀ Z a*`.
    pub fn power(&self, excitation: &[Complex64]) -> f64 {
        real_quadratic_form(excitation, &self.values)
    }

    pub(crate) fn check_model(&self, geometry: &ArrayGeometry, pattern: &ElementPattern) -> Result<()> {
        if self.dim() != geometry.element_count() {
            return Err(Error::Dimension {
                expected: geometry.element_count(),
                got: self.dim(),
            });
        }
        match self.model_id {
            Some(id) if id != model_id(geometry, pattern) => Err(Error::Domain(
                "impedance matrix was computed for a different geometry or pattern".into(),
            )),
            _ => Ok(()),
        }
    }
}

fn symmetric_condition(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let ev = m.clone().symmetric_eigenvalues();
    let max = ev.max();
    let min = ev.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Integrates `Z` with the given rule.
///
/// Accumulation is split per theta row and the row sums are added in a fixed
/// order, so the result does not depend on the thread count.
pub fn impedance_matrix(
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    quadrature: &SphereQuadrature,
) -> Result<ImpedanceMatrix> {
    let m = geometry.element_count();
    let dphi = 2.0 * PI / quadrature.phi_count() as f64;

    let rows: Vec<Result<Vec<Complex64>>> = quadrature
        .theta_nodes()
        .par_iter()
        .map(|&(theta, w)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); m * m];
            let phases: Vec<Complex64> = (0..m).map(|i| geometry.phase_factor(i, theta)).collect();
            for j in 0..quadrature.phi_count() {
                let phi = j as f64 * dphi;
                let power = pattern.value(theta, phi)?.norm_sqr() * w * dphi;
                for a in 0..m {
                    for b in 0..m {
                        acc[a * m + b] += phases[a] * phases[b].conj() * power;
                    }
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = vec![Complex64::new(0.0, 0.0); m * m];
    for row in rows {
        for (t, r) in total.iter_mut().zip(row?) {
            *t += r;
        }
    }

    let scale = 1.0 / (4.0 * PI);
    let residue = total.iter().map(|z| (z.im * scale).abs()).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_TOL {
        return Err(Error::NonRealImpedance { residue });
    }
    let values = DMatrix::from_fn(m, m, |a, b| 0.5 * (total[a * m + b].re + total[b * m + a].re) * scale);
    let condition_number = symmetric_condition(&values);
    Ok(ImpedanceMatrix {
        values,
        model_id: Some(model_id(geometry, pattern)),
        quadrature: Some((quadrature.theta_count(), quadrature.phi_count())),
        loading: 0.0,
        condition_number,
    })
}

/// Like [`impedance_matrix`], but also integrates with the refined rule and
/// fails if any entry moves by more than `tolerance`.
pub fn impedance_matrix_certified(
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    quadrature: &SphereQuadrature,
    tolerance: f64,
) -> Result<ImpedanceMatrix> {
    let coarse = impedance_matrix(geometry, pattern, quadrature)?;
    let fine = impedance_matrix(geometry, pattern, &quadrature.refined())?;
    let change = (coarse.values() - fine.values()).amax();
    if change > tolerance {
        return Err(Error::Accuracy { change, tolerance });
    }
    Ok(coarse)
}

/// Directivity `|aᵀe|² / (aᵀ Z a*)` of an excitation toward `(theta0, phi0)`.
pub fn directivity(
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    z: &ImpedanceMatrix,
    excitation: &[Complex64],
    theta0: f64,
    phi0: f64,
) -> Result<f64> {
    z.check_model(geometry, pattern)?;
    if excitation.len() != geometry.element_count() {
        return Err(Error::Dimension {
            expected: geometry.element_count(),
            got: excitation.len(),
        });
    }
    let e = steering_vector(geometry, pattern, theta0, phi0)?;
    rayleigh_quotient(z.values(), &e.values, excitation)
}

/// `|xᵀe|² / (xᵀ Z x*)` for an effective excitation `x`.
pub(crate) fn rayleigh_quotient(z: &DMatrix<f64>, e: &[Complex64], x: &[Complex64]) -> Result<f64> {
    if x.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(Error::Degenerate("excitation is identically zero".into()));
    }
    let num: Complex64 = x.iter().zip(e).map(|(a, e)| a * e).sum();
    let den = real_quadratic_form(x, z);
    if !(den > 0.0) {
        return Err(Error::Conditioning(format!("radiated power {den:.3e} is not positive")));
    }
    Ok(num.norm_sqr() / den)
}
