//! Maximum-directivity excitations, with and without a coupling matrix, and
//! gain under ohmic loss.
//!
//! The directivity `|aᵀe|² / (aᵀ Z a*)` is a Rayleigh quotient whose numerator
//! has rank one, so its maximizer is `a ∝ Z⁻¹ e*` with maximum `eᴴ Z⁻¹ e`.
//! When the element currents are mixed by a coupling matrix `C`, the radiating
//! excitation is `C b` and the maximizer becomes `b ∝ C⁻¹ Z⁻¹ e*`.
//!
//! Solutions are scaled to unit radiated power.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::array::SteeringVector;
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, mat_vec, to_complex, CVector};
use crate::radiation::{rayleigh_quotient, ImpedanceMatrix};

/// Condition number above which a warning is logged.
pub const WARN_CONDITION: f64 = 1e12;

/// Condition number treated as numerically singular.
pub const SINGULAR_CONDITION: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamMode {
    Uncoupled,
    Coupled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    pub excitation: Vec<Complex64>,
    pub directivity: f64,
    /// `(θ0, φ0)` in radians.
    pub direction: (f64, f64),
    pub mode: BeamMode,
    pub condition_number_z: f64,
    pub loss_resistance: f64,
}

/// Normalized loss resistance `(1 − η)/η` for radiation efficiency `η`.
pub fn loss_resistance(efficiency: f64) -> Result<f64> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::Domain(format!("efficiency must lie in (0, 1], got {efficiency}")));
    }
    Ok((1.0 - efficiency) / efficiency)
}

/// Solves `Z x = rhs` for real symmetric `Z`.
fn solve_impedance(z: &DMatrix<f64>, condition: f64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularMatrix { condition });
    }
    if condition > WARN_CONDITION {
        log::warn!("impedance matrix is ill-conditioned (condition number {condition:.3e})");
    }
    let zc = to_complex(z);
    let b = CVector::from_column_slice(rhs);
    let x = match zc.clone().cholesky() {
        Some(chol) => chol.solve(&b),
        None => zc.lu().solve(&b).ok_or(Error::SingularMatrix { condition })?,
    };
    Ok(x.iter().copied().collect())
}

fn solve_coupling(c: &CouplingMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let condition = condition_number(c.values());
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularCoupling { condition });
    }
    let b = CVector::from_column_slice(rhs);
    let x = c
        .values()
        .clone()
        .lu()
        .solve(&b)
        .ok_or(Error::SingularCoupling { condition })?;
    Ok(x.iter().copied().collect())
}

fn check_dims(z: &ImpedanceMatrix, e: &SteeringVector) -> Result<()> {
    if z.dim() != e.len() {
        return Err(Error::Dimension {
            expected: z.dim(),
            got: e.len(),
        });
    }
    Ok(())
}

fn check_coupling(z: &ImpedanceMatrix, c: &CouplingMatrix) -> Result<()> {
    if c.dim() != z.dim() {
        return Err(Error::Dimension {
            expected: z.dim(),
            got: c.dim(),
        });
    }
    Ok(())
}

fn scale_to_unit_power(x: &mut [Complex64], power: f64) -> Result<()> {
    if !(power > 0.0) {
        return Err(Error::Conditioning(format!("radiated power {power:.3e} is not positive")));
    }
    let s = power.sqrt().recip();
    x.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

/// Maximum-directivity excitation for uncoupled elements.
pub fn optimal_beamforming(z: &ImpedanceMatrix, e: &SteeringVector) -> Result<BeamformingSolution> {
    check_dims(z, e)?;
    let e_conj: Vec<Complex64> = e.values.iter().map(|v| v.conj()).collect();
    let mut a = solve_impedance(z.values(), z.condition_number(), &e_conj)?;
    // eᴴ Z⁻¹ e, real for Hermitian Z
    let dmax: f64 = e.values.iter().zip(&a).map(|(e, a)| e * a).sum::<Complex64>().re;
    let power = z.power(&a);
    scale_to_unit_power(&mut a, power)?;
    Ok(BeamformingSolution {
        excitation: a,
        directivity: dmax,
        direction: (e.theta, e.phi),
        mode: BeamMode::Uncoupled,
        condition_number_z: z.condition_number(),
        loss_resistance: 0.0,
    })
}

/// Maximum-directivity excitation `b ∝ C⁻¹ Z⁻¹ e*` when element `m`'s drive
/// reaches the radiators as column `m` of `C`.
pub fn coupled_beamforming(z: &ImpedanceMatrix, c: &CouplingMatrix, e: &SteeringVector) -> Result<BeamformingSolution> {
    check_dims(z, e)?;
    check_coupling(z, c)?;
    let e_conj: Vec<Complex64> = e.values.iter().map(|v| v.conj()).collect();
    let a = solve_impedance(z.values(), z.condition_number(), &e_conj)?;
    let mut b = solve_coupling(c, &a)?;
    let cb = mat_vec(c.values(), &b);
    scale_to_unit_power(&mut b, z.power(&cb))?;
    let directivity = coupled_directivity(z, c, e, &b)?;
    Ok(BeamformingSolution {
        excitation: b,
        directivity,
        direction: (e.theta, e.phi),
        mode: BeamMode::Coupled,
        condition_number_z: z.condition_number(),
        loss_resistance: 0.0,
    })
}

/// Directivity of drive vector `b` in the coupled model, `|eᵀCb|² / ((Cb)ᵀ Z (Cb)*)`.
pub fn coupled_directivity(
    z: &ImpedanceMatrix,
    c: &CouplingMatrix,
    e: &SteeringVector,
    excitation: &[Complex64],
) -> Result<f64> {
    check_dims(z, e)?;
    check_coupling(z, c)?;
    if excitation.len() != z.dim() {
        return Err(Error::Dimension {
            expected: z.dim(),
            got: excitation.len(),
        });
    }
    if excitation.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(Error::Degenerate("excitation is identically zero".into()));
    }
    let cb = mat_vec(c.values(), excitation);
    rayleigh_quotient(z.values(), &e.values, &cb)
}

/// Gain under a per-element radiation efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gain {
    pub value: f64,
    pub loss_resistance: f64,
}

/// `|eᵀCb|² / ((Cb)ᵀ (Z + r_loss I) (Cb)*)`.
pub fn gain(
    z: &ImpedanceMatrix,
    c: &CouplingMatrix,
    e: &SteeringVector,
    excitation: &[Complex64],
    efficiency: f64,
) -> Result<Gain> {
    let r = loss_resistance(efficiency)?;
    check_dims(z, e)?;
    check_coupling(z, c)?;
    if excitation.len() != z.dim() {
        return Err(Error::Dimension {
            expected: z.dim(),
            got: excitation.len(),
        });
    }
    if excitation.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(Error::Degenerate("excitation is identically zero".into()));
    }
    let lossy = z.values() + DMatrix::identity(z.dim(), z.dim()) * r;
    let cb = mat_vec(c.values(), excitation);
    Ok(Gain {
        value: rayleigh_quotient(&lossy, &e.values, &cb)?,
        loss_resistance: r,
    })
}

/// Gain-optimal drive `b ∝ C⁻¹ (Z + r_loss I)⁻¹ e*`.
///
/// This is an extension: the sweeps report gain under the directivity-optimal
/// drive. The returned `directivity` field holds the gain of the solution.
pub fn gain_optimal_beamforming(
    z: &ImpedanceMatrix,
    c: &CouplingMatrix,
    e: &SteeringVector,
    efficiency: f64,
) -> Result<BeamformingSolution> {
    let r = loss_resistance(efficiency)?;
    check_dims(z, e)?;
    check_coupling(z, c)?;
    let lossy = ImpedanceMatrix::from_matrix(z.values().clone())?.with_loading(r)?;
    let e_conj: Vec<Complex64> = e.values.iter().map(|v| v.conj()).collect();
    let a = solve_impedance(lossy.values(), lossy.condition_number(), &e_conj)?;
    let mut b = solve_coupling(c, &a)?;
    let cb = mat_vec(c.values(), &b);
    scale_to_unit_power(&mut b, z.power(&cb))?;
    let g = gain(z, c, e, &b, efficiency)?;
    Ok(BeamformingSolution {
        excitation: b,
        directivity: g.value,
        direction: (e.theta, e.phi),
        mode: BeamMode::Coupled,
        condition_number_z: z.condition_number(),
        loss_resistance: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering_vector, ArrayGeometry, ElementPattern};
    use crate::linalg::CMatrix;
    use crate::quadrature::SphereQuadrature;
    use crate::radiation::{directivity, impedance_matrix};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn setup(m: usize, d: f64, pattern: &ElementPattern, theta: f64) -> (ArrayGeometry, ImpedanceMatrix, SteeringVector) {
        let g = ArrayGeometry::uniform_linear(m, d).unwrap();
        let z = impedance_matrix(&g, pattern, &SphereQuadrature::default()).unwrap();
        let e = steering_vector(&g, pattern, theta, 0.0).unwrap();
        (g, z, e)
    }

    #[test]
    fn single_element() {
        let iso = ElementPattern::isotropic();
        let (_, z, e) = setup(1, 0.5, &iso, 0.4);
        let sol = optimal_beamforming(&z, &e).unwrap();
        assert!((sol.excitation[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((sol.directivity - 1.0).abs() < 1e-14);
        assert_eq!(sol.mode, BeamMode::Uncoupled);
    }

    #[test]
    fn half_wavelength_broadside() {
        let iso = ElementPattern::isotropic();
        let (g, z, e) = setup(2, 0.5, &iso, FRAC_PI_2);
        let sol = optimal_beamforming(&z, &e).unwrap();
        assert!((sol.directivity - 2.0).abs() < 1e-10);
        let d = directivity(&g, &iso, &z, &sol.excitation, FRAC_PI_2, 0.0).unwrap();
        assert!((d - sol.directivity).abs() < 1e-8);
        assert!((z.power(&sol.excitation) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn close_pair_endfire_closed_form() {
        let iso = ElementPattern::isotropic();
        let (_, z, e) = setup(2, 0.05, &iso, 0.0);
        let kd = 2.0 * PI * 0.05;
        let s = kd.sin() / kd;
        let oracle = 2.0 * (1.0 - s * kd.cos()) / (1.0 - s * s);
        let sol = optimal_beamforming(&z, &e).unwrap();
        assert!((sol.directivity - oracle).abs() < 1e-9, "{} vs {oracle}", sol.directivity);
        assert!((oracle - 3.9735).abs() < 1e-3);
    }

    #[test]
    fn identity_and_scalar_coupling() {
        let hw = ElementPattern::half_wave_dipole();
        let (_, z, e) = setup(3, 0.15, &hw, 0.0);
        let plain = optimal_beamforming(&z, &e).unwrap();

        let id = CouplingMatrix::identity(3);
        let sol = coupled_beamforming(&z, &id, &e).unwrap();
        assert_eq!(sol.mode, BeamMode::Coupled);
        assert!((sol.directivity - plain.directivity).abs() < 1e-10 * plain.directivity);
        for (a, b) in sol.excitation.iter().zip(&plain.excitation) {
            assert!((a - b).norm() < 1e-10);
        }

        let alpha = Complex64::new(0.3, -1.7);
        let scaled = CouplingMatrix::prescribed(CMatrix::identity(3, 3) * alpha).unwrap();
        let sol = coupled_beamforming(&z, &scaled, &e).unwrap();
        assert!((sol.directivity - plain.directivity).abs() < 1e-10 * plain.directivity);
    }

    #[test]
    fn singular_inputs() {
        let z = ImpedanceMatrix::from_matrix(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let e = SteeringVector {
            values: vec![Complex64::new(1.0, 0.0); 2],
            theta: 0.0,
            phi: 0.0,
        };
        assert!(matches!(optimal_beamforming(&z, &e), Err(Error::SingularMatrix { .. })));

        let z = ImpedanceMatrix::from_matrix(DMatrix::identity(2, 2)).unwrap();
        let c = CouplingMatrix::prescribed(CMatrix::from_element(2, 2, Complex64::new(1.0, 0.0))).unwrap();
        assert!(matches!(coupled_beamforming(&z, &c, &e), Err(Error::SingularCoupling { .. })));
    }

    #[test]
    fn gain_limits_and_domain() {
        assert_eq!(loss_resistance(1.0).unwrap(), 0.0);
        assert_eq!(loss_resistance(0.5).unwrap(), 1.0);
        assert!(loss_resistance(0.0).is_err());
        assert!(loss_resistance(1.2).is_err());
        assert!(loss_resistance(f64::NAN).is_err());

        let hw = ElementPattern::half_wave_dipole();
        let (_, z, e) = setup(4, 0.1, &hw, 0.0);
        let c = CouplingMatrix::identity(4);
        let sol = coupled_beamforming(&z, &c, &e).unwrap();
        let lossless = gain(&z, &c, &e, &sol.excitation, 1.0).unwrap();
        assert_eq!(lossless.loss_resistance, 0.0);
        assert!((lossless.value - sol.directivity).abs() <= 1e-12 * sol.directivity);
        let lossy = gain(&z, &c, &e, &sol.excitation, 0.96).unwrap();
        assert!(lossy.value < sol.directivity);
    }

    #[test]
    fn gain_optimal_beats_directivity_optimal_drive() {
        let hw = ElementPattern::half_wave_dipole();
        let (_, z, e) = setup(4, 0.1, &hw, 0.0);
        let c = CouplingMatrix::fixture(4, 0.3, 0.8, 0.2).unwrap();
        let dir = coupled_beamforming(&z, &c, &e).unwrap();
        let g_dir = gain(&z, &c, &e, &dir.excitation, 0.96).unwrap().value;
        let best = gain_optimal_beamforming(&z, &c, &e, 0.96).unwrap();
        assert!(best.directivity >= g_dir);
        assert!(best.loss_resistance > 0.0);
    }
}
