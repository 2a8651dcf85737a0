//! Array geometry, element patterns and steering vectors.
//!
//! Positions are in wavelengths and the wave number is fixed at `2π`, so a
//! path difference of one unit is one full cycle of phase.

use std::f64::consts::{FRAC_PI_2, PI};
use std::hash::{Hash, Hasher};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Free-space wave number in units of inverse wavelengths.
pub const WAVE_NUMBER: f64 = 2.0 * PI;

const POLE_EPS: f64 = 1e-12;

/// Uniform linear array along the positive z-axis, first element at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    element_count: usize,
    spacing: f64,
}

impl ArrayGeometry {
    pub fn uniform_linear(element_count: usize, spacing: f64) -> Result<Self> {
        if element_count == 0 {
            return Err(Error::Domain("array needs at least one element".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Domain(format!("spacing must be positive, got {spacing}")));
        }
        Ok(Self {
            element_count,
            spacing,
        })
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// z-coordinate of element `m` (zero-based).
    pub fn z(&self, m: usize) -> f64 {
        m as f64 * self.spacing
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.element_count).map(|m| [0.0, 0.0, self.z(m)]).collect()
    }

    /// Total length from the first to the last element.
    pub fn length(&self) -> f64 {
        (self.element_count - 1) as f64 * self.spacing
    }

    /// Phase factor `exp(j k r̂·r_m)` for element `m` in direction `theta`.
    pub fn phase_factor(&self, m: usize, theta: f64) -> Complex64 {
        Complex64::from_polar(1.0, WAVE_NUMBER * theta.cos() * self.z(m))
    }

    pub(crate) fn hash_into<H: Hasher>(&self, state: &mut H) {
        self.element_count.hash(state);
        self.spacing.to_bits().hash(state);
    }
}

/// Complex scalar samples on an equiangular grid.
///
/// `theta_count` rows span `[0, π]` inclusive; `phi_count` columns span
/// `[0, 2π)` and wrap around. Values are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGrid {
    theta_count: usize,
    phi_count: usize,
    values: Vec<Complex64>,
}

impl SampledGrid {
    pub fn new(theta_count: usize, phi_count: usize, values: Vec<Complex64>) -> Result<Self> {
        if theta_count < 2 || phi_count < 1 {
            return Err(Error::Domain(format!(
                "sampled grid needs >= 2 theta rows and >= 1 phi column, got {theta_count}x{phi_count}"
            )));
        }
        if values.len() != theta_count * phi_count {
            return Err(Error::Dimension {
                expected: theta_count * phi_count,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain("sampled grid contains non-finite values".into()));
        }
        Ok(Self {
            theta_count,
            phi_count,
            values,
        })
    }

    /// Tabulates `f` on the grid.
    pub fn from_fn(theta_count: usize, phi_count: usize, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let dt = PI / (theta_count.max(2) - 1) as f64;
        let dp = 2.0 * PI / phi_count.max(1) as f64;
        let mut values = Vec::with_capacity(theta_count * phi_count);
        for i in 0..theta_count {
            for j in 0..phi_count {
                values.push(f(i as f64 * dt, j as f64 * dp));
            }
        }
        Self::new(theta_count, phi_count, values)
    }

    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.phi_count + j % self.phi_count]
    }

    /// Bilinear interpolation, periodic in phi.
    pub fn interpolate(&self, theta: f64, phi: f64) -> Result<Complex64> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::OutOfDomain { theta, phi });
        }
        let dt = PI / (self.theta_count - 1) as f64;
        let dp = 2.0 * PI / self.phi_count as f64;

        let ut = theta / dt;
        let i0 = (ut.floor() as usize).min(self.theta_count - 2);
        let ft = ut - i0 as f64;

        let up = phi.rem_euclid(2.0 * PI) / dp;
        let j0 = (up.floor() as usize).min(self.phi_count - 1);
        let fp = up - j0 as f64;

        let lo = self.at(i0, j0) * (1.0 - fp) + self.at(i0, j0 + 1) * fp;
        let hi = self.at(i0 + 1, j0) * (1.0 - fp) + self.at(i0 + 1, j0 + 1) * fp;
        Ok(lo * (1.0 - ft) + hi * ft)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternKind {
    Isotropic,
    HertzianDipole,
    HalfWaveDipole,
    Sampled(SampledGrid),
}

/// Scalar far-field pattern `k(θ, φ)` shared by every element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementPattern {
    kind: PatternKind,
    axis: [f64; 3],
}

impl ElementPattern {
    pub fn isotropic() -> Self {
        Self::with_kind(PatternKind::Isotropic)
    }

    /// Short dipole along the x-axis.
    pub fn hertzian_dipole() -> Self {
        Self::with_kind(PatternKind::HertzianDipole)
    }

    /// Half-wave dipole along the x-axis.
    pub fn half_wave_dipole() -> Self {
        Self::with_kind(PatternKind::HalfWaveDipole)
    }

    pub fn sampled(grid: SampledGrid) -> Self {
        Self::with_kind(PatternKind::Sampled(grid))
    }

    fn with_kind(kind: PatternKind) -> Self {
        Self {
            kind,
            axis: [1.0, 0.0, 0.0],
        }
    }

    /// Reorients a dipole pattern. The axis is normalized.
    pub fn with_axis(mut self, axis: [f64; 3]) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain("dipole axis must be a nonzero vector".into()));
        }
        self.axis = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        Ok(self)
    }

    pub fn kind(&self) -> &PatternKind {
        &self.kind
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PatternKind::Isotropic => "isotropic",
            PatternKind::HertzianDipole => "hertzian-dipole",
            PatternKind::HalfWaveDipole => "half-wave-dipole",
            PatternKind::Sampled(_) => "sampled",
        }
    }

    /// Cosine and sine of the angle between `r̂(θ, φ)` and the dipole axis.
    fn axis_angle(&self, theta: f64, phi: f64) -> (f64, f64) {
        let r = unit_radial(theta, phi);
        let a = self.axis;
        let cos = r[0] * a[0] + r[1] * a[1] + r[2] * a[2];
        let cross = [
            r[1] * a[2] - r[2] * a[1],
            r[2] * a[0] - r[0] * a[2],
            r[0] * a[1] - r[1] * a[0],
        ];
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        (cos, sin)
    }

    /// Evaluates `k(θ, φ)`.
    pub fn value(&self, theta: f64, phi: f64) -> Result<Complex64> {
        check_direction(theta, phi)?;
        Ok(match &self.kind {
            PatternKind::Isotropic => Complex64::new(1.0, 0.0),
            PatternKind::HertzianDipole => Complex64::new(self.axis_angle(theta, phi).1, 0.0),
            PatternKind::HalfWaveDipole => {
                let (cos, sin) = self.axis_angle(theta, phi);
                if sin < POLE_EPS {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((FRAC_PI_2 * cos).cos() / sin, 0.0)
                }
            }
            PatternKind::Sampled(grid) => grid.interpolate(theta, phi)?,
        })
    }

    /// Polarized far field `(E_θ, E_φ)` of one element at the origin.
    ///
    /// Dipoles radiate along the projection of their axis onto the sphere,
    /// with magnitude equal to the scalar pattern. Isotropic and sampled
    /// elements are taken as purely theta-polarized.
    pub fn polarized_field(&self, theta: f64, phi: f64) -> Result<(Complex64, Complex64)> {
        check_direction(theta, phi)?;
        let amplitude = match self.kind {
            PatternKind::HertzianDipole => 1.0,
            PatternKind::HalfWaveDipole => {
                let (cos, sin) = self.axis_angle(theta, phi);
                if sin < 1e-6 {
                    // cos(π/2·cosψ)/sin²ψ → π/4 on the axis
                    PI / 4.0
                } else {
                    (FRAC_PI_2 * cos).cos() / (sin * sin)
                }
            }
            PatternKind::Isotropic | PatternKind::Sampled(_) => {
                return Ok((self.value(theta, phi)?, Complex64::new(0.0, 0.0)));
            }
        };
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let a = self.axis;
        let along_theta = a[0] * ct * cp + a[1] * ct * sp - a[2] * st;
        let along_phi = -a[0] * sp + a[1] * cp;
        Ok((
            Complex64::new(amplitude * along_theta, 0.0),
            Complex64::new(amplitude * along_phi, 0.0),
        ))
    }

    pub(crate) fn hash_into<H: Hasher>(&self, state: &mut H) {
        self.name().hash(state);
        for c in self.axis {
            c.to_bits().hash(state);
        }
        if let PatternKind::Sampled(grid) = &self.kind {
            grid.theta_count.hash(state);
            grid.phi_count.hash(state);
            for v in &grid.values {
                v.re.to_bits().hash(state);
                v.im.to_bits().hash(state);
            }
        }
    }
}

pub(crate) fn unit_radial(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

pub(crate) fn check_direction(theta: f64, phi: f64) -> Result<()> {
    if (0.0..=PI).contains(&theta) && phi.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain { theta, phi })
    }
}

/// Per-element response `e_m = k(θ,φ)·exp(j k r̂·r_m)` toward one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub values: Vec<Complex64>,
    pub theta: f64,
    pub phi: f64,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn steering_vector(
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    theta: f64,
    phi: f64,
) -> Result<SteeringVector> {
    let k = pattern.value(theta, phi)?;
    let values = (0..geometry.element_count())
        .map(|m| k * geometry.phase_factor(m, theta))
        .collect();
    Ok(SteeringVector { values, theta, phi })
}

/// Array factor `f(θ, φ) = aᵀ e(θ, φ)`.
pub fn evaluate_array_pattern(
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    excitation: &[Complex64],
    theta: f64,
    phi: f64,
) -> Result<Complex64> {
    if excitation.len() != geometry.element_count() {
        return Err(Error::Dimension {
            expected: geometry.element_count(),
            got: excitation.len(),
        });
    }
    let e = steering_vector(geometry, pattern, theta, phi)?;
    Ok(excitation.iter().zip(&e.values).map(|(a, e)| a * e).sum())
}
