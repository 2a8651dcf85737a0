//! Coupling-matrix estimation from isolated and embedded element fields.
//!
//! Column `n` of the coupling matrix `C` holds the weights with which the
//! isolated element fields superpose into the field radiated when only
//! element `n` is driven inside the array. Both sets of fields are reduced to
//! spherical wave coefficients, `Qs` and `Qc`, and `C` solves `Qs C = Qc` in
//! the least-squares sense.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;

use crate::array::{ArrayGeometry, ElementPattern};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, CMatrix};
use crate::swe::{truncation_degree, FieldSampleSet, SweFitter};

/// Radius assumed for a single element's enclosing sphere, in wavelengths.
pub const ELEMENT_RADIUS: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingSource {
    Identity,
    Estimated,
    Prescribed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    values: CMatrix,
    source: CouplingSource,
    estimation_residual: Option<f64>,
}

impl CouplingMatrix {
    pub fn identity(m: usize) -> Self {
        Self {
            values: CMatrix::identity(m, m),
            source: CouplingSource::Identity,
            estimation_residual: None,
        }
    }

    pub fn prescribed(values: CMatrix) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Dimension {
                expected: values.nrows(),
                got: values.ncols(),
            });
        }
        if values.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Domain("coupling matrix has non-finite entries".into()));
        }
        Ok(Self {
            values,
            source: CouplingSource::Prescribed,
            estimation_residual: None,
        })
    }

    /// Test fixture `c_mn = γ^|m−n| e^{−jβ|m−n|}`, with entries above the
    /// diagonal scaled by `1 + asymmetry` so that `c_mn ≠ c_nm`.
    pub fn fixture(m: usize, gamma: f64, beta: f64, asymmetry: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!("fixture gamma must lie in (0, 1), got {gamma}")));
        }
        if !(beta.is_finite() && asymmetry.is_finite()) {
            return Err(Error::Domain("fixture parameters must be finite".into()));
        }
        let values = DMatrix::from_fn(m, m, |r, c| {
            let k = r.abs_diff(c) as i32;
            let v = Complex64::from_polar(gamma.powi(k), -beta * k as f64);
            if c > r {
                v * (1.0 + asymmetry)
            } else {
                v
            }
        });
        Self::prescribed(values)
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn source(&self) -> CouplingSource {
        self.source
    }

    /// `‖Qs C − Qc‖_F / ‖Qc‖_F` when estimated.
    pub fn estimation_residual(&self) -> Option<f64> {
        self.estimation_residual
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[(row, col)]
    }
}

/// Isolated and embedded (active) element fields on one shared grid.
#[derive(Debug, Clone)]
pub struct ElementFieldLibrary {
    isolated: Vec<FieldSampleSet>,
    active: Vec<FieldSampleSet>,
}

impl ElementFieldLibrary {
    pub fn new(isolated: Vec<FieldSampleSet>, active: Vec<FieldSampleSet>) -> Result<Self> {
        if isolated.len() != active.len() {
            return Err(Error::Dimension {
                expected: isolated.len(),
                got: active.len(),
            });
        }
        if isolated.is_empty() {
            return Err(Error::Domain("field library needs at least one element".into()));
        }
        check_shared_grid(&isolated)?;
        if !isolated[0].same_grid(&active[0]) {
            return Err(Error::Domain("isolated and active fields use different grids".into()));
        }
        check_shared_grid(&active)?;
        Ok(Self { isolated, active })
    }

    pub fn isolated(&self) -> &[FieldSampleSet] {
        &self.isolated
    }

    pub fn active(&self) -> &[FieldSampleSet] {
        &self.active
    }

    pub fn element_count(&self) -> usize {
        self.isolated.len()
    }

    /// Fits both sets at truncation `n` and estimates `C`.
    pub fn estimate(&self, truncation: usize) -> Result<CouplingMatrix> {
        let fitter = SweFitter::new(self.isolated[0].directions(), truncation)?;
        let qs = coefficients_with(&fitter, &self.isolated)?;
        let qc = coefficients_with(&fitter, &self.active)?;
        estimate_coupling(&qs, &qc)
    }
}

fn check_shared_grid(fields: &[FieldSampleSet]) -> Result<()> {
    match fields.split_first() {
        Some((first, rest)) if rest.iter().all(|f| f.same_grid(first)) => Ok(()),
        Some(_) => Err(Error::Domain("element fields do not share one direction grid".into())),
        None => Ok(()),
    }
}

/// Default truncation for an array whose first element sits at the origin:
/// the enclosing sphere about the origin reaches the far element plus one
/// element radius.
pub fn default_truncation(geometry: &ArrayGeometry) -> Result<usize> {
    truncation_degree(geometry.length() + ELEMENT_RADIUS)
}

/// Fields of a lone element placed at each array position in turn.
pub fn isolated_fields_synthetic(
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    grid: &[(f64, f64)],
) -> Result<Vec<FieldSampleSet>> {
    let base = FieldSampleSet::from_fn(grid.to_vec(), |t, p| pattern.polarized_field(t, p))?;
    (0..geometry.element_count())
        .map(|m| {
            let mut values = Vec::with_capacity(base.values().len());
            for (i, &(theta, _)) in grid.iter().enumerate() {
                let shift = geometry.phase_factor(m, theta);
                let (et, ep) = base.sample(i);
                values.push(et * shift);
                values.push(ep * shift);
            }
            FieldSampleSet::new(grid.to_vec(), values)
        })
        .collect()
}

/// Embedded element fields by superposition: active field `n` is
/// `Σ_m c_mn · isolated_m`.
pub fn synthesize_coupled_fields(isolated: &[FieldSampleSet], c: &CouplingMatrix) -> Result<Vec<FieldSampleSet>> {
    if c.dim() != isolated.len() {
        return Err(Error::Dimension {
            expected: isolated.len(),
            got: c.dim(),
        });
    }
    check_shared_grid(isolated)?;
    let Some(first) = isolated.first() else {
        return Ok(Vec::new());
    };
    (0..c.dim())
        .map(|n| {
            let mut values = vec![Complex64::new(0.0, 0.0); first.values().len()];
            for (m, field) in isolated.iter().enumerate() {
                let w = c.get(m, n);
                for (acc, v) in values.iter_mut().zip(field.values()) {
                    *acc += w * v;
                }
            }
            FieldSampleSet::new(first.directions().to_vec(), values)
        })
        .collect()
}

fn coefficients_with(fitter: &SweFitter, fields: &[FieldSampleSet]) -> Result<CMatrix> {
    let sets = fitter.fit_many(fields)?;
    let rows = sets.first().map_or(0, |s| s.coefficients.len());
    Ok(DMatrix::from_fn(rows, sets.len(), |r, c| sets[c].coefficients[r]))
}

/// Stacks the fitted coefficient vectors of `fields` as columns.
pub fn build_coefficient_set(fields: &[FieldSampleSet], truncation: usize) -> Result<CMatrix> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Domain("no fields to fit".into()))?;
    check_shared_grid(fields)?;
    let fitter = SweFitter::new(first.directions(), truncation)?;
    coefficients_with(&fitter, fields)
}

/// Least-squares solution of `Qs C = Qc`.
pub fn estimate_coupling(qs: &CMatrix, qc: &CMatrix) -> Result<CouplingMatrix> {
    if qs.nrows() != qc.nrows() {
        return Err(Error::Dimension {
            expected: qs.nrows(),
            got: qc.nrows(),
        });
    }
    if qs.ncols() != qc.ncols() {
        return Err(Error::Dimension {
            expected: qs.ncols(),
            got: qc.ncols(),
        });
    }
    let m = qs.ncols();
    if qs.nrows() < m {
        return Err(Error::DegenerateGeometry {
            rank: qs.nrows(),
            required: m,
        });
    }
    let svd = SVD::new(qs.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let tol = qs.nrows().max(m) as f64 * f64::EPSILON * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < m || sigma_max == 0.0 {
        return Err(Error::DegenerateGeometry { rank, required: m });
    }
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let mut w = u.adjoint() * qc;
    for (i, s) in svd.singular_values.iter().enumerate() {
        w.row_mut(i).iter_mut().for_each(|x| *x /= *s);
    }
    let values = v_t.adjoint() * w;
    let norm = frobenius(qc);
    let residual = if norm > 0.0 { frobenius(&(qs * &values - qc)) / norm } else { 0.0 };
    Ok(CouplingMatrix {
        values,
        source: CouplingSource::Estimated,
        estimation_residual: Some(residual),
    })
}

/// Pattern `l⁽ⁿ⁾(θ, φ) = k(θ, φ) Σ_m c_mn e^{jk r̂·r_m}` of element `n` (zero-based)
/// driven alone inside the coupled array.
pub fn active_element_pattern(
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    c: &CouplingMatrix,
    n: usize,
    theta: f64,
    phi: f64,
) -> Result<Complex64> {
    let m = geometry.element_count();
    if c.dim() != m {
        return Err(Error::Dimension {
            expected: m,
            got: c.dim(),
        });
    }
    if n >= m {
        return Err(Error::Domain(format!("element index {n} out of range for {m} elements")));
    }
    let k = pattern.value(theta, phi)?;
    let sum: Complex64 = (0..m).map(|i| c.get(i, n) * geometry.phase_factor(i, theta)).sum();
    Ok(k * sum)
}

/// Coupled array pattern `l(θ, φ) = Σ_m Σ_n c_nm a_m k(θ, φ) e^{jk r̂·r_n}`.
pub fn coupled_pattern(
    geometry: &ArrayGeometry,
    pattern: &ElementPattern,
    c: &CouplingMatrix,
    excitation: &[Complex64],
    theta: f64,
    phi: f64,
) -> Result<Complex64> {
    let m = geometry.element_count();
    if excitation.len() != m || c.dim() != m {
        return Err(Error::Dimension {
            expected: m,
            got: if c.dim() != m { c.dim() } else { excitation.len() },
        });
    }
    let k = pattern.value(theta, phi)?;
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..m {
        let mut weight = Complex64::new(0.0, 0.0);
        for (j, a) in excitation.iter().enumerate() {
            weight += c.get(n, j) * a;
        }
        total += weight * geometry.phase_factor(n, theta);
    }
    Ok(k * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::evaluate_array_pattern;
    use crate::swe::default_grid;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_is_exact() {
        let id = CouplingMatrix::identity(3);
        assert_eq!(id.source(), CouplingSource::Identity);
        assert_eq!(id.values(), &CMatrix::identity(3, 3));
    }

    #[test]
    fn fixture_is_asymmetric_when_asked() {
        let f = CouplingMatrix::fixture(3, 0.4, 0.9, 0.25).unwrap();
        assert_ne!(f.get(0, 1), f.get(1, 0));
        assert_eq!(f.get(1, 1), c(1.0, 0.0));
        let s = CouplingMatrix::fixture(3, 0.4, 0.9, 0.0).unwrap();
        assert_eq!(s.get(0, 2), s.get(2, 0));
        assert!(CouplingMatrix::fixture(3, 1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn isolated_field_phases() {
        let g = ArrayGeometry::uniform_linear(2, 0.25).unwrap();
        let hz = ElementPattern::hertzian_dipole();
        let grid = vec![(0.0, 0.0), (FRAC_PI_2, 1.0), (1.0, 2.0)];
        let fields = isolated_fields_synthetic(&g, &hz, &grid).unwrap();
        for (i, &(t, p)) in grid.iter().enumerate() {
            let bare = hz.polarized_field(t, p).unwrap();
            assert_eq!(fields[0].sample(i), bare);
        }
        // broadside: no phase shift
        let (a, b) = (fields[0].sample(1), fields[1].sample(1));
        assert!((a.0 - b.0).norm() < 1e-15 && (a.1 - b.1).norm() < 1e-15);
        // endfire: e^{jπ/2}
        let ratio = fields[1].sample(0).0 / fields[0].sample(0).0;
        assert!((ratio - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn superposition_reads_off_columns() {
        let g = ArrayGeometry::uniform_linear(2, 0.2).unwrap();
        let grid = default_grid(2);
        let iso = isolated_fields_synthetic(&g, &ElementPattern::hertzian_dipole(), &grid).unwrap();

        let same = synthesize_coupled_fields(&iso, &CouplingMatrix::identity(2)).unwrap();
        assert_eq!(same, iso);

        let mut vals = CMatrix::identity(2, 2);
        vals[(0, 1)] = c(0.5, 0.0);
        let active = synthesize_coupled_fields(&iso, &CouplingMatrix::prescribed(vals).unwrap()).unwrap();
        for (k, v) in active[1].values().iter().enumerate() {
            let expect = iso[1].values()[k] + iso[0].values()[k] * 0.5;
            assert!((v - expect).norm() < 1e-15);
        }
        assert_eq!(active[0], iso[0]);
    }

    #[test]
    fn qc_equal_qs_gives_identity() {
        let qs = CMatrix::from_fn(10, 3, |r, c| Complex64::new((r * 3 + c) as f64, (r as f64 - c as f64).sin()));
        let est = estimate_coupling(&qs, &qs).unwrap();
        assert!(crate::linalg::max_abs(&(est.values() - CMatrix::identity(3, 3))) < 1e-12);
        assert_eq!(est.source(), CouplingSource::Estimated);
        assert!(est.estimation_residual().unwrap() < 1e-14);
    }

    #[test]
    fn duplicate_columns_are_degenerate() {
        let col = CMatrix::from_fn(8, 1, |r, _| c(r as f64, 1.0));
        let qs = CMatrix::from_fn(8, 2, |r, _| col[(r, 0)]);
        assert!(matches!(estimate_coupling(&qs, &qs), Err(Error::DegenerateGeometry { rank: 1, required: 2 })));
    }

    #[test]
    fn active_pattern_trivia() {
        let g = ArrayGeometry::uniform_linear(2, 0.5).unwrap();
        let iso = ElementPattern::isotropic();
        let id = CouplingMatrix::identity(2);
        let v = active_element_pattern(&g, &iso, &id, 1, 0.0, 0.0).unwrap();
        assert!((v - Complex64::from_polar(1.0, PI)).norm() < 1e-15);

        let mut vals = CMatrix::identity(2, 2);
        vals[(1, 0)] = c(-1.0, 0.0);
        let cm = CouplingMatrix::prescribed(vals).unwrap();
        assert!(active_element_pattern(&g, &iso, &cm, 0, FRAC_PI_2, 0.0).unwrap().norm() < 1e-15);
        assert!(active_element_pattern(&g, &iso, &cm, 2, 0.0, 0.0).is_err());
    }

    #[test]
    fn coupled_pattern_with_identity_is_array_pattern() {
        let g = ArrayGeometry::uniform_linear(3, 0.2).unwrap();
        let hw = ElementPattern::half_wave_dipole();
        let a = [c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -1.0)];
        let l = coupled_pattern(&g, &hw, &CouplingMatrix::identity(3), &a, 0.8, 2.0).unwrap();
        let f = evaluate_array_pattern(&g, &hw, &a, 0.8, 2.0).unwrap();
        assert!((l - f).norm() < 1e-14);
    }
}
