//! Spherical wave expansion of far fields.
//!
//! A far field `E = [E_θ, E_φ]` is expanded as `Σ Q_{s,m,n} K_{s,m,n}(θ, φ)`
//! over TE (`s = 1`) and TM (`s = 2`) vector spherical wave functions with
//! `1 ≤ n ≤ N`, `|m| ≤ n`. Units are normalized: the usual `k√η` prefactor is
//! one, and the functions are orthonormal under `(1/4π) ∮ · dΩ`, so
//! `(1/4π) ∮ |E|² dΩ = Σ |Q|²`.

mod fitter;
pub mod legendre;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::check_direction;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub use fitter::SweFitter;
pub use legendre::LegendreTable;

/// Mode index `(s, m, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SweIndex {
    pub s: u8,
    pub m: i32,
    pub n: u32,
}

impl SweIndex {
    pub fn new(s: u8, m: i32, n: u32) -> Result<Self> {
        if !(s == 1 || s == 2) || n == 0 || m.unsigned_abs() > n {
            return Err(Error::Index { s, m, n });
        }
        Ok(Self { s, m, n })
    }

    /// Position in the flattened ordering: `s` fastest, then `m`, then `n`.
    pub fn flat(&self) -> usize {
        let n = self.n as usize;
        2 * (n * n - 1) + 2 * (self.m + self.n as i32) as usize + (self.s as usize - 1)
    }

    /// Inverse of [`flat`](Self::flat).
    pub fn from_flat(j: usize) -> Self {
        let mut n = 1usize;
        while 2 * ((n + 1) * (n + 1) - 1) <= j {
            n += 1;
        }
        let rem = j - 2 * (n * n - 1);
        Self {
            s: (rem % 2) as u8 + 1,
            m: (rem / 2) as i32 - n as i32,
            n: n as u32,
        }
    }

    /// Every index up to degree `truncation`, in flattened order.
    pub fn all(truncation: usize) -> Vec<SweIndex> {
        (0..mode_count(truncation)).map(Self::from_flat).collect()
    }
}

/// Number of modes `2N(N + 2)`.
pub fn mode_count(truncation: usize) -> usize {
    2 * truncation * (truncation + 2)
}

/// `ceil(k r₀) + 10` for an enclosing radius `r₀` in wavelengths.
pub fn truncation_degree(enclosing_radius: f64) -> Result<usize> {
    if !(enclosing_radius.is_finite() && enclosing_radius >= 0.0) {
        return Err(Error::Domain(format!("enclosing radius must be >= 0, got {enclosing_radius}")));
    }
    Ok((2.0 * PI * enclosing_radius).ceil() as usize + 10)
}

/// Far-field samples `[E_θ(θ₁,φ₁), E_φ(θ₁,φ₁), E_θ(θ₂,φ₂), …]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSampleSet {
    directions: Vec<(f64, f64)>,
    values: Vec<Complex64>,
}

impl FieldSampleSet {
    pub fn new(directions: Vec<(f64, f64)>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != 2 * directions.len() {
            return Err(Error::Dimension {
                expected: 2 * directions.len(),
                got: values.len(),
            });
        }
        for &(t, p) in &directions {
            check_direction(t, p)?;
        }
        let mut keys: Vec<(u64, u64)> = directions.iter().map(|(t, p)| (t.to_bits(), p.to_bits())).collect();
        keys.sort_unstable();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("field samples contain duplicate directions".into()));
        }
        Ok(Self { directions, values })
    }

    /// Samples a polarized field function on the given directions.
    pub fn from_fn(
        directions: Vec<(f64, f64)>,
        mut field: impl FnMut(f64, f64) -> Result<(Complex64, Complex64)>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(2 * directions.len());
        for &(t, p) in &directions {
            let (et, ep) = field(t, p)?;
            values.push(et);
            values.push(ep);
        }
        Self::new(directions, values)
    }

    pub fn directions(&self) -> &[(f64, f64)] {
        &self.directions
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// `(E_θ, E_φ)` at sample `i`.
    pub fn sample(&self, i: usize) -> (Complex64, Complex64) {
        (self.values[2 * i], self.values[2 * i + 1])
    }

    pub fn same_grid(&self, other: &FieldSampleSet) -> bool {
        self.directions == other.directions
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            directions: self.directions.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Fitted expansion coefficients in flattened [`SweIndex`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveCoefficientSet {
    pub coefficients: Vec<Complex64>,
    pub truncation: usize,
    /// `‖K q − ε‖ / ‖ε‖` of the fit that produced them; zero when constructed directly.
    pub residual: f64,
}

impl WaveCoefficientSet {
    pub fn new(coefficients: Vec<Complex64>, truncation: usize) -> Result<Self> {
        if coefficients.len() != mode_count(truncation) {
            return Err(Error::Dimension {
                expected: mode_count(truncation),
                got: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Domain("coefficients must be finite".into()));
        }
        Ok(Self {
            coefficients,
            truncation,
            residual: 0.0,
        })
    }

    pub fn get(&self, index: SweIndex) -> Complex64 {
        self.coefficients[index.flat()]
    }

    /// Radiated power in normalized units, `Σ |Q|²`.
    pub fn power(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

fn neg_j_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `K_{s,m,n}` from a precomputed Legendre table at the same `θ`.
fn eval_with_table(table: &LegendreTable, index: SweIndex, phi: f64) -> (Complex64, Complex64) {
    let SweIndex { s, m, n } = index;
    let am = m.unsigned_abs() as usize;
    let nu = n as usize;
    let sign = if m > 0 && m % 2 != 0 { -1.0 } else { 1.0 };
    let norm = (2.0 / (n as f64 * (n as f64 + 1.0))).sqrt() * sign;
    let azimuth = Complex64::from_polar(norm, m as f64 * phi);
    let jm_p = Complex64::new(0.0, m as f64 * table.p_over_sin(nu, am));
    let dp = Complex64::new(table.dp_dtheta(nu, am), 0.0);
    if s == 1 {
        let pre = azimuth * neg_j_pow(n + 1);
        (pre * jm_p, -pre * dp)
    } else {
        let pre = azimuth * neg_j_pow(n);
        (pre * dp, pre * jm_p)
    }
}

/// Evaluates `(K_θ, K_φ)` of one spherical wave function.
pub fn eval_spherical_wave_function(index: SweIndex, theta: f64, phi: f64) -> Result<(Complex64, Complex64)> {
    let index = SweIndex::new(index.s, index.m, index.n)?;
    check_direction(theta, phi)?;
    let table = LegendreTable::new(index.n as usize, theta);
    Ok(eval_with_table(&table, index, phi))
}

/// Basis matrix with rows interleaved `[θ, φ]` per direction and one column
/// per mode.
pub fn basis_matrix(directions: &[(f64, f64)], truncation: usize) -> Result<CMatrix> {
    if directions.is_empty() {
        return Err(Error::Domain("basis matrix needs at least one direction".into()));
    }
    for &(t, p) in directions {
        check_direction(t, p)?;
    }
    let indices = SweIndex::all(truncation);
    let cols = indices.len();
    let rows: Vec<Vec<Complex64>> = directions
        .par_iter()
        .map(|&(theta, phi)| {
            let table = LegendreTable::new(truncation, theta);
            let mut pair = vec![Complex64::new(0.0, 0.0); 2 * cols];
            for (j, idx) in indices.iter().enumerate() {
                let (kt, kp) = eval_with_table(&table, *idx, phi);
                pair[j] = kt;
                pair[cols + j] = kp;
            }
            pair
        })
        .collect();
    let mut flat = Vec::with_capacity(2 * directions.len() * cols);
    for pair in rows {
        flat.extend_from_slice(&pair);
    }
    Ok(DMatrix::from_row_slice(2 * directions.len(), cols, &flat))
}

/// Equiangular pole-free grid with `(2N + 2)` theta rows and `(4N + 4)` phi
/// columns.
pub fn default_grid(truncation: usize) -> Vec<(f64, f64)> {
    let rows = 2 * truncation + 2;
    let cols = 4 * truncation + 4;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let theta = (i as f64 + 0.5) * PI / rows as f64;
        for j in 0..cols {
            out.push((theta, j as f64 * 2.0 * PI / cols as f64));
        }
    }
    out
}

/// One-shot fit of a sampled far field.
pub fn fit_wave_coefficients(samples: &FieldSampleSet, truncation: usize) -> Result<WaveCoefficientSet> {
    SweFitter::new(samples.directions(), truncation)?.fit(samples)
}

/// Evaluates the expansion on the given directions.
pub fn reconstruct_field(coefficients: &WaveCoefficientSet, directions: &[(f64, f64)]) -> Result<FieldSampleSet> {
    let n_max = coefficients.truncation;
    let indices = SweIndex::all(n_max);
    let mut values = Vec::with_capacity(2 * directions.len());
    for &(theta, phi) in directions {
        check_direction(theta, phi)?;
        let table = LegendreTable::new(n_max, theta);
        let mut et = Complex64::new(0.0, 0.0);
        let mut ep = Complex64::new(0.0, 0.0);
        for (idx, q) in indices.iter().zip(&coefficients.coefficients) {
            if *q == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (kt, kp) = eval_with_table(&table, *idx, phi);
            et += q * kt;
            ep += q * kp;
        }
        values.push(et);
        values.push(ep);
    }
    FieldSampleSet::new(directions.to_vec(), values)
}
