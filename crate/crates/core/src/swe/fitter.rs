//! Least-squares fitting of expansion coefficients.
//!
//! Every mode varies as `e^{jmφ}`, so on a grid made of theta rings that
//! are each sampled uniformly in phi with more than `2N` points, a unitary
//! DFT around each ring splits the problem into independent blocks, one per
//! azimuthal order `m`. The blocks carry exactly the singular values of the
//! full basis matrix, so rank and conditioning tests are unchanged. Other
//! grids go through one SVD of the full basis matrix.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Dyn, SVD};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{basis_matrix, eval_with_table, mode_count, FieldSampleSet, LegendreTable, SweIndex, WaveCoefficientSet};
use crate::array::check_direction;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

const RING_SPACING_TOL: f64 = 1e-10;

/// Least-squares fitter for one sampling grid and truncation.
///
/// The factorization is computed once; every field fitted on the same grid
/// reuses it.
pub struct SweFitter {
    directions: Vec<(f64, f64)>,
    truncation: usize,
    solver: Solver,
    condition: f64,
}

enum Solver {
    Dense {
        basis: CMatrix,
        /// `Uᴴ` of the basis matrix.
        u_adjoint: CMatrix,
        inv_sigma: Vec<f64>,
        v: CMatrix,
    },
    Rings {
        rings: Vec<Ring>,
        blocks: Vec<Block>,
    },
}

struct Ring {
    theta: f64,
    samples: Vec<usize>,
}

/// Pseudoinverse of the order-`m` block, mapping ring DFT values to the
/// coefficients listed in `modes`.
struct Block {
    m: i32,
    modes: Vec<usize>,
    matrix: CMatrix,
    pinv: CMatrix,
}

impl std::fmt::Debug for SweFitter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SweFitter")
            .field("samples", &self.directions.len())
            .field("truncation", &self.truncation)
            .field("ring_blocks", &matches!(self.solver, Solver::Rings { .. }))
            .field("condition", &self.condition)
            .finish()
    }
}

impl SweFitter {
    pub fn new(directions: &[(f64, f64)], truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::Domain("truncation degree must be >= 1".into()));
        }
        let unknowns = mode_count(truncation);
        let rows = 2 * directions.len();
        if rows < unknowns {
            return Err(Error::InsufficientSampling { rows, unknowns });
        }
        for &(t, p) in directions {
            check_direction(t, p)?;
        }
        let tol_scale = rows.max(unknowns) as f64 * f64::EPSILON;
        let (solver, condition) = match uniform_rings(directions, truncation) {
            Some(rings) => ring_solver(rings, truncation, unknowns, tol_scale)?,
            None => dense_solver(basis_matrix(directions, truncation)?, unknowns, tol_scale)?,
        };
        Ok(Self {
            directions: directions.to_vec(),
            truncation,
            solver,
            condition,
        })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn directions(&self) -> &[(f64, f64)] {
        &self.directions
    }

    /// Ratio of extreme singular values of the basis matrix.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// The basis matrix on this grid, rows interleaved `[θ, φ]` per direction.
    pub fn basis(&self) -> Result<CMatrix> {
        match &self.solver {
            Solver::Dense { basis, .. } => Ok(basis.clone()),
            Solver::Rings { .. } => basis_matrix(&self.directions, self.truncation),
        }
    }

    /// Pseudoinverse solution `K⁺ ε` with its relative residual.
    pub fn fit(&self, samples: &FieldSampleSet) -> Result<WaveCoefficientSet> {
        if samples.directions() != self.directions.as_slice() {
            return Err(Error::Domain("field samples are not on the fitter's grid".into()));
        }
        let eps = CVector::from_column_slice(samples.values());
        let (q, misfit) = match &self.solver {
            Solver::Dense {
                basis,
                u_adjoint,
                inv_sigma,
                v,
            } => {
                let mut w = u_adjoint * &eps;
                for (wi, s) in w.iter_mut().zip(inv_sigma) {
                    *wi *= *s;
                }
                let q = v * w;
                let misfit = (basis * &q - &eps).norm();
                (q, misfit)
            }
            Solver::Rings { rings, blocks } => self.solve_rings(rings, blocks, samples),
        };
        let norm = eps.norm();
        let residual = if norm > 0.0 { misfit / norm } else { 0.0 };
        Ok(WaveCoefficientSet {
            coefficients: q.iter().copied().collect(),
            truncation: self.truncation,
            residual,
        })
    }

    /// Fits several fields on the shared grid; order is preserved.
    pub fn fit_many(&self, fields: &[FieldSampleSet]) -> Result<Vec<WaveCoefficientSet>> {
        fields.par_iter().map(|f| self.fit(f)).collect()
    }

    /// Coefficients and the misfit norm `‖K q − ε‖`.
    ///
    /// The misfit is assembled from the per-order block residuals plus the
    /// energy of the ring spectra outside `|m| ≤ N`, which the expansion
    /// cannot reach.
    fn solve_rings(&self, rings: &[Ring], blocks: &[Block], samples: &FieldSampleSet) -> (CVector, f64) {
        let n = self.truncation as i32;
        let mut misfit_sq = 0.0;
        // in_band[r][m + N] = orthonormal DFT of (E_θ, E_φ) around ring r
        let mut in_band = Vec::with_capacity(rings.len());
        for ring in rings {
            let p = ring.samples.len();
            let scale = (p as f64).sqrt().recip();
            // frequencies -N ..= p - N - 1: every residue mod p once
            let mut spectrum = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); p];
            for &i in &ring.samples {
                let phi = self.directions[i].1;
                let (et, ep) = samples.sample(i);
                let step = Complex64::from_polar(1.0, -phi);
                let mut w = Complex64::from_polar(scale, n as f64 * phi);
                for slot in spectrum.iter_mut() {
                    slot.0 += w * et;
                    slot.1 += w * ep;
                    w *= step;
                }
            }
            let orders = (2 * n + 1) as usize;
            misfit_sq += spectrum[orders..]
                .iter()
                .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
                .sum::<f64>();
            spectrum.truncate(orders);
            in_band.push(spectrum);
        }

        let mut q = CVector::zeros(mode_count(self.truncation));
        for block in blocks {
            let slot = (block.m + n) as usize;
            let mut rhs = CVector::zeros(2 * rings.len());
            for (r, spectrum) in in_band.iter().enumerate() {
                rhs[2 * r] = spectrum[slot].0;
                rhs[2 * r + 1] = spectrum[slot].1;
            }
            let x = &block.pinv * &rhs;
            misfit_sq += (&block.matrix * &x - &rhs).norm_squared();
            for (&j, v) in block.modes.iter().zip(x.iter()) {
                q[j] = *v;
            }
        }
        (q, misfit_sq.sqrt())
    }
}

/// Groups directions into theta rings and checks that each ring is sampled
/// uniformly in phi with at least `2N + 1` points.
fn uniform_rings(directions: &[(f64, f64)], truncation: usize) -> Option<Vec<Ring>> {
    let mut order: Vec<u64> = Vec::new();
    let mut by_theta: HashMap<u64, Ring> = HashMap::new();
    for (i, &(theta, _)) in directions.iter().enumerate() {
        let key = theta.to_bits();
        by_theta
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Ring {
                    theta,
                    samples: Vec::new(),
                }
            })
            .samples
            .push(i);
    }
    let rings: Vec<Ring> = order.iter().map(|k| by_theta.remove(k).expect("ring key")).collect();
    for ring in &rings {
        let p = ring.samples.len();
        if p < 2 * truncation + 1 {
            return None;
        }
        let mut phis: Vec<f64> = ring
            .samples
            .iter()
            .map(|&i| directions[i].1.rem_euclid(2.0 * PI))
            .collect();
        phis.sort_by(f64::total_cmp);
        let step = 2.0 * PI / p as f64;
        if phis
            .iter()
            .enumerate()
            .any(|(j, phi)| (phi - phis[0] - j as f64 * step).abs() > RING_SPACING_TOL)
        {
            return None;
        }
    }
    Some(rings)
}

fn ring_solver(rings: Vec<Ring>, truncation: usize, unknowns: usize, tol_scale: f64) -> Result<(Solver, f64)> {
    let n = truncation as i32;
    let tables: Vec<LegendreTable> = rings.iter().map(|r| LegendreTable::new(truncation, r.theta)).collect();
    let factored: Vec<(i32, Vec<usize>, CMatrix, SVD<Complex64, Dyn, Dyn>)> = (-n..=n)
        .into_par_iter()
        .map(|m| {
            let modes: Vec<SweIndex> = (m.unsigned_abs().max(1)..=truncation as u32)
                .flat_map(|deg| [1u8, 2].map(|s| SweIndex { s, m, n: deg }))
                .collect();
            let matrix = CMatrix::from_fn(2 * rings.len(), modes.len(), |row, col| {
                let ring = &rings[row / 2];
                let (kt, kp) = eval_with_table(&tables[row / 2], modes[col], 0.0);
                let scaled = if row % 2 == 0 { kt } else { kp };
                scaled * (ring.samples.len() as f64).sqrt()
            });
            let svd = SVD::new(matrix.clone(), true, true);
            (m, modes.iter().map(SweIndex::flat).collect(), matrix, svd)
        })
        .collect();

    let sigma_max = factored
        .iter()
        .flat_map(|(_, _, _, svd)| svd.singular_values.iter().copied())
        .fold(0.0, f64::max);
    let sigma_min = factored
        .iter()
        .flat_map(|(_, _, _, svd)| svd.singular_values.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let tol = tol_scale * sigma_max;
    let rank: usize = factored
        .iter()
        .map(|(_, _, _, svd)| svd.singular_values.iter().filter(|&&s| s > tol).count())
        .sum();
    if rank < unknowns {
        return Err(Error::RankDeficient {
            rank,
            required: unknowns,
        });
    }

    let blocks = factored
        .into_iter()
        .map(|(m, modes, matrix, svd)| {
            let inv = svd.singular_values.map(|s| Complex64::new(s.recip(), 0.0));
            let u = svd.u.expect("requested U");
            let v = svd.v_t.expect("requested Vᵀ").adjoint();
            let pinv = v * CMatrix::from_diagonal(&inv) * u.adjoint();
            Block {
                m,
                modes,
                matrix,
                pinv,
            }
        })
        .collect();
    Ok((Solver::Rings { rings, blocks }, sigma_max / sigma_min))
}

fn dense_solver(basis: CMatrix, unknowns: usize, tol_scale: f64) -> Result<(Solver, f64)> {
    let svd = SVD::new(basis.clone(), true, true);
    let sigma_max = svd.singular_values.max();
    let tol = tol_scale * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < unknowns {
        return Err(Error::RankDeficient {
            rank,
            required: unknowns,
        });
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let sigma_min = svd.singular_values.min();
    Ok((
        Solver::Dense {
            basis,
            u_adjoint: u.adjoint(),
            inv_sigma: svd.singular_values.iter().map(|s| s.recip()).collect(),
            v: v_t.adjoint(),
        },
        sigma_max / sigma_min,
    ))
}
