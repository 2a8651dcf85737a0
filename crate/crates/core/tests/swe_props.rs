use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use superdir::linalg::CMatrix;
use superdir::quadrature::gauss_legendre;
use superdir::swe::{default_grid, mode_count};
use superdir::{
    basis_matrix, reconstruct_field, ElementPattern, FieldSampleSet, SweFitter, SweIndex, WaveCoefficientSet,
};

/// Gauss-Legendre in `cos θ` with `N + 1` nodes and `2N + 2` phi nodes; exact
/// for products of two modes of degree at most `N`.
fn exact_grid(n: usize) -> (Vec<(f64, f64)>, Vec<f64>) {
    let nphi = 2 * n + 2;
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    for (x, w) in gauss_legendre(n + 1) {
        for j in 0..nphi {
            dirs.push((x.acos(), 2.0 * PI * j as f64 / nphi as f64));
            weights.push(w * 2.0 * PI / nphi as f64);
        }
    }
    (dirs, weights)
}

fn random_coefficients(rng: &mut StdRng, n: usize) -> WaveCoefficientSet {
    let q = (0..mode_count(n))
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    WaveCoefficientSet::new(q, n).unwrap()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn gram_matrix_is_identity() {
    for n in [1usize, 3, 8, 15] {
        let (dirs, weights) = exact_grid(n);
        let k = basis_matrix(&dirs, n).unwrap();
        let weighted = CMatrix::from_fn(k.nrows(), k.ncols(), |r, c| k[(r, c)] * weights[r / 2] / (4.0 * PI));
        let gram = k.adjoint() * weighted;
        let eye = CMatrix::identity(gram.nrows(), gram.ncols());
        let err = (gram - eye).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "N={n}: {err:e}");
    }
}

#[test]
fn te_and_tm_columns_are_orthogonal() {
    let n = 6;
    let (dirs, weights) = exact_grid(n);
    let k = basis_matrix(&dirs, n).unwrap();
    for te in SweIndex::all(n).into_iter().filter(|i| i.s == 1) {
        let tm = SweIndex::new(2, te.m, te.n).unwrap();
        let inner: Complex64 = (0..k.nrows())
            .map(|r| k[(r, te.flat())].conj() * k[(r, tm.flat())] * weights[r / 2])
            .sum();
        assert!(inner.norm() < 1e-12, "{te:?}: {inner}");
    }
}

#[test]
fn power_equals_field_energy() {
    let mut rng = StdRng::seed_from_u64(5);
    let n = 7;
    let q = random_coefficients(&mut rng, n);
    let (dirs, weights) = exact_grid(n);
    let field = reconstruct_field(&q, &dirs).unwrap();
    let energy: f64 = (0..field.len())
        .map(|i| {
            let (et, ep) = field.sample(i);
            (et.norm_sqr() + ep.norm_sqr()) * weights[i]
        })
        .sum::<f64>()
        / (4.0 * PI);
    assert!((energy - q.power()).abs() < 1e-8 * q.power());
}

#[test]
fn z_hertzian_dipole_is_a_single_tm_mode() {
    let pattern = ElementPattern::hertzian_dipole().with_axis([0.0, 0.0, 1.0]).unwrap();
    for n in [2usize, 4] {
        let dirs = default_grid(n);
        let field = FieldSampleSet::from_fn(dirs.clone(), |t, p| pattern.polarized_field(t, p)).unwrap();
        let fit = SweFitter::new(&dirs, n).unwrap().fit(&field).unwrap();
        assert!(fit.residual < 1e-8, "N={n}: {}", fit.residual);
        let dominant = SweIndex::new(2, 0, 1).unwrap();
        let rest: f64 = SweIndex::all(n)
            .into_iter()
            .filter(|i| *i != dominant)
            .map(|i| fit.get(i).norm())
            .fold(0.0, f64::max);
        assert!(fit.get(dominant).norm() > 0.8);
        assert!(rest < 1e-10, "N={n}: stray coefficient {rest:e}");
        // E_θ = -sin θ fixes |Q| through the power identity: (1/4π)∮ sin²θ dΩ = 2/3
        assert!((fit.power() - 2.0 / 3.0).abs() < 1e-10);
    }
}

#[test]
fn x_hertzian_dipole_uses_only_first_degree_tm_modes() {
    let pattern = ElementPattern::hertzian_dipole();
    let n = 3;
    let dirs = default_grid(n);
    let field = FieldSampleSet::from_fn(dirs.clone(), |t, p| pattern.polarized_field(t, p)).unwrap();
    let fit = SweFitter::new(&dirs, n).unwrap().fit(&field).unwrap();
    assert!(fit.residual < 1e-8);
    for idx in SweIndex::all(n) {
        let q = fit.get(idx).norm();
        if idx.s == 2 && idx.n == 1 && idx.m != 0 {
            assert!(q > 0.1, "{idx:?}");
        } else {
            assert!(q < 1e-10, "{idx:?}: {q:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fit_inverts_reconstruct(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let q = random_coefficients(&mut rng, n);
        let dirs = default_grid(n);
        let field = reconstruct_field(&q, &dirs).unwrap();
        let fit = SweFitter::new(&dirs, n).unwrap().fit(&field).unwrap();
        prop_assert!(fit.residual < 1e-9, "residual {}", fit.residual);
        let scale = q.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!(max_diff(&fit.coefficients, &q.coefficients) < 1e-9 * scale);
    }

    #[test]
    fn reconstruct_after_fit_reproduces_off_grid_field(n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let q = random_coefficients(&mut rng, n);
        let grid = default_grid(n + 2);
        let field = reconstruct_field(&q, &grid).unwrap();
        let fit = SweFitter::new(&grid, n + 2).unwrap().fit(&field).unwrap();
        let probes: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let want = reconstruct_field(&q, &probes).unwrap();
        let got = reconstruct_field(&fit, &probes).unwrap();
        let scale = want.values().iter().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!(max_diff(got.values(), want.values()) < 1e-9 * scale);
    }

    #[test]
    fn flat_index_round_trips(j in 0usize..5000) {
        let idx = SweIndex::from_flat(j);
        prop_assert_eq!(idx.flat(), j);
        prop_assert!(idx.m.unsigned_abs() <= idx.n);
    }
}
