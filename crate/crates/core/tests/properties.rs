use std::f64::consts::PI;

use galerkin_flm::{
    derivative_transform, galerkin_solve, oracle_galerkin, threshold_estimate, weighted_norm_sq, CoefficientVector,
    EigenScaling, ErrorLaw, MomentMatrices, ProcessSpec, Sample, WeightSequence,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn coeffs(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    len.prop_flat_map(|j| prop::collection::vec(-2.0..2.0f64, j))
}

proptest! {
    #[test]
    fn derivative_orders_compose(v in coeffs(1..=40), s in 0u32..4, t in 0u32..4) {
        let f = CoefficientVector::new(v).unwrap();
        let lhs = derivative_transform(&derivative_transform(&f, s), t);
        let rhs = derivative_transform(&f, s + t);
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    // For odd J every cosine has its sine partner, so ‖f^(s)‖² = (2π)^{2s} Σ_j freq(j)^{2s} f_j².
    #[test]
    fn derivative_norm_matches_sobolev_weights(half in 1usize..20, s in 1u32..4, seed in any::<u64>()) {
        let len = 2 * half + 1;
        let v: Vec<f64> = (0..len).map(|i| ((seed.wrapping_mul(i as u64 + 7) % 1000) as f64 / 500.0) - 1.0).collect();
        let f = CoefficientVector::new(v).unwrap();
        let lhs = weighted_norm_sq(&derivative_transform(&f, s), &WeightSequence::Constant);
        let sob = WeightSequence::Sobolev { p: f64::from(s) };
        let rhs = (2.0 * PI).powi(2 * s as i32) * (weighted_norm_sq(&f, &sob) - f[0] * f[0]);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn threshold_is_all_or_nothing(n in 5usize..40, m in 1usize..5, gamma in 0.1..50.0f64, seed in any::<u64>()) {
        let sample = random_sample(n, 6, seed);
        let est = threshold_estimate(&sample, m, gamma).unwrap();
        if est.omega_held {
            prop_assert!(1.0 / est.sigma_min <= gamma);
        } else {
            prop_assert!(est.beta_hat.is_zero());
        }
        prop_assert!(est.beta_hat.iter().skip(m).all(|c| *c == 0.0));
    }

    #[test]
    fn column_permutation_permutes_estimate(n in 8usize..30, seed in any::<u64>()) {
        let m = 4;
        let sample = random_sample(n, m, seed);
        let perm = [2usize, 0, 3, 1];
        let permuted = sample.permute_columns(&perm).unwrap();
        let a = threshold_estimate(&sample, m, 1e12).unwrap();
        let b = threshold_estimate(&permuted, m, 1e12).unwrap();
        prop_assume!(a.omega_held && b.omega_held);
        for (k, &old) in perm.iter().enumerate() {
            let (x, y) = (b.beta_hat[k], a.beta_hat[old]);
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()) * (1.0 / a.sigma_min));
        }
    }
}

fn random_sample(n: usize, big_j: usize, seed: u64) -> Sample {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * big_j).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Sample::new(y, x, big_j).unwrap()
}

// Plain Gaussian elimination with partial pivoting on the raw moment sums.
fn brute_force(sample: &Sample, m: usize) -> Option<Vec<f64>> {
    let n = sample.n() as f64;
    let mut a = vec![vec![0.0; m + 1]; m];
    for (i, row) in a.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().take(m).enumerate() {
            *cell = sample.x_rows().map(|x| x[i] * x[k]).sum::<f64>() / n;
        }
        row[m] = sample.x_rows().zip(sample.y()).map(|(x, y)| x[i] * y).sum::<f64>() / n;
    }
    let scale = a.iter().flat_map(|r| r[..m].iter()).fold(0.0_f64, |s, v| s.max(v.abs()));
    for col in 0..m {
        let piv = (col..m).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for c in col..=m {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut out = vec![0.0; m];
    for r in (0..m).rev() {
        let tail: f64 = (r + 1..m).map(|c| a[r][c] * out[c]).sum();
        out[r] = (a[r][m] - tail) / a[r][r];
    }
    Some(out)
}

#[test]
fn galerkin_matches_gaussian_elimination_on_tiny_samples() {
    let mut compared = 0;
    for seed in 0..100u64 {
        let n = 1 + (seed % 3) as usize;
        let m = 1 + ((seed / 3) % 3) as usize;
        let sample = random_sample(n, 3, seed);
        let est = threshold_estimate(&sample, m, f64::INFINITY).unwrap();
        match brute_force(&sample, m) {
            Some(oracle) if m <= n => {
                assert!(est.omega_held, "seed {seed}: solver reported singular");
                for (j, o) in oracle.iter().enumerate() {
                    assert!((est.beta_hat[j] - o).abs() <= 1e-10 * o.abs().max(1.0), "seed {seed}, j {j}");
                }
                compared += 1;
            }
            _ => assert!(!est.omega_held, "seed {seed}: rank-deficient system accepted"),
        }
    }
    assert!(compared >= 30);
}

#[test]
fn moments_are_symmetric_and_psd() {
    let sample = random_sample(50, 8, 11);
    let mom = galerkin_flm::empirical_moments(&sample, 8).unwrap();
    assert_eq!(mom.gamma_hat, mom.gamma_hat.transpose());
    assert!(mom.min_eigenvalue() >= -1e-12);
}

#[test]
fn galerkin_solution_solves_normal_equations() {
    let g = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let gamma = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
    let mom = MomentMatrices::new(g.clone(), gamma.clone(), 10).unwrap();
    let sol = galerkin_solve(&mom);
    let b = DVector::from_column_slice(sol.coeffs().unwrap());
    assert!((gamma * b - g).amax() < 1e-12);
}

// (b_m/ω_m) ‖β − β^m‖²_ω <= 10 d⁴ ρ for slopes in the ellipsoid.
#[test]
fn galerkin_bias_bound() {
    let big_j = 129;
    for d in [1.0, 2.0] {
        let proc = ProcessSpec::new(
            WeightSequence::PolyDecay { a: 1.0 },
            d,
            EigenScaling::Alternating,
            1.0,
            ErrorLaw::Gaussian,
            big_j,
        )
        .unwrap();
        let lambda = proc.eigenvalues();
        for p in [1.0, 2.0] {
            let rho = 1.0;
            let b = WeightSequence::Sobolev { p };
            for beta in ellipsoid_slopes(&b, rho, big_j) {
                for omega in [WeightSequence::Constant, WeightSequence::PolyDecay { a: 1.0 }] {
                    for m in 1..=64 {
                        let bm = oracle_galerkin(&lambda, &beta, m).unwrap();
                        let lhs = b.at(m) / omega.at(m) * weighted_norm_sq(&beta.sub(&bm).unwrap(), &omega);
                        assert!(lhs <= 10.0 * d.powi(4) * rho * (1.0 + 1e-12), "d={d} p={p} m={m}: {lhs}");
                    }
                }
            }
        }
    }
}

fn ellipsoid_slopes(b: &WeightSequence, rho: f64, big_j: usize) -> Vec<CoefficientVector> {
    let mut out = Vec::new();
    for spike in [2, 3, 10, 33, 65, 100] {
        let mut v = vec![0.0; big_j];
        v[spike - 1] = (rho / b.at(spike)).sqrt();
        out.push(CoefficientVector::new(v).unwrap());
    }
    let flat: Vec<f64> = (1..=big_j).map(|j| 1.0 / b.at(j).sqrt()).collect();
    let flat = CoefficientVector::new(flat).unwrap();
    out.push(flat.scaled((rho / weighted_norm_sq(&flat, b)).sqrt()));
    out
}
