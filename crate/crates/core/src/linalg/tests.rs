use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn opts(tol: f64) -> SolveOptions<f64> {
    SolveOptions { tol, max_iter: 1000 }
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<f64> {
    let a = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut k = a.transpose().matmul(&a);
    for i in 0..n {
        k[(i, i)] += 1.0;
    }
    k
}

/// Reference solve by Gaussian elimination with partial pivoting.
fn gauss_solve(a: &DenseMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = a.rows;
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).iter().copied().chain([b[i]]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

#[test]
fn identity_converges_in_one_iteration() {
    let k = CsrMatrix::<f64>::identity(7);
    let b: Vec<f64> = (0..7).map(|i| i as f64 + 1.0).collect();
    let (x, stats) = solve_spd(&k, &b, opts(1e-12)).unwrap();
    assert_eq!(stats.iterations, 1);
    for (a, b) in x.iter().zip(&b) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn two_by_two() {
    let mut t = Triplets::new(2, 2);
    t.extend([(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
    let (x, _) = solve_spd(&t.build(), &[1.0, 1.0], opts(1e-12)).unwrap();
    for v in x {
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn random_spd_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = random_spd(50, &mut rng);
    let b: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
    let want = gauss_solve(&k, &b);
    let (x, _) = solve_spd(&k, &b, opts(1e-13)).unwrap();
    let chol = solve_direct(&k, &b).unwrap();
    for i in 0..50 {
        assert!((x[i] - want[i]).abs() <= 1e-8 * want[i].abs().max(1.0));
        assert!((chol[i] - want[i]).abs() <= 1e-10 * want[i].abs().max(1.0));
    }
}

fn random_hybrid(rng: &mut ChaCha8Rng) -> HybridOperator<f64> {
    let n = 40;
    let mut t = Triplets::new(n, n);
    for i in 0..n {
        t.push(i, i, 4.0);
        if i + 1 < n {
            let v = rng.random_range(-1.0..0.0);
            t.push(i, i + 1, v);
            t.push(i + 1, i, v);
        }
    }
    let dofs: Vec<usize> = (0..n).step_by(3).collect();
    let block = random_spd(dofs.len(), rng);
    HybridOperator::new(t.build(), block, dofs).unwrap()
}

#[test]
fn hybrid_action_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = random_hybrid(&mut rng);
    let scale = k.to_dense().max_abs() * k.dim() as f64;
    for _ in 0..20 {
        let v: Vec<f64> = (0..k.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..k.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = dot(&v, &k.apply(&w));
        let rhs = dot(&w, &k.apply(&v));
        assert!((lhs - rhs).abs() <= 1e-12 * norm2(&v) * norm2(&w) * scale);
    }
    let d = k.to_dense();
    for (i, v) in k.diagonal().into_iter().enumerate() {
        assert_eq!(v, d[(i, i)]);
    }
}

#[test]
fn solution_invariant_under_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = random_hybrid(&mut rng);
    let n = k.dim();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (x, _) = solve_spd(&k, &b, opts(1e-12)).unwrap();
    let perm: Vec<usize> = (0..n).rev().collect();
    let pk = k.submatrix(&perm);
    let pb: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
    let (px, _) = solve_spd(&pk, &pb, opts(1e-12)).unwrap();
    for (new, &old) in perm.iter().enumerate() {
        assert!((px[new] - x[old]).abs() < 1e-9);
    }
}

#[test]
fn energy_error_decreases_monotonically() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = random_hybrid(&mut rng);
    let b: Vec<f64> = (0..k.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let exact = solve_direct(&k, &b).unwrap();
    let mut energies = Vec::new();
    pcg(&k, &b, None, opts(1e-12), |_, x, _| {
        let e: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
        energies.push(k.quad_form(&e));
    })
    .unwrap();
    assert!(energies.len() > 2);
    for w in energies.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-10) + 1e-28);
    }
}

#[test]
fn reports_non_convergence_with_best_iterate() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let k = random_spd(30, &mut rng);
    let b = vec![1.0; 30];
    match solve_spd(&k, &b, SolveOptions { tol: 1e-14, max_iter: 2 }) {
        Err(Error::NotConverged { iterations, residual, best }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 0.0);
            assert_eq!(best.len(), 30);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(solve_spd(&k, &b, SolveOptions { tol: 1e-3, max_iter: 10 }).is_err());
}

#[test]
fn zero_rhs_gives_zero() {
    let k = CsrMatrix::<f64>::identity(3);
    let (x, stats) = solve_spd(&k, &[0.0; 3], opts(1e-10)).unwrap();
    assert_eq!(x, vec![0.0; 3]);
    assert_eq!(stats.iterations, 0);
}

#[test]
fn triplets_sum_duplicates() {
    let mut t = Triplets::new(3, 3);
    t.extend([(2, 1, 1.0), (0, 0, 1.0), (2, 1, 2.5), (1, 2, -1.0)]);
    let m = t.build();
    assert_eq!(m.nnz(), 3);
    assert_eq!(m.get(2, 1), 3.5);
    assert_eq!(m.get(1, 1), 0.0);
    assert_eq!(m.transpose().get(1, 2), 3.5);
    assert_eq!(m.quad_form(&[1.0, 1.0, 1.0]), 3.5);
}

#[test]
fn hybrid_restriction() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let k = random_hybrid(&mut rng);
    let keep: Vec<usize> = (0..k.dim()).filter(|i| i % 2 == 1).collect();
    let sub = k.submatrix(&keep).to_dense();
    let full = k.to_dense();
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            assert!((sub[(a, b)] - full[(i, j)]).abs() < 1e-15);
        }
    }
}

#[test]
fn single_precision_cg() {
    let mut t = Triplets::<f32>::new(2, 2);
    t.extend([(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
    let (x, _) = solve_spd(&t.build(), &[1.0f32, 1.0], SolveOptions { tol: 1e-5, max_iter: 10 }).unwrap();
    assert!((x[0] - 1.0 / 3.0).abs() < 1e-5);
}
