use super::{dot, norm2, LinearOperator};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Largest system the dense direct path accepts.
pub const DIRECT_LIMIT: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Relative residual target `‖Kx − b‖ / ‖b‖`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)), max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn solve_spd<T: Real, K: LinearOperator<T> + ?Sized>(k: &K, rhs: &[T], opts: SolveOptions<T>) -> Result<(Vec<T>, SolveStats)> {
    pcg(k, rhs, None, opts, |_, _, _| {})
}

/// Conjugate gradients from the initial guess `x0`. `monitor(it, x, r)` is
/// called after every iteration with the current iterate and residual.
pub fn pcg<T, K, F>(k: &K, rhs: &[T], x0: Option<&[T]>, opts: SolveOptions<T>, mut monitor: F) -> Result<(Vec<T>, SolveStats)>
where
    T: Real,
    K: LinearOperator<T> + ?Sized,
    F: FnMut(usize, &[T], &[T]),
{
    let n = k.dim();
    if rhs.len() != n {
        return Err(invalid(format!("right-hand side has length {} for dimension {n}", rhs.len())));
    }
    if !(opts.tol > T::zero() && opts.tol <= T::lit(1e-4)) {
        return Err(invalid(format!("solver tolerance must lie in (0, 1e-4], got {}", opts.tol)));
    }
    let bnorm = norm2(rhs);
    if bnorm == T::zero() {
        return Ok((vec![T::zero(); n], SolveStats::default()));
    }
    let diag = k.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > T::zero())) {
        return Err(invalid(format!("diagonal entry {i} is not positive; operator is not SPD")));
    }
    let inv: Vec<T> = diag.iter().map(|&d| T::one() / d).collect();

    let mut x = x0.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    let mut r = residual(k, &x, rhs);
    let mut rel = norm2(&r) / bnorm;
    let (mut best, mut best_rel) = (x.clone(), rel);
    let mut it = 0;
    let mut kp = vec![T::zero(); n];
    'restart: while rel > opts.tol {
        let mut z: Vec<T> = r.iter().zip(&inv).map(|(&a, &b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            if it >= opts.max_iter {
                break 'restart;
            }
            it += 1;
            k.mul_vec(&p, &mut kp);
            let pkp = dot(&p, &kp);
            if !(pkp > T::zero()) {
                return Err(Error::NotConverged {
                    iterations: it,
                    residual: best_rel.as_f64(),
                    best: best.iter().map(|v| v.as_f64()).collect(),
                });
            }
            let alpha = rz / pkp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            monitor(it, &x, &r);
            rel = norm2(&r) / bnorm;
            if rel < best_rel {
                best_rel = rel;
                best.clone_from(&x);
            }
            if rel <= opts.tol {
                // confirm against the true residual; drift triggers a restart
                r = residual(k, &x, rhs);
                rel = norm2(&r) / bnorm;
                continue 'restart;
            }
            for i in 0..n {
                z[i] = r[i] * inv[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    if rel <= opts.tol {
        return Ok((x, SolveStats { iterations: it, residual: rel.as_f64() }));
    }
    Err(Error::NotConverged { iterations: it, residual: best_rel.as_f64(), best: best.iter().map(|v| v.as_f64()).collect() })
}

fn residual<T: Real, K: LinearOperator<T> + ?Sized>(k: &K, x: &[T], rhs: &[T]) -> Vec<T> {
    let kx = k.apply(x);
    rhs.iter().zip(kx).map(|(&b, v)| b - v).collect()
}

/// Dense Cholesky solve of a materialized operator (oracle path).
pub fn solve_direct<T: Real, K: LinearOperator<T> + ?Sized>(k: &K, rhs: &[T]) -> Result<Vec<T>> {
    let n = k.dim();
    if n > DIRECT_LIMIT {
        return Err(invalid(format!("direct solve limited to {DIRECT_LIMIT} unknowns, got {n}")));
    }
    if rhs.len() != n {
        return Err(invalid("right-hand side length mismatch"));
    }
    Ok(k.to_dense().cholesky()?.solve(rhs))
}
