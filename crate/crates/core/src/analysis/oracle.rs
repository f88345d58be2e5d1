//! Brute-force evaluation of the nonlocal matrix for validation.
//!
//! Every edge pair is integrated on its parameter square by global adaptive
//! subdivision. Each cell is evaluated with two mixed tensor Gauss rules
//! (6×7 and 7×6 points), which never place a node on the diagonal, and the
//! cell with the largest disagreement is split until the summed
//! disagreement falls below the relative tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::assembly::{ActiveSet, BoundaryMesh};
use crate::error::{invalid, Error, Result};
use crate::geometry::PrefractalCurve;
use crate::linalg::DenseMatrix;
use crate::scalar::{self, gauss_legendre_unit, Point, Real};

/// Largest boundary mesh the oracle accepts.
pub const ORACLE_MAX_EDGES: usize = 64;
const MAX_LEVEL: usize = 20;
const REL_TOL: f64 = 1e-11;

struct PairIntegrator<T> {
    g6: (Vec<T>, Vec<T>),
    g7: (Vec<T>, Vec<T>),
}

/// Local nodes of a pair and `φ(x) − φ(y)` coefficients:
/// `d_n = a_n + b_n s + c_n t`.
struct PairNodes<T> {
    nodes: Vec<usize>,
    coef: Vec<[T; 3]>,
}

fn pair_nodes<T: Real>(e: [usize; 2], f: [usize; 2]) -> PairNodes<T> {
    let mut nodes: Vec<usize> = e.to_vec();
    for n in f {
        if !nodes.contains(&n) {
            nodes.push(n);
        }
    }
    let (one, zero) = (T::one(), T::zero());
    let coef = nodes
        .iter()
        .map(|&n| {
            let mut c = [zero; 3];
            if n == e[0] {
                c[0] += one;
                c[1] -= one;
            }
            if n == e[1] {
                c[1] += one;
            }
            if n == f[0] {
                c[0] -= one;
                c[2] += one;
            }
            if n == f[1] {
                c[2] -= one;
            }
            c
        })
        .collect();
    PairNodes { nodes, coef }
}

struct Cell<T> {
    s: (T, T),
    t: (T, T),
    level: usize,
    value: Vec<T>,
    err: T,
}

impl<T: PartialOrd> PartialEq for Cell<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: PartialOrd> Eq for Cell<T> {}
impl<T: PartialOrd> PartialOrd for Cell<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: PartialOrd> Ord for Cell<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

fn rule<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre_unit(n);
    (x.into_iter().map(T::lit).collect(), w.into_iter().map(T::lit).collect())
}

impl<T: Real> PairIntegrator<T> {
    fn new() -> Self {
        Self { g6: rule(6), g7: rule(7) }
    }

    /// Entries `∬ d_a d_b / |x − y|²` over local pairs `a ≤ b`, packed.
    fn tensor(&self, geo: &Geometry<T>, pn: &PairNodes<T>, s: (T, T), t: (T, T), rs: &(Vec<T>, Vec<T>), rt: &(Vec<T>, Vec<T>)) -> Vec<T> {
        let n = pn.nodes.len();
        let mut out = vec![T::zero(); n * (n + 1) / 2];
        let (ds, dt) = (s.1 - s.0, t.1 - t.0);
        let jac = geo.le * geo.lf * ds * dt;
        let mut d = [T::zero(); 4];
        for (&xs, &ws) in rs.0.iter().zip(&rs.1) {
            let sv = s.0 + ds * xs;
            let x = scalar::lerp(geo.e0, geo.e1, sv);
            for (&xt, &wt) in rt.0.iter().zip(&rt.1) {
                let tv = t.0 + dt * xt;
                let y = scalar::lerp(geo.f0, geo.f1, tv);
                let diff = scalar::sub(x, y);
                let k = ws * wt * jac / scalar::dot(diff, diff);
                for (dn, c) in d.iter_mut().zip(&pn.coef) {
                    *dn = c[0] + c[1] * sv + c[2] * tv;
                }
                let mut idx = 0;
                for a in 0..n {
                    for b in a..n {
                        out[idx] += k * d[a] * d[b];
                        idx += 1;
                    }
                }
            }
        }
        out
    }

    fn cell(&self, geo: &Geometry<T>, pn: &PairNodes<T>, s: (T, T), t: (T, T), level: usize) -> Cell<T> {
        let a = self.tensor(geo, pn, s, t, &self.g6, &self.g7);
        let b = self.tensor(geo, pn, s, t, &self.g7, &self.g6);
        let half = T::lit(0.5);
        let err = a.iter().zip(&b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
        let value = a.iter().zip(&b).map(|(x, y)| (*x + *y) * half).collect();
        Cell { s, t, level, value, err }
    }

    fn integrate(&self, geo: &Geometry<T>, pn: &PairNodes<T>) -> Result<Vec<T>> {
        let (zero, one, half) = (T::zero(), T::one(), T::lit(0.5));
        let first = self.cell(geo, pn, (zero, one), (zero, one), 0);
        let mut total = first.value.clone();
        let mut err_sum = first.err;
        let mut heap = BinaryHeap::new();
        heap.push(first);
        let tol = T::tol(REL_TOL);
        loop {
            let scale = total.iter().fold(T::zero(), |m, x| m.max(x.abs()));
            if err_sum <= tol * scale || heap.is_empty() {
                return Ok(total);
            }
            let worst = heap.pop().expect("nonempty heap");
            if worst.level >= MAX_LEVEL {
                return Err(Error::Quadrature(format!("nonlocal oracle did not converge within {MAX_LEVEL} subdivision levels")));
            }
            for (v, x) in total.iter_mut().zip(&worst.value) {
                *v -= *x;
            }
            err_sum -= worst.err;
            let sm = (worst.s.0 + worst.s.1) * half;
            let tm = (worst.t.0 + worst.t.1) * half;
            for s in [(worst.s.0, sm), (sm, worst.s.1)] {
                for t in [(worst.t.0, tm), (tm, worst.t.1)] {
                    let c = self.cell(geo, pn, s, t, worst.level + 1);
                    for (v, x) in total.iter_mut().zip(&c.value) {
                        *v += *x;
                    }
                    err_sum += c.err;
                    heap.push(c);
                }
            }
            err_sum = err_sum.max(T::zero());
        }
    }
}

struct Geometry<T> {
    e0: Point<T>,
    e1: Point<T>,
    f0: Point<T>,
    f1: Point<T>,
    le: T,
    lf: T,
}

fn geometry<T: Real>(pts: &[Point<T>], e: [usize; 2], f: [usize; 2]) -> Geometry<T> {
    let (e0, e1, f0, f1) = (pts[e[0]], pts[e[1]], pts[f[0]], pts[f[1]]);
    Geometry { e0, e1, f0, f1, le: scalar::dist(e0, e1), lf: scalar::dist(f0, f1) }
}

fn check_size<T>(bm: &BoundaryMesh<T>, active: &[bool]) -> Result<()> {
    if active.len() != bm.edges.len() {
        return Err(invalid(format!("active mask has {} entries for {} edges", active.len(), bm.edges.len())));
    }
    if bm.edges.len() > ORACLE_MAX_EDGES {
        return Err(invalid(format!("oracle limited to {ORACLE_MAX_EDGES} edges, got {}", bm.edges.len())));
    }
    Ok(())
}

/// Full nonlocal matrix over all points of `bm`.
pub fn nonlocal_oracle_matrix<T: Real>(bm: &BoundaryMesh<T>, active: &[bool]) -> Result<DenseMatrix<T>> {
    check_size(bm, active)?;
    let edges: Vec<[usize; 2]> = bm.edges.iter().zip(active).filter(|(_, &a)| a).map(|(e, _)| *e).collect();
    let pairs: Vec<(usize, usize)> = (0..edges.len()).flat_map(|a| (a..edges.len()).map(move |b| (a, b))).collect();
    let integ = PairIntegrator::new();
    let locals: Result<Vec<(PairNodes<T>, Vec<T>)>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let pn = pair_nodes(edges[a], edges[b]);
            let v = integ.integrate(&geometry(&bm.points, edges[a], edges[b]), &pn)?;
            Ok((pn, v))
        })
        .collect();
    let np = bm.points.len();
    let mut m = DenseMatrix::zeros(np, np);
    for (&(a, b), (pn, v)) in pairs.iter().zip(locals?) {
        let w = if a == b { T::one() } else { T::lit(2.0) };
        let n = pn.nodes.len();
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let (gi, gj) = (pn.nodes[i], pn.nodes[j]);
                m[(gi, gj)] += w * v[idx];
                if gi != gj {
                    m[(gj, gi)] += w * v[idx];
                }
                idx += 1;
            }
        }
    }
    for i in 0..np {
        for j in 0..i {
            let s = (m[(i, j)] + m[(j, i)]) * T::lit(0.5);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    Ok(m)
}

/// Entry `Θ_ij` of the nonlocal matrix on the curve vertices, integrating
/// only the edge pairs that touch both hats.
pub fn nonlocal_oracle<T: Real>(curve: &PrefractalCurve<T>, active: &ActiveSet<T>, i: usize, j: usize) -> Result<T> {
    let bm = BoundaryMesh::from_curve(curve);
    let mask = active.segment_mask(curve)?;
    check_size(&bm, &mask)?;
    if i >= bm.points.len() || j >= bm.points.len() {
        return Err(invalid(format!("entry ({i}, {j}) outside {} points", bm.points.len())));
    }
    let edges: Vec<[usize; 2]> = bm.edges.iter().zip(&mask).filter(|(_, &a)| a).map(|(e, _)| *e).collect();
    let integ = PairIntegrator::new();
    let mut sum = T::zero();
    for (a, &e) in edges.iter().enumerate() {
        for (b, &f) in edges.iter().enumerate() {
            let touches = |n: usize| e.contains(&n) || f.contains(&n);
            if !(touches(i) && touches(j)) || b < a {
                continue;
            }
            let pn = pair_nodes(e, f);
            let v = integ.integrate(&geometry(&bm.points, e, f), &pn)?;
            let (li, lj) = (pn.nodes.iter().position(|&n| n == i), pn.nodes.iter().position(|&n| n == j));
            let (Some(li), Some(lj)) = (li, lj) else { continue };
            let (lo, hi) = (li.min(lj), li.max(lj));
            let n = pn.nodes.len();
            let idx = lo * n - lo * (lo + 1) / 2 + hi;
            let w = if a == b { T::one() } else { T::lit(2.0) };
            sum += w * v[idx];
        }
    }
    Ok(sum)
}
