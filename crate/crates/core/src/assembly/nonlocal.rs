//! Dense P1 Galerkin matrix of the nonlocal boundary form
//!
//! ```text
//! θ(u, v) = ∬ (u(x) − u(y)) (v(x) − v(y)) / |x − y|² ds(x) ds(y)
//! ```
//!
//! over the active part of a polygonal boundary mesh, assembled edge pair by
//! edge pair:
//!
//! * identical edges: the integrand is the constant `±1/L²`, so the local
//!   matrix is `[[1, −1], [−1, 1]]` exactly;
//! * edges sharing a vertex: the integrand is homogeneous of degree zero in
//!   the distances to that vertex, which turns the square into two smooth
//!   one-dimensional integrals;
//! * disjoint edges: tensor Gauss, splitting both edges until every
//!   sub-pair is separated by at least its longest length.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::geometry::PrefractalCurve;
use crate::linalg::DenseMatrix;
use crate::mesh::{TraceMap, Triangulation};
use crate::scalar::{self, gauss_legendre_unit, Point, Real};

/// Gauss points used for the one-dimensional integrals of adjacent pairs.
const ADJACENT_ORDER: usize = 32;
const MAX_SPLIT_DEPTH: usize = 16;
const BATCH: usize = 64;

/// Polygonal boundary discretization: points indexed locally, edges as
/// point pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMesh<T> {
    pub points: Vec<Point<T>>,
    pub edges: Vec<[usize; 2]>,
    /// Curve segment carrying each edge.
    pub segment: Vec<usize>,
}

impl<T: Real> BoundaryMesh<T> {
    /// One edge per curve segment, nodes at the curve vertices.
    pub fn from_curve(curve: &PrefractalCurve<T>) -> Self {
        Self { points: curve.vertices.clone(), edges: curve.segments.clone(), segment: (0..curve.num_segments()).collect() }
    }

    /// Curve edges of a mesh; point `k` is `trace.nodes[k]`.
    pub fn from_triangulation(tri: &Triangulation<T>, trace: &TraceMap<T>) -> Self {
        Self {
            points: trace.nodes.iter().map(|&n| tri.nodes[n]).collect(),
            edges: tri.curve_edges.iter().map(|e| e.nodes.map(|n| trace.position[n])).collect(),
            segment: tri.curve_edges.iter().map(|e| e.segment).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Local<T> {
    nodes: [usize; 4],
    len: usize,
    m: [[T; 4]; 4],
}

struct Rules<T> {
    tensor: (Vec<T>, Vec<T>),
    adjacent: (Vec<T>, Vec<T>),
}

fn rule<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre_unit(n);
    (x.into_iter().map(T::lit).collect(), w.into_iter().map(T::lit).collect())
}

fn segment_distance<T: Real>(a0: Point<T>, a1: Point<T>, b0: Point<T>, b1: Point<T>) -> T {
    let d1 = scalar::sub(a1, a0);
    let d2 = scalar::sub(b1, b0);
    let o1 = scalar::cross(d1, scalar::sub(b0, a0)) * scalar::cross(d1, scalar::sub(b1, a0));
    let o2 = scalar::cross(d2, scalar::sub(a0, b0)) * scalar::cross(d2, scalar::sub(a1, b0));
    if o1 < T::zero() && o2 < T::zero() {
        return T::zero();
    }
    scalar::dist_to_segment(a0, b0, b1)
        .min(scalar::dist_to_segment(a1, b0, b1))
        .min(scalar::dist_to_segment(b0, a0, a1))
        .min(scalar::dist_to_segment(b1, a0, a1))
}

impl<T: Real> Rules<T> {
    fn identical(e: [usize; 2]) -> Local<T> {
        let mut m = [[T::zero(); 4]; 4];
        m[0][0] = T::one();
        m[1][1] = T::one();
        m[0][1] = -T::one();
        m[1][0] = -T::one();
        Local { nodes: [e[0], e[1], 0, 0], len: 2, m }
    }

    fn adjacent(&self, pts: &[Point<T>], e: [usize; 2], f: [usize; 2]) -> Local<T> {
        let v = if e[0] == f[0] || e[0] == f[1] { e[0] } else { e[1] };
        let p = if e[0] == v { e[1] } else { e[0] };
        let q = if f[0] == v { f[1] } else { f[0] };
        let (u, w) = (scalar::sub(pts[p], pts[v]), scalar::sub(pts[q], pts[v]));
        let (le, lf) = (scalar::norm(u), scalar::norm(w));
        let c = scalar::dot(u, w) / (le * lf);
        // difference coefficients (c_s, c_t) of d = c_s·s + c_t·t for nodes v, p, q
        let coef = [(-T::one(), T::one()), (T::one(), T::zero()), (T::zero(), -T::one())];
        let two = T::lit(2.0);
        let mut m = [[T::zero(); 4]; 4];
        let (xs, ws) = &self.adjacent;
        for (&x, &wq) in xs.iter().zip(ws) {
            for (s, t) in [(T::one(), x), (x, T::one())] {
                let den = le * le * s * s + lf * lf * t * t - two * le * lf * c * s * t;
                let d = coef.map(|(a, b)| a * s + b * t);
                let k = wq / den;
                for i in 0..3 {
                    for j in i..3 {
                        m[i][j] += k * d[i] * d[j];
                    }
                }
            }
        }
        let scale = le * lf / two;
        for i in 0..3 {
            for j in i..3 {
                m[i][j] *= scale;
                m[j][i] = m[i][j];
            }
        }
        Local { nodes: [v, p, q, 0], len: 3, m }
    }

    #[allow(clippy::too_many_arguments)]
    fn disjoint_rec(&self, pts: &[Point<T>], e: [usize; 2], f: [usize; 2], s: (T, T), t: (T, T), depth: usize, m: &mut [[T; 4]; 4]) {
        let (e0, e1, f0, f1) = (pts[e[0]], pts[e[1]], pts[f[0]], pts[f[1]]);
        let a0 = scalar::lerp(e0, e1, s.0);
        let a1 = scalar::lerp(e0, e1, s.1);
        let b0 = scalar::lerp(f0, f1, t.0);
        let b1 = scalar::lerp(f0, f1, t.1);
        let (la, lb) = (scalar::dist(a0, a1), scalar::dist(b0, b1));
        if depth < MAX_SPLIT_DEPTH && segment_distance(a0, a1, b0, b1) < la.max(lb) {
            let half = T::lit(0.5);
            let sm = (s.0 + s.1) * half;
            let tm = (t.0 + t.1) * half;
            for si in [(s.0, sm), (sm, s.1)] {
                for ti in [(t.0, tm), (tm, t.1)] {
                    self.disjoint_rec(pts, e, f, si, ti, depth + 1, m);
                }
            }
            return;
        }
        let (xs, ws) = &self.tensor;
        let (ds, dt) = (s.1 - s.0, t.1 - t.0);
        let jac = scalar::dist(e0, e1) * scalar::dist(f0, f1) * ds * dt;
        for (&xi, &wi) in xs.iter().zip(ws) {
            let sv = s.0 + ds * xi;
            let x = scalar::lerp(e0, e1, sv);
            for (&yj, &wj) in xs.iter().zip(ws) {
                let tv = t.0 + dt * yj;
                let y = scalar::lerp(f0, f1, tv);
                let diff = scalar::sub(x, y);
                let k = wi * wj * jac / scalar::dot(diff, diff);
                let d = [T::one() - sv, sv, tv - T::one(), -tv];
                for i in 0..4 {
                    for j in i..4 {
                        m[i][j] += k * d[i] * d[j];
                    }
                }
            }
        }
    }

    fn disjoint(&self, pts: &[Point<T>], e: [usize; 2], f: [usize; 2]) -> Local<T> {
        let mut m = [[T::zero(); 4]; 4];
        self.disjoint_rec(pts, e, f, (T::zero(), T::one()), (T::zero(), T::one()), 0, &mut m);
        for i in 0..4 {
            for j in 0..i {
                m[i][j] = m[j][i];
            }
        }
        Local { nodes: [e[0], e[1], f[0], f[1]], len: 4, m }
    }

    fn pair(&self, pts: &[Point<T>], e: [usize; 2], f: [usize; 2]) -> Local<T> {
        let shared = e.iter().filter(|n| f.contains(n)).count();
        match shared {
            2 => Self::identical(e),
            1 => self.adjacent(pts, e, f),
            _ => self.disjoint(pts, e, f),
        }
    }
}

/// Assembles the nonlocal matrix over the edges flagged in `active`.
/// Returns the dense block and the local point indices it acts on (sorted).
pub fn assemble_nonlocal_block<T: Real>(bm: &BoundaryMesh<T>, active: &[bool], order: usize) -> Result<(DenseMatrix<T>, Vec<usize>)> {
    if order < 2 {
        return Err(invalid(format!("nonlocal quadrature order must be at least 2, got {order}")));
    }
    if active.len() != bm.edges.len() {
        return Err(invalid(format!("active mask has {} entries for {} edges", active.len(), bm.edges.len())));
    }
    let rules = Rules { tensor: rule(order), adjacent: rule(ADJACENT_ORDER) };
    let edges: Vec<[usize; 2]> = bm.edges.iter().zip(active).filter(|(_, &a)| a).map(|(e, _)| *e).collect();
    let np = bm.points.len();
    let mut full = DenseMatrix::zeros(np, np);
    let two = T::lit(2.0);
    for start in (0..edges.len()).step_by(BATCH) {
        let end = (start + BATCH).min(edges.len());
        let rows: Vec<Vec<Local<T>>> = (start..end)
            .into_par_iter()
            .map(|a| (a..edges.len()).map(|b| rules.pair(&bm.points, edges[a], edges[b])).collect())
            .collect();
        for row in rows {
            for (k, loc) in row.into_iter().enumerate() {
                let weight = if k == 0 { T::one() } else { two };
                for i in 0..loc.len {
                    for j in 0..loc.len {
                        let (gi, gj) = (loc.nodes[i], loc.nodes[j]);
                        if gi < gj || i == j {
                            full[(gi, gj)] += weight * loc.m[i][j];
                        }
                    }
                }
            }
        }
    }
    let mut dofs: Vec<usize> = edges.iter().flat_map(|e| *e).collect();
    dofs.sort_unstable();
    dofs.dedup();
    let block = DenseMatrix::from_fn(dofs.len(), dofs.len(), |a, b| {
        let (i, j) = (dofs[a], dofs[b]);
        if i <= j {
            full[(i, j)]
        } else {
            full[(j, i)]
        }
    });
    Ok((block, dofs))
}
