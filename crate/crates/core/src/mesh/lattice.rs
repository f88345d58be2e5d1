use std::collections::HashMap;

use super::{CurveEdge, Triangulation, TAG_INNER};
use crate::error::{Error, Result};
use crate::geometry::PrefractalCurve;
use crate::scalar::{Point, Real};

struct Lattice<T> {
    origin: Point<T>,
    spacing: T,
    row: T,
}

impl<T: Real> Lattice<T> {
    fn point(&self, i: i64, j: i64) -> Point<T> {
        let (fi, fj) = (T::from_i64(i).unwrap(), T::from_i64(j).unwrap());
        [
            self.origin[0] + (fi + fj / T::lit(2.0)) * self.spacing,
            self.origin[1] + fj * self.row,
        ]
    }

    /// Fractional lattice coordinates of `p`.
    fn coords(&self, p: Point<T>) -> (T, T) {
        let fj = (p[1] - self.origin[1]) / self.row;
        let fi = (p[0] - self.origin[0]) / self.spacing - fj / T::lit(2.0);
        (fi, fj)
    }

    fn snap(&self, p: Point<T>) -> Option<(i64, i64)> {
        let (fi, fj) = self.coords(p);
        let (ri, rj) = (fi.round(), fj.round());
        let tol = T::tol(1e-8);
        ((fi - ri).abs() <= tol && (fj - rj).abs() <= tol).then(|| (ri.to_i64().unwrap(), rj.to_i64().unwrap()))
    }
}

/// Lattice triangles of spacing `segment_length / m` inside the curve.
pub(super) fn lattice_mesh<T: Real>(curve: &PrefractalCurve<T>, m: usize) -> Result<Triangulation<T>> {
    let spacing = curve.segment_length(0) / T::from_usize_lossy(m);
    let lat = Lattice { origin: curve.vertices[0], spacing, row: spacing * T::lit(3.0).sqrt() / T::lit(2.0) };

    let mut keys = Vec::with_capacity(curve.vertices.len());
    for (j, &p) in curve.vertices.iter().enumerate() {
        keys.push(lat.snap(p).ok_or_else(|| Error::Mesh(format!("curve vertex {j} is off the triangular lattice")))?);
    }
    let (imin, imax) = keys.iter().fold((i64::MAX, i64::MIN), |(a, b), k| (a.min(k.0), b.max(k.0)));
    let (jmin, jmax) = keys.iter().fold((i64::MAX, i64::MIN), |(a, b), k| (a.min(k.1), b.max(k.1)));

    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut triangles = Vec::new();
    let mut node_id = |key: (i64, i64), nodes: &mut Vec<Point<T>>| -> usize {
        *index.entry(key).or_insert_with(|| {
            nodes.push(lat.point(key.0, key.1));
            nodes.len() - 1
        })
    };
    let third = T::one() / T::lit(3.0);
    for j in jmin..jmax {
        for i in imin..imax {
            let up = [(i, j), (i + 1, j), (i, j + 1)];
            let down = [(i + 1, j), (i + 1, j + 1), (i, j + 1)];
            for cell in [up, down] {
                let sum = cell.iter().fold([T::zero(), T::zero()], |s, &(a, b)| {
                    let p = lat.point(a, b);
                    [s[0] + p[0], s[1] + p[1]]
                });
                if curve.contains([sum[0] * third, sum[1] * third]) {
                    triangles.push([node_id(cell[0], &mut nodes), node_id(cell[1], &mut nodes), node_id(cell[2], &mut nodes)]);
                }
            }
        }
    }

    let mut curve_edges = Vec::with_capacity(curve.num_segments() * m);
    for (k, &[a, b]) in curve.segments.iter().enumerate() {
        let (p, q) = (keys[a], keys[b]);
        let (di, dj) = (q.0 - p.0, q.1 - p.1);
        let mi = m as i64;
        if di % mi != 0 || dj % mi != 0 {
            return Err(Error::Mesh(format!("curve segment {k} is not a lattice edge")));
        }
        let (si, sj) = (di / mi, dj / mi);
        for t in 0..mi {
            let n0 = (p.0 + t * si, p.1 + t * sj);
            let n1 = (n0.0 + si, n0.1 + sj);
            let (Some(&u), Some(&v)) = (index.get(&n0), index.get(&n1)) else {
                return Err(Error::Mesh(format!("curve segment {k} is not covered by the lattice mesh")));
            };
            curve_edges.push(CurveEdge { nodes: [u, v], segment: k });
        }
    }

    let tags = vec![TAG_INNER; triangles.len()];
    Ok(Triangulation {
        nodes,
        triangles,
        tags,
        curve_edges,
        outer_edges: Vec::new(),
        grading: None,
        target_h: spacing,
    })
}

/// Structured mesh of the unit square with `m × m` cells, each split along
/// its rising diagonal. The whole boundary is reported as outer boundary.
pub fn unit_square_mesh<T: Real>(m: usize) -> Triangulation<T> {
    let h = T::one() / T::from_usize_lossy(m);
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut nodes = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            nodes.push([T::from_usize_lossy(i) * h, T::from_usize_lossy(j) * h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut outer_edges = Vec::with_capacity(4 * m);
    for i in 0..m {
        outer_edges.push([id(i, 0), id(i + 1, 0)]);
        outer_edges.push([id(m, i), id(m, i + 1)]);
        outer_edges.push([id(i + 1, m), id(i, m)]);
        outer_edges.push([id(0, i + 1), id(0, i)]);
    }
    let tags = vec![TAG_INNER; triangles.len()];
    Triangulation { nodes, triangles, tags, curve_edges: Vec::new(), outer_edges, grading: None, target_h: h * T::lit(2.0).sqrt() }
}
